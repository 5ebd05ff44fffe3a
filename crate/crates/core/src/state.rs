//! Exact state-vector engine.
//!
//! Basis index bit `q` holds the value of qubit `q`. Free evolution over a
//! time `dt` multiplies each amplitude by `exp(-i·dt·E(x))` where `E(x)` is
//! the summed diagonal coupling energy of basis state `x`.

use std::collections::HashMap;

use nalgebra::DMatrix;
use rayon::prelude::*;
use thiserror::Error;

use crate::device::DeviceModel;
use crate::gate::Gate;
use crate::schedule::{PulseSchedule, ScheduleError};
use crate::C64;

/// Default upper bound on register size for full unitary reconstruction.
pub const MAX_RECONSTRUCT_QUBITS: usize = 12;

/// Largest register the engine allocates.
pub const MAX_STATE_QUBITS: usize = 26;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StateError {
    #[error("qubit {qubit} out of range for {n_qubits} qubits")]
    QubitOutOfRange { qubit: usize, n_qubits: usize },
    #[error("gate {0} is not unitary")]
    NonUnitary(String),
    #[error("negative or non-finite evolution time {0}")]
    NegativeTime(f64),
    #[error("register of {0} qubits is larger than the supported maximum")]
    TooLarge(usize),
    #[error("reconstruction is capped at {cap} qubits, model has {n_qubits}")]
    CapExceeded { n_qubits: usize, cap: usize },
    #[error("expected {expected} amplitudes, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("state is not normalized (norm {0})")]
    NotNormalized(f64),
    #[error("model has {model} qubits but state has {state}")]
    SizeMismatch { model: usize, state: usize },
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amplitudes: Vec<C64>,
    /// Accumulated global phase in radians, kept apart from the amplitudes.
    pub global_phase: f64,
}

impl StateVector {
    pub fn basis(n_qubits: usize, index: usize) -> Result<Self, StateError> {
        if n_qubits == 0 || n_qubits > MAX_STATE_QUBITS {
            return Err(StateError::TooLarge(n_qubits));
        }
        let dim = 1usize << n_qubits;
        if index >= dim {
            return Err(StateError::Dimension {
                expected: dim,
                got: index + 1,
            });
        }
        let mut amplitudes = vec![C64::new(0.0, 0.0); dim];
        amplitudes[index] = C64::new(1.0, 0.0);
        Ok(StateVector {
            n_qubits,
            amplitudes,
            global_phase: 0.0,
        })
    }

    pub fn zero(n_qubits: usize) -> Result<Self, StateError> {
        Self::basis(n_qubits, 0)
    }

    pub fn from_amplitudes(n_qubits: usize, amplitudes: Vec<C64>) -> Result<Self, StateError> {
        if n_qubits == 0 || n_qubits > MAX_STATE_QUBITS {
            return Err(StateError::TooLarge(n_qubits));
        }
        let expected = 1usize << n_qubits;
        if amplitudes.len() != expected {
            return Err(StateError::Dimension {
                expected,
                got: amplitudes.len(),
            });
        }
        let state = StateVector {
            n_qubits,
            amplitudes,
            global_phase: 0.0,
        };
        let norm = state.norm();
        if (norm - 1.0).abs() > 1e-9 {
            return Err(StateError::NotNormalized(norm));
        }
        Ok(state)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    /// Amplitudes without the tracked global phase.
    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    /// Amplitudes with the tracked global phase folded in.
    pub fn physical_amplitudes(&self) -> Vec<C64> {
        let phase = C64::from_polar(1.0, self.global_phase);
        self.amplitudes.iter().map(|a| a * phase).collect()
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes
            .iter()
            .map(|a| a.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// Index of the basis state holding all the weight, if the state is one.
    pub fn basis_index(&self, tol: f64) -> Option<usize> {
        let (idx, amp) = self
            .amplitudes
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.norm_sqr().total_cmp(&b.1.norm_sqr()))?;
        ((amp.norm_sqr() - 1.0).abs() <= tol).then_some(idx)
    }

    pub fn apply_one_qubit(&mut self, q: usize, gate: &Gate) -> Result<(), StateError> {
        if q >= self.n_qubits {
            return Err(StateError::QubitOutOfRange {
                qubit: q,
                n_qubits: self.n_qubits,
            });
        }
        if !gate.is_unitary() {
            return Err(StateError::NonUnitary(gate.name().to_string()));
        }
        apply_gate_unchecked(&mut self.amplitudes, q, gate);
        Ok(())
    }

    pub fn evolve_free(&mut self, model: &DeviceModel, dt: f64) -> Result<(), StateError> {
        if !(dt.is_finite() && dt >= 0.0) {
            return Err(StateError::NegativeTime(dt));
        }
        if model.n_qubits() != self.n_qubits {
            return Err(StateError::SizeMismatch {
                model: model.n_qubits(),
                state: self.n_qubits,
            });
        }
        let energies = diagonal_energies(model, 0);
        apply_diagonal(&mut self.amplitudes, &energies, dt);
        Ok(())
    }

    /// Applies a two-qubit gate given as a 4×4 matrix in `(a_hi, a_lo)` order,
    /// where `hi` is the first listed qubit. Used by reference simulations.
    pub fn apply_two_qubit(
        &mut self,
        first: usize,
        second: usize,
        matrix: &[[C64; 4]; 4],
    ) -> Result<(), StateError> {
        for q in [first, second] {
            if q >= self.n_qubits {
                return Err(StateError::QubitOutOfRange {
                    qubit: q,
                    n_qubits: self.n_qubits,
                });
            }
        }
        let (bf, bs) = (1usize << first, 1usize << second);
        for base in 0..self.amplitudes.len() {
            if base & (bf | bs) != 0 {
                continue;
            }
            let idx = [base, base | bs, base | bf, base | bf | bs];
            let old = idx.map(|i| self.amplitudes[i]);
            for (r, &i) in idx.iter().enumerate() {
                self.amplitudes[i] = (0..4).map(|c| matrix[r][c] * old[c]).sum();
            }
        }
        Ok(())
    }

    pub fn inner(&self, other: &StateVector) -> C64 {
        let a = self.physical_amplitudes();
        let b = other.physical_amplitudes();
        a.iter().zip(&b).map(|(x, y)| x.conj() * y).sum()
    }
}

fn apply_gate_unchecked(amplitudes: &mut [C64], q: usize, gate: &Gate) {
    let m = gate.matrix();
    let bit = 1usize << q;
    match gate {
        Gate::X => {
            for i in 0..amplitudes.len() {
                if i & bit == 0 {
                    amplitudes.swap(i, i | bit);
                }
            }
        }
        _ => {
            for i in 0..amplitudes.len() {
                if i & bit == 0 {
                    let (a0, a1) = (amplitudes[i], amplitudes[i | bit]);
                    amplitudes[i] = m[0][0] * a0 + m[0][1] * a1;
                    amplitudes[i | bit] = m[1][0] * a0 + m[1][1] * a1;
                }
            }
        }
    }
}

fn apply_diagonal(amplitudes: &mut [C64], energies: &[f64], dt: f64) {
    if dt == 0.0 {
        return;
    }
    for (a, e) in amplitudes.iter_mut().zip(energies) {
        *a *= C64::from_polar(1.0, -dt * e);
    }
}

/// Per-basis-state energy with the qubits in `averaged` replaced by the mean
/// over both of their values.
pub fn diagonal_energies(model: &DeviceModel, averaged: u64) -> Vec<f64> {
    let dim = 1usize << model.n_qubits();
    let mut out = vec![0.0; dim];
    for c in model.couplings() {
        let (lo, hi) = c.pair();
        let avg_lo = averaged >> lo & 1 == 1;
        let avg_hi = averaged >> hi & 1 == 1;
        let values = |bit: bool, avg: bool| -> &'static [bool] {
            if avg {
                &[false, true]
            } else if bit {
                &[true]
            } else {
                &[false]
            }
        };
        for (x, e) in out.iter_mut().enumerate() {
            let vl = values(x >> lo & 1 == 1, avg_lo);
            let vh = values(x >> hi & 1 == 1, avg_hi);
            let mut sum = 0.0;
            for &a in vl {
                for &b in vh {
                    sum += c.energy(a, b);
                }
            }
            *e += sum / (vl.len() * vh.len()) as f64;
        }
    }
    out
}

/// Executes schedules against one device, caching the diagonal energies.
pub struct Simulator<'a> {
    model: &'a DeviceModel,
    energies: HashMap<u64, Vec<f64>>,
}

impl<'a> Simulator<'a> {
    pub fn new(model: &'a DeviceModel) -> Self {
        let mut energies = HashMap::new();
        energies.insert(0, diagonal_energies(model, 0));
        Simulator { model, energies }
    }

    fn prepare(&mut self, schedule: &PulseSchedule) -> Result<(), StateError> {
        schedule.validate(self.model.n_qubits())?;
        for w in &schedule.windows {
            self.energies
                .entry(w.mask)
                .or_insert_with(|| diagonal_energies(self.model, w.mask));
        }
        Ok(())
    }

    pub fn run(
        &mut self,
        state: &mut StateVector,
        schedule: &PulseSchedule,
    ) -> Result<(), StateError> {
        if state.n_qubits != self.model.n_qubits() {
            return Err(StateError::SizeMismatch {
                model: self.model.n_qubits(),
                state: state.n_qubits,
            });
        }
        self.prepare(schedule)?;
        self.run_prepared(&mut state.amplitudes, schedule);
        state.global_phase += schedule.global_phase_correction;
        Ok(())
    }

    fn run_prepared(&self, amplitudes: &mut [C64], schedule: &PulseSchedule) {
        let mut cursor = 0.0;
        for event in &schedule.events {
            self.advance(amplitudes, schedule, &mut cursor, event.time);
            apply_gate_unchecked(amplitudes, event.qubit, &event.gate);
        }
        self.advance(amplitudes, schedule, &mut cursor, schedule.duration);
    }

    /// Free evolution from `cursor` up to `target`, split at window edges.
    fn advance(
        &self,
        amplitudes: &mut [C64],
        schedule: &PulseSchedule,
        cursor: &mut f64,
        target: f64,
    ) {
        while *cursor < target {
            let (seg_end, mask) = match schedule.windows.iter().find(|w| w.end > *cursor) {
                Some(w) if w.start <= *cursor => (target.min(w.end), w.mask),
                Some(w) => (target.min(w.start), 0),
                None => (target, 0),
            };
            apply_diagonal(amplitudes, &self.energies[&mask], seg_end - *cursor);
            *cursor = seg_end;
        }
    }

    /// Full unitary of the schedule; column `c` is the image of `|c⟩`.
    pub fn unitary(
        &mut self,
        schedule: &PulseSchedule,
        cap: usize,
    ) -> Result<DMatrix<C64>, StateError> {
        let n = self.model.n_qubits();
        if n > cap {
            return Err(StateError::CapExceeded { n_qubits: n, cap });
        }
        self.prepare(schedule)?;
        let dim = 1usize << n;
        let phase = C64::from_polar(1.0, schedule.global_phase_correction);
        let this = &*self;
        let columns: Vec<Vec<C64>> = (0..dim)
            .into_par_iter()
            .map(|c| {
                let mut amps = vec![C64::new(0.0, 0.0); dim];
                amps[c] = C64::new(1.0, 0.0);
                this.run_prepared(&mut amps, schedule);
                amps
            })
            .collect();
        Ok(DMatrix::from_fn(dim, dim, |r, c| columns[c][r] * phase))
    }
}

/// Runs `schedule` on `state`: free evolution across every gap, pulses at
/// their instants (ties in ascending qubit order), then the trailing gap and
/// the global-phase correction.
pub fn simulate_schedule(
    state: &mut StateVector,
    model: &DeviceModel,
    schedule: &PulseSchedule,
) -> Result<(), StateError> {
    Simulator::new(model).run(state, schedule)
}

pub fn reconstruct_unitary(
    model: &DeviceModel,
    schedule: &PulseSchedule,
) -> Result<DMatrix<C64>, StateError> {
    Simulator::new(model).unitary(schedule, MAX_RECONSTRUCT_QUBITS)
}
