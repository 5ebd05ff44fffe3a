//! Controlled-Z and CNOT from the permanent coupling.
//!
//! One unit frame of free evolution on a decoupled pair, followed by phase
//! rotations on each qubit, gives `U = diag(1, 1, 1, e^{±iΔE})`. Repeating it
//! `n` times with `n·|ΔE|` close to an odd multiple of π approaches
//! `Π = diag(1, 1, 1, −1)`, and conjugating the target with Hadamards turns
//! `Π` into CNOT.
//!
//! Sign convention: the engine evolves with `exp(−iHt)`, so the free frame
//! is the complex conjugate of the `E` gate written with `exp(+iE_k)`. The
//! recipe therefore applies the conjugates of the rotations `A` and `B` and
//! realizes `conj(U) = diag(1, 1, 1, e^{−iΔE})`. Since `Π` and CNOT are
//! real, both conventions reach the same targets with the same accuracy.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use serde::Serialize;
use thiserror::Error;

use crate::decouple::{build_frame, DecoupleError, DecouplingConfig};
use crate::device::DeviceModel;
use crate::gate::Gate;
use crate::rng::FrameSeed;
use crate::schedule::{PulseEvent, PulseSchedule};
use crate::C64;

/// Largest repetition bound accepted by the exhaustive search.
pub const MAX_N_MAX: u64 = 100_000_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SynthError {
    #[error("no coupling between qubits {0} and {1} (ΔE = 0)")]
    NoCoupling(usize, usize),
    #[error("ΔE must be finite and nonzero, got {0}")]
    BadDeltaE(f64),
    #[error("n_max must be in 1..={MAX_N_MAX}, got {0}")]
    BadNMax(u64),
    #[error("best residual {best:.3e} with n_max = {n_max} exceeds the requested {requested:.3e}")]
    ResidualNotReached {
        best: f64,
        requested: f64,
        n_max: u64,
        result: SynthesisResult,
    },
    #[error(transparent)]
    Decouple(#[from] DecoupleError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SynthesisResult {
    pub delta_e: f64,
    /// Repetitions of the unit frame.
    pub n: u64,
    /// `n·|ΔE| ≈ π(2m + 1)`.
    pub m: u64,
    /// `|n·|ΔE| − π(2m + 1)|`.
    pub residual: f64,
    /// `1 − residual²/4`.
    pub fidelity_bound: f64,
}

fn odd_pi_residual(x: f64) -> (u64, f64) {
    let m = ((x / PI - 1.0) / 2.0).round().max(0.0);
    (m as u64, (x - PI * (2.0 * m + 1.0)).abs())
}

/// Exhaustive search over `1 ≤ n ≤ n_max` for the repetition count bringing
/// `n·|ΔE|` closest to an odd multiple of π. Ties go to the smaller `n`.
pub fn diophantine_odd_pi(delta_e: f64, n_max: u64) -> Result<SynthesisResult, SynthError> {
    if !(delta_e.is_finite() && delta_e != 0.0) {
        return Err(SynthError::BadDeltaE(delta_e));
    }
    if n_max == 0 || n_max > MAX_N_MAX {
        return Err(SynthError::BadNMax(n_max));
    }
    let step = delta_e.abs();
    let mut best = (1u64, 0u64, f64::INFINITY);
    for n in 1..=n_max {
        let (m, residual) = odd_pi_residual(n as f64 * step);
        if residual < best.2 {
            best = (n, m, residual);
            if residual == 0.0 {
                break;
            }
        }
    }
    let (n, m, residual) = best;
    Ok(SynthesisResult {
        delta_e,
        n,
        m,
        residual,
        fidelity_bound: 1.0 - residual * residual / 4.0,
    })
}

/// One repetition of the unit gate.
#[derive(Debug, Clone)]
pub struct UnitFrame {
    /// Decoupled unit-time frame followed by the phase rotations.
    pub recipe: PulseSchedule,
    /// `E·(A⊗B)` in `(a_j, a_k)` order with `E` written as `exp(+iE_k)`;
    /// equals `diag(1, 1, 1, e^{iΔE})`. The recipe realizes its conjugate.
    pub matrix: DMatrix<C64>,
}

impl UnitFrame {
    /// Matrix the recipe produces on the pair under `exp(−iHt)`.
    pub fn realized(&self) -> DMatrix<C64> {
        self.matrix.map(|z| z.conj())
    }
}

/// Builds the unit gate on `(j, k)`: free evolution for one time unit with
/// every other qubit decoupled, then `A` on `j` and `B` on `k`.
pub fn build_u(
    model: &DeviceModel,
    j: usize,
    k: usize,
    config: &DecouplingConfig,
    seed: FrameSeed,
) -> Result<UnitFrame, SynthError> {
    if model.effective_zz(j, k).map_err(DecoupleError::from)? == 0.0 || j == k {
        return Err(SynthError::NoCoupling(j, k));
    }
    let coupling = model.coupling(j, k).ok_or(SynthError::NoCoupling(j, k))?;
    let [e1, e2, e3, e4] = coupling.diagonal_for(j, k);

    let mut recipe = build_frame(model, Some((j, k)), 1.0, config, seed, false)?;
    // A = diag(1, e^{i(E1−E3)}), B = e^{−iE1}·diag(1, e^{−i(E2−E1)}); apply conjugates.
    let a_angle = e3 - e1;
    let b_angle = e2 - e1;
    if a_angle != 0.0 {
        recipe.push(PulseEvent::new(1.0, j, Gate::Phase(a_angle)));
    }
    if b_angle != 0.0 {
        recipe.push(PulseEvent::new(1.0, k, Gate::Phase(b_angle)));
    }
    recipe.global_phase_correction += e1;
    recipe.normalize();

    let e_gate = [e1, e2, e3, e4].map(|e| C64::from_polar(1.0, e));
    let a = [C64::new(1.0, 0.0), C64::from_polar(1.0, e1 - e3)];
    let b = [C64::from_polar(1.0, -e1), C64::from_polar(1.0, -e2)];
    let matrix = DMatrix::from_fn(4, 4, |r, c| {
        if r == c {
            e_gate[r] * a[r >> 1] * b[r & 1]
        } else {
            C64::new(0.0, 0.0)
        }
    });
    Ok(UnitFrame { recipe, matrix })
}

/// `n` unit frames approximating `Π` on `(j, k)`.
///
/// Frame `i` draws its pulse trains from `seed.frame + i`.
pub fn synthesize_pi(
    model: &DeviceModel,
    j: usize,
    k: usize,
    n_max: u64,
    config: &DecouplingConfig,
    seed: FrameSeed,
) -> Result<(PulseSchedule, SynthesisResult), SynthError> {
    let delta_e = model.effective_zz(j, k).map_err(DecoupleError::from)?;
    if delta_e == 0.0 {
        return Err(SynthError::NoCoupling(j, k));
    }
    let result = diophantine_odd_pi(delta_e, n_max)?;
    let mut schedule = PulseSchedule::idle(0.0);
    for rep in 0..result.n {
        let frame = seed.with_frame(seed.frame + rep as u32);
        schedule.append(&build_u(model, j, k, config, frame)?.recipe);
    }
    Ok((schedule, result))
}

/// Like [`synthesize_pi`] but fails when the residual stays above
/// `max_residual`; the best effort is returned inside the error.
pub fn synthesize_pi_within(
    model: &DeviceModel,
    j: usize,
    k: usize,
    n_max: u64,
    max_residual: f64,
    config: &DecouplingConfig,
    seed: FrameSeed,
) -> Result<(PulseSchedule, SynthesisResult), SynthError> {
    let (schedule, result) = synthesize_pi(model, j, k, n_max, config, seed)?;
    if result.residual > max_residual {
        return Err(SynthError::ResidualNotReached {
            best: result.residual,
            requested: max_residual,
            n_max,
            result,
        });
    }
    Ok((schedule, result))
}

/// `H_target · Π · H_target`.
pub fn synthesize_cnot(
    model: &DeviceModel,
    control: usize,
    target: usize,
    n_max: u64,
    config: &DecouplingConfig,
    seed: FrameSeed,
) -> Result<(PulseSchedule, SynthesisResult), SynthError> {
    let (pi, result) = synthesize_pi(model, control, target, n_max, config, seed)?;
    let mut schedule = PulseSchedule::idle(0.0);
    schedule.push(PulseEvent::new(0.0, target, Gate::H));
    schedule.append(&pi);
    schedule.push(PulseEvent::new(schedule.duration, target, Gate::H));
    schedule.normalize();
    Ok((schedule, result))
}
