//! Randomized NOT-train decoupling.
//!
//! To keep only the interaction of a chosen pair `(j, k)`, every other qubit
//! is flipped at the instants of an independent Poisson process of density
//! λ and flipped once more at the end of the frame when it received an odd
//! number of pulses, so every qubit finishes with its initial value. For
//! large λ each flipped qubit spends half the frame in each value, so:
//!
//! * a coupling between a flipped qubit and `j` (or `k`) contributes half its
//!   energy, linear in `a_j` (or `a_k`);
//! * a coupling between two flipped qubits contributes a quarter of its
//!   energy, independent of the state.
//!
//! Both terms are cancelled by phase pulses on `j` and `k` and a global phase
//! at the end of the frame. Expectation mode replaces the random trains by an
//! averaging window carrying exactly these limits.

use std::collections::BTreeMap;
use std::f64::consts::TAU;

use rand::Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::device::{DeviceError, DeviceModel};
use crate::gate::Gate;
use crate::rng::{self, FrameSeed};
use crate::schedule::{AveragingWindow, PulseEvent, PulseSchedule};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DecoupleError {
    #[error("pulse density must be positive and finite, got {0}")]
    BadLambda(f64),
    #[error("duration must be positive and finite, got {0}")]
    BadDuration(f64),
    #[error("separated pair ({0}, {1}) must name two distinct qubits")]
    InvalidPair(usize, usize),
    #[error("no coupling between qubits {0} and {1}")]
    NoCoupling(usize, usize),
    #[error("register of {0} qubits exceeds the 64-qubit pulse mask")]
    TooManyQubits(usize),
    #[error(transparent)]
    Device(#[from] DeviceError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Stochastic,
    Expectation,
}

impl std::str::FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "stochastic" => Ok(Mode::Stochastic),
            "expectation" => Ok(Mode::Expectation),
            other => Err(format!(
                "unknown mode {other:?} (expected stochastic or expectation)"
            )),
        }
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Mode::Stochastic => "stochastic",
            Mode::Expectation => "expectation",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecouplingConfig {
    /// Pulses per unit time; unused in expectation mode.
    pub lambda: f64,
    pub mode: Mode,
    pub master_seed: u64,
}

impl DecouplingConfig {
    pub fn expectation() -> Self {
        DecouplingConfig {
            lambda: 1.0,
            mode: Mode::Expectation,
            master_seed: 0,
        }
    }

    pub fn stochastic(lambda: f64, master_seed: u64) -> Self {
        DecouplingConfig {
            lambda,
            mode: Mode::Stochastic,
            master_seed,
        }
    }

    pub fn validate(&self) -> Result<(), DecoupleError> {
        if self.mode == Mode::Stochastic && !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(DecoupleError::BadLambda(self.lambda));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PulseTrain {
    pub qubit: usize,
    /// Strictly increasing, inside `(0, duration)`.
    pub times: Vec<f64>,
    /// Set when the train has an odd number of flips.
    pub close_with_not: bool,
}

/// Draws one Poisson train of density `lambda` on `(0, duration)`.
pub fn sample_pulse_train<R: Rng + ?Sized>(
    qubit: usize,
    lambda: f64,
    duration: f64,
    rng: &mut R,
) -> Result<PulseTrain, DecoupleError> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(DecoupleError::BadLambda(lambda));
    }
    if !(duration > 0.0 && duration.is_finite()) {
        return Err(DecoupleError::BadDuration(duration));
    }
    let gaps = Exp::new(lambda).map_err(|_| DecoupleError::BadLambda(lambda))?;
    let mut times = Vec::with_capacity((lambda * duration * 1.2) as usize + 4);
    let mut t = 0.0;
    loop {
        t += gaps.sample(rng);
        if t >= duration {
            break;
        }
        // a zero-length gap would repeat an instant
        if times.last().is_none_or(|&last| t > last) && t > 0.0 {
            times.push(t);
        }
    }
    let close_with_not = times.len() % 2 == 1;
    Ok(PulseTrain {
        qubit,
        times,
        close_with_not,
    })
}

/// Phase pulses (`diag(1, e^{iφ})`) and global phase that cancel the
/// averaged contribution of the flipped qubits.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CompensationPlan {
    pub z_phase: BTreeMap<usize, f64>,
    pub global_phase: f64,
}

impl CompensationPlan {
    fn add_z(&mut self, q: usize, phi: f64) {
        *self.z_phase.entry(q).or_insert(0.0) += phi;
    }

    fn prune(mut self) -> Self {
        self.z_phase.retain(|_, v| *v != 0.0);
        self
    }

    pub fn is_empty(&self) -> bool {
        self.z_phase.is_empty() && self.global_phase == 0.0
    }

    fn emit(&self, schedule: &mut PulseSchedule, at: f64) {
        for (&q, &phi) in &self.z_phase {
            schedule.push(PulseEvent::new(at, q, Gate::Phase(phi)));
        }
        schedule.global_phase_correction += self.global_phase;
    }
}

fn check_pair(model: &DeviceModel, j: usize, k: usize) -> Result<(), DecoupleError> {
    model.check_qubit(j)?;
    model.check_qubit(k)?;
    if j == k {
        return Err(DecoupleError::InvalidPair(j, k));
    }
    Ok(())
}

/// Expected extra phase per coupling, with the pair's own one-qubit and
/// constant terms included when `own_pair_terms` is set.
fn expected_plan(
    model: &DeviceModel,
    separated: Option<(usize, usize)>,
    duration: f64,
    own_pair_terms: bool,
) -> CompensationPlan {
    let kept = |q: usize| separated.is_some_and(|(j, k)| q == j || q == k);
    let mut plan = CompensationPlan::default();
    for c in model.couplings() {
        let (lo, hi) = c.pair();
        let r = c.reduced();
        match (kept(lo), kept(hi)) {
            (true, true) => {
                if own_pair_terms {
                    plan.add_z(lo, duration * r.local_j);
                    plan.add_z(hi, duration * r.local_k);
                    plan.global_phase += duration * r.constant;
                }
            }
            (true, false) => {
                plan.add_z(lo, duration * (r.local_j + 0.5 * r.e_zz));
                plan.global_phase += duration * (r.constant + 0.5 * r.local_k);
            }
            (false, true) => {
                plan.add_z(hi, duration * (r.local_k + 0.5 * r.e_zz));
                plan.global_phase += duration * (r.constant + 0.5 * r.local_j);
            }
            (false, false) => {
                plan.global_phase +=
                    duration * (r.constant + 0.5 * (r.local_j + r.local_k) + 0.25 * r.e_zz);
            }
        }
    }
    plan.prune()
}

/// Compensation for the flipped qubits while `(j, k)` is kept.
///
/// For form-B couplings this is `z[j] = ½·T·Σ_p E_pj`, `z[k] = ½·T·Σ_p E_pk`
/// and `global = ¼·T·Σ_{p<q} E_pq` over flipped `p, q`. Form-A couplings are
/// handled through their reduced terms.
pub fn compensation_plan(
    model: &DeviceModel,
    separated: (usize, usize),
    duration: f64,
) -> Result<CompensationPlan, DecoupleError> {
    check_pair(model, separated.0, separated.1)?;
    Ok(expected_plan(model, Some(separated), duration, false))
}

/// Builds one decoupled frame. With `own_pair_terms` the kept pair's one-qubit
/// and constant terms are also cancelled, leaving only `ΔE·a_j·a_k`.
pub(crate) fn build_frame(
    model: &DeviceModel,
    separated: Option<(usize, usize)>,
    duration: f64,
    config: &DecouplingConfig,
    seed: FrameSeed,
    own_pair_terms: bool,
) -> Result<PulseSchedule, DecoupleError> {
    config.validate()?;
    if let Some((j, k)) = separated {
        check_pair(model, j, k)?;
    }
    if !(duration >= 0.0 && duration.is_finite()) {
        return Err(DecoupleError::BadDuration(duration));
    }
    let n = model.n_qubits();
    if n > 64 {
        return Err(DecoupleError::TooManyQubits(n));
    }
    let flipped: Vec<usize> = (0..n)
        .filter(|&q| separated.is_none_or(|(j, k)| q != j && q != k))
        .collect();

    let mut schedule = PulseSchedule::idle(duration);
    if duration == 0.0 {
        return Ok(schedule);
    }
    match config.mode {
        Mode::Stochastic => {
            for &q in &flipped {
                let mut stream = rng::stream(config.master_seed, seed, q);
                let train = sample_pulse_train(q, config.lambda, duration, &mut stream)?;
                schedule
                    .events
                    .extend(train.times.iter().map(|&t| PulseEvent::new(t, q, Gate::X)));
                if train.close_with_not {
                    schedule.push(PulseEvent::new(duration, q, Gate::X));
                }
            }
        }
        Mode::Expectation => {
            let mask = flipped.iter().fold(0u64, |m, &q| m | 1 << q);
            if mask != 0 {
                schedule.windows.push(AveragingWindow {
                    start: 0.0,
                    end: duration,
                    mask,
                });
            }
        }
    }
    expected_plan(model, separated, duration, own_pair_terms).emit(&mut schedule, duration);
    schedule.normalize();
    Ok(schedule)
}

/// Idle frame that keeps only `ΔE_jk·a_j·a_k` for `separated` (or nothing
/// when no pair is given). The pair's own one-qubit terms are cancelled too.
pub fn build_idle_schedule(
    model: &DeviceModel,
    separated: Option<(usize, usize)>,
    duration: f64,
    config: &DecouplingConfig,
    trial: u64,
) -> Result<PulseSchedule, DecoupleError> {
    build_frame(
        model,
        separated,
        duration,
        config,
        FrameSeed::trial(trial),
        true,
    )
}

/// Frame length that realizes a conditional phase `θ` (applied as
/// `e^{-iθ}` on `|11⟩`) through a coupling of strength `e_zz`.
pub fn zz_duration(theta: f64, e_zz: f64) -> f64 {
    let mut t = theta.rem_euclid(TAU);
    if e_zz < 0.0 && t != 0.0 {
        t = TAU - t;
    }
    // rem_euclid can round up to exactly TAU
    if t >= TAU {
        t = 0.0;
    }
    t / e_zz.abs()
}

/// Decoupled frame of length `θ/ΔE` giving `diag(1, 1, 1, e^{-iθ})` on `(j, k)`.
pub fn decoupled_zz_gate(
    model: &DeviceModel,
    j: usize,
    k: usize,
    theta: f64,
    config: &DecouplingConfig,
    seed: FrameSeed,
) -> Result<PulseSchedule, DecoupleError> {
    check_pair(model, j, k)?;
    let e = model.effective_zz(j, k)?;
    if e == 0.0 {
        return Err(DecoupleError::NoCoupling(j, k));
    }
    let dt = zz_duration(theta, e);
    if dt == 0.0 {
        return Ok(PulseSchedule::idle(0.0));
    }
    build_frame(model, Some((j, k)), dt, config, seed, true)
}
