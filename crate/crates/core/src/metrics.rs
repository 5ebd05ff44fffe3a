//! Fidelities and Monte Carlo aggregation.
//!
//! Infidelity is `1 − F` with `F = |Tr(U†V)|/dim` for unitaries and
//! `F = |⟨ψ|φ⟩|²` for states.

use std::io::Write;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::decouple::DecouplingConfig;
use crate::device::DeviceModel;
use crate::schedule::PulseSchedule;
use crate::state::{simulate_schedule, Simulator, StateVector, MAX_RECONSTRUCT_QUBITS};
use crate::C64;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("dimension mismatch: {0} vs {1}")]
    Dimension(usize, usize),
    #[error("need at least {needed} trials, got {got}")]
    TooFewTrials { needed: usize, got: usize },
    #[error("cannot fit a slope: {0}")]
    DegenerateFit(String),
    #[error("trial {trial} at lambda {lambda}: {message}")]
    Trial {
        lambda: f64,
        trial: u64,
        message: String,
    },
    #[error("thread pool: {0}")]
    Pool(String),
    #[error("writing results: {0}")]
    Io(#[from] std::io::Error),
    #[error("writing csv: {0}")]
    Csv(#[from] csv::Error),
}

pub fn phase_invariant_fidelity(u: &DMatrix<C64>, v: &DMatrix<C64>) -> Result<f64, MetricsError> {
    if u.shape() != v.shape() || u.nrows() != u.ncols() {
        return Err(MetricsError::Dimension(u.nrows(), v.nrows()));
    }
    let trace: C64 = u.iter().zip(v.iter()).map(|(a, b)| a.conj() * b).sum();
    Ok((trace.norm() / u.nrows() as f64).min(1.0))
}

pub fn state_fidelity(a: &StateVector, b: &StateVector) -> Result<f64, MetricsError> {
    if a.dim() != b.dim() {
        return Err(MetricsError::Dimension(a.dim(), b.dim()));
    }
    Ok(a.inner(b).norm_sqr().min(1.0))
}

pub fn infidelity(fidelity: f64) -> f64 {
    (1.0 - fidelity).clamp(0.0, 1.0)
}

/// 4×4 block of `u` acting on `(j, k)` with every other qubit at `0`, in
/// `(a_j, a_k)` order (`j` is the high bit).
pub fn pair_block(u: &DMatrix<C64>, j: usize, k: usize) -> DMatrix<C64> {
    let idx = |r: usize| ((r >> 1) & 1) << j | (r & 1) << k;
    DMatrix::from_fn(4, 4, |r, c| u[(idx(r), idx(c))])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McSummary {
    pub lambda: f64,
    pub trials: usize,
    pub mean_infidelity: f64,
    pub stderr: f64,
}

/// Mean and standard error of a sample. Order of `values` does not matter
/// beyond floating-point summation, which is done in the given order.
pub fn summarize(lambda: f64, values: &[f64]) -> McSummary {
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    let stderr = if n > 1 {
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        (var / n as f64).sqrt()
    } else {
        0.0
    };
    McSummary {
        lambda,
        trials: n,
        mean_infidelity: mean.clamp(0.0, 1.0),
        stderr,
    }
}

/// Unweighted least-squares slope of `ln y` against `ln x`.
pub fn fit_log_log_slope(points: &[(f64, f64)]) -> Result<f64, MetricsError> {
    if points.len() < 2 {
        return Err(MetricsError::DegenerateFit("fewer than two points".into()));
    }
    if let Some(&(x, y)) = points.iter().find(|(x, y)| !(*x > 0.0 && *y > 0.0)) {
        return Err(MetricsError::DegenerateFit(format!(
            "non-positive value at ({x}, {y})"
        )));
    }
    let logs: Vec<(f64, f64)> = points.iter().map(|(x, y)| (x.ln(), y.ln())).collect();
    let n = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(MetricsError::DegenerateFit("all x values equal".into()));
    }
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    Ok(sxy / sxx)
}

/// What a trial's schedule is compared against.
#[derive(Debug, Clone)]
pub enum Target {
    Unitary(DMatrix<C64>),
    State {
        input: StateVector,
        expected: StateVector,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrialRecord {
    pub lambda: f64,
    pub trial: u64,
    pub duration: f64,
    pub infidelity: f64,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    /// Sorted by `(lambda position, trial)`.
    pub records: Vec<TrialRecord>,
    pub summaries: Vec<McSummary>,
    pub fit_slope: Option<f64>,
    pub fit_error: Option<String>,
}

pub struct SweepSpec<'a> {
    pub model: &'a DeviceModel,
    pub target: &'a Target,
    pub lambdas: &'a [f64],
    pub trials: usize,
    pub base: DecouplingConfig,
    /// Worker threads; `None` uses the global pool.
    pub workers: Option<usize>,
}

fn run_trial<G>(
    spec: &SweepSpec<'_>,
    generator: &G,
    lambda: f64,
    trial: u64,
) -> Result<TrialRecord, MetricsError>
where
    G: Fn(&DecouplingConfig, u64) -> Result<PulseSchedule, String> + Sync,
{
    let fail = |message: String| MetricsError::Trial {
        lambda,
        trial,
        message,
    };
    let config = DecouplingConfig {
        lambda,
        ..spec.base
    };
    let schedule = generator(&config, trial).map_err(fail)?;
    let fidelity = match spec.target {
        Target::Unitary(target) => {
            let u = Simulator::new(spec.model)
                .unitary(&schedule, MAX_RECONSTRUCT_QUBITS)
                .map_err(|e| fail(e.to_string()))?;
            phase_invariant_fidelity(&u, target)?
        }
        Target::State { input, expected } => {
            let mut state = input.clone();
            simulate_schedule(&mut state, spec.model, &schedule)
                .map_err(|e| fail(e.to_string()))?;
            state_fidelity(&state, expected)?
        }
    };
    Ok(TrialRecord {
        lambda,
        trial,
        duration: schedule.duration,
        infidelity: infidelity(fidelity),
        seed: spec.base.master_seed,
    })
}

/// Runs `trials` independent schedules per λ and aggregates their infidelity.
///
/// Trial `t` at every λ uses the random streams of `(master_seed, t)`, so the
/// output is identical for any worker count.
pub fn mc_sweep<G>(spec: &SweepSpec<'_>, generator: G) -> Result<SweepResult, MetricsError>
where
    G: Fn(&DecouplingConfig, u64) -> Result<PulseSchedule, String> + Sync,
{
    if spec.trials < 2 {
        return Err(MetricsError::TooFewTrials {
            needed: 2,
            got: spec.trials,
        });
    }
    let jobs: Vec<(f64, u64)> = spec
        .lambdas
        .iter()
        .flat_map(|&l| (0..spec.trials as u64).map(move |t| (l, t)))
        .collect();
    let work = || -> Result<Vec<TrialRecord>, MetricsError> {
        jobs.par_iter()
            .map(|&(l, t)| run_trial(spec, &generator, l, t))
            .collect()
    };
    let records = match spec.workers {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| MetricsError::Pool(e.to_string()))?
            .install(work)?,
        None => work()?,
    };

    let summaries: Vec<McSummary> = records
        .chunks(spec.trials)
        .map(|chunk| {
            let values: Vec<f64> = chunk.iter().map(|r| r.infidelity).collect();
            summarize(chunk[0].lambda, &values)
        })
        .collect();
    let points: Vec<(f64, f64)> = summaries
        .iter()
        .map(|s| (s.lambda, s.mean_infidelity))
        .collect();
    let (fit_slope, fit_error) = match fit_log_log_slope(&points) {
        Ok(s) => (Some(s), None),
        Err(e) => (None, Some(e.to_string())),
    };
    Ok(SweepResult {
        records,
        summaries,
        fit_slope,
        fit_error,
    })
}

pub const CSV_HEADER: [&str; 5] = ["lambda", "trial", "duration", "infidelity", "seed"];

fn g17(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_csv<W: Write>(records: &[TrialRecord], out: W) -> Result<(), MetricsError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in records {
        w.write_record([
            g17(r.lambda),
            r.trial.to_string(),
            g17(r.duration),
            g17(r.infidelity),
            r.seed.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
