//! Command-line front end.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 numerical or
//! search failure.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use nalgebra::{DMatrix, DVector};
use serde::Deserialize;
use serde_json::{json, Value};
use thiserror::Error;

use crate::compiler::{compile, parse_circuit, CompileError};
use crate::decouple::{build_idle_schedule, DecouplingConfig, Mode};
use crate::device::DeviceModel;
use crate::metrics::{
    mc_sweep, phase_invariant_fidelity, state_fidelity, write_csv, SweepSpec, Target,
};
use crate::rng::FrameSeed;
use crate::state::{reconstruct_unitary, simulate_schedule, StateVector, MAX_RECONSTRUCT_QUBITS};
use crate::synth::{synthesize_cnot, SynthError};
use crate::C64;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;

const DEFAULT_N_MAX: u64 = 1000;
const DEFAULT_LAMBDAS: [f64; 5] = [50.0, 100.0, 200.0, 400.0, 800.0];

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Numerical(_) => EXIT_NUMERICAL,
        }
    }
}

fn usage(e: impl std::fmt::Display) -> CliError {
    CliError::Usage(e.to_string())
}

fn numerical(e: impl std::fmt::Display) -> CliError {
    CliError::Numerical(e.to_string())
}

impl From<CompileError> for CliError {
    fn from(e: CompileError) -> Self {
        match e {
            CompileError::Circuit(_) | CompileError::Route(_) => usage(e),
            _ => numerical(e),
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "fixedzz",
    version,
    about = "Pulse compiler and simulator for always-on diagonal couplings"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Search the repetition count for a Π/CNOT on one coupled pair.
    Synth(SynthArgs),
    /// Monte Carlo sweep of the decoupled idle gate over pulse densities.
    IdleBench(BenchArgs),
    /// Compile and simulate a circuit, comparing against ideal gates.
    Run(RunArgs),
    /// Print the full unitary of a compiled circuit.
    Reconstruct(RunArgs),
}

#[derive(Debug, Args, Clone, Default)]
pub struct Common {
    /// Device file (TOML).
    #[arg(long)]
    pub device: Option<PathBuf>,
    /// Experiment config (TOML, same format family as the device file).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// `stochastic` or `expectation`.
    #[arg(long)]
    pub mode: Option<Mode>,
    /// Pulse density, or a comma-separated list for sweeps.
    #[arg(long, value_delimiter = ',')]
    pub lambda: Option<Vec<f64>>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long = "n-max")]
    pub n_max: Option<u64>,
    /// Output file or directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[command(flatten)]
    pub common: Common,
    /// Control and target qubits, e.g. `0,1`. Defaults to the first coupling.
    #[arg(long, value_delimiter = ',', num_args = 1)]
    pub pair: Option<Vec<usize>>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub trials: Option<usize>,
    /// Kept pair, e.g. `0,1`. Defaults to the first coupling.
    #[arg(long, value_delimiter = ',', num_args = 1)]
    pub pair: Option<Vec<usize>>,
    #[arg(long)]
    pub duration: Option<f64>,
    /// Worker threads for trials; results do not depend on it.
    #[arg(long)]
    pub workers: Option<usize>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub common: Common,
    /// Circuit file.
    #[arg(long)]
    pub circuit: Option<PathBuf>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum LambdaSetting {
    One(f64),
    Many(Vec<f64>),
}

/// Experiment config file. Paths are relative to the config file.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub device: Option<PathBuf>,
    pub circuit: Option<PathBuf>,
    pub mode: Option<Mode>,
    pub lambda: Option<LambdaSetting>,
    pub trials: Option<usize>,
    pub master_seed: Option<u64>,
    pub n_max: Option<u64>,
    pub duration: Option<f64>,
    pub separated: Option<Vec<usize>>,
    pub out: Option<PathBuf>,
    pub workers: Option<usize>,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| usage(format!("reading {}: {e}", path.display())))?;
        let mut cfg: ExperimentConfig =
            toml::from_str(&text).map_err(|e| usage(format!("parsing {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [&mut cfg.device, &mut cfg.circuit, &mut cfg.out]
            .into_iter()
            .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }
}

/// Flags merged over the config file.
struct Resolved {
    device: DeviceModel,
    circuit: Option<PathBuf>,
    mode: Mode,
    lambdas: Vec<f64>,
    seed: u64,
    n_max: u64,
    out: Option<PathBuf>,
    file: ExperimentConfig,
}

fn resolve(
    common: &Common,
    circuit: Option<&PathBuf>,
    default_mode: Mode,
) -> Result<Resolved, CliError> {
    let file = match &common.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    let device_path = common
        .device
        .clone()
        .or_else(|| file.device.clone())
        .ok_or_else(|| usage("missing --device (or `device` in --config)"))?;
    let device = DeviceModel::from_path(&device_path).map_err(usage)?;
    let lambdas = match (&common.lambda, &file.lambda) {
        (Some(l), _) => l.clone(),
        (None, Some(LambdaSetting::One(l))) => vec![*l],
        (None, Some(LambdaSetting::Many(l))) => l.clone(),
        (None, None) => DEFAULT_LAMBDAS.to_vec(),
    };
    if lambdas.is_empty() || lambdas.iter().any(|l| !(*l > 0.0 && l.is_finite())) {
        return Err(usage("lambda values must be positive and finite"));
    }
    let n_max = common.n_max.or(file.n_max).unwrap_or(DEFAULT_N_MAX);
    if n_max == 0 {
        return Err(usage("--n-max must be positive"));
    }
    Ok(Resolved {
        device,
        circuit: circuit.cloned().or_else(|| file.circuit.clone()),
        mode: common.mode.or(file.mode).unwrap_or(default_mode),
        lambdas,
        seed: common.seed.or(file.master_seed).unwrap_or(0),
        n_max,
        out: common.out.clone().or_else(|| file.out.clone()),
        file,
    })
}

fn decoupling(r: &Resolved) -> DecouplingConfig {
    DecouplingConfig {
        lambda: r.lambdas[0],
        mode: r.mode,
        master_seed: r.seed,
    }
}

fn pick_pair(model: &DeviceModel, given: Option<&Vec<usize>>) -> Result<(usize, usize), CliError> {
    match given {
        Some(p) if p.len() == 2 => {
            for &q in p {
                model.check_qubit(q).map_err(usage)?;
            }
            Ok((p[0], p[1]))
        }
        Some(_) => Err(usage("a pair needs exactly two qubit indices, e.g. 0,1")),
        None => model
            .couplings()
            .first()
            .map(|c| c.pair())
            .ok_or_else(|| numerical("no coupling in device")),
    }
}

/// JSON with every float printed to 17 significant digits.
pub fn to_json17(v: &Value) -> String {
    match v {
        Value::Null => "null".into(),
        Value::Bool(b) => b.to_string(),
        Value::Number(n) => {
            if n.is_u64() || n.is_i64() {
                n.to_string()
            } else {
                format!("{:.16e}", n.as_f64().unwrap_or(f64::NAN))
            }
        }
        Value::String(s) => Value::String(s.clone()).to_string(),
        Value::Array(items) => {
            let inner: Vec<String> = items.iter().map(to_json17).collect();
            format!("[{}]", inner.join(","))
        }
        Value::Object(map) => {
            let inner: Vec<String> = map
                .iter()
                .map(|(k, v)| format!("{}:{}", Value::String(k.clone()), to_json17(v)))
                .collect();
            format!("{{{}}}", inner.join(","))
        }
    }
}

fn write_file(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)
            .map_err(|e| usage(format!("creating {}: {e}", parent.display())))?;
    }
    std::fs::write(path, contents).map_err(|e| usage(format!("writing {}: {e}", path.display())))
}

pub fn cmd_synth(args: &SynthArgs) -> Result<Value, CliError> {
    let r = resolve(&args.common, None, Mode::Expectation)?;
    let (control, target) = pick_pair(&r.device, args.pair.as_ref())?;
    let (schedule, result) = synthesize_cnot(
        &r.device,
        control,
        target,
        r.n_max,
        &decoupling(&r),
        FrameSeed::default(),
    )
    .map_err(|e| match e {
        SynthError::BadNMax(_) => usage(e),
        _ => numerical(e),
    })?;
    Ok(json!({
        "delta_e": result.delta_e,
        "n": result.n,
        "m": result.m,
        "residual": result.residual,
        "fidelity_bound": result.fidelity_bound,
        "pulse_count": schedule.pulse_count(),
    }))
}

/// Paths of the CSV and summary written by `idle-bench`.
pub fn bench_outputs(out: &Path) -> (PathBuf, PathBuf) {
    (out.join("idle_bench.csv"), out.join("summary.json"))
}

pub fn cmd_idle_bench(args: &BenchArgs) -> Result<Value, CliError> {
    let r = resolve(&args.common, None, Mode::Stochastic)?;
    let trials = args.trials.or(r.file.trials).unwrap_or(200);
    let duration = args.duration.or(r.file.duration).unwrap_or(1.0);
    if !(duration > 0.0 && duration.is_finite()) {
        return Err(usage("duration must be positive"));
    }
    let workers = args.workers.or(r.file.workers);
    let pair_flag = args.pair.clone().or_else(|| r.file.separated.clone());
    let (j, k) = pick_pair(&r.device, pair_flag.as_ref())?;
    if j == k {
        return Err(usage("pair must name two distinct qubits"));
    }
    if r.device.n_qubits() > MAX_RECONSTRUCT_QUBITS {
        return Err(usage(format!(
            "idle-bench supports at most {MAX_RECONSTRUCT_QUBITS} qubits"
        )));
    }
    let e_zz = r.device.effective_zz(j, k).map_err(usage)?;
    let diag = (0..1usize << r.device.n_qubits())
        .map(|x| {
            let both = x >> j & 1 == 1 && x >> k & 1 == 1;
            C64::from_polar(1.0, if both { -duration * e_zz } else { 0.0 })
        })
        .collect();
    let target = Target::Unitary(DMatrix::from_diagonal(&DVector::from_vec(diag)));
    let spec = SweepSpec {
        model: &r.device,
        target: &target,
        lambdas: &r.lambdas,
        trials,
        base: decoupling(&r),
        workers,
    };
    let sweep = mc_sweep(&spec, |cfg, trial| {
        build_idle_schedule(&r.device, Some((j, k)), duration, cfg, trial)
            .map_err(|e| e.to_string())
    })
    .map_err(|e| match e {
        crate::metrics::MetricsError::TooFewTrials { .. } => usage(e),
        _ => numerical(e),
    })?;

    let summary = json!({
        "mode": r.mode.to_string(),
        "master_seed": r.seed,
        "trials": trials,
        "duration": duration,
        "separated": [j, k],
        "infidelity_definition": "1 - |Tr(U_target^dagger U)| / dim",
        "summaries": sweep.summaries.iter().map(|s| json!({
            "lambda": s.lambda,
            "trials": s.trials,
            "mean": s.mean_infidelity,
            "stderr": s.stderr,
        })).collect::<Vec<_>>(),
        "fit_slope": sweep.fit_slope,
        "fit_note": sweep.fit_error,
    });
    if let Some(out) = &r.out {
        let (csv_path, json_path) = bench_outputs(out);
        let mut csv_bytes = Vec::new();
        write_csv(&sweep.records, &mut csv_bytes).map_err(usage)?;
        write_file(&csv_path, &csv_bytes)?;
        write_file(&json_path, format!("{}\n", to_json17(&summary)).as_bytes())?;
    }
    Ok(summary)
}

struct CompiledRun {
    device: DeviceModel,
    ir: crate::compiler::CircuitIR,
    compiled: crate::compiler::Compiled,
    mode: Mode,
}

fn compile_from_args(args: &RunArgs) -> Result<CompiledRun, CliError> {
    let r = resolve(&args.common, args.circuit.as_ref(), Mode::Expectation)?;
    let path = r
        .circuit
        .clone()
        .ok_or_else(|| usage("missing --circuit (or `circuit` in --config)"))?;
    let text = std::fs::read_to_string(&path)
        .map_err(|e| usage(format!("reading {}: {e}", path.display())))?;
    let ir = parse_circuit(&text).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    if ir.n_qubits > r.device.n_qubits() || r.device.n_qubits() > MAX_RECONSTRUCT_QUBITS {
        return Err(usage(format!(
            "circuit of {} qubits does not fit a {}-qubit device (limit {MAX_RECONSTRUCT_QUBITS})",
            ir.n_qubits,
            r.device.n_qubits()
        )));
    }
    let compiled = compile(&ir, &r.device, r.n_max, &decoupling(&r), 0)?;
    Ok(CompiledRun {
        device: r.device,
        ir,
        compiled,
        mode: r.mode,
    })
}

pub fn cmd_run(args: &RunArgs) -> Result<Value, CliError> {
    let run = compile_from_args(args)?;
    let n = run.device.n_qubits();
    let input = StateVector::zero(n).map_err(numerical)?;
    let mut state = input.clone();
    simulate_schedule(&mut state, &run.device, &run.compiled.schedule).map_err(numerical)?;
    let ideal = run.ir.simulate_ideal(&input).map_err(numerical)?;
    let fidelity = state_fidelity(&state, &ideal).map_err(numerical)?;
    Ok(json!({
        "fidelity": fidelity,
        "pulse_count": run.compiled.schedule.pulse_count(),
        "swap_count": run.compiled.routed.swap_count,
        "frames": run.compiled.frames,
        "duration": run.compiled.schedule.duration,
        "mode": run.mode.to_string(),
    }))
}

pub fn cmd_reconstruct(args: &RunArgs) -> Result<Value, CliError> {
    let run = compile_from_args(args)?;
    let u = reconstruct_unitary(&run.device, &run.compiled.schedule).map_err(numerical)?;
    let ideal = run
        .ir
        .ideal_unitary(run.device.n_qubits())
        .map_err(numerical)?;
    let fidelity = phase_invariant_fidelity(&u, &ideal).map_err(numerical)?;
    let rows = |f: fn(&C64) -> f64| -> Vec<Vec<f64>> {
        (0..u.nrows())
            .map(|r| (0..u.ncols()).map(|c| f(&u[(r, c)])).collect())
            .collect()
    };
    Ok(json!({
        "dim": u.nrows(),
        "fidelity_vs_ideal": fidelity,
        "pulse_count": run.compiled.schedule.pulse_count(),
        "real": rows(|z| z.re),
        "imag": rows(|z| z.im),
    }))
}

/// Parses `args` (including the program name) and runs the subcommand,
/// returning the process exit code.
pub fn run_cli<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = write!(stderr, "{e}");
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let result = match &cli.command {
        Command::Synth(a) => cmd_synth(a),
        Command::IdleBench(a) => cmd_idle_bench(a),
        Command::Run(a) => cmd_run(a),
        Command::Reconstruct(a) => cmd_reconstruct(a).and_then(|v| {
            if let Some(out) = &a.common.out {
                write_file(out, format!("{}\n", to_json17(&v)).as_bytes())?;
            }
            Ok(v)
        }),
    };
    match result {
        Ok(v) => {
            let _ = writeln!(stdout, "{}", to_json17(&v));
            EXIT_OK
        }
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}
