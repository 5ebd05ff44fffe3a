//! Acceptance suite. Runs without the libtest harness so every criterion
//! prints one PASS/FAIL line; exits nonzero if any fails.

use std::f64::consts::{FRAC_1_SQRT_2, PI, TAU};
use std::time::{Duration, Instant};

use fixedzz::cli::{bench_outputs, run_cli};
use fixedzz::compiler::{compile, parse_circuit};
use fixedzz::decouple::build_idle_schedule;
use fixedzz::device::reduce_form_a;
use fixedzz::metrics::{mc_sweep, phase_invariant_fidelity, state_fidelity, SweepSpec, Target};
use fixedzz::rng::FrameSeed;
use fixedzz::state::{reconstruct_unitary, simulate_schedule};
use fixedzz::synth::{diophantine_odd_pi, synthesize_cnot};
use fixedzz::{CouplingSpec, DecouplingConfig, DeviceModel, StateVector, C64};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome, Duration);

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn random_device(rng: &mut ChaCha8Rng, n: usize) -> DeviceModel {
    let mut couplings = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            if rng.random_bool(0.6) {
                let (j, k) = if rng.random_bool(0.5) { (a, b) } else { (b, a) };
                couplings.push(if rng.random_bool(0.5) {
                    CouplingSpec::form_b(j, k, rng.random_range(-3.0..3.0))
                } else {
                    CouplingSpec::form_a(j, k, std::array::from_fn(|_| rng.random_range(-3.0..3.0)))
                });
            }
        }
    }
    DeviceModel::new(n, couplings).unwrap()
}

/// `diag(exp(-i·t·e·a_j·a_k))` over `n` qubits.
fn zz_target(n: usize, j: usize, k: usize, e: f64, t: f64) -> DMatrix<C64> {
    let diag: Vec<C64> = (0..1usize << n)
        .map(|x| {
            if (x >> j) & (x >> k) & 1 == 1 {
                C64::from_polar(1.0, -t * e)
            } else {
                c(1.0, 0.0)
            }
        })
        .collect();
    DMatrix::from_diagonal(&DVector::from_vec(diag))
}

fn criterion_1() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst_diag = 0.0f64;
    let mut worst_amp = 0.0f64;
    for _ in 0..1000 {
        let e: [f64; 4] = std::array::from_fn(|_| rng.random_range(-5.0..5.0));
        let r = reduce_form_a(e);
        // rebuild the diagonal from its parts: c + lj·a_j + lk·a_k + zz·a_j·a_k
        let rebuilt = [
            r.constant,
            r.constant + r.local_k,
            r.constant + r.local_j,
            r.constant + r.local_j + r.local_k + r.e_zz,
        ];
        for i in 0..4 {
            worst_diag = worst_diag.max((rebuilt[i] - e[i]).abs());
        }

        let model = DeviceModel::new(2, vec![CouplingSpec::form_a(0, 1, e)]).unwrap();
        let t = rng.random_range(0.0..3.0);
        let amps: Vec<C64> = (0..4)
            .map(|_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        let amps: Vec<C64> = amps.iter().map(|a| a / norm).collect();
        let mut state = StateVector::from_amplitudes(2, amps.clone()).unwrap();
        state.evolve_free(&model, t).unwrap();
        let got = state.physical_amplitudes();
        for (x, amp) in amps.iter().enumerate() {
            let a_lo = (x & 1) as f64;
            let a_hi = (x >> 1 & 1) as f64;
            let energy = r.constant + r.local_j * a_lo + r.local_k * a_hi + r.e_zz * a_lo * a_hi;
            let want = amp * C64::from_polar(1.0, -energy * t);
            worst_amp = worst_amp.max((got[x] - want).norm());
        }
    }
    let detail =
        format!("max diagonal error {worst_diag:.2e}, max amplitude error {worst_amp:.2e}");
    if worst_diag <= 1e-12 && worst_amp <= 1e-12 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn criterion_2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    let mut cases = 0;
    for n in 3..=8 {
        for _ in 0..4 {
            let model = random_device(&mut rng, n);
            let j = rng.random_range(0..n);
            let k = (j + rng.random_range(1..n)) % n;
            let t = rng.random_range(0.1..2.0);
            let schedule =
                build_idle_schedule(&model, Some((j, k)), t, &DecouplingConfig::expectation(), 0)
                    .map_err(|e| e.to_string())?;
            let u = reconstruct_unitary(&model, &schedule).map_err(|e| e.to_string())?;
            let e = model.effective_zz(j, k).unwrap();
            let f = phase_invariant_fidelity(&u, &zz_target(n, j, k, e, t)).unwrap();
            worst = worst.max(1.0 - f);
            cases += 1;
        }
    }
    let detail = format!("{cases} devices, worst infidelity {worst:.2e}");
    if worst <= 1e-10 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn criterion_3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let devices: Vec<DeviceModel> = (3..=6).map(|n| random_device(&mut rng, n)).collect();
    let mut mismatches = 0;
    for trial in 0..10_000u64 {
        let model = &devices[trial as usize % devices.len()];
        let n = model.n_qubits();
        let input = rng.random_range(0..1usize << n);
        let j = rng.random_range(0..n);
        let k = (j + rng.random_range(1..n)) % n;
        let separated = if rng.random_bool(0.5) {
            Some((j, k))
        } else {
            None
        };
        let lambda = rng.random_range(1.0..200.0);
        let config = DecouplingConfig::stochastic(lambda, 33);
        let schedule =
            build_idle_schedule(model, separated, rng.random_range(0.1..2.0), &config, trial)
                .map_err(|e| e.to_string())?;
        let mut state = StateVector::basis(n, input).unwrap();
        simulate_schedule(&mut state, model, &schedule).map_err(|e| e.to_string())?;
        if state.basis_index(1e-9) != Some(input) {
            mismatches += 1;
        }
    }
    let detail = format!("10000 trials, {mismatches} outputs differ from input");
    if mismatches == 0 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn criterion_4() -> Outcome {
    let model = DeviceModel::new(
        3,
        vec![
            CouplingSpec::form_b(0, 1, 1.0),
            CouplingSpec::form_b(1, 2, 1.3),
            CouplingSpec::form_a(0, 2, [0.1, 0.4, -0.3, 0.8]),
        ],
    )
    .unwrap();
    let duration = 1.0;
    let target = Target::Unitary(zz_target(3, 0, 1, 1.0, duration));
    let lambdas = [50.0, 100.0, 200.0, 400.0, 800.0];
    let spec = SweepSpec {
        model: &model,
        target: &target,
        lambdas: &lambdas,
        trials: 200,
        base: DecouplingConfig::stochastic(1.0, 4),
        workers: None,
    };
    let sweep = mc_sweep(&spec, |cfg, trial| {
        build_idle_schedule(&model, Some((0, 1)), duration, cfg, trial).map_err(|e| e.to_string())
    })
    .map_err(|e| e.to_string())?;
    let slope = sweep.fit_slope.ok_or("no slope")?;
    let first = sweep.summaries[0].mean_infidelity;
    let last = sweep.summaries[4].mean_infidelity;
    let ratio = first / last;
    let detail = format!("slope {slope:.3}, mean(50)/mean(800) = {ratio:.2}");
    if (-1.3..=-0.7).contains(&slope) && ratio >= 8.0 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// Distance from `x ≥ 0` to the nearest odd multiple of π.
fn odd_pi_distance(x: f64) -> f64 {
    let r = (x - PI).rem_euclid(TAU);
    r.min(TAU - r)
}

fn criterion_5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut disagreements = Vec::new();
    let mut max_diff = 0.0f64;
    for _ in 0..100 {
        let de = rng.random_range(1e-6..10.0);
        let got = diophantine_odd_pi(de, 10_000).map_err(|e| e.to_string())?;
        let (mut best_n, mut best_r) = (0, f64::INFINITY);
        for n in 1..=10_000u64 {
            let r = odd_pi_distance(n as f64 * de);
            if r < best_r {
                best_n = n;
                best_r = r;
            }
        }
        // both residuals come from x = n·ΔE up to 1e5, so compare at f64 precision of x
        let tol = 1e-12 * (got.n as f64 * de).max(1.0);
        max_diff = max_diff.max((got.residual - best_r).abs());
        let tie = (odd_pi_distance(got.n as f64 * de) - best_r).abs() <= tol;
        if !((got.n == best_n || tie) && (got.residual - best_r).abs() <= tol) {
            disagreements.push(format!("ΔE={de}: got n={} want n={best_n}", got.n));
        }
    }
    let unit = diophantine_odd_pi(1.0, 30).map_err(|e| e.to_string())?;
    let unit_ok = unit.n == 22 && unit.m == 3 && (unit.residual - 8.85e-3).abs() <= 1e-5;
    let detail = format!(
        "100 random ΔE, {} disagreements (max residual gap {max_diff:.1e}); ΔE=1: n={}, m={}, residual={:.4e}",
        disagreements.len(),
        unit.n,
        unit.m,
        unit.residual
    );
    if disagreements.is_empty() && unit_ok {
        Ok(detail)
    } else {
        Err(format!("{detail} {disagreements:?}"))
    }
}

/// CNOT with control = qubit 0 (low bit), target = qubit 1.
fn cnot_01() -> DMatrix<C64> {
    let mut m = DMatrix::zeros(4, 4);
    for x in 0..4usize {
        let y = if x & 1 == 1 { x ^ 2 } else { x };
        m[(y, x)] = c(1.0, 0.0);
    }
    m
}

fn criterion_6() -> Outcome {
    let mut parts = Vec::new();
    let mut ok = true;
    for (e, floor) in [(1.0, 1.0 - 2.0e-5), (PI, 1.0 - 1e-10)] {
        let model = DeviceModel::new(2, vec![CouplingSpec::form_b(0, 1, e)]).unwrap();
        let (schedule, result) = synthesize_cnot(
            &model,
            0,
            1,
            30,
            &DecouplingConfig::expectation(),
            FrameSeed::default(),
        )
        .map_err(|e| e.to_string())?;
        let u = reconstruct_unitary(&model, &schedule).map_err(|e| e.to_string())?;
        let f = phase_invariant_fidelity(&u, &cnot_01()).unwrap();
        let bound = 1.0 - result.residual.powi(2) / 4.0;
        ok &= f >= bound && f >= floor;
        parts.push(format!("E={e:.4}: F={f:.12} (bound {bound:.12})"));
    }
    let detail = parts.join("; ");
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn criterion_7() -> Outcome {
    let model = DeviceModel::chain(4, PI).unwrap();
    let ir = parse_circuit("qubits 4\nH 0\nCNOT 0 1\nCNOT 1 2\nCNOT 2 3\n").unwrap();
    let mut amps = vec![c(0.0, 0.0); 16];
    amps[0] = c(FRAC_1_SQRT_2, 0.0);
    amps[15] = c(FRAC_1_SQRT_2, 0.0);
    let ghz = StateVector::from_amplitudes(4, amps).unwrap();
    let fidelity = |config: &DecouplingConfig| -> Result<f64, String> {
        let compiled = compile(&ir, &model, 30, config, 0).map_err(|e| e.to_string())?;
        let mut state = StateVector::zero(4).unwrap();
        simulate_schedule(&mut state, &model, &compiled.schedule).map_err(|e| e.to_string())?;
        Ok(state_fidelity(&state, &ghz).unwrap())
    };
    let exact = fidelity(&DecouplingConfig::expectation())?;
    let mut stochastic = (0..50u64)
        .map(|seed| fidelity(&DecouplingConfig::stochastic(1e4, seed)))
        .collect::<Result<Vec<_>, _>>()?;
    stochastic.sort_by(f64::total_cmp);
    let median = (stochastic[24] + stochastic[25]) / 2.0;
    let detail = format!("expectation F={exact:.12}, stochastic median F={median:.6}");
    if exact >= 1.0 - 1e-8 && median >= 0.99 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn criterion_8() -> Outcome {
    let mut points = Vec::new();
    for n in 3..=9usize {
        let model = DeviceModel::chain(n, PI).unwrap();
        let ir = parse_circuit(&format!("qubits {n}\nCNOT 0 {}\n", n - 1)).unwrap();
        let compiled = compile(&ir, &model, 30, &DecouplingConfig::expectation(), 0)
            .map_err(|e| e.to_string())?;
        if compiled.routed.swap_count != 2 * (n - 2) {
            return Err(format!(
                "n={n}: swap_count {} != {}",
                compiled.routed.swap_count,
                2 * (n - 2)
            ));
        }
        points.push((n as f64, compiled.schedule.pulse_count() as f64));
    }
    let m = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / m;
    let my = points.iter().map(|p| p.1).sum::<f64>() / m;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let worst = points
        .iter()
        .map(|&(x, y)| ((y - (intercept + slope * x)) / y).abs())
        .fold(0.0, f64::max);
    let counts: Vec<u64> = points.iter().map(|p| p.1 as u64).collect();
    let detail = format!("pulse counts {counts:?}, fit {slope:.2}·n + {intercept:.2}, worst relative residual {worst:.2e}");
    if worst < 0.05 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn criterion_9() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let device = DeviceModel::new(
        3,
        vec![
            CouplingSpec::form_b(0, 1, 1.0),
            CouplingSpec::form_a(1, 2, [0.2, -0.4, 0.1, 0.7]),
        ],
    )
    .unwrap();
    std::fs::write(
        dir.path().join("device.toml"),
        device.to_file().to_toml_string(),
    )
    .unwrap();
    std::fs::write(
        dir.path().join("bench.toml"),
        "device = \"device.toml\"\nmode = \"stochastic\"\nlambda = [50.0, 200.0]\ntrials = 24\nmaster_seed = 9\n",
    )
    .unwrap();
    let config = dir.path().join("bench.toml");
    let mut outputs = Vec::new();
    for (run, workers) in [(0, 1), (1, 1), (2, 4)] {
        let out = dir.path().join(format!("run{run}"));
        let args = [
            "fixedzz".to_string(),
            "idle-bench".into(),
            "--config".into(),
            config.display().to_string(),
            "--workers".into(),
            workers.to_string(),
            "--out".into(),
            out.display().to_string(),
        ];
        let (mut so, mut se) = (Vec::new(), Vec::new());
        let code = run_cli(args, &mut so, &mut se);
        if code != 0 {
            return Err(format!("exit {code}: {}", String::from_utf8_lossy(&se)));
        }
        outputs.push(std::fs::read(bench_outputs(&out).0).map_err(|e| e.to_string())?);
    }
    let detail = format!(
        "3 runs (workers 1, 1, 4), {} CSV bytes each",
        outputs[0].len()
    );
    if outputs[0] == outputs[1] && outputs[0] == outputs[2] && !outputs[0].is_empty() {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn main() {
    let criteria: [Criterion; 9] = [
        (
            "form reduction exactness",
            criterion_1,
            Duration::from_secs(1),
        ),
        (
            "expectation-mode decoupling exactness",
            criterion_2,
            Duration::from_secs(10),
        ),
        (
            "stochastic restoration",
            criterion_3,
            Duration::from_secs(30),
        ),
        (
            "decoupling scaling law",
            criterion_4,
            Duration::from_secs(120),
        ),
        ("diophantine search", criterion_5, Duration::from_secs(5)),
        (
            "CNOT synthesis fidelity",
            criterion_6,
            Duration::from_secs(5),
        ),
        (
            "end-to-end GHZ-4 compilation",
            criterion_7,
            Duration::from_secs(120),
        ),
        (
            "linear slowdown witness",
            criterion_8,
            Duration::from_secs(60),
        ),
        ("reproducibility", criterion_9, Duration::from_secs(60)),
    ];
    let mut failed = 0;
    for (i, (name, run, budget)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let elapsed = start.elapsed();
        let (status, detail) = match outcome {
            Ok(d) if elapsed <= *budget => ("PASS", d),
            Ok(d) => (
                "FAIL",
                format!("{d}; took {elapsed:.2?}, budget {budget:?}"),
            ),
            Err(d) => ("FAIL", d),
        };
        if status == "FAIL" {
            failed += 1;
        }
        println!(
            "criterion {} [{status}] {name}: {detail} ({elapsed:.2?})",
            i + 1
        );
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
