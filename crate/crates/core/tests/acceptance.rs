//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use dicke_stark::cli::execute_scan;
use dicke_stark::config::{first_order_model, preset, RunConfig, ScanRun, ScanSection};
use dicke_stark::dynamics::{fidelity, observables, Spectral};
use dicke_stark::effective::{
    detuned_rabi_probability, first_order_detunings, rabi_frequency, Channel, ResonanceTarget,
};
use dicke_stark::hamiltonian::{build_hamiltonian, dicke_state, dicke_superposition};
use dicke_stark::protocol::{compile_dicke_ladder, compile_ghz4, run_protocol, Cell, DurationRule};
use dicke_stark::scan::{uniform_grid, Execution};
use dicke_stark::validation::{product_oracle_errors, run_validation};
use dicke_stark::{HilbertSpace, ModelParams, Result};

const FIRST_ORDER_TOL: f64 = 0.005;
const SECOND_ORDER_TOL: f64 = 0.0005;
const SCAN_TIME_LIMIT: Duration = Duration::from_secs(10);
const GHZ_FIDELITY: f64 = 0.9952;
const GHZ_TOL: f64 = 0.002;
const GHZ_TIME_LIMIT: Duration = Duration::from_secs(5);
const LADDER_FINAL: f64 = 0.98;
const LADDER_BOUNDARY: f64 = 0.95;
const LINESHAPE_TOL: f64 = 0.05;
const LINESHAPE_SPAN: f64 = 20.0;
const ORACLE_TOL: f64 = 1e-8;
const ORACLE_DRAWS: usize = 100;
const ORACLE_SEED: u64 = 7;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Result<Outcome> {
    Ok(Outcome { passed, detail })
}

/// Main peak of a single-run scan config, its prediction, the grid argmax,
/// the grid step and the wall time.
fn scan_peak(cfg: &RunConfig) -> Result<(f64, f64, f64, f64, Duration)> {
    let start = Instant::now();
    let results = execute_scan(cfg, Execution::default())?;
    let elapsed = start.elapsed();
    let r = &results[0];
    let peak = r
        .curve
        .peaks(r.run.initial.k as f64, 0.5)
        .into_iter()
        .max_by(|a, b| a.height.total_cmp(&b.height));
    let location = peak.map(|p| p.location).unwrap_or(f64::NAN);
    let argmax = r.curve.argmax().map(|p| p.ratio).unwrap_or(f64::NAN);
    let step = r.curve.grid_step().unwrap_or(f64::NAN);
    Ok((location, r.predicted.unwrap_or(f64::NAN), argmax, step, elapsed))
}

/// TC scan from `|D^0, 1>` around the first-order peak at -0.25.
fn fig2_tc_config() -> RunConfig {
    RunConfig {
        format: None,
        model: Some(first_order_model()),
        scan: Some(ScanSection {
            window: [-0.45, -0.05],
            points: 801,
            duration_rule: DurationRule::Transfer,
            min_height: 0.5,
            runs: vec![ScanRun {
                initial: Cell::new(0, 1),
                reference: Some(ResonanceTarget::first(Channel::Tc, 0, 0)),
                duration_rule: None,
            }],
        }),
        protocol: None,
        effective: None,
        validate: None,
    }
}

fn criterion_1() -> Result<Outcome> {
    let cases = [
        ("fig3", preset("fig3")?, 2.125),
        ("fig4", preset("fig4")?, -0.125),
        ("fig5", preset("fig5")?, 1.875),
        ("fig6", preset("fig6")?, 0.125),
        ("fig2", fig2_tc_config(), -0.250),
    ];
    let mut passed = true;
    let mut parts = Vec::new();
    for (name, cfg, expected) in cases {
        let scan = cfg.scan.as_ref().expect("scan config");
        assert_eq!(scan.points, 801);
        assert!(((scan.window[1] - scan.window[0]) - 0.4).abs() < 1e-12);
        let (location, predicted, argmax, step, elapsed) = scan_peak(&cfg)?;
        let ok = (location - expected).abs() <= FIRST_ORDER_TOL
            && (argmax - predicted).abs() <= step + 1e-12
            && elapsed < SCAN_TIME_LIMIT;
        passed &= ok;
        parts.push(format!(
            "{name} {location:.5} (closed form {predicted:.5}, {:.2}s)",
            elapsed.as_secs_f64()
        ));
    }
    outcome(passed, parts.join("; "))
}

fn criterion_2() -> Result<Outcome> {
    let mut passed = true;
    let mut parts = Vec::new();
    for (name, expected) in [("fig7", 2.0003), ("fig8", 0.0046)] {
        let (location, predicted, argmax, step, _) = scan_peak(&preset(name)?)?;
        let ok = (location - expected).abs() <= SECOND_ORDER_TOL
            && (argmax - predicted).abs() <= step + 1e-12;
        passed &= ok;
        parts.push(format!(
            "{name} peak {location:.6}, argmax {argmax:.6}, root {predicted:.6}"
        ));
    }
    outcome(passed, parts.join("; "))
}

fn ghz_params() -> Result<ModelParams> {
    ModelParams::new(4, 1.0, 1.0, 0.1, -16.0, 8)
}

fn criterion_3() -> Result<Outcome> {
    let start = Instant::now();
    let params = ghz_params()?;
    let protocol = compile_ghz4(&params)?;
    let space = HilbertSpace::symmetric(4, params.n_max)?;
    let run = run_protocol(&protocol, &params, &space, 100)?;
    let elapsed = start.elapsed();
    // the relative sign of the target follows from the signed couplings
    let sign = protocol.target[1].re.signum();
    let literal = dicke_superposition(&space, &[(0, 0, 1.0.into()), (4, 0, (-1.0).into())])?;
    let literal = fidelity(&run.frame_state, &literal)?;
    let f = run.fidelity;
    let ok = (f - GHZ_FIDELITY).abs() <= GHZ_TOL
        && (run.phase_optimized_fidelity - GHZ_FIDELITY).abs() <= GHZ_TOL
        && elapsed < GHZ_TIME_LIMIT;
    outcome(
        ok,
        format!(
            "F = {f:.5} against (|D0> {} |D4>)/sqrt2, phase-optimized {:.5}, {:.2}s \
             [info: fixed minus-sign target gives {literal:.5}]",
            if sign > 0.0 { "+" } else { "-" },
            run.phase_optimized_fidelity,
            elapsed.as_secs_f64()
        ),
    )
}

fn criterion_4() -> Result<Outcome> {
    let params = ModelParams::new(4, 1.0, 1.0, 0.006, -0.5, 8)?;
    let protocol = compile_dicke_ladder(4, &params)?;
    let space = HilbertSpace::symmetric(4, 8)?;
    let run = run_protocol(&protocol, &params, &space, 50)?;
    let mut passed = true;
    let mut parts = Vec::new();
    for (j, step) in run.steps.iter().enumerate() {
        let k = j + 1;
        let n = k % 2;
        let ((dk, dn), p) = step.boundary().dominant_cell();
        passed &= (dk, dn) == (k, n) && p >= LADDER_BOUNDARY;
        parts.push(format!("({dk},{dn}) {p:.4}"));
    }
    let final_pop = observables(&run.final_state).population(4, 0);
    passed &= final_pop >= LADDER_FINAL;
    outcome(
        passed,
        format!("boundaries {}; final (4,0) population {final_pop:.4}", parts.join(", ")),
    )
}

fn criterion_5() -> Result<Outcome> {
    let base = ModelParams::new(4, 1.0, 1.0, 0.006, -0.5, 9)?;
    let omega = rabi_frequency(0, 0, &base)?;
    let t = PI / (2.0 * omega);
    let space = HilbertSpace::symmetric(4, 9)?;
    let psi0 = dicke_state(&space, 0, 1)?;
    let grid = uniform_grid(-0.25 - 0.13, -0.25 + 0.13, 261)?;
    let mut worst = 0.0f64;
    let mut covered = 0;
    for ratio in grid {
        let p = base.with_omega_q(base.omega_q_from_ratio(ratio));
        let delta = first_order_detunings(0, 0, &p).delta_minus;
        if delta.abs() > LINESHAPE_SPAN * omega {
            continue;
        }
        covered += 1;
        let psi = Spectral::new(&build_hamiltonian(&p, &space)?)?.evolve_state(&psi0, t)?;
        let exact = observables(&psi).population(1, 0);
        worst = worst.max((exact - detuned_rabi_probability(omega, delta, t)).abs());
    }
    outcome(
        worst <= LINESHAPE_TOL && covered > 100,
        format!("max deviation {worst:.4} over {covered} detunings with |delta| <= 20 Omega"),
    )
}

fn criterion_6() -> Result<Outcome> {
    let errors = product_oracle_errors(ORACLE_DRAWS, ORACLE_SEED)?;
    let worst = errors.iter().copied().fold(0.0, f64::max);
    outcome(
        errors.len() == ORACLE_DRAWS && worst <= ORACLE_TOL,
        format!("worst distance {worst:.2e} over {} draws", errors.len()),
    )
}

fn criterion_7() -> Result<Outcome> {
    let report = run_validation(10, ORACLE_SEED, None, None)?;
    let wanted = [
        "unitarity",
        "norm_drift",
        "hermiticity",
        "cutoff_doubling",
        "rwa_selectivity",
    ];
    let mut passed = true;
    let mut parts = Vec::new();
    for name in wanted {
        match report.check(name) {
            Some(c) => {
                passed &= c.passed;
                parts.push(format!("{name} {:.3e}", c.worst));
            }
            None => {
                passed = false;
                parts.push(format!("{name} missing"));
            }
        }
    }
    outcome(passed, parts.join(", "))
}

fn main() -> ExitCode {
    // `cargo test -- --list` and filters should not run the suite
    if std::env::args().any(|a| a == "--list") {
        println!("acceptance: test");
        return ExitCode::SUCCESS;
    }
    let criteria: [(&str, fn() -> Result<Outcome>); 7] = [
        ("1 first-order resonance locations", criterion_1),
        ("2 second-order resonance locations", criterion_2),
        ("3 GHZ fidelity", criterion_3),
        ("4 Dicke ladder populations", criterion_4),
        ("5 detuned Rabi lineshape", criterion_5),
        ("6 product vs symmetric oracle", criterion_6),
        ("7 property suite", criterion_7),
    ];
    let mut failures = 0;
    for (name, check) in criteria {
        let (passed, detail) = match check() {
            Ok(o) => (o.passed, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        if !passed {
            failures += 1;
        }
        println!(
            "criterion {name}: {} ({detail})",
            if passed { "PASS" } else { "FAIL" }
        );
    }
    println!("acceptance: {} of 7 criteria passed", 7 - failures);
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
