//! Invariant and oracle-equivalence checks behind the `validate` command.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use nalgebra::DVector;
use num_complex::Complex64;

use crate::config::{preset, ModelSection, ProtocolSection, PROTOCOL_PRESETS, SCAN_PRESETS};
use crate::dynamics::{energy, observables, Observables, Spectral};
use crate::effective::{rwa_validity_report, second_order_coeffs, solve_resonance, ResonanceTarget};
use crate::error::Result;
use crate::hamiltonian::{
    build_hamiltonian, build_hamiltonian_with, dicke_state, embed_in_product, project_to_symmetric,
    CouplingTerms,
};
use crate::model::ModelParams;
use crate::operator::{StateVector, HERMITIAN_TOL, NORM_TOL, UNITARY_TOL};
use crate::protocol::{run_protocol, Cell};
use crate::scan::scan_duration;
use crate::space::HilbertSpace;

pub const ORACLE_TOL: f64 = 1e-8;
pub const CUTOFF_TOL: f64 = 1e-8;
pub const ENERGY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    /// Worst value seen over all cases. For lower bounds this is the minimum.
    pub worst: f64,
    pub threshold: f64,
    pub cases: usize,
}

impl CheckResult {
    fn upper(name: &str, values: &[f64], threshold: f64) -> Self {
        let worst = values.iter().copied().fold(0.0, f64::max);
        CheckResult {
            name: name.to_string(),
            passed: !values.is_empty() && values.iter().all(|v| *v <= threshold),
            worst,
            threshold,
            cases: values.len(),
        }
    }

    fn lower(name: &str, values: &[f64], threshold: f64) -> Self {
        let worst = values.iter().copied().fold(f64::INFINITY, f64::min);
        CheckResult {
            name: name.to_string(),
            passed: !values.is_empty() && values.iter().all(|v| *v > threshold),
            worst,
            threshold,
            cases: values.len(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub passed: bool,
    pub checks: Vec<CheckResult>,
}

impl ValidationReport {
    pub fn new(checks: Vec<CheckResult>) -> Self {
        ValidationReport {
            passed: checks.iter().all(|c| c.passed),
            checks,
        }
    }

    pub fn check(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// A selective interaction tuned on resonance, as used by a preset.
#[derive(Debug, Clone)]
pub struct ResonancePoint {
    pub label: String,
    pub params: ModelParams,
    pub target: ResonanceTarget,
    pub initial: Cell,
    pub duration: f64,
}

/// Every scan reference and protocol step of the named presets, on resonance.
pub fn preset_resonances() -> Result<Vec<ResonancePoint>> {
    let mut out = Vec::new();
    for name in SCAN_PRESETS {
        let cfg = preset(name)?;
        let model = cfg.model()?;
        let scan = cfg.scan.as_ref().expect("scan presets carry a scan section");
        for run in &scan.runs {
            let Some(target) = run.reference else { continue };
            let params = model.params(run.initial.n)?;
            let rule = run.duration_rule.unwrap_or(scan.duration_rule);
            let duration = scan_duration(rule, Some(&target), &params)?;
            let omega_q = solve_resonance(&target, &params)?;
            out.push(ResonancePoint {
                label: format!("{name}:{}", target.label()),
                params: params.with_omega_q(omega_q),
                target,
                initial: run.initial,
                duration,
            });
        }
    }
    for name in PROTOCOL_PRESETS {
        let cfg = preset(name)?;
        let model = cfg.model()?;
        let section = cfg.protocol.as_ref().expect("protocol presets carry a protocol section");
        let spec = section.spec(model)?;
        let params = spec.params()?;
        let protocol = spec.compile()?;
        for (step, s) in spec.steps.iter().zip(&protocol.steps) {
            let target = step.target();
            let ((k, n), _) = target.transition();
            out.push(ResonancePoint {
                label: format!("{name}:{}", s.label),
                params: params.with_omega_q(s.omega_q),
                target,
                initial: Cell::new(k, n),
                duration: s.duration,
            });
        }
    }
    Ok(out)
}

struct Dynamics {
    hermiticity: f64,
    unitarity: f64,
    norm_drift: f64,
    energy_drift: f64,
}

fn dynamics_invariants(params: &ModelParams, initial: &StateVector, duration: f64) -> Result<Dynamics> {
    let space = *initial.space();
    let h = build_hamiltonian(params, &space)?;
    let hermiticity = h.hermiticity_error() / h.max_abs().max(1.0);
    let spectral = Spectral::new(&h)?;
    let unitarity = spectral.propagator(duration).unitarity_error();
    let traj = spectral.trajectory(initial, duration, 50, 0.0)?;
    let e0 = energy(initial, &h)?;
    let scale = e0.abs().max(1.0);
    let mut energy_drift = 0.0f64;
    for psi in &traj.states {
        energy_drift = energy_drift.max((energy(psi, &h)? - e0).abs() / scale);
    }
    Ok(Dynamics {
        hermiticity,
        unitarity,
        norm_drift: traj.max_norm_drift(),
        energy_drift,
    })
}

fn observable_distance(small: &Observables, large: &Observables) -> f64 {
    let mut worst = (small.nq - large.nq).abs().max((small.nph - large.nph).abs());
    for k in 0..=small.n_qubits() {
        for n in 0..=small.n_max() {
            worst = worst.max((small.population(k, n) - large.population(k, n)).abs());
        }
    }
    worst
}

/// Largest change in `<N_q>`, `<a^dag a>` or any cell population when the
/// photon cutoff of `point` is doubled.
pub fn cutoff_doubling_error(point: &ResonancePoint) -> Result<f64> {
    let evolve = |params: &ModelParams| -> Result<Observables> {
        let space = HilbertSpace::symmetric(params.n_qubits, params.n_max)?;
        let psi0 = dicke_state(&space, point.initial.k, point.initial.n)?;
        let h = build_hamiltonian(params, &space)?;
        Ok(observables(&Spectral::new(&h)?.evolve_state(&psi0, point.duration)?))
    };
    let small = evolve(&point.params)?;
    let large = evolve(&point.params.with_n_max(2 * point.params.n_max))?;
    Ok(observable_distance(&small, &large))
}

/// Draws random parameters, times and symmetric initial states for `N` in
/// {2, 3} and `n_max <= 4`, evolves in both bases, and returns the vector
/// distance after projecting the product-basis result.
pub fn product_oracle_errors(draws: usize, seed: u64) -> Result<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut errors = Vec::with_capacity(draws);
    for _ in 0..draws {
        let n_qubits = rng.gen_range(2..=3);
        let n_max = rng.gen_range(1..=4);
        let params = ModelParams::new(
            n_qubits,
            1.0,
            rng.gen_range(0.2..2.0),
            rng.gen_range(0.01..0.5),
            rng.gen_range(-2.0..2.0),
            n_max,
        )?;
        let t = rng.gen_range(0.5..30.0);
        let sym = HilbertSpace::symmetric(n_qubits, n_max)?;
        let prod = HilbertSpace::product(n_qubits, n_max)?;
        let amps = DVector::from_iterator(
            sym.dimension(),
            (0..sym.dimension()).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))),
        );
        let psi = StateVector::normalized(sym, amps)?;
        let psi_prod = embed_in_product(&psi, &prod)?;
        let sym_t = Spectral::new(&build_hamiltonian(&params, &sym)?)?.evolve_state(&psi, t)?;
        let prod_t = Spectral::new(&build_hamiltonian(&params, &prod)?)?.evolve_state(&psi_prod, t)?;
        let projected = project_to_symmetric(&prod_t, &sym, 1e-6)?;
        errors.push(projected.distance(&sym_t)?);
    }
    Ok(errors)
}

/// Drift of the total-excitation distribution when only the rotating
/// coupling is kept.
pub fn excitation_conservation_error(params: &ModelParams, t: f64) -> Result<f64> {
    let space = HilbertSpace::symmetric(params.n_qubits, params.n_max)?;
    let mut worst = 0.0f64;
    for k in 0..=params.n_qubits {
        for n in 0..params.n_max {
            let h = build_hamiltonian_with(params, &space, CouplingTerms::RotatingOnly)?;
            let psi = Spectral::new(&h)?.evolve_state(&dicke_state(&space, k, n)?, t)?;
            let leaked: f64 = psi
                .probabilities()
                .iter()
                .enumerate()
                .filter(|(i, _)| {
                    let (kk, nn) = space.split(*i);
                    kk + nn != k + n
                })
                .map(|(_, p)| p)
                .sum();
            worst = worst.max(leaked);
        }
    }
    Ok(worst)
}

/// Runs the full suite. A `model` with an explicit `omega_q` adds checks at
/// that working point and `protocol` adds a run of that protocol; physics errors from either
/// (degenerate detunings, cutoff violations) are returned as errors.
pub fn run_validation(
    draws: usize,
    seed: u64,
    model: Option<&ModelSection>,
    protocol: Option<&ProtocolSection>,
) -> Result<ValidationReport> {
    let points = preset_resonances()?;
    let mut herm = Vec::new();
    let mut unit = Vec::new();
    let mut norm = Vec::new();
    let mut energy_drift = Vec::new();
    let mut cutoff = Vec::new();
    let mut rwa = Vec::new();
    let mut working = points
        .iter()
        .map(|p| (p.params, p.initial, p.duration))
        .collect::<Vec<_>>();
    if let Some(m) = model.filter(|m| m.omega_q.is_some()) {
        let params = m.params(0)?;
        let space = HilbertSpace::symmetric(params.n_qubits, params.n_max)?;
        // surfaces degenerate detunings at the working point
        for i in 0..space.dimension() {
            let (k, n) = space.split(i);
            second_order_coeffs(n, k, &params)?;
        }
        working.push((params, Cell::new(0, 0), 100.0));
    }
    for (params, initial, duration) in &working {
        let space = HilbertSpace::symmetric(params.n_qubits, params.n_max)?;
        let psi0 = dicke_state(&space, initial.k, initial.n)?;
        let d = dynamics_invariants(params, &psi0, *duration)?;
        herm.push(d.hermiticity);
        unit.push(d.unitarity);
        norm.push(d.norm_drift);
        energy_drift.push(d.energy_drift);
    }
    for p in &points {
        cutoff.push(cutoff_doubling_error(p)?);
        let space = HilbertSpace::symmetric(p.params.n_qubits, p.params.n_max)?;
        let report = rwa_validity_report(&p.target, &p.params, &space)?;
        rwa.push(if report.is_selective() {
            report.min_competing_ratio().unwrap_or(f64::INFINITY)
        } else {
            0.0
        });
    }
    for name in PROTOCOL_PRESETS {
        cutoff.push(protocol_cutoff_error(name)?);
    }
    if let Some(section) = protocol {
        let model = model.copied().unwrap_or_else(crate::config::first_order_model);
        let spec = section.spec(&model)?;
        let params = spec.params()?;
        let space = HilbertSpace::symmetric(params.n_qubits, params.n_max)?;
        run_protocol(&spec.compile()?, &params, &space, section.samples)?;
    }
    let oracle = product_oracle_errors(draws, seed)?;
    let conservation = excitation_conservation_error(
        &ModelParams::new(4, 1.0, 0.9, 0.05, -0.5, 6)?,
        137.0,
    )?;
    Ok(ValidationReport::new(vec![
        CheckResult::upper("hermiticity", &herm, HERMITIAN_TOL),
        CheckResult::upper("unitarity", &unit, UNITARY_TOL),
        CheckResult::upper("norm_drift", &norm, NORM_TOL),
        CheckResult::upper("energy_drift", &energy_drift, ENERGY_TOL),
        CheckResult::upper("cutoff_doubling", &cutoff, CUTOFF_TOL),
        CheckResult::lower("rwa_selectivity", &rwa, crate::effective::SELECTIVITY_THRESHOLD),
        CheckResult::upper("product_oracle", &oracle, ORACLE_TOL),
        CheckResult::upper("tc_excitation_conservation", &[conservation], 1e-12),
    ]))
}

/// Change of the final-frame fidelity and observables of a protocol preset
/// when its cutoff is doubled.
pub fn protocol_cutoff_error(name: &str) -> Result<f64> {
    let cfg = preset(name)?;
    let spec = cfg
        .protocol
        .as_ref()
        .expect("protocol presets carry a protocol section")
        .spec(cfg.model()?)?;
    let params = spec.params()?;
    let protocol = spec.compile()?;
    let run = |p: &ModelParams| -> Result<(f64, Observables)> {
        let space = HilbertSpace::symmetric(p.n_qubits, p.n_max)?;
        let r = run_protocol(&protocol, p, &space, 2)?;
        Ok((r.fidelity, observables(&r.final_state)))
    };
    let (f_small, o_small) = run(&params)?;
    let (f_large, o_large) = run(&params.with_n_max(2 * params.n_max))?;
    Ok((f_small - f_large).abs().max(observable_distance(&o_small, &o_large)))
}
