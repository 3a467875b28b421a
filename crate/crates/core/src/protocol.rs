//! Pulse sequences built from selective interactions.
//!
//! A protocol is a list of quenches of the qubit frequency: each step holds
//! `omega_q` at the resonance of one selective channel for a duration derived
//! from that channel's effective coupling. Frequency switching between steps
//! is instantaneous.

use std::f64::consts::PI;

use nalgebra::DVector;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dynamics::{
    fidelity, phase_optimized_fidelity, to_rotating_frame, Observables, Spectral, Trajectory,
};
use crate::effective::{
    build_effective_hamiltonian, effective_coupling, solve_resonance, stark_shift, Channel,
    Order, ResonanceTarget,
};
use crate::error::{Error, Result};
use crate::hamiltonian::{bare_energy, build_hamiltonian, dicke_state};
use crate::model::ModelParams;
use crate::operator::{Operator, StateVector};
use crate::space::{HilbertSpace, SpaceKind};

/// Population in the highest Fock level above which a run is rejected.
pub const CUTOFF_POPULATION_LIMIT: f64 = 1e-6;

/// A `(k, n)` cell: `k` atomic excitations, `n` photons.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Cell {
    pub k: usize,
    pub n: usize,
}

impl Cell {
    pub fn new(k: usize, n: usize) -> Self {
        Cell { k, n }
    }
}

/// One amplitude of a target superposition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Term {
    pub k: usize,
    pub n: usize,
    pub re: f64,
    pub im: f64,
}

impl Term {
    pub fn amplitude(&self) -> Complex64 {
        Complex64::new(self.re, self.im)
    }
}

/// How long a step lasts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum DurationRule {
    /// `pi / (2 |Omega|)`: full transfer across the resonant pair.
    #[default]
    Transfer,
    /// `pi / (4 |Omega|)`: equal superposition of the pair.
    Split,
    Fixed(f64),
}

impl DurationRule {
    /// Resolves the duration with the coupling evaluated at `params.omega_q`.
    pub fn resolve(&self, target: Option<&ResonanceTarget>, params: &ModelParams) -> Result<f64> {
        let quarter = match self {
            DurationRule::Fixed(t) => {
                if !(*t > 0.0) || !t.is_finite() {
                    return Err(Error::InvalidProtocol(format!(
                        "fixed duration must be positive, got {t}"
                    )));
                }
                return Ok(*t);
            }
            DurationRule::Transfer => 2.0,
            DurationRule::Split => 4.0,
        };
        let target = target.ok_or_else(|| {
            Error::InvalidProtocol("coupling-based duration needs a resonance target".into())
        })?;
        let g = effective_coupling(target, params)?;
        if g == 0.0 {
            return Err(Error::Degenerate {
                which: format!("coupling of {target}"),
                value: g,
            });
        }
        Ok(PI / (quarter * g.abs()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PulseStep {
    pub omega_q: f64,
    pub duration: f64,
    pub label: String,
    /// The selective channel this step drives, if any. Second-order steps
    /// include the Stark shifts in their rotating frame.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resonance: Option<ResonanceTarget>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Protocol {
    pub steps: Vec<PulseStep>,
    pub initial: Cell,
    /// Target state as a (normalized) list of Dicke-Fock amplitudes.
    pub target: Vec<Term>,
}

impl Protocol {
    pub fn new(steps: Vec<PulseStep>, initial: Cell, target: Vec<Term>) -> Result<Self> {
        if steps.is_empty() {
            return Err(Error::InvalidProtocol("a protocol needs at least one step".into()));
        }
        for (i, s) in steps.iter().enumerate() {
            if !(s.duration > 0.0) || !s.duration.is_finite() {
                return Err(Error::InvalidProtocol(format!(
                    "step {} has non-positive duration {}",
                    i + 1,
                    s.duration
                )));
            }
            if !s.omega_q.is_finite() {
                return Err(Error::InvalidProtocol(format!(
                    "step {} has non-finite omega_q",
                    i + 1
                )));
            }
        }
        if target.is_empty() {
            return Err(Error::InvalidProtocol("empty target state".into()));
        }
        Ok(Protocol {
            steps,
            initial,
            target,
        })
    }

    pub fn total_duration(&self) -> f64 {
        self.steps.iter().map(|s| s.duration).sum()
    }

    /// Largest photon number the initial and target states reference.
    pub fn max_photons(&self) -> usize {
        self.target
            .iter()
            .map(|t| t.n)
            .chain(std::iter::once(self.initial.n))
            .max()
            .unwrap_or(0)
    }

    pub fn target_state(&self, space: &HilbertSpace) -> Result<StateVector> {
        let mut v = DVector::<Complex64>::zeros(space.dimension());
        for t in &self.target {
            v[space.dicke_index(t.k, t.n)?] += t.amplitude();
        }
        StateVector::normalized(*space, v)
    }
}

/// One step of a protocol description: a selective channel plus a duration
/// rule. The qubit frequency is solved from the channel's resonance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepSpec {
    pub kind: Channel,
    pub order: Order,
    pub n0: usize,
    pub k0: usize,
    #[serde(default)]
    pub duration_rule: DurationRule,
}

impl StepSpec {
    pub fn target(&self) -> ResonanceTarget {
        ResonanceTarget {
            order: self.order,
            kind: self.kind,
            n0: self.n0,
            k0: self.k0,
        }
    }
}

/// Serializable protocol description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolSpec {
    pub n_qubits: usize,
    pub lambda: f64,
    pub stark_u: f64,
    #[serde(default = "unit_frequency")]
    pub omega_r: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_max: Option<usize>,
    pub initial: Cell,
    /// Explicit target. When absent the ideal effective-theory outcome is used.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<Vec<Term>>,
    pub steps: Vec<StepSpec>,
}

fn unit_frequency() -> f64 {
    1.0
}

impl ProtocolSpec {
    /// Model parameters (with a placeholder `omega_q`) and the photon cutoff.
    pub fn params(&self) -> Result<ModelParams> {
        let n_max = self.n_max.unwrap_or_else(|| {
            let top = self
                .target
                .iter()
                .flatten()
                .map(|t| t.n)
                .chain(std::iter::once(self.initial.n))
                .max()
                .unwrap_or(0);
            crate::model::default_cutoff(self.n_qubits, top)
        });
        ModelParams::new(
            self.n_qubits,
            self.omega_r,
            self.omega_r,
            self.lambda,
            self.stark_u,
            n_max,
        )
    }

    pub fn compile(&self) -> Result<Protocol> {
        let params = self.params()?;
        let steps = self
            .steps
            .iter()
            .enumerate()
            .map(|(i, s)| compile_step(s.target(), s.duration_rule, &params).map_err(|e| e.in_step(i + 1)))
            .collect::<Result<Vec<_>>>()?;
        let target = match &self.target {
            Some(t) => t.clone(),
            None => ideal_outcome(&params, self.initial, &steps)?,
        };
        Protocol::new(steps, self.initial, target)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// Alternating anti-TC / TC ladder from `|D^0, 0>` to `|D^k_target>`.
    pub fn dicke_ladder(params: &ModelParams, k_target: usize) -> Result<Self> {
        if k_target == 0 || k_target > params.n_qubits {
            return Err(Error::OutOfRange {
                what: "k_target",
                value: k_target,
                max: params.n_qubits,
            });
        }
        let steps = (1..=k_target)
            .map(|j| StepSpec {
                kind: if j % 2 == 1 { Channel::AntiTc } else { Channel::Tc },
                order: Order::First,
                n0: 0,
                k0: j - 1,
                duration_rule: DurationRule::Transfer,
            })
            .collect();
        Ok(ProtocolSpec {
            n_qubits: params.n_qubits,
            lambda: params.lambda,
            stark_u: params.stark_u,
            omega_r: params.omega_r,
            n_max: Some(params.n_max),
            initial: Cell::new(0, 0),
            target: None,
            steps,
        })
    }

    /// Two-step GHZ preparation for four qubits: a second-order anti-TC split
    /// at `(0, 0)` followed by a second-order TC transfer at `(0, 2)`.
    pub fn ghz4(params: &ModelParams) -> Result<Self> {
        if params.n_qubits != 4 {
            return Err(Error::InvalidProtocol(format!(
                "the GHZ protocol is defined for N = 4, got N = {}",
                params.n_qubits
            )));
        }
        Ok(ProtocolSpec {
            n_qubits: 4,
            lambda: params.lambda,
            stark_u: params.stark_u,
            omega_r: params.omega_r,
            n_max: Some(params.n_max),
            initial: Cell::new(0, 0),
            target: None,
            steps: vec![
                StepSpec {
                    kind: Channel::AntiTc,
                    order: Order::Second,
                    n0: 0,
                    k0: 0,
                    duration_rule: DurationRule::Split,
                },
                StepSpec {
                    kind: Channel::Tc,
                    order: Order::Second,
                    n0: 0,
                    k0: 2,
                    duration_rule: DurationRule::Transfer,
                },
            ],
        })
    }
}

fn compile_step(target: ResonanceTarget, rule: DurationRule, params: &ModelParams) -> Result<PulseStep> {
    target.validate(params.n_qubits)?;
    let omega_q = solve_resonance(&target, params)?;
    let tuned = params.with_omega_q(omega_q);
    let duration = rule.resolve(Some(&target), &tuned)?;
    Ok(PulseStep {
        omega_q,
        duration,
        label: target.label(),
        resonance: Some(target),
    })
}

/// Outcome of the ideal two-level dynamics of each step in its own rotating
/// frame, with the signed effective couplings.
pub fn ideal_outcome(params: &ModelParams, initial: Cell, steps: &[PulseStep]) -> Result<Vec<Term>> {
    let top = steps
        .iter()
        .filter_map(|s| s.resonance.map(|r| r.transition().1 .1.max(r.transition().0 .1)))
        .chain(std::iter::once(initial.n))
        .max()
        .unwrap_or(0);
    let space = HilbertSpace::symmetric(params.n_qubits, top)?;
    let p = params.with_n_max(top);
    let mut psi = dicke_state(&space, initial.k, initial.n)?;
    for step in steps {
        let Some(target) = step.resonance else {
            return Err(Error::InvalidProtocol(format!(
                "step {} has no resonance target; give the protocol an explicit target",
                step.label
            )));
        };
        let h = build_effective_hamiltonian(&target, &p.with_omega_q(step.omega_q), &space)?;
        psi = Spectral::new(&h)?.evolve_state(&psi, step.duration)?;
    }
    Ok(psi
        .amplitudes()
        .iter()
        .enumerate()
        .filter(|(_, z)| z.norm() > 1e-12)
        .map(|(i, z)| {
            let (k, n) = space.split(i);
            Term {
                k,
                n,
                re: z.re,
                im: z.im,
            }
        })
        .collect())
}

/// Ladder of `k_target` alternating first-order steps from `|D^0, 0>`.
pub fn compile_dicke_ladder(k_target: usize, params: &ModelParams) -> Result<Protocol> {
    ProtocolSpec::dicke_ladder(params, k_target)?.compile()
}

/// Two-step second-order GHZ protocol for `N = 4`.
pub fn compile_ghz4(params: &ModelParams) -> Result<Protocol> {
    ProtocolSpec::ghz4(params)?.compile()
}

/// GHZ state `(|D^0> + e^{i phi} |D^N>) / sqrt 2 (x) |0>`.
pub fn ghz_terms(n_qubits: usize, phase: f64) -> Vec<Term> {
    let s = 0.5f64.sqrt();
    vec![
        Term {
            k: 0,
            n: 0,
            re: s,
            im: 0.0,
        },
        Term {
            k: n_qubits,
            n: 0,
            re: s * phase.cos(),
            im: s * phase.sin(),
        },
    ]
}

#[derive(Debug, Clone)]
pub struct StepRun {
    pub label: String,
    pub omega_q: f64,
    pub duration: f64,
    pub t_start: f64,
    pub trajectory: Trajectory,
    /// State at the end of the step in that step's rotating frame.
    pub frame_state: StateVector,
}

impl StepRun {
    pub fn boundary(&self) -> &Observables {
        self.trajectory
            .final_observables()
            .expect("trajectories hold at least two samples")
    }
}

#[derive(Debug, Clone)]
pub struct ProtocolRun {
    /// Final state in the laboratory frame.
    pub final_state: StateVector,
    /// Final state with every step mapped into its own rotating frame.
    pub frame_state: StateVector,
    pub steps: Vec<StepRun>,
    pub target: StateVector,
    /// `|<target|frame_state>|^2`.
    pub fidelity: f64,
    /// Fidelity maximized over the relative phase of a two-term target.
    pub phase_optimized_fidelity: f64,
    /// Laboratory-frame population of the cells the target occupies.
    pub target_population: f64,
}

/// Diagonal generator of a step's rotating frame: the free Hamiltonian, plus
/// the second-order Stark shifts for second-order steps.
pub fn step_frame(step: &PulseStep, params: &ModelParams, space: &HilbertSpace) -> Result<Operator> {
    let p = params.with_omega_q(step.omega_q);
    let stark = matches!(step.resonance, Some(r) if r.order == Order::Second);
    let mut entries = Vec::with_capacity(space.dimension());
    for i in 0..space.dimension() {
        let (k, n) = space.split(i);
        let mut e = bare_energy(&p, k, n);
        if stark {
            e += stark_shift(n, k, &p)?;
        }
        entries.push(e);
    }
    Operator::diagonal(*space, &entries)
}

/// Executes every step under the full Hamiltonian at that step's `omega_q`.
pub fn run_protocol(
    protocol: &Protocol,
    params: &ModelParams,
    space: &HilbertSpace,
    samples: usize,
) -> Result<ProtocolRun> {
    space.require(SpaceKind::SymmetricDickeFock)?;
    if protocol.steps.is_empty() {
        return Err(Error::InvalidProtocol("a protocol needs at least one step".into()));
    }
    let mut lab = dicke_state(space, protocol.initial.k, protocol.initial.n)?;
    let mut frame = lab.clone();
    let mut t = 0.0;
    let mut runs = Vec::with_capacity(protocol.steps.len());
    for (i, step) in protocol.steps.iter().enumerate() {
        let index = i + 1;
        let run = (|| -> Result<StepRun> {
            let p = params.with_omega_q(step.omega_q);
            let spectral = Spectral::new(&build_hamiltonian(&p, space)?)?;
            let trajectory = spectral.trajectory(&lab, step.duration, samples, t)?;
            let leaked = trajectory
                .observables
                .iter()
                .map(Observables::top_fock_population)
                .fold(0.0, f64::max);
            if leaked > CUTOFF_POPULATION_LIMIT {
                return Err(Error::CutoffExceeded {
                    step: index,
                    population: leaked,
                });
            }
            let evolved = spectral.evolve_state(&frame, step.duration)?;
            let generator = step_frame(step, params, space)?;
            let frame_state = to_rotating_frame(&evolved, &generator, step.duration)?;
            Ok(StepRun {
                label: step.label.clone(),
                omega_q: step.omega_q,
                duration: step.duration,
                t_start: t,
                trajectory,
                frame_state,
            })
        })()
        .map_err(|e| e.in_step(index))?;
        lab = run.trajectory.final_state().cloned().expect("non-empty trajectory");
        frame = run.frame_state.clone();
        t += step.duration;
        runs.push(run);
    }
    let target = protocol.target_state(space)?;
    let fid = fidelity(&frame, &target)?;
    let phase_opt = match protocol.target.as_slice() {
        [a, b] => phase_optimized_fidelity(
            &frame,
            space.dicke_index(a.k, a.n)?,
            space.dicke_index(b.k, b.n)?,
        ),
        _ => fid,
    };
    let final_obs = crate::dynamics::observables(&lab);
    let target_population = protocol
        .target
        .iter()
        .map(|t| final_obs.population(t.k, t.n))
        .sum();
    Ok(ProtocolRun {
        target_population,
        final_state: lab,
        frame_state: frame,
        steps: runs,
        target,
        fidelity: fid,
        phase_optimized_fidelity: phase_opt,
    })
}
