//! Effective-Hamiltonian theory of the selective interactions.
//!
//! In the interaction picture with respect to the free Hamiltonian, the
//! coupling between `|D^{k+1}, n>` and `|D^k, n+1>` (TC) oscillates at
//! `delta-_{nk}` and the one between `|D^k, n>` and `|D^{k+1}, n+1>` (anti-TC)
//! at `delta+_{nk}`. Tuning `omega_q` zeroes one of them for a single
//! `(n, k)` while the Stark term keeps every other channel detuned.
//!
//! When every first-order channel is detuned, second-order processes through
//! one virtual intermediate state dominate: two-excitation TC/anti-TC
//! couplings, the atomic (`r`) and photonic (`a`) Raman-like couplings, and a
//! diagonal Stark shift `Delta_{nk}` that corrects all resonance conditions.
//!
//! Index conventions: every coupling `Omega_{nk}` with `n < 0`, `k < 0` or
//! `k >= N` is zero, and terms carrying a vanishing coupling are dropped
//! before their detuning is ever divided by.

use std::f64::consts::PI;
use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::hamiltonian::collective_factor;
use crate::model::ModelParams;
use crate::operator::Operator;
use crate::space::{HilbertSpace, SpaceKind};

/// Detunings smaller than this are rejected as degenerate.
pub const DEGENERACY_FLOOR: f64 = 1e-9;
/// `|detuning| / |coupling|` below this flags a competing channel.
pub const SELECTIVITY_THRESHOLD: f64 = 10.0;
/// Residual required of the second-order resonance solver.
pub const ROOT_TOL: f64 = 1e-10;
pub const MAX_BISECTION_ITERATIONS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Order {
    First,
    Second,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Channel {
    /// Excitation-exchanging (Tavis-Cummings) channel.
    Tc,
    /// Excitation-pair creating (anti-Tavis-Cummings) channel.
    AntiTc,
}

/// A selective interaction: which channel, at which order, anchored at
/// photon number `n0` and atomic excitation `k0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResonanceTarget {
    pub order: Order,
    pub kind: Channel,
    pub n0: usize,
    pub k0: usize,
}

impl ResonanceTarget {
    pub fn first(kind: Channel, n0: usize, k0: usize) -> Self {
        ResonanceTarget {
            order: Order::First,
            kind,
            n0,
            k0,
        }
    }

    pub fn second(kind: Channel, n0: usize, k0: usize) -> Self {
        ResonanceTarget {
            order: Order::Second,
            kind,
            n0,
            k0,
        }
    }

    /// Number of atomic excitations exchanged.
    pub fn step(&self) -> usize {
        match self.order {
            Order::First => 1,
            Order::Second => 2,
        }
    }

    /// The resonant pair as `((k, n) lower, (k, n) upper)`, where the upper
    /// cell carries `step()` more atomic excitations.
    pub fn transition(&self) -> ((usize, usize), (usize, usize)) {
        let s = self.step();
        let (n0, k0) = (self.n0, self.k0);
        match self.kind {
            Channel::Tc => ((k0, n0 + s), (k0 + s, n0)),
            Channel::AntiTc => ((k0, n0), (k0 + s, n0 + s)),
        }
    }

    pub fn validate(&self, n_qubits: usize) -> Result<()> {
        if self.k0 + self.step() > n_qubits {
            return Err(Error::OutOfRange {
                what: "k0 + exchanged excitations",
                value: self.k0 + self.step(),
                max: n_qubits,
            });
        }
        Ok(())
    }

    pub fn label(&self) -> String {
        let name = match self.kind {
            Channel::Tc => "TC",
            Channel::AntiTc => "aTC",
        };
        let order = match self.order {
            Order::First => "",
            Order::Second => "2",
        };
        format!("{name}{order}({},{})", self.n0, self.k0)
    }
}

impl fmt::Display for ResonanceTarget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

// ---------------------------------------------------------------------------
// First order

/// Signed-index coupling; zero outside the physical ladder.
fn coupling(params: &ModelParams, n: i64, k: i64) -> f64 {
    if n < 0 || k < 0 || k as usize >= params.n_qubits {
        return 0.0;
    }
    params.lambda * collective_factor(params.n_qubits, k as usize) * ((n + 1) as f64).sqrt()
        / params.n().sqrt()
}

fn delta_minus(params: &ModelParams, n: i64, k: i64) -> f64 {
    let nq = params.n();
    params.omega_q - params.omega_r + params.stark_u * (n as f64 - k as f64 + nq / 2.0) / nq
}

fn delta_plus(params: &ModelParams, n: i64, k: i64) -> f64 {
    let nq = params.n();
    params.omega_r + params.omega_q + params.stark_u * (n as f64 + k as f64 + 1.0 - nq / 2.0) / nq
}

/// `Omega_{nk} = lambda f(k) sqrt(n + 1) / sqrt(N)`.
pub fn rabi_frequency(n: usize, k: usize, params: &ModelParams) -> Result<f64> {
    if k >= params.n_qubits {
        return Err(Error::InvalidTransition {
            k,
            n_qubits: params.n_qubits,
        });
    }
    Ok(coupling(params, n as i64, k as i64))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FirstOrderDetuning {
    pub n: usize,
    pub k: usize,
    pub delta_minus: f64,
    pub delta_plus: f64,
}

pub fn first_order_detunings(n: usize, k: usize, params: &ModelParams) -> FirstOrderDetuning {
    FirstOrderDetuning {
        n,
        k,
        delta_minus: delta_minus(params, n as i64, k as i64),
        delta_plus: delta_plus(params, n as i64, k as i64),
    }
}

/// Qubit frequency zeroing `delta-_{n0 k0}` (TC) or `delta+_{n0 k0}` (anti-TC).
/// `params.omega_q` is ignored.
pub fn solve_first_order_resonance(target: &ResonanceTarget, params: &ModelParams) -> Result<f64> {
    if target.order != Order::First {
        return Err(Error::WrongOrder { expected: "first" });
    }
    target.validate(params.n_qubits)?;
    let nq = params.n();
    let (n0, k0) = (target.n0 as f64, target.k0 as f64);
    Ok(match target.kind {
        Channel::Tc => params.omega_r - params.stark_u * (n0 - k0 + nq / 2.0) / nq,
        Channel::AntiTc => -params.omega_r - params.stark_u * (n0 + k0 + 1.0 - nq / 2.0) / nq,
    })
}

// ---------------------------------------------------------------------------
// Second order

/// `numerator / denominator`, skipping vanishing numerators and rejecting
/// near-zero denominators.
fn guarded(numerator: f64, denominator: f64, what: impl FnOnce() -> String) -> Result<f64> {
    if numerator == 0.0 {
        return Ok(0.0);
    }
    if denominator.abs() < DEGENERACY_FLOOR {
        return Err(Error::Degenerate {
            which: what(),
            value: denominator,
        });
    }
    Ok(numerator / denominator)
}

fn dm_term(params: &ModelParams, weight: f64, n: i64, k: i64) -> Result<f64> {
    guarded(weight, delta_minus(params, n, k), || {
        format!("delta-({n},{k})")
    })
}

fn dp_term(params: &ModelParams, weight: f64, n: i64, k: i64) -> Result<f64> {
    guarded(weight, delta_plus(params, n, k), || format!("delta+({n},{k})"))
}

/// Second-order Stark shift of `|D^k, n>`.
fn stark_shift_signed(params: &ModelParams, n: i64, k: i64) -> Result<f64> {
    let sq = |n, k| coupling(params, n, k).powi(2);
    Ok(dm_term(params, sq(n, k - 1), n, k - 1)?
        + dp_term(params, sq(n - 1, k - 1), n - 1, k - 1)?
        - dm_term(params, sq(n - 1, k), n - 1, k)?
        - dp_term(params, sq(n, k), n, k)?)
}

pub fn stark_shift(n: usize, k: usize, params: &ModelParams) -> Result<f64> {
    stark_shift_signed(params, n as i64, k as i64)
}

/// Couples `|D^k, n+2>` with `|D^{k+2}, n>`.
fn tc2_coupling(params: &ModelParams, n: i64, k: i64) -> Result<f64> {
    let g = coupling(params, n, k + 1) * coupling(params, n + 1, k);
    Ok(0.5 * (dm_term(params, g, n, k + 1)? - dm_term(params, g, n + 1, k)?))
}

/// Couples `|D^k, n>` with `|D^{k+2}, n+2>`.
fn atc2_coupling(params: &ModelParams, n: i64, k: i64) -> Result<f64> {
    let g = coupling(params, n, k) * coupling(params, n + 1, k + 1);
    Ok(0.5 * (dp_term(params, g, n + 1, k + 1)? - dp_term(params, g, n, k)?))
}

/// Couples `|D^k, n>` with `|D^{k+2}, n>`.
fn r2_coupling(params: &ModelParams, n: i64, k: i64) -> Result<f64> {
    let g1 = coupling(params, n - 1, k) * coupling(params, n - 1, k + 1);
    let g2 = coupling(params, n, k) * coupling(params, n, k + 1);
    Ok(0.5
        * (dp_term(params, g1, n - 1, k + 1)? - dm_term(params, g1, n - 1, k)?
            + dm_term(params, g2, n, k + 1)?
            - dp_term(params, g2, n, k)?))
}

/// Couples `|D^k, n>` with `|D^k, n+2>`.
fn a2_coupling(params: &ModelParams, n: i64, k: i64) -> Result<f64> {
    let g1 = coupling(params, n, k - 1) * coupling(params, n + 1, k - 1);
    let g2 = coupling(params, n, k) * coupling(params, n + 1, k);
    Ok(0.5
        * (dp_term(params, g1, n + 1, k - 1)? + dm_term(params, g1, n, k - 1)?
            - dp_term(params, g2, n, k)?
            - dm_term(params, g2, n + 1, k)?))
}

fn bare_tc2(params: &ModelParams, n: i64, k: i64) -> f64 {
    delta_minus(params, n + 1, k) + delta_minus(params, n, k + 1)
}

fn bare_atc2(params: &ModelParams, n: i64, k: i64) -> f64 {
    delta_plus(params, n, k) + delta_plus(params, n + 1, k + 1)
}

fn bare_r2(params: &ModelParams, n: i64, k: i64) -> f64 {
    delta_plus(params, n, k) + delta_minus(params, n, k + 1)
}

fn bare_a2(params: &ModelParams, n: i64, k: i64) -> f64 {
    delta_plus(params, n, k) - delta_minus(params, n + 1, k)
}

fn tilde_tc2(params: &ModelParams, n: i64, k: i64) -> Result<f64> {
    Ok(bare_tc2(params, n, k) + stark_shift_signed(params, n, k + 2)?
        - stark_shift_signed(params, n + 2, k)?)
}

fn tilde_atc2(params: &ModelParams, n: i64, k: i64) -> Result<f64> {
    Ok(bare_atc2(params, n, k) + stark_shift_signed(params, n + 2, k + 2)?
        - stark_shift_signed(params, n, k)?)
}

fn tilde_r2(params: &ModelParams, n: i64, k: i64) -> Result<f64> {
    Ok(bare_r2(params, n, k) + stark_shift_signed(params, n, k + 2)?
        - stark_shift_signed(params, n, k)?)
}

fn tilde_a2(params: &ModelParams, n: i64, k: i64) -> Result<f64> {
    Ok(bare_a2(params, n, k) + stark_shift_signed(params, n + 2, k)?
        - stark_shift_signed(params, n, k)?)
}

/// All second-order quantities anchored at `(n, k)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SecondOrderCoeffs {
    pub n: usize,
    pub k: usize,
    pub stark_shift: f64,
    pub omega_tc2: f64,
    pub omega_atc2: f64,
    pub omega_r2: f64,
    pub omega_a2: f64,
    pub delta_tc2: f64,
    pub delta_atc2: f64,
    pub delta_r2: f64,
    pub delta_a2: f64,
    pub tilde_tc2: f64,
    pub tilde_atc2: f64,
    pub tilde_r2: f64,
    pub tilde_a2: f64,
}

pub fn second_order_coeffs(n: usize, k: usize, params: &ModelParams) -> Result<SecondOrderCoeffs> {
    let (ni, ki) = (n as i64, k as i64);
    Ok(SecondOrderCoeffs {
        n,
        k,
        stark_shift: stark_shift_signed(params, ni, ki)?,
        omega_tc2: tc2_coupling(params, ni, ki)?,
        omega_atc2: atc2_coupling(params, ni, ki)?,
        omega_r2: r2_coupling(params, ni, ki)?,
        omega_a2: a2_coupling(params, ni, ki)?,
        delta_tc2: bare_tc2(params, ni, ki),
        delta_atc2: bare_atc2(params, ni, ki),
        delta_r2: bare_r2(params, ni, ki),
        delta_a2: bare_a2(params, ni, ki),
        tilde_tc2: tilde_tc2(params, ni, ki)?,
        tilde_atc2: tilde_atc2(params, ni, ki)?,
        tilde_r2: tilde_r2(params, ni, ki)?,
        tilde_a2: tilde_a2(params, ni, ki)?,
    })
}

/// Signed coupling of the target channel at `params.omega_q`.
pub fn effective_coupling(target: &ResonanceTarget, params: &ModelParams) -> Result<f64> {
    target.validate(params.n_qubits)?;
    let (n, k) = (target.n0 as i64, target.k0 as i64);
    match (target.order, target.kind) {
        (Order::First, _) => rabi_frequency(target.n0, target.k0, params),
        (Order::Second, Channel::Tc) => tc2_coupling(params, n, k),
        (Order::Second, Channel::AntiTc) => atc2_coupling(params, n, k),
    }
}

/// Oscillation frequency of the target channel at `params.omega_q`; zero on
/// resonance. Second-order targets use the Stark-corrected frequency.
pub fn target_detuning(target: &ResonanceTarget, params: &ModelParams) -> Result<f64> {
    target.validate(params.n_qubits)?;
    let (n, k) = (target.n0 as i64, target.k0 as i64);
    match (target.order, target.kind) {
        (Order::First, Channel::Tc) => Ok(delta_minus(params, n, k)),
        (Order::First, Channel::AntiTc) => Ok(delta_plus(params, n, k)),
        (Order::Second, Channel::Tc) => tilde_tc2(params, n, k),
        (Order::Second, Channel::AntiTc) => tilde_atc2(params, n, k),
    }
}

/// Zero of the bare (`lambda -> 0`) second-order frequency.
pub fn bare_second_order_resonance(target: &ResonanceTarget, params: &ModelParams) -> Result<f64> {
    if target.order != Order::Second {
        return Err(Error::WrongOrder { expected: "second" });
    }
    let nq = params.n();
    let (n0, k0) = (target.n0 as f64, target.k0 as f64);
    Ok(match target.kind {
        Channel::Tc => params.omega_r - params.stark_u * (n0 - k0 + nq / 2.0) / nq,
        Channel::AntiTc => -params.omega_r - params.stark_u * (n0 + k0 + 2.0 - nq / 2.0) / nq,
    })
}

/// Bare solution widened by `10 lambda^2 N / |U|` on each side.
pub fn default_second_order_bracket(
    target: &ResonanceTarget,
    params: &ModelParams,
) -> Result<(f64, f64)> {
    let center = bare_second_order_resonance(target, params)?;
    let nonlinearity = if params.stark_u.abs() > 0.0 {
        params.stark_u.abs()
    } else {
        params.omega_r
    };
    let half = 10.0 * params.lambda.powi(2) * params.n() / nonlinearity;
    let half = half.max(1e3 * DEGENERACY_FLOOR);
    Ok((center - half, center + half))
}

/// Bisection on the Stark-corrected frequency of a second-order target.
/// `params.omega_q` is ignored.
pub fn solve_second_order_resonance(
    target: &ResonanceTarget,
    params: &ModelParams,
    bracket: Option<(f64, f64)>,
) -> Result<f64> {
    if target.order != Order::Second {
        return Err(Error::WrongOrder { expected: "second" });
    }
    target.validate(params.n_qubits)?;
    let (mut lo, mut hi) = match bracket {
        Some(b) => b,
        None => default_second_order_bracket(target, params)?,
    };
    if lo > hi {
        std::mem::swap(&mut lo, &mut hi);
    }
    let f = |wq: f64| target_detuning(target, &params.with_omega_q(wq));
    let mut f_lo = f(lo)?;
    let f_hi = f(hi)?;
    if f_lo == 0.0 {
        return Ok(lo);
    }
    if f_hi == 0.0 {
        return Ok(hi);
    }
    if f_lo.signum() == f_hi.signum() {
        return Err(Error::NoSignChange {
            lo,
            hi,
            f_lo,
            f_hi,
        });
    }
    let mut mid = 0.5 * (lo + hi);
    let mut f_mid = f(mid)?;
    for _ in 0..MAX_BISECTION_ITERATIONS {
        if f_mid == 0.0 || hi - lo <= 4.0 * f64::EPSILON * mid.abs().max(1.0) {
            break;
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
        mid = 0.5 * (lo + hi);
        f_mid = f(mid)?;
    }
    if f_mid.abs() >= ROOT_TOL {
        // sign change across a pole rather than a root
        return Err(Error::NoConvergence {
            iterations: MAX_BISECTION_ITERATIONS,
            residual: f_mid.abs(),
        });
    }
    Ok(mid)
}

/// Qubit frequency that puts `target` on resonance, for either order.
pub fn solve_resonance(target: &ResonanceTarget, params: &ModelParams) -> Result<f64> {
    match target.order {
        Order::First => solve_first_order_resonance(target, params),
        Order::Second => solve_second_order_resonance(target, params, None),
    }
}

/// Two-level effective Hamiltonian of the selected channel: a single
/// Hermitian coupling between the resonant pair, zero elsewhere.
pub fn build_effective_hamiltonian(
    target: &ResonanceTarget,
    params: &ModelParams,
    space: &HilbertSpace,
) -> Result<Operator> {
    space.require(SpaceKind::SymmetricDickeFock)?;
    if space.n_qubits() != params.n_qubits {
        return Err(Error::SpaceMismatch);
    }
    target.validate(params.n_qubits)?;
    let ((k_lo, n_lo), (k_hi, n_hi)) = target.transition();
    let lower = space.dicke_index(k_lo, n_lo)?;
    let upper = space.dicke_index(k_hi, n_hi)?;
    let g = effective_coupling(target, params)?;
    let mut m = DMatrix::<Complex64>::zeros(space.dimension(), space.dimension());
    m[(upper, lower)] = g.into();
    m[(lower, upper)] = g.into();
    Operator::from_matrix(*space, m)
}

/// Population transferred by a detuned two-level Rabi oscillation,
/// `4W^2 / (4W^2 + d^2) sin^2(sqrt(4W^2 + d^2) t / 2)`.
pub fn detuned_rabi_probability(omega: f64, delta: f64, t: f64) -> f64 {
    let w2 = 4.0 * omega * omega;
    let gen = w2 + delta * delta;
    if gen == 0.0 {
        return 0.0;
    }
    let s = (0.5 * gen.sqrt() * t).sin();
    (w2 / gen * s * s).clamp(0.0, 1.0)
}

/// Time for a complete transfer across the target pair, `pi / (2 |Omega|)`.
pub fn transfer_time(coupling: f64) -> Result<f64> {
    if coupling == 0.0 || !coupling.is_finite() {
        return Err(Error::Degenerate {
            which: "effective coupling".into(),
            value: coupling,
        });
    }
    Ok(PI / (2.0 * coupling.abs()))
}

// ---------------------------------------------------------------------------
// RWA validity

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelKind {
    Tc,
    AntiTc,
    /// `|D^k, n> <-> |D^{k+2}, n>`
    RamanAtomic,
    /// `|D^k, n> <-> |D^k, n+2>`
    RamanPhotonic,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RatioValue {
    Finite(f64),
    NoCoupling,
    Degenerate,
}

impl Serialize for RatioValue {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            RatioValue::Finite(r) => s.serialize_f64(*r),
            RatioValue::NoCoupling => s.serialize_str("no-coupling"),
            RatioValue::Degenerate => s.serialize_str("degenerate"),
        }
    }
}

impl fmt::Display for RatioValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RatioValue::Finite(r) => write!(f, "{r}"),
            RatioValue::NoCoupling => f.write_str("no-coupling"),
            RatioValue::Degenerate => f.write_str("degenerate"),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ChannelRatio {
    pub order: Order,
    pub kind: ChannelKind,
    pub n: usize,
    pub k: usize,
    /// The two `(k, n)` cells the channel connects.
    pub endpoints: [(usize, usize); 2],
    pub detuning: Option<f64>,
    pub coupling: Option<f64>,
    pub ratio: RatioValue,
    pub selected: bool,
    /// Shares a cell with the selected pair, so it can drain it directly.
    pub competing: bool,
    pub risk: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct RwaReport {
    pub target: ResonanceTarget,
    pub omega_q: f64,
    pub threshold: f64,
    pub channels: Vec<ChannelRatio>,
}

impl RwaReport {
    pub fn selected(&self) -> Option<&ChannelRatio> {
        self.channels.iter().find(|c| c.selected)
    }

    pub fn risks(&self) -> impl Iterator<Item = &ChannelRatio> {
        self.channels.iter().filter(|c| c.risk)
    }

    pub fn is_selective(&self) -> bool {
        self.risks().next().is_none()
    }

    /// Smallest finite ratio among competing channels.
    pub fn min_competing_ratio(&self) -> Option<f64> {
        self.channels
            .iter()
            .filter(|c| c.competing)
            .filter_map(|c| match c.ratio {
                RatioValue::Finite(r) => Some(r),
                _ => None,
            })
            .min_by(|a, b| a.total_cmp(b))
    }
}

fn channel_entry(
    order: Order,
    kind: ChannelKind,
    n: usize,
    k: usize,
    endpoints: [(usize, usize); 2],
    values: Result<(f64, f64)>,
) -> ChannelRatio {
    let (detuning, coupling, ratio) = match values {
        Ok((d, g)) if g == 0.0 => (Some(d), Some(g), RatioValue::NoCoupling),
        Ok((d, g)) => (Some(d), Some(g), RatioValue::Finite(d.abs() / g.abs())),
        Err(_) => (None, None, RatioValue::Degenerate),
    };
    ChannelRatio {
        order,
        kind,
        n,
        k,
        endpoints,
        detuning,
        coupling,
        ratio,
        selected: false,
        competing: false,
        risk: false,
    }
}

/// Tabulates `|detuning| / |coupling|` for every channel inside the truncated
/// space at `params.omega_q`. First-order targets list the TC and anti-TC
/// channels; second-order targets add the four second-order families.
pub fn rwa_validity_report(
    target: &ResonanceTarget,
    params: &ModelParams,
    space: &HilbertSpace,
) -> Result<RwaReport> {
    space.require(SpaceKind::SymmetricDickeFock)?;
    target.validate(params.n_qubits)?;
    let n_qubits = params.n_qubits;
    let n_max = space.n_max();
    let mut channels = Vec::new();

    for n in 0..n_max {
        for k in 0..n_qubits {
            let g = coupling(params, n as i64, k as i64);
            let d = first_order_detunings(n, k, params);
            channels.push(channel_entry(
                Order::First,
                ChannelKind::Tc,
                n,
                k,
                [(k + 1, n), (k, n + 1)],
                Ok((d.delta_minus, g)),
            ));
            channels.push(channel_entry(
                Order::First,
                ChannelKind::AntiTc,
                n,
                k,
                [(k, n), (k + 1, n + 1)],
                Ok((d.delta_plus, g)),
            ));
        }
    }

    if target.order == Order::Second && n_max >= 2 {
        for n in 0..=(n_max - 2) {
            for k in 0..=n_qubits {
                let (ni, ki) = (n as i64, k as i64);
                if k + 2 <= n_qubits {
                    channels.push(channel_entry(
                        Order::Second,
                        ChannelKind::Tc,
                        n,
                        k,
                        [(k + 2, n), (k, n + 2)],
                        tilde_tc2(params, ni, ki).and_then(|d| Ok((d, tc2_coupling(params, ni, ki)?))),
                    ));
                    channels.push(channel_entry(
                        Order::Second,
                        ChannelKind::AntiTc,
                        n,
                        k,
                        [(k, n), (k + 2, n + 2)],
                        tilde_atc2(params, ni, ki)
                            .and_then(|d| Ok((d, atc2_coupling(params, ni, ki)?))),
                    ));
                    channels.push(channel_entry(
                        Order::Second,
                        ChannelKind::RamanAtomic,
                        n,
                        k,
                        [(k, n), (k + 2, n)],
                        tilde_r2(params, ni, ki).and_then(|d| Ok((d, r2_coupling(params, ni, ki)?))),
                    ));
                }
                channels.push(channel_entry(
                    Order::Second,
                    ChannelKind::RamanPhotonic,
                    n,
                    k,
                    [(k, n), (k, n + 2)],
                    tilde_a2(params, ni, ki).and_then(|d| Ok((d, a2_coupling(params, ni, ki)?))),
                ));
            }
        }
    }

    let (lower, upper) = target.transition();
    let selected_kind = match target.kind {
        Channel::Tc => ChannelKind::Tc,
        Channel::AntiTc => ChannelKind::AntiTc,
    };
    for c in &mut channels {
        c.selected = c.order == target.order
            && c.kind == selected_kind
            && c.n == target.n0
            && c.k == target.k0;
        c.competing = !c.selected && c.endpoints.iter().any(|e| *e == lower || *e == upper);
        c.risk = c.competing
            && match c.ratio {
                RatioValue::Finite(r) => r < SELECTIVITY_THRESHOLD,
                RatioValue::Degenerate => true,
                RatioValue::NoCoupling => false,
            };
    }

    Ok(RwaReport {
        target: *target,
        omega_q: params.omega_q,
        threshold: SELECTIVITY_THRESHOLD,
        channels,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn first_params() -> ModelParams {
        ModelParams::new(4, 1.0, 1.0, 0.006, -0.5, 8).unwrap()
    }

    fn second_params() -> ModelParams {
        ModelParams::new(4, 1.0, 1.0, 0.1, -16.0, 8).unwrap()
    }

    #[test]
    fn rabi_frequencies() {
        let p = first_params();
        assert!((rabi_frequency(0, 0, &p).unwrap() - 0.006).abs() < 1e-16);
        assert!((rabi_frequency(1, 0, &p).unwrap() - 0.006 * 2f64.sqrt()).abs() < 1e-16);
        assert!((rabi_frequency(0, 1, &p).unwrap() - 0.006 * 6f64.sqrt() / 2.0).abs() < 1e-16);
        assert!(matches!(
            rabi_frequency(0, 4, &p),
            Err(Error::InvalidTransition { .. })
        ));
    }

    #[test]
    fn first_order_detuning_examples() {
        let p = first_params().with_omega_q(1.25);
        assert!(first_order_detunings(0, 0, &p).delta_minus.abs() < 1e-15);
        let p = first_params().with_omega_q(-1.125);
        assert!(first_order_detunings(0, 0, &p).delta_plus.abs() < 1e-15);

        let p = ModelParams {
            stark_u: 0.0,
            ..first_params()
        };
        let reference = first_order_detunings(0, 0, &p);
        for n in 0..5 {
            for k in 0..4 {
                let d = first_order_detunings(n, k, &p);
                assert_eq!(d.delta_minus, reference.delta_minus);
                assert_eq!(d.delta_plus, reference.delta_plus);
            }
        }
    }

    #[test]
    fn first_order_resonances_for_the_ladder() {
        let p = first_params();
        let cases = [
            (Channel::AntiTc, 0, 0, 2.125),
            (Channel::Tc, 0, 1, -0.125),
            (Channel::AntiTc, 0, 2, 1.875),
            (Channel::Tc, 0, 3, 0.125),
            (Channel::Tc, 0, 0, -0.25),
        ];
        for (kind, n0, k0, ratio) in cases {
            let wq = solve_first_order_resonance(&ResonanceTarget::first(kind, n0, k0), &p).unwrap();
            assert!((p.with_omega_q(wq).detuning_ratio() - ratio).abs() < 1e-14);
        }
        assert!(solve_first_order_resonance(&ResonanceTarget::second(Channel::Tc, 0, 0), &p).is_err());
        assert!(solve_first_order_resonance(&ResonanceTarget::first(Channel::Tc, 0, 4), &p).is_err());
    }

    #[test]
    fn second_order_vanishes_without_coupling_or_nonlinearity() {
        let p = ModelParams {
            stark_u: 0.0,
            omega_q: 0.7,
            ..second_params()
        };
        for n in 0..3 {
            for k in 0..3 {
                assert_eq!(second_order_coeffs(n, k, &p).unwrap().omega_tc2, 0.0);
            }
        }
        let p = second_params().with_lambda(0.0).with_omega_q(0.3);
        let c = second_order_coeffs(1, 1, &p).unwrap();
        for v in [
            c.stark_shift,
            c.omega_tc2,
            c.omega_atc2,
            c.omega_r2,
            c.omega_a2,
        ] {
            assert_eq!(v, 0.0);
        }
    }

    #[test]
    fn degenerate_denominators_are_rejected() {
        let p = ModelParams {
            stark_u: 0.0,
            ..second_params()
        };
        assert!(matches!(
            second_order_coeffs(0, 0, &p),
            Err(Error::Degenerate { .. })
        ));
    }

    #[test]
    fn tilde_corrections_follow_the_stark_shifts() {
        let p = second_params().with_omega_q(-0.9);
        let (n, k) = (0, 1);
        let c = second_order_coeffs(n, k, &p).unwrap();
        let s = |n, k| stark_shift(n, k, &p).unwrap();
        assert!((c.tilde_tc2 - (c.delta_tc2 + s(n, k + 2) - s(n + 2, k))).abs() < 1e-15);
        assert!((c.tilde_atc2 - (c.delta_atc2 + s(n + 2, k + 2) - s(n, k))).abs() < 1e-15);
        assert!((c.tilde_r2 - (c.delta_r2 + s(n, k + 2) - s(n, k))).abs() < 1e-15);
        assert!((c.tilde_a2 - (c.delta_a2 + s(n + 2, k) - s(n, k))).abs() < 1e-15);
    }

    #[test]
    fn tc2_coupling_is_antisymmetric_in_its_denominators() {
        // Swapping which intermediate detuning is larger flips the sign.
        let p1 = second_params().with_omega_q(0.9);
        let a = tc2_coupling(&p1, 0, 1).unwrap();
        let d1 = delta_minus(&p1, 0, 2);
        let d2 = delta_minus(&p1, 1, 1);
        let g = coupling(&p1, 0, 2) * coupling(&p1, 1, 1);
        assert!((a - 0.5 * g * (1.0 / d1 - 1.0 / d2)).abs() < 1e-15);
        assert!((a + 0.5 * g * (1.0 / d2 - 1.0 / d1)).abs() < 1e-15);
    }

    #[test]
    fn second_order_resonances() {
        let p = second_params();
        let atc = ResonanceTarget::second(Channel::AntiTc, 0, 0);
        let wq = solve_second_order_resonance(&atc, &p, None).unwrap();
        assert!((p.with_omega_q(wq).detuning_ratio() - 2.0003).abs() < 5e-5);
        let c = second_order_coeffs(0, 0, &p.with_omega_q(wq)).unwrap();
        assert!(c.tilde_atc2.abs() < 1e-9);

        let tc = ResonanceTarget::second(Channel::Tc, 0, 2);
        let wq = solve_second_order_resonance(&tc, &p, None).unwrap();
        assert!((p.with_omega_q(wq).detuning_ratio() - 0.0046).abs() < 5e-5);
        assert!(second_order_coeffs(0, 2, &p.with_omega_q(wq)).unwrap().tilde_tc2.abs() < 1e-9);
    }

    #[test]
    fn weak_coupling_limit_recovers_the_bare_resonance() {
        let p = second_params().with_lambda(1e-6);
        for target in [
            ResonanceTarget::second(Channel::AntiTc, 0, 0),
            ResonanceTarget::second(Channel::Tc, 0, 2),
        ] {
            let wq = solve_second_order_resonance(&target, &p, None).unwrap();
            let bare = bare_second_order_resonance(&target, &p).unwrap();
            assert!((wq - bare).abs() < 1e-10, "{wq} vs {bare}");
        }
    }

    #[test]
    fn bracket_without_sign_change() {
        let p = second_params();
        let t = ResonanceTarget::second(Channel::AntiTc, 0, 0);
        assert!(matches!(
            solve_second_order_resonance(&t, &p, Some((0.5, 0.6))),
            Err(Error::NoSignChange { .. })
        ));
    }

    #[test]
    fn effective_hamiltonian_support() {
        let p = first_params();
        let space = HilbertSpace::symmetric(4, 8).unwrap();
        let t = ResonanceTarget::first(Channel::Tc, 0, 0);
        let h = build_effective_hamiltonian(&t, &p, &space).unwrap();
        let a = space.dicke_index(1, 0).unwrap();
        let b = space.dicke_index(0, 1).unwrap();
        assert!((h.get(a, b).re - 0.006).abs() < 1e-16);
        assert!((h.get(b, a).re - 0.006).abs() < 1e-16);
        let nonzero = h.matrix().iter().filter(|z| z.norm() > 0.0).count();
        assert_eq!(nonzero, 2);

        let small = HilbertSpace::symmetric(4, 1).unwrap();
        let t2 = ResonanceTarget::second(Channel::AntiTc, 0, 0);
        assert!(build_effective_hamiltonian(&t2, &p.with_n_max(1), &small).is_err());
    }

    #[test]
    fn detuned_rabi_values() {
        let w = 0.01;
        assert!((detuned_rabi_probability(w, 0.0, PI / (2.0 * w)) - 1.0).abs() < 1e-14);
        assert_eq!(detuned_rabi_probability(w, 0.3, 0.0), 0.0);
        let expected = 0.5 * (PI / 2f64.sqrt()).sin().powi(2);
        let got = detuned_rabi_probability(w, 2.0 * w, PI / (2.0 * w));
        assert!((got - expected).abs() < 1e-14);
        assert!((got - 0.316).abs() < 1e-3);
    }

    #[test]
    fn rwa_report_at_ladder_resonance() {
        let p = first_params();
        let space = HilbertSpace::symmetric(4, 8).unwrap();
        let t = ResonanceTarget::first(Channel::Tc, 0, 1);
        let p = p.with_omega_q(solve_first_order_resonance(&t, &p).unwrap());
        let report = rwa_validity_report(&t, &p, &space).unwrap();
        match report.selected().unwrap().ratio {
            RatioValue::Finite(r) => assert!(r < 1e-10),
            other => panic!("unexpected {other:?}"),
        }
        assert!(report.is_selective());
        assert!(report.min_competing_ratio().unwrap() > 10.0);

        let p0 = p.with_lambda(0.0);
        let report = rwa_validity_report(&t, &p0, &space).unwrap();
        assert!(report
            .channels
            .iter()
            .all(|c| c.ratio == RatioValue::NoCoupling));
    }
}
