//! Collective operators, Dicke states and the Dicke-Stark Hamiltonian.
//!
//! In the symmetric basis the Hamiltonian is pentadiagonal in `(k, n)`:
//! the diagonal carries `(wq + nU/N)(k - N/2) + n wr` and the only
//! off-diagonal entries connect `(k, n)` with `(k +- 1, n +- 1)`.

use nalgebra::DVector;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::operator::{Operator, StateVector};
use crate::space::{HilbertSpace, SpaceKind};

/// Which light-matter coupling terms to keep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CouplingTerms {
    /// Full `(a + a^dag) Jx` coupling.
    #[default]
    Full,
    /// Only the excitation-conserving `a sigma+ + a^dag sigma-` part.
    RotatingOnly,
    /// Only the counter-rotating `a^dag sigma+ + a sigma-` part.
    CounterRotatingOnly,
}

impl CouplingTerms {
    fn keeps_rotating(self) -> bool {
        matches!(self, CouplingTerms::Full | CouplingTerms::RotatingOnly)
    }

    fn keeps_counter_rotating(self) -> bool {
        matches!(self, CouplingTerms::Full | CouplingTerms::CounterRotatingOnly)
    }
}

/// `f(k) = sqrt((k + 1)(N - k))`, the `Jx` matrix element between
/// `|D^k>` and `|D^{k+1}>`. Vanishes at `k = N`.
pub fn collective_factor(n_qubits: usize, k: usize) -> f64 {
    if k >= n_qubits {
        return 0.0;
    }
    (((k + 1) * (n_qubits - k)) as f64).sqrt()
}

/// Diagonal energy of `|D^k> (x) |n>` under the free part of the Hamiltonian.
pub fn bare_energy(params: &ModelParams, k: usize, n: usize) -> f64 {
    let n_f = n as f64;
    (params.omega_q + n_f * params.stark_u / params.n()) * (k as f64 - params.n() / 2.0)
        + n_f * params.omega_r
}

fn check_space(params: &ModelParams, space: &HilbertSpace) -> Result<()> {
    params.validate()?;
    if space.n_qubits() != params.n_qubits || space.n_max() != params.n_max {
        return Err(Error::SpaceMismatch);
    }
    Ok(())
}

/// `(Jx, Jz)` with `J_a = sum_j sigma_j^a`, acting as identity on the field.
pub fn collective_ops(space: &HilbertSpace) -> Result<(Operator, Operator)> {
    space.require(SpaceKind::SymmetricDickeFock)?;
    let n_qubits = space.n_qubits();
    let mut jx = Operator::zeros(*space);
    let mut jz = Operator::zeros(*space);
    for k in 0..=n_qubits {
        for n in 0..=space.n_max() {
            let i = space.dicke_index(k, n)?;
            jz.add_diagonal(i, 2.0 * k as f64 - n_qubits as f64);
            if k < n_qubits {
                let j = space.dicke_index(k + 1, n)?;
                jx.set_hermitian_pair(j, i, collective_factor(n_qubits, k).into());
            }
        }
    }
    Ok((jx, jz))
}

/// Free Hamiltonian `H0` (everything except the `Jx` coupling); diagonal in
/// both bases.
pub fn free_hamiltonian(params: &ModelParams, space: &HilbertSpace) -> Result<Operator> {
    check_space(params, space)?;
    let entries: Vec<f64> = (0..space.dimension())
        .map(|i| bare_energy(params, space.excitations(i), space.photons(i)))
        .collect();
    Operator::diagonal(*space, &entries)
}

/// Full Dicke-Stark Hamiltonian in either basis.
pub fn build_hamiltonian(params: &ModelParams, space: &HilbertSpace) -> Result<Operator> {
    build_hamiltonian_with(params, space, CouplingTerms::Full)
}

pub fn build_hamiltonian_with(
    params: &ModelParams,
    space: &HilbertSpace,
    terms: CouplingTerms,
) -> Result<Operator> {
    check_space(params, space)?;
    let mut h = free_hamiltonian(params, space)?;
    let scale = params.lambda / params.n().sqrt();
    if scale == 0.0 {
        return Ok(h);
    }
    match space.kind() {
        SpaceKind::SymmetricDickeFock => {
            for k in 0..params.n_qubits {
                let f = collective_factor(params.n_qubits, k);
                for n in 0..space.n_max() {
                    let g = Complex64::from(scale * f * ((n + 1) as f64).sqrt());
                    if terms.keeps_rotating() {
                        // (k+1, n) <-> (k, n+1)
                        h.set_hermitian_pair(
                            space.dicke_index(k + 1, n)?,
                            space.dicke_index(k, n + 1)?,
                            g,
                        );
                    }
                    if terms.keeps_counter_rotating() {
                        // (k+1, n+1) <-> (k, n)
                        h.set_hermitian_pair(
                            space.dicke_index(k + 1, n + 1)?,
                            space.dicke_index(k, n)?,
                            g,
                        );
                    }
                }
            }
        }
        SpaceKind::ProductFock => {
            for bits in 0..(1usize << params.n_qubits) {
                for j in 0..params.n_qubits {
                    if bits & (1 << j) != 0 {
                        continue;
                    }
                    let excited = bits | (1 << j);
                    for n in 0..space.n_max() {
                        let g = Complex64::from(scale * ((n + 1) as f64).sqrt());
                        if terms.keeps_rotating() {
                            h.set_hermitian_pair(
                                space.product_index(excited, n)?,
                                space.product_index(bits, n + 1)?,
                                g,
                            );
                        }
                        if terms.keeps_counter_rotating() {
                            h.set_hermitian_pair(
                                space.product_index(excited, n + 1)?,
                                space.product_index(bits, n)?,
                                g,
                            );
                        }
                    }
                }
            }
        }
    }
    Ok(h)
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// `|D_N^k> (x) |n>`. In the product basis this is the equal-weight
/// superposition of all `C(N, k)` bitstrings with `k` excitations.
pub fn dicke_state(space: &HilbertSpace, k: usize, n: usize) -> Result<StateVector> {
    if k > space.n_qubits() {
        return Err(Error::OutOfRange {
            what: "excitation number k",
            value: k,
            max: space.n_qubits(),
        });
    }
    space.check_photons(n)?;
    match space.kind() {
        SpaceKind::SymmetricDickeFock => StateVector::basis(*space, space.dicke_index(k, n)?),
        SpaceKind::ProductFock => {
            let amp = Complex64::from(binomial(space.n_qubits(), k).sqrt().recip());
            let mut v = DVector::zeros(space.dimension());
            for bits in 0..(1usize << space.n_qubits()) {
                if bits.count_ones() as usize == k {
                    v[space.product_index(bits, n)?] = amp;
                }
            }
            StateVector::from_amplitudes(*space, v)
        }
    }
}

/// Normalized superposition `sum_i c_i |D^{k_i}> (x) |n_i>`.
pub fn dicke_superposition(
    space: &HilbertSpace,
    terms: &[(usize, usize, Complex64)],
) -> Result<StateVector> {
    let mut v = DVector::zeros(space.dimension());
    for &(k, n, c) in terms {
        let basis = dicke_state(space, k, n)?;
        v += basis.amplitudes() * c;
    }
    StateVector::normalized(*space, v)
}

/// Projects a product-basis state onto the symmetric sector and expresses it
/// in the Dicke basis of `target`. Fails if more than `tol` of the norm lies
/// outside the symmetric sector.
pub fn project_to_symmetric(
    psi: &StateVector,
    target: &HilbertSpace,
    tol: f64,
) -> Result<StateVector> {
    let source = psi.space();
    source.require(SpaceKind::ProductFock)?;
    target.require(SpaceKind::SymmetricDickeFock)?;
    if source.n_qubits() != target.n_qubits() || source.n_max() != target.n_max() {
        return Err(Error::SpaceMismatch);
    }
    let n_qubits = source.n_qubits();
    let weights: Vec<f64> = (0..=n_qubits)
        .map(|k| binomial(n_qubits, k).sqrt().recip())
        .collect();
    let mut v = DVector::<Complex64>::zeros(target.dimension());
    for i in 0..source.dimension() {
        let (bits, n) = source.split(i);
        let k = bits.count_ones() as usize;
        v[target.dicke_index(k, n)?] += psi.amplitude(i) * weights[k];
    }
    let norm = v.norm();
    if (norm - 1.0).abs() > tol {
        return Err(Error::NotNormalized { norm });
    }
    Ok(StateVector::from_unitary_image(*target, v))
}

/// Embeds a symmetric-basis state into the product basis.
pub fn embed_in_product(psi: &StateVector, target: &HilbertSpace) -> Result<StateVector> {
    let source = psi.space();
    source.require(SpaceKind::SymmetricDickeFock)?;
    target.require(SpaceKind::ProductFock)?;
    if source.n_qubits() != target.n_qubits() || source.n_max() != target.n_max() {
        return Err(Error::SpaceMismatch);
    }
    let mut v = DVector::<Complex64>::zeros(target.dimension());
    for i in 0..source.dimension() {
        let (k, n) = source.split(i);
        let c = psi.amplitude(i);
        if c != Complex64::new(0.0, 0.0) {
            v += dicke_state(target, k, n)?.amplitudes() * c;
        }
    }
    StateVector::from_amplitudes(*target, v)
}
