//! Exact evolution under piecewise time-independent Hamiltonians.
//!
//! Propagators come from the Hermitian eigendecomposition
//! `U(t) = V exp(-i w t) V^dag`, so every sampled state is computed directly
//! from the initial state and no integration error accumulates.

use std::io::Write;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::operator::{Operator, StateVector};
use crate::space::HilbertSpace;

/// Default number of samples per evolution segment.
pub const DEFAULT_SAMPLES: usize = 400;

/// Eigendecomposition of a Hermitian operator, reusable for any time.
#[derive(Debug, Clone)]
pub struct Spectral {
    space: HilbertSpace,
    eigenvalues: DVector<f64>,
    eigenvectors: DMatrix<Complex64>,
}

impl Spectral {
    pub fn new(h: &Operator) -> Result<Self> {
        h.check_hermitian()?;
        let eig = SymmetricEigen::new(h.matrix().clone());
        Ok(Spectral {
            space: *h.space(),
            eigenvalues: eig.eigenvalues,
            eigenvectors: eig.eigenvectors,
        })
    }

    pub fn eigenvalues(&self) -> &DVector<f64> {
        &self.eigenvalues
    }

    pub fn space(&self) -> &HilbertSpace {
        &self.space
    }

    fn phases(&self, t: f64) -> DVector<Complex64> {
        self.eigenvalues.map(|w| Complex64::from_polar(1.0, -w * t))
    }

    /// `exp(-i H t)`.
    pub fn propagator(&self, t: f64) -> Operator {
        let v = &self.eigenvectors;
        let mut scaled = v.clone();
        for (mut col, phase) in scaled.column_iter_mut().zip(self.phases(t).iter()) {
            col *= *phase;
        }
        let u = scaled * v.adjoint();
        Operator::from_matrix(self.space, u).expect("propagator has the operator's shape")
    }

    /// Coefficients of `psi` in the eigenbasis.
    fn coefficients(&self, psi: &StateVector) -> Result<DVector<Complex64>> {
        if *psi.space() != self.space {
            return Err(Error::SpaceMismatch);
        }
        Ok(self.eigenvectors.adjoint() * psi.amplitudes())
    }

    fn reconstruct(&self, coefficients: &DVector<Complex64>, t: f64) -> StateVector {
        let rotated = coefficients.component_mul(&self.phases(t));
        StateVector::from_unitary_image(self.space, &self.eigenvectors * rotated)
    }

    pub fn evolve_state(&self, psi: &StateVector, t: f64) -> Result<StateVector> {
        Ok(self.reconstruct(&self.coefficients(psi)?, t))
    }

    /// Samples `samples` uniformly spaced states on `[0, duration]`.
    pub fn trajectory(
        &self,
        psi0: &StateVector,
        duration: f64,
        samples: usize,
        t_offset: f64,
    ) -> Result<Trajectory> {
        if samples < 2 {
            return Err(Error::InvalidGrid("a trajectory needs at least 2 samples".into()));
        }
        if !(duration > 0.0) || !duration.is_finite() {
            return Err(Error::InvalidGrid(format!(
                "duration must be positive and finite, got {duration}"
            )));
        }
        let c = self.coefficients(psi0)?;
        let mut traj = Trajectory::with_capacity(samples);
        for i in 0..samples {
            let local = if i + 1 == samples {
                duration
            } else {
                duration * i as f64 / (samples - 1) as f64
            };
            let state = if i == 0 {
                psi0.clone()
            } else {
                self.reconstruct(&c, local)
            };
            traj.push(t_offset + local, state);
        }
        Ok(traj)
    }
}

/// `exp(-i H t)` for Hermitian `H`.
pub fn propagator(h: &Operator, t: f64) -> Result<Operator> {
    Ok(Spectral::new(h)?.propagator(t))
}

/// Evolves `psi0` under `h`, sampling `samples` points on `[0, duration]`.
pub fn evolve(psi0: &StateVector, h: &Operator, duration: f64, samples: usize) -> Result<Trajectory> {
    if psi0.space() != h.space() {
        return Err(Error::SpaceMismatch);
    }
    Spectral::new(h)?.trajectory(psi0, duration, samples, 0.0)
}

/// State at `t` only.
pub fn evolve_to(psi0: &StateVector, h: &Operator, t: f64) -> Result<StateVector> {
    Spectral::new(h)?.evolve_state(psi0, t)
}

/// Excitation numbers and `(k, n)` populations of a state.
#[derive(Debug, Clone, PartialEq)]
pub struct Observables {
    pub nq: f64,
    pub nph: f64,
    n_qubits: usize,
    n_max: usize,
    populations: Vec<f64>,
}

impl Observables {
    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    /// Population of the cell with `k` excited qubits and `n` photons.
    pub fn population(&self, k: usize, n: usize) -> f64 {
        if k > self.n_qubits || n > self.n_max {
            return 0.0;
        }
        self.populations[k * (self.n_max + 1) + n]
    }

    /// Populations in flat symmetric-index order `k * (n_max + 1) + n`.
    pub fn populations(&self) -> &[f64] {
        &self.populations
    }

    pub fn total_population(&self) -> f64 {
        self.populations.iter().sum()
    }

    pub fn top_fock_population(&self) -> f64 {
        (0..=self.n_qubits)
            .map(|k| self.population(k, self.n_max))
            .sum()
    }

    /// `(k, n)` cell with the largest population.
    pub fn dominant_cell(&self) -> ((usize, usize), f64) {
        let (i, p) = self
            .populations
            .iter()
            .copied()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap_or((0, 0.0));
        ((i / (self.n_max + 1), i % (self.n_max + 1)), p)
    }

    pub fn cell_labels(n_qubits: usize, n_max: usize) -> Vec<String> {
        (0..=n_qubits)
            .flat_map(|k| (0..=n_max).map(move |n| format!("pop_k{k}_n{n}")))
            .collect()
    }
}

/// `<N_q>`, `<a^dag a>` and `(k, n)` populations. Product-basis states are
/// binned by the number of excited qubits.
pub fn observables(psi: &StateVector) -> Observables {
    let space = psi.space();
    let n_qubits = space.n_qubits();
    let n_max = space.n_max();
    let mut populations = vec![0.0; (n_qubits + 1) * (n_max + 1)];
    let mut nq = 0.0;
    let mut nph = 0.0;
    for (i, z) in psi.amplitudes().iter().enumerate() {
        let p = z.norm_sqr();
        let k = space.excitations(i);
        let n = space.photons(i);
        populations[k * (n_max + 1) + n] += p;
        nq += k as f64 * p;
        nph += n as f64 * p;
    }
    Observables {
        nq,
        nph,
        n_qubits,
        n_max,
        populations,
    }
}

/// `|<target|psi>|^2`.
pub fn fidelity(psi: &StateVector, target: &StateVector) -> Result<f64> {
    Ok(target.inner(psi)?.norm_sqr().min(1.0))
}

/// `max_phi |<(|a> + e^{i phi}|b>)/sqrt 2 | psi>|^2 = (|psi_a| + |psi_b|)^2 / 2`.
pub fn phase_optimized_fidelity(psi: &StateVector, a: usize, b: usize) -> f64 {
    let s = psi.amplitude(a).norm() + psi.amplitude(b).norm();
    (0.5 * s * s).min(1.0)
}

/// Applies `R^dag(t) = exp(+i H0 t)` for a diagonal `H0`.
pub fn to_rotating_frame(psi: &StateVector, h0: &Operator, t: f64) -> Result<StateVector> {
    if psi.space() != h0.space() {
        return Err(Error::SpaceMismatch);
    }
    let deviation = h0.off_diagonal_max();
    if deviation > 0.0 {
        return Err(Error::NotDiagonal { deviation });
    }
    let energies = h0.diagonal_entries();
    let amplitudes = DVector::from_iterator(
        energies.len(),
        psi.amplitudes()
            .iter()
            .zip(&energies)
            .map(|(z, e)| z * Complex64::from_polar(1.0, e * t)),
    );
    Ok(StateVector::from_unitary_image(*psi.space(), amplitudes))
}

/// `<psi|H|psi>` (real part).
pub fn energy(psi: &StateVector, h: &Operator) -> Result<f64> {
    Ok(h.expectation(psi)?.re)
}

/// Sampled evolution with observables at every time.
#[derive(Debug, Clone, Default)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<StateVector>,
    pub observables: Vec<Observables>,
}

impl Trajectory {
    fn with_capacity(n: usize) -> Self {
        Trajectory {
            times: Vec::with_capacity(n),
            states: Vec::with_capacity(n),
            observables: Vec::with_capacity(n),
        }
    }

    fn push(&mut self, t: f64, state: StateVector) {
        self.observables.push(observables(&state));
        self.times.push(t);
        self.states.push(state);
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn final_state(&self) -> Option<&StateVector> {
        self.states.last()
    }

    pub fn final_observables(&self) -> Option<&Observables> {
        self.observables.last()
    }

    /// Largest `| ||psi(t)|| - 1 |` along the trajectory.
    pub fn max_norm_drift(&self) -> f64 {
        self.states
            .iter()
            .map(|s| (s.norm() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// Writes `t, [lambda_t,] nq, nph, pop_k{k}_n{n}...` rows. The
    /// `lambda_t` column appears only when `lambda` is given.
    pub fn write_csv<W: Write>(&self, writer: W, lambda: Option<f64>) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let Some(first) = self.observables.first() else {
            w.flush()?;
            return Ok(());
        };
        let mut header = vec!["t".to_string()];
        if lambda.is_some() {
            header.push("lambda_t".into());
        }
        header.push("nq".into());
        header.push("nph".into());
        header.extend(Observables::cell_labels(first.n_qubits, first.n_max));
        w.write_record(&header)?;
        for (t, obs) in self.times.iter().zip(&self.observables) {
            let mut row = vec![t.to_string()];
            if let Some(l) = lambda {
                row.push((l * t).to_string());
            }
            row.push(obs.nq.to_string());
            row.push(obs.nph.to_string());
            row.extend(obs.populations.iter().map(|p| p.to_string()));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}
