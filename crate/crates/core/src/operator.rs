//! Dense operators and state vectors over a [`HilbertSpace`].

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::space::HilbertSpace;

/// Hermiticity threshold for builders, relative to the largest entry (floored at 1).
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Unitarity threshold for propagators.
pub const UNITARY_TOL: f64 = 1e-10;
/// Normalization threshold for states.
pub const NORM_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct Operator {
    space: HilbertSpace,
    matrix: DMatrix<Complex64>,
}

impl Operator {
    pub fn from_matrix(space: HilbertSpace, matrix: DMatrix<Complex64>) -> Result<Self> {
        if matrix.nrows() != space.dimension() || matrix.ncols() != space.dimension() {
            return Err(Error::SpaceMismatch);
        }
        Ok(Operator { space, matrix })
    }

    pub fn zeros(space: HilbertSpace) -> Self {
        let d = space.dimension();
        Operator {
            space,
            matrix: DMatrix::zeros(d, d),
        }
    }

    pub fn identity(space: HilbertSpace) -> Self {
        let d = space.dimension();
        Operator {
            space,
            matrix: DMatrix::identity(d, d),
        }
    }

    /// Diagonal operator with the given real entries.
    pub fn diagonal(space: HilbertSpace, entries: &[f64]) -> Result<Self> {
        if entries.len() != space.dimension() {
            return Err(Error::SpaceMismatch);
        }
        let diag = DVector::from_iterator(entries.len(), entries.iter().map(|&e| e.into()));
        Ok(Operator {
            space,
            matrix: DMatrix::from_diagonal(&diag),
        })
    }

    pub fn space(&self) -> &HilbertSpace {
        &self.space
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<Complex64> {
        self.matrix
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.matrix[(row, col)]
    }

    /// Sets `M[row, col]` and `M[col, row]` so the result stays Hermitian.
    pub(crate) fn set_hermitian_pair(&mut self, row: usize, col: usize, value: Complex64) {
        self.matrix[(row, col)] = value;
        self.matrix[(col, row)] = value.conj();
    }

    pub(crate) fn add_diagonal(&mut self, index: usize, value: f64) {
        self.matrix[(index, index)] += value;
    }

    pub fn max_abs(&self) -> f64 {
        self.matrix.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// `max |M - M^dag|`.
    pub fn hermiticity_error(&self) -> f64 {
        let d = self.matrix.nrows();
        let mut worst = 0.0f64;
        for i in 0..d {
            for j in i..d {
                let diff = self.matrix[(i, j)] - self.matrix[(j, i)].conj();
                worst = worst.max(diff.norm());
            }
        }
        worst
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermiticity_error() <= HERMITIAN_TOL * self.max_abs().max(1.0)
    }

    pub fn check_hermitian(&self) -> Result<()> {
        let deviation = self.hermiticity_error();
        if deviation <= HERMITIAN_TOL * self.max_abs().max(1.0) {
            Ok(())
        } else {
            Err(Error::NotHermitian { deviation })
        }
    }

    /// `max |U^dag U - I|`.
    pub fn unitarity_error(&self) -> f64 {
        let d = self.matrix.nrows();
        let product = self.matrix.adjoint() * &self.matrix;
        let identity = DMatrix::<Complex64>::identity(d, d);
        (product - identity)
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    pub fn off_diagonal_max(&self) -> f64 {
        let d = self.matrix.nrows();
        let mut worst = 0.0f64;
        for i in 0..d {
            for j in 0..d {
                if i != j {
                    worst = worst.max(self.matrix[(i, j)].norm());
                }
            }
        }
        worst
    }

    /// Real parts of the diagonal.
    pub fn diagonal_entries(&self) -> Vec<f64> {
        self.matrix.diagonal().iter().map(|z| z.re).collect()
    }

    /// Maximum absolute entry-wise difference.
    pub fn distance(&self, other: &Operator) -> Result<f64> {
        if self.space != other.space {
            return Err(Error::SpaceMismatch);
        }
        Ok((&self.matrix - &other.matrix)
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max))
    }

    pub fn apply(&self, psi: &StateVector) -> Result<DVector<Complex64>> {
        if self.space != psi.space {
            return Err(Error::SpaceMismatch);
        }
        Ok(&self.matrix * &psi.amplitudes)
    }

    /// `<psi|M|psi>`.
    pub fn expectation(&self, psi: &StateVector) -> Result<Complex64> {
        let m_psi = self.apply(psi)?;
        Ok(psi.amplitudes.dotc(&m_psi))
    }

    pub fn compose(&self, other: &Operator) -> Result<Operator> {
        if self.space != other.space {
            return Err(Error::SpaceMismatch);
        }
        Ok(Operator {
            space: self.space,
            matrix: &self.matrix * &other.matrix,
        })
    }

    pub fn scaled(&self, factor: f64) -> Operator {
        Operator {
            space: self.space,
            matrix: self.matrix.map(|z| z * factor),
        }
    }
}

/// Normalized amplitude vector.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    space: HilbertSpace,
    amplitudes: DVector<Complex64>,
}

impl StateVector {
    /// Wraps the amplitudes, failing unless they are normalized to `NORM_TOL`.
    pub fn from_amplitudes(space: HilbertSpace, amplitudes: DVector<Complex64>) -> Result<Self> {
        if amplitudes.len() != space.dimension() {
            return Err(Error::SpaceMismatch);
        }
        let norm = amplitudes.norm();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized { norm });
        }
        Ok(StateVector { space, amplitudes })
    }

    /// Rescales the amplitudes to unit norm.
    pub fn normalized(space: HilbertSpace, amplitudes: DVector<Complex64>) -> Result<Self> {
        if amplitudes.len() != space.dimension() {
            return Err(Error::SpaceMismatch);
        }
        let norm = amplitudes.norm();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::NotNormalized { norm });
        }
        Ok(StateVector {
            space,
            amplitudes: amplitudes / Complex64::from(norm),
        })
    }

    pub fn basis(space: HilbertSpace, index: usize) -> Result<Self> {
        if index >= space.dimension() {
            return Err(Error::OutOfRange {
                what: "basis index",
                value: index,
                max: space.dimension().saturating_sub(1),
            });
        }
        let mut amplitudes = DVector::zeros(space.dimension());
        amplitudes[index] = Complex64::new(1.0, 0.0);
        Ok(StateVector { space, amplitudes })
    }

    /// Internal constructor for states produced by unitary maps; the caller
    /// is responsible for normalization.
    pub(crate) fn from_unitary_image(space: HilbertSpace, amplitudes: DVector<Complex64>) -> Self {
        debug_assert_eq!(amplitudes.len(), space.dimension());
        StateVector { space, amplitudes }
    }

    pub fn space(&self) -> &HilbertSpace {
        &self.space
    }

    pub fn amplitudes(&self) -> &DVector<Complex64> {
        &self.amplitudes
    }

    pub fn amplitude(&self, index: usize) -> Complex64 {
        self.amplitudes[index]
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &StateVector) -> Result<Complex64> {
        if self.space != other.space {
            return Err(Error::SpaceMismatch);
        }
        Ok(self.amplitudes.dotc(&other.amplitudes))
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|z| z.norm_sqr()).collect()
    }

    /// Euclidean distance `||self - other||`.
    pub fn distance(&self, other: &StateVector) -> Result<f64> {
        if self.space != other.space {
            return Err(Error::SpaceMismatch);
        }
        Ok((&self.amplitudes - &other.amplitudes).norm())
    }
}
