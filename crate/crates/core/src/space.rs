//! Indexing of the truncated qubit-register x Fock Hilbert spaces.
//!
//! The symmetric space is spanned by `|D_N^k> (x) |n>` with flat index
//! `k * (n_max + 1) + n`. The product space is spanned by
//! `|b_1 ... b_N> (x) |n>` with flat index `bits * (n_max + 1) + n`, where bit
//! `j` of `bits` set means qubit `j` is excited.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ModelParams;

/// Largest dimension [`build_space`] accepts. Everything here is dense, so
/// this is a sanity bound rather than a memory limit.
pub const DEFAULT_MAX_DIMENSION: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SpaceKind {
    SymmetricDickeFock,
    ProductFock,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct HilbertSpace {
    kind: SpaceKind,
    n_qubits: usize,
    n_max: usize,
    dimension: usize,
}

pub fn build_space(params: &ModelParams, kind: SpaceKind) -> Result<HilbertSpace> {
    build_space_with_limit(params, kind, DEFAULT_MAX_DIMENSION)
}

pub fn build_space_with_limit(
    params: &ModelParams,
    kind: SpaceKind,
    limit: usize,
) -> Result<HilbertSpace> {
    params.validate()?;
    HilbertSpace::new(kind, params.n_qubits, params.n_max, limit)
}

impl HilbertSpace {
    pub fn new(kind: SpaceKind, n_qubits: usize, n_max: usize, limit: usize) -> Result<Self> {
        let overflow = || Error::DimensionTooLarge {
            dimension: usize::MAX,
            limit,
        };
        let fock = n_max.checked_add(1).ok_or_else(overflow)?;
        let atomic = match kind {
            SpaceKind::SymmetricDickeFock => n_qubits.checked_add(1).ok_or_else(overflow)?,
            SpaceKind::ProductFock => {
                if n_qubits >= usize::BITS as usize {
                    return Err(overflow());
                }
                1usize << n_qubits
            }
        };
        let dimension = atomic.checked_mul(fock).ok_or_else(overflow)?;
        if dimension > limit {
            return Err(Error::DimensionTooLarge { dimension, limit });
        }
        Ok(HilbertSpace {
            kind,
            n_qubits,
            n_max,
            dimension,
        })
    }

    pub fn symmetric(n_qubits: usize, n_max: usize) -> Result<Self> {
        Self::new(
            SpaceKind::SymmetricDickeFock,
            n_qubits,
            n_max,
            DEFAULT_MAX_DIMENSION,
        )
    }

    pub fn product(n_qubits: usize, n_max: usize) -> Result<Self> {
        Self::new(SpaceKind::ProductFock, n_qubits, n_max, DEFAULT_MAX_DIMENSION)
    }

    pub fn kind(&self) -> SpaceKind {
        self.kind
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn fock_levels(&self) -> usize {
        self.n_max + 1
    }

    /// Number of atomic basis labels: `N + 1` Dicke levels or `2^N` bitstrings.
    pub fn atomic_levels(&self) -> usize {
        self.dimension / self.fock_levels()
    }

    pub fn is_symmetric(&self) -> bool {
        self.kind == SpaceKind::SymmetricDickeFock
    }

    pub(crate) fn require(&self, kind: SpaceKind) -> Result<()> {
        if self.kind == kind {
            Ok(())
        } else {
            Err(Error::WrongSpaceKind {
                expected: kind,
                found: self.kind,
            })
        }
    }

    pub(crate) fn check_photons(&self, n: usize) -> Result<()> {
        if n > self.n_max {
            return Err(Error::OutOfRange {
                what: "photon number n",
                value: n,
                max: self.n_max,
            });
        }
        Ok(())
    }

    /// Flat index of `|D^k> (x) |n>`.
    pub fn dicke_index(&self, k: usize, n: usize) -> Result<usize> {
        self.require(SpaceKind::SymmetricDickeFock)?;
        if k > self.n_qubits {
            return Err(Error::OutOfRange {
                what: "excitation number k",
                value: k,
                max: self.n_qubits,
            });
        }
        self.check_photons(n)?;
        Ok(k * self.fock_levels() + n)
    }

    /// Flat index of `|bits> (x) |n>` in the product space.
    pub fn product_index(&self, bits: usize, n: usize) -> Result<usize> {
        self.require(SpaceKind::ProductFock)?;
        let max_bits = (1usize << self.n_qubits) - 1;
        if bits > max_bits {
            return Err(Error::OutOfRange {
                what: "bitstring",
                value: bits,
                max: max_bits,
            });
        }
        self.check_photons(n)?;
        Ok(bits * self.fock_levels() + n)
    }

    /// Splits a flat index into `(atomic label, photon number)`. The atomic
    /// label is `k` in the symmetric space and the bitstring otherwise.
    pub fn split(&self, index: usize) -> (usize, usize) {
        (index / self.fock_levels(), index % self.fock_levels())
    }

    /// Number of excited qubits carried by the basis vector at `index`.
    pub fn excitations(&self, index: usize) -> usize {
        let (atomic, _) = self.split(index);
        match self.kind {
            SpaceKind::SymmetricDickeFock => atomic,
            SpaceKind::ProductFock => atomic.count_ones() as usize,
        }
    }

    pub fn photons(&self, index: usize) -> usize {
        index % self.fock_levels()
    }

    /// Same space with a different photon cutoff.
    pub fn with_n_max(&self, n_max: usize) -> Result<Self> {
        Self::new(self.kind, self.n_qubits, n_max, DEFAULT_MAX_DIMENSION.max(self.dimension))
    }
}
