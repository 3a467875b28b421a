//! Physical constants of the Dicke-Stark model.
//!
//! All frequencies are expressed in units of the resonator frequency, so the
//! natural time unit is `1 / omega_r`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Parameters of `H = (wq/2) Jz + wr a^dag a + (lambda/sqrt N)(a + a^dag) Jx + (U/2N) a^dag a Jz`
/// together with the photon-number cutoff used to truncate the Fock space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    pub n_qubits: usize,
    pub omega_r: f64,
    pub omega_q: f64,
    pub lambda: f64,
    pub stark_u: f64,
    pub n_max: usize,
}

impl ModelParams {
    pub fn new(
        n_qubits: usize,
        omega_r: f64,
        omega_q: f64,
        lambda: f64,
        stark_u: f64,
        n_max: usize,
    ) -> Result<Self> {
        let params = ModelParams {
            n_qubits,
            omega_r,
            omega_q,
            lambda,
            stark_u,
            n_max,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_qubits == 0 {
            return Err(Error::InvalidParams("n_qubits must be at least 1".into()));
        }
        for (name, v) in [
            ("omega_r", self.omega_r),
            ("omega_q", self.omega_q),
            ("lambda", self.lambda),
            ("stark_u", self.stark_u),
        ] {
            if !v.is_finite() {
                return Err(Error::InvalidParams(format!("{name} must be finite")));
            }
        }
        if self.omega_r <= 0.0 {
            return Err(Error::InvalidParams("omega_r must be positive".into()));
        }
        if self.lambda < 0.0 {
            return Err(Error::InvalidParams("lambda must be non-negative".into()));
        }
        Ok(())
    }

    pub fn with_omega_q(self, omega_q: f64) -> Self {
        ModelParams { omega_q, ..self }
    }

    pub fn with_n_max(self, n_max: usize) -> Self {
        ModelParams { n_max, ..self }
    }

    pub fn with_lambda(self, lambda: f64) -> Self {
        ModelParams { lambda, ..self }
    }

    /// `(omega_r - omega_q) / omega_r`, the axis used by every scan.
    pub fn detuning_ratio(&self) -> f64 {
        (self.omega_r - self.omega_q) / self.omega_r
    }

    /// Inverse of [`detuning_ratio`](Self::detuning_ratio).
    pub fn omega_q_from_ratio(&self, ratio: f64) -> f64 {
        self.omega_r * (1.0 - ratio)
    }

    pub fn n(&self) -> f64 {
        self.n_qubits as f64
    }
}

/// Default photon cutoff: the largest initial photon number plus `N + 4`.
pub fn default_cutoff(n_qubits: usize, max_initial_photons: usize) -> usize {
    max_initial_photons + n_qubits + 4
}
