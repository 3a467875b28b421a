use thiserror::Error;

use crate::space::SpaceKind;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid model parameters: {0}")]
    InvalidParams(String),

    #[error("Hilbert space dimension {dimension} exceeds the configured limit {limit}")]
    DimensionTooLarge { dimension: usize, limit: usize },

    #[error("{what} = {value} is out of range (max {max})")]
    OutOfRange {
        what: &'static str,
        value: usize,
        max: usize,
    },

    #[error("operation requires a {expected:?} space, got {found:?}")]
    WrongSpaceKind { expected: SpaceKind, found: SpaceKind },

    #[error("operands live in different Hilbert spaces")]
    SpaceMismatch,

    #[error("operator is not Hermitian (max |M - M^dag| = {deviation:e})")]
    NotHermitian { deviation: f64 },

    #[error("frame generator is not diagonal (max off-diagonal = {deviation:e})")]
    NotDiagonal { deviation: f64 },

    #[error("state is not normalized (norm = {norm})")]
    NotNormalized { norm: f64 },

    #[error("no upward coupling out of k = {k} for N = {n_qubits}")]
    InvalidTransition { k: usize, n_qubits: usize },

    #[error("degenerate parameter point: {which} = {value:e}")]
    Degenerate { which: String, value: f64 },

    #[error("wrong resonance order: expected {expected}")]
    WrongOrder { expected: &'static str },

    #[error("no sign change in bracket [{lo}, {hi}] (f = {f_lo:e}, {f_hi:e})")]
    NoSignChange {
        lo: f64,
        hi: f64,
        f_lo: f64,
        f_hi: f64,
    },

    #[error("root solve did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("photon cutoff exceeded in step {step}: top Fock level population {population:e}")]
    CutoffExceeded { step: usize, population: f64 },

    #[error("protocol step {step}: {source}")]
    Step {
        step: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("invalid scan grid: {0}")]
    InvalidGrid(String),

    #[error("invalid protocol: {0}")]
    InvalidProtocol(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn in_step(self, step: usize) -> Error {
        match self {
            e @ (Error::Step { .. } | Error::CutoffExceeded { .. }) => e,
            other => Error::Step {
                step,
                source: Box::new(other),
            },
        }
    }
}
