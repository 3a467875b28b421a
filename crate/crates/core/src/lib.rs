//! Simulator and protocol engine for selective light-matter interactions in
//! the Dicke-Stark model.

pub mod cli;
pub mod config;
pub mod dynamics;
pub mod effective;
pub mod error;
pub mod hamiltonian;
pub mod model;
pub mod operator;
pub mod protocol;
pub mod scan;
pub mod space;
pub mod validation;

pub use error::{Error, Result};
pub use model::ModelParams;
pub use operator::{Operator, StateVector};
pub use space::{build_space, HilbertSpace, SpaceKind};
