//! Detection of exceptional points in non-Hermitian RT-symmetric spin chains from
//! the long-time behaviour of the Loschmidt echo after a sudden field quench.
//!
//! The crate has two independent routes to the echo: a closed-form momentum-space
//! solver for the free-fermion models ([`momentum`]) and dense exact
//! diagonalisation for any model ([`exact_diag`]). [`analysis`] turns echo series
//! into rates, time-averaged rates and exceptional-point estimates.

pub mod analysis;
pub mod echo;
pub mod error;
pub mod exact_diag;
pub mod linalg;
pub mod models;
pub mod momentum;

pub use analysis::{sweep, AveragingWindow, SweepConfig, SweepResult};
pub use echo::{EchoSeries, TimeGrid};
pub use error::{Error, Result};
pub use models::{analytic_ep, build_hamiltonian, Model, ModelParams};
