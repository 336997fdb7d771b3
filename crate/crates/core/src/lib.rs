//! Cubature on Wiener space for stochastic Volterra integral equations:
//! moment targets, cubature path construction, the deterministic Volterra
//! solve along each path, and Euler / Gaussian reference pricers.

pub mod cli;
pub mod cubature;
pub mod error;
pub mod kernel;
pub mod model;
pub mod moments;
pub mod path;
pub mod payoff;
pub mod pricing;
pub mod quad;
pub mod repro;
pub mod volterra;

pub use error::{Error, Result};
pub use kernel::Kernel;
pub use model::{validate_hypotheses, ModelSpec, SVIEModel};
pub use payoff::Payoff;
