//! Iterated integrals against the Brownian drivers: their specification,
//! exact Wiener expectations, and the moment systems built from them.

pub mod expectation;
pub mod simplex;
pub mod spec;
pub mod targets;

pub use expectation::{
    beta_integral, combined_expectation, reduce, wiener_expectation, wiener_expectation_quadrature,
    Method, MomentValue, Reduction,
};
pub use simplex::{GapFactor, SimplexIntegral};
pub use spec::{IteratedIntegralSpec, KernelFactor};
pub use targets::{
    moment_targets_1d_n3_multi, moment_targets_1d_n3_oneperiod, moment_targets_1d_n5_multi,
    moment_targets_1d_n5_oneperiod, moment_targets_2d_n3_multi, moment_targets_2d_n5_oneperiod,
    MomentCondition, MomentSystem, PathLayout, QUARTIC_2D_TUPLES, QUARTIC_ANCHOR_GROUPS,
};
