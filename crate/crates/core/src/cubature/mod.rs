//! Cubature measures on path space: closed-form builders, numerical
//! construction from moment systems, and multi-period composition.

pub mod builders;
pub mod measure;
pub mod solver;
pub mod system;

pub use builders::{
    build_1d_multi_n3, build_1d_multi_n5, build_1d_oneperiod_n3, build_2d_multi_n3,
    oneperiod_n3_cells, printed_1d_n5_oneperiod, PRINTED_2D_N5_WEIGHTS,
};
pub use measure::{Atom, AtomIter, CubatureMeasure, PeriodMeasure};
pub use solver::{solve_compiled, solve_moment_system, verify, SolveOutcome, SolverConfig, SolverMethod};
pub use system::{max_relative, write_residual_csv, CompiledSystem, EquationResidual};
