//! Radial standing waves and static solutions of the Chern-Simons-Schrodinger
//! system.
//!
//! The radial amplitude `u` solves
//! `-Laplace u + eps u + (h^2/r^2 + V) u = |u|^{p-1} u` on the plane, with
//! `h(r) = 1/2 int_0^r s u^2 ds` and `V(r) = int_r^inf h u^2 / s ds`.

// `!(x > 0.0)` style guards also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod diagnostics;
pub mod error;
pub mod field;
pub mod functionals;
pub mod gauge;
pub mod grid;
pub mod interp;
pub mod linalg;
pub mod model;
pub mod nonlocal;
pub mod norms;
pub mod solver;

pub use error::{CssError, Result};
pub use field::RadialField;
pub use functionals::{breakdown, scale, solve_fiber_t, weak_residual, FunctionalBreakdown};
pub use grid::{GridConfig, RadialGrid};
pub use model::ModelParams;
pub use nonlocal::{compute_nonlocal, NonlocalCache};
pub use solver::{minimize_on_manifold, run_continuation, SolveReport, SolverConfig};
