//! Recovery of nonnegative traffic demands `x` from link loads `b = Ax` and a
//! sparse 0/1 route matrix `A`.
//!
//! The regression problem `1/2 ||Ax - b||^2 + g(x)` is solved by the methods
//! in [`primal`] (fast gradient, coordinate descent, a three-point
//! derivative-free method, CG) and [`dual::solve_dual_rca`]; the projection
//! problem `min g(x) s.t. Ax = b` by [`dual::solve_projection_fgm`] and
//! [`dual::solve_penalty`]. `g` is a ridge, entropy or lasso term, see
//! [`problem::Regularizer`].

pub mod dispatch;
pub mod dual;
pub mod error;
pub mod harness;
pub mod io;
pub mod linalg;
pub mod matrix;
pub mod primal;
pub mod problem;

pub use dispatch::{SolveRequest, SolverId, SolverOutput};
pub use error::{Error, Result};
pub use matrix::{MatrixStats, RouteMatrix};
pub use problem::{ProblemInstance, ProjectionInstance, RegKind, Regularizer};
