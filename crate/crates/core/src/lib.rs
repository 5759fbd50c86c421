//! Finite-difference laboratory for `-div(A grad u) = c0 u + mu <A grad u, grad u> + f`
//! with zero Dirichlet data on a box.
//!
//! The exponential change of unknown `v = (e^{mu u} - 1) / mu` turns the
//! problem into a semilinear one with a variational structure. When `c0 >= 0`
//! is nontrivial the transformed functional has a local minimizer near zero
//! and a mountain-pass critical point far away; [`solvers::solve_model_both`]
//! computes both and maps them back.

pub mod assembly;
pub mod energy;
pub mod grid;
pub mod linalg;
pub mod nonlinearity;
pub mod problem;
pub mod solvers;

pub use energy::{EnergyBreakdown, HypothesisReport};
pub use grid::{Grid, MatrixField, ScalarField};
pub use nonlinearity::{GradientCoupling, SignFlip};
pub use problem::ProblemData;
pub use solvers::{PathState, SolveKind, SolveResult};
