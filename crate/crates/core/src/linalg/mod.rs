//! Linear algebra kernels: banded LU with partial pivoting and
//! (preconditioned) conjugate gradients.

mod banded;
mod cg;

pub use banded::{BandLu, BandMatrix};
pub use cg::{conjugate_gradient, CgOutcome};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("matrix is singular to working precision (zero pivot in column {column})")]
    Singular { column: usize },
    #[error("conjugate gradients stagnated at relative residual {residual:.3e} after {iterations} iterations")]
    Stagnation { iterations: usize, residual: f64 },
    #[error(
        "conjugate gradients hit a direction of non-positive curvature at iteration {iteration}"
    )]
    NotPositiveDefinite { iteration: usize },
    #[error("band storage of {entries} entries exceeds the limit of {limit}")]
    TooLarge { entries: usize, limit: usize },
}
