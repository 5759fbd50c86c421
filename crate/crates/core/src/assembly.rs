//! Band-matrix assembly of the discrete diffusion operator.

use crate::grid::{for_each_operator_entry, MatrixField};
use crate::linalg::{BandLu, BandMatrix, LinalgError};

/// Assembles `L_A - diag(potential)` in band form.
pub(crate) fn operator_matrix(
    a: &MatrixField,
    potential: Option<&[f64]>,
) -> Result<BandMatrix, LinalgError> {
    let grid = a.grid();
    let bw = grid.bandwidth(!a.is_diagonal());
    let mut m = BandMatrix::zeros(grid.len(), bw, bw)?;
    for row in 0..grid.len() {
        for_each_operator_entry(a, row, |col, c| m.add(row, col, c));
    }
    if let Some(p) = potential {
        let neg: Vec<f64> = p.iter().map(|x| -x).collect();
        m.add_to_diagonal(&neg);
    }
    Ok(m)
}

/// Factorization of `L_A`, used for Sobolev (H^1) gradients and inverse
/// iterations.
#[derive(Debug, Clone)]
pub struct OperatorFactor {
    lu: BandLu,
}

impl OperatorFactor {
    pub fn new(a: &MatrixField) -> Result<Self, LinalgError> {
        Ok(Self {
            lu: operator_matrix(a, None)?.factor()?,
        })
    }

    /// Solves `L_A x = b` in place.
    pub fn solve_in_place(&self, b: &mut [f64]) {
        self.lu.solve_in_place(b);
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        self.lu.solve(b)
    }
}
