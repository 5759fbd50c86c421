//! Manufactured solutions for the `u`-equation.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::uequation::{newton_u, UOperator};
use super::SolverError;
use crate::grid::{Grid, MatrixField, ScalarField};

/// Smooth exact solutions vanishing on the box boundary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ManufacturedSolution {
    Zero,
    /// `amplitude * prod_d sin(pi x_d / L_d)`.
    SineProduct {
        amplitude: f64,
    },
}

impl ManufacturedSolution {
    /// Value, gradient and `Laplacian-like` sum `sum_d a_d d_dd u` at `x`.
    fn eval(&self, x: &[f64], lengths: &[f64], a: &[f64]) -> (f64, [f64; 3], f64) {
        match *self {
            Self::Zero => (0.0, [0.0; 3], 0.0),
            Self::SineProduct { amplitude } => {
                let dim = x.len();
                let k: Vec<f64> = lengths.iter().map(|l| PI / l).collect();
                let s: Vec<f64> = (0..dim).map(|d| (k[d] * x[d]).sin()).collect();
                let c: Vec<f64> = (0..dim).map(|d| (k[d] * x[d]).cos()).collect();
                let value = amplitude * s.iter().product::<f64>();
                let mut grad = [0.0; 3];
                for d in 0..dim {
                    let others: f64 = (0..dim).filter(|&e| e != d).map(|e| s[e]).product();
                    grad[d] = amplitude * k[d] * c[d] * others;
                }
                let second: f64 = (0..dim).map(|d| -a[d] * k[d] * k[d] * value).sum();
                (value, grad, second)
            }
        }
    }
}

/// Error of one refinement level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MmsLevel {
    pub n: usize,
    pub h: f64,
    /// `max_i |u_i - u*(x_i)|`.
    pub error: f64,
    /// `log2(e_{h} / e_{h/2})` against the previous level.
    pub order: Option<f64>,
    pub newton_iterations: usize,
}

/// Solves the `u`-equation with constant diagonal `A = diag(a_diag)`,
/// coupling `mu` and zero-order coefficient `c0(x)` for the source
/// `f = -div(A grad u*) - c0 u* - mu <A grad u*, grad u*>` on each grid, and
/// reports max-norm errors and observed orders.
pub fn mms_convergence(
    u_star: &ManufacturedSolution,
    mu: f64,
    a_diag: &[f64],
    c0: impl Fn(&[f64]) -> f64,
    levels: &[Grid],
) -> Result<Vec<MmsLevel>, SolverError> {
    if !(mu > 0.0) {
        return Err(SolverError::Mms(format!("a positive coupling (got {mu})")));
    }
    let mut out: Vec<MmsLevel> = Vec::with_capacity(levels.len());
    for grid in levels {
        let dim = grid.dim();
        if a_diag.len() != dim {
            return Err(SolverError::Mms(format!(
                "{dim} diagonal entries of A (got {})",
                a_diag.len()
            )));
        }
        let lengths = grid.lengths();
        let mut matrix = vec![0.0; dim * dim];
        for d in 0..dim {
            matrix[d * dim + d] = a_diag[d];
        }
        let a = MatrixField::constant(*grid, &matrix, None)?;
        let exact = ScalarField::from_fn(*grid, |x| u_star.eval(x, &lengths, a_diag).0);
        let c0f = ScalarField::from_fn(*grid, &c0);
        let f = ScalarField::from_fn(*grid, |x| {
            let (u, g, second) = u_star.eval(x, &lengths, a_diag);
            let q: f64 = (0..dim).map(|d| a_diag[d] * g[d] * g[d]).sum();
            -second - c0(x) * u - mu * q
        });
        let op = UOperator {
            a: &a,
            c0: c0f.values(),
            f: f.values(),
            mu: vec![mu; grid.len()],
            clip: None,
        };
        let sol = newton_u(&op, vec![0.0; grid.len()], 1e-13, 50, None)?;
        if sol.stalled && sol.residual > 1e-10 {
            return Err(SolverError::LineSearch {
                iteration: sol.iterations,
                residual: sol.residual,
            });
        }
        let error = sol
            .u
            .iter()
            .zip(exact.values())
            .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
        let order = out.last().map(|prev| (prev.error / error).log2());
        out.push(MmsLevel {
            n: grid.count(0),
            h: grid.spacing(0),
            error,
            order,
            newton_iterations: sol.iterations,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_solution_has_zero_error() {
        let levels = [Grid::unit(1, 7).unwrap()];
        let r =
            mms_convergence(&ManufacturedSolution::Zero, 1.0, &[1.0], |_| 0.3, &levels).unwrap();
        assert_eq!(r[0].error, 0.0);
    }

    #[test]
    fn sine_in_one_dimension_is_second_order() {
        let levels: Vec<Grid> = [15, 31, 63]
            .iter()
            .map(|&n| Grid::unit(1, n).unwrap())
            .collect();
        let r = mms_convergence(
            &ManufacturedSolution::SineProduct { amplitude: 1.0 },
            1.0,
            &[1.0],
            |_| 0.0,
            &levels,
        )
        .unwrap();
        for lvl in &r[1..] {
            assert!(lvl.order.unwrap() >= 1.9, "{r:?}");
        }
    }
}
