//! The original equation `-div(A grad u) = c0 u + mu <A grad u, grad u> + f`
//! on the grid.
//!
//! The gradient term is discretized face by face in exponentially fitted
//! form,
//!
//! ```text
//! mu Q_i = sum over faces  a_f (e^{mu d} - 1 - mu d) / (mu h^2),   d = u_nb - u_i,
//! ```
//!
//! which is `mu |grad u|^2 + O(h^2)`. For diagonal `A` this makes the
//! discrete `u`-equation equivalent to the discrete transformed equation
//! under `v = (e^{mu u} - 1) / mu`, node by node. Off-diagonal entries of `A`
//! contribute centred products.

use super::{l2_slice, SolverError};
use crate::assembly::operator_matrix;
use crate::grid::{
    apply_operator_slice, centered_gradient_slice, gradient_sq, GridError, MatrixField, ScalarField,
};
use crate::linalg::BandLu;
use crate::problem::ProblemData;

const ARMIJO: f64 = 1e-4;
const MAX_HALVINGS: usize = 40;

/// `-div(A grad u) - c0 u - mu(x) T(Q(u)) - f`, where `T` is the identity
/// or a clip at `q_max`.
pub(crate) struct UOperator<'a> {
    pub a: &'a MatrixField,
    pub c0: &'a [f64],
    pub f: &'a [f64],
    pub mu: Vec<f64>,
    pub clip: Option<f64>,
}

impl<'a> UOperator<'a> {
    pub(crate) fn model(data: &'a ProblemData) -> Self {
        Self {
            a: &data.a,
            c0: data.c0.values(),
            f: data.f.values(),
            mu: (0..data.grid.len()).map(|i| data.coupling.at(i)).collect(),
            clip: None,
        }
    }

    /// Visits every face of node `i` as `(neighbour, a_f / h^2)`.
    #[inline]
    fn faces(&self, i: usize, mut visit: impl FnMut(Option<usize>, f64)) {
        let grid = self.a.grid();
        for d in 0..grid.dim() {
            let h = grid.spacing(d);
            let here = self.a.entry(i, d, d);
            for step in [-1isize, 1] {
                match grid.neighbor(i, d, step) {
                    Some(nb) => visit(Some(nb), 0.5 * (here + self.a.entry(nb, d, d)) / (h * h)),
                    None => visit(None, here / (h * h)),
                }
            }
        }
    }

    /// `Q_i` (without the factor `mu`).
    fn q(&self, u: &[f64], i: usize) -> f64 {
        let mu = self.mu[i];
        let mut acc = 0.0;
        self.faces(i, |nb, w| {
            let d = nb.map_or(0.0, |j| u[j]) - u[i];
            let y = mu * d;
            acc += w * (y.exp_m1() - y);
        });
        acc /= mu * mu;
        if !self.a.is_diagonal() {
            acc += self.cross(u, i);
        }
        acc
    }

    fn cross(&self, u: &[f64], i: usize) -> f64 {
        let grid = self.a.grid();
        let g = centered_gradient_slice(grid, u, i);
        let mut acc = 0.0;
        for d in 0..grid.dim() {
            for e in 0..grid.dim() {
                if d != e {
                    acc += self.a.entry(i, d, e) * g[d] * g[e];
                }
            }
        }
        acc
    }

    pub(crate) fn residual_into(&self, u: &[f64], out: &mut [f64], lu: &mut [f64]) {
        apply_operator_slice(self.a, u, lu);
        for i in 0..u.len() {
            let mut q = self.q(u, i);
            if let Some(cap) = self.clip {
                q = q.min(cap);
            }
            out[i] = lu[i] - self.mu[i] * q - self.c0[i] * u[i] - self.f[i];
        }
    }

    pub(crate) fn scaled_norm(&self, r: &[f64], lu: &[f64]) -> f64 {
        let vol = self.a.grid().cell_volume();
        l2_slice(r, vol) / (l2_slice(lu, vol) + l2_slice(self.f, vol)).max(1.0)
    }

    pub(crate) fn residual_norm(&self, u: &[f64]) -> f64 {
        let mut r = vec![0.0; u.len()];
        let mut lu = vec![0.0; u.len()];
        self.residual_into(u, &mut r, &mut lu);
        self.scaled_norm(&r, &lu)
    }

    fn jacobian(&self, u: &[f64]) -> Result<BandLu, SolverError> {
        let grid = *self.a.grid();
        let n = u.len();
        let mut m = operator_matrix(self.a, Some(self.c0))?;
        for i in 0..n {
            if let Some(cap) = self.clip {
                if self.q(u, i) > cap {
                    continue;
                }
            }
            let mu = self.mu[i];
            let mut diag = 0.0;
            self.faces(i, |nb, w| {
                let d = nb.map_or(0.0, |j| u[j]) - u[i];
                let s = w * (mu * d).exp_m1();
                diag += s;
                if let Some(j) = nb {
                    m.add(i, j, -s);
                }
            });
            m.add(i, i, diag);
            if !self.a.is_diagonal() {
                let g = centered_gradient_slice(&grid, u, i);
                for d in 0..grid.dim() {
                    // d/du of c_d is +-1/(2h) at the two neighbours along d
                    let mut w = 0.0;
                    for e in 0..grid.dim() {
                        if e != d {
                            w += 2.0 * self.a.entry(i, d, e) * g[e];
                        }
                    }
                    let w = mu * w / (2.0 * grid.spacing(d));
                    if let Some(j) = grid.neighbor(i, d, 1) {
                        m.add(i, j, -w);
                    }
                    if let Some(j) = grid.neighbor(i, d, -1) {
                        m.add(i, j, w);
                    }
                }
            }
        }
        Ok(m.factor()?)
    }
}

pub(crate) struct UNewton {
    pub u: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
    pub stalled: bool,
    pub history: Vec<f64>,
}

/// Damped Newton for the `u`-equation. With `bounds`, every trial iterate is
/// clamped into `[lower, upper]` nodewise before the Armijo test.
pub(crate) fn newton_u(
    op: &UOperator,
    mut u: Vec<f64>,
    tol: f64,
    max_iter: usize,
    bounds: Option<(&[f64], &[f64])>,
) -> Result<UNewton, SolverError> {
    let n = u.len();
    let mut r = vec![0.0; n];
    let mut lu = vec![0.0; n];
    let mut rt = vec![0.0; n];
    let mut trial = vec![0.0; n];
    op.residual_into(&u, &mut r, &mut lu);
    let mut res = op.scaled_norm(&r, &lu);
    let mut history = vec![res];
    let mut iterations = 0;
    let sq = |x: &[f64]| x.iter().map(|y| y * y).sum::<f64>();
    while res > tol {
        if iterations == max_iter {
            return Err(SolverError::MaxIterations {
                iterations,
                residual: res,
            });
        }
        let jac = op.jacobian(&u)?;
        let mut step = r.clone();
        jac.solve_in_place(&mut step);
        let r2 = sq(&r);
        let mut alpha = 1.0;
        let mut accepted = false;
        for _ in 0..MAX_HALVINGS {
            for i in 0..n {
                let mut x = u[i] - alpha * step[i];
                if let Some((lo, hi)) = bounds {
                    x = x.clamp(lo[i], hi[i]);
                }
                trial[i] = x;
            }
            op.residual_into(&trial, &mut rt, &mut lu);
            let t2 = sq(&rt);
            if t2.is_finite() && t2 <= (1.0 - 2.0 * ARMIJO * alpha) * r2 {
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        iterations += 1;
        if !accepted {
            return Ok(UNewton {
                u,
                iterations,
                residual: res,
                stalled: true,
                history,
            });
        }
        std::mem::swap(&mut u, &mut trial);
        std::mem::swap(&mut r, &mut rt);
        res = op.scaled_norm(&r, &lu);
        history.push(res);
    }
    Ok(UNewton {
        u,
        iterations,
        residual: res,
        stalled: false,
        history,
    })
}

fn check(u: &ScalarField, data: &ProblemData) -> Result<(), SolverError> {
    if *u.grid() == data.grid {
        Ok(())
    } else {
        Err(GridError::Mismatch.into())
    }
}

/// Nodal residual of the `u`-equation with the fitted gradient term.
pub fn u_residual(u: &ScalarField, data: &ProblemData) -> Result<ScalarField, SolverError> {
    check(u, data)?;
    let op = UOperator::model(data);
    let mut r = vec![0.0; u.len()];
    let mut lu = vec![0.0; u.len()];
    op.residual_into(u.values(), &mut r, &mut lu);
    Ok(ScalarField::from_vec(data.grid, r))
}

/// Scaled residual `|F(u)|_2 / max(1, |L_A u|_2 + |f|_2)` of the fitted
/// `u`-equation.
pub fn u_residual_norm(u: &ScalarField, data: &ProblemData) -> Result<f64, SolverError> {
    check(u, data)?;
    Ok(UOperator::model(data).residual_norm(u.values()))
}

/// Nodal residual with the plain centred `mu <A grad u, grad u>`; it differs
/// from [`u_residual`] by a consistent `O(h^2)` truncation term.
pub fn u_residual_centered(
    u: &ScalarField,
    data: &ProblemData,
) -> Result<ScalarField, SolverError> {
    check(u, data)?;
    let g2 = gradient_sq(&data.a, u)?;
    let mut lu = vec![0.0; u.len()];
    apply_operator_slice(&data.a, u.values(), &mut lu);
    let r = (0..u.len())
        .map(|i| {
            lu[i]
                - data.coupling.at(i) * g2.values()[i]
                - data.c0.values()[i] * u.values()[i]
                - data.f.values()[i]
        })
        .collect();
    Ok(ScalarField::from_vec(data.grid, r))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::energy_gradient;
    use crate::grid::Grid;
    use crate::nonlinearity::u_to_v;

    #[test]
    fn fitted_equation_matches_transformed_equation() {
        let grid = Grid::from_lengths(&[6, 5], &[1.0, 1.3]).unwrap();
        let c0 = ScalarField::from_fn(grid, |x| 0.4 + x[0]);
        let f = ScalarField::from_fn(grid, |x| (x[1] * 2.0).cos());
        let a = MatrixField::isotropic(&ScalarField::from_fn(grid, |x| 1.0 + 0.5 * x[0])).unwrap();
        let data = ProblemData::new(
            a,
            c0,
            f,
            crate::nonlinearity::GradientCoupling::Constant(1.7),
            2.0,
        )
        .unwrap();
        let u = ScalarField::from_fn(grid, |x| (3.0 * x[0]).sin() * x[1]);
        let v = u_to_v(&u, &data.coupling).unwrap();
        let rv = energy_gradient(&v, &data).unwrap();
        let ru = u_residual(&u, &data).unwrap();
        for i in 0..grid.len() {
            let w = (1.7 * u.values()[i]).exp();
            assert!(
                (rv.values()[i] - w * ru.values()[i]).abs() < 1e-10 * (1.0 + rv.values()[i].abs())
            );
        }
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let grid = Grid::unit(2, 4).unwrap();
        let a = MatrixField::constant(grid, &[1.2, 0.3, 0.3, 0.9], None).unwrap();
        let data = ProblemData::new(
            a,
            ScalarField::constant(grid, 0.5),
            ScalarField::constant(grid, 0.1),
            crate::nonlinearity::GradientCoupling::Constant(0.8),
            2.0,
        )
        .unwrap();
        let op = UOperator::model(&data);
        let u: Vec<f64> = (0..grid.len())
            .map(|i| ((i * 7 % 5) as f64) * 0.2)
            .collect();
        let n = u.len();
        let jac = op.jacobian(&u).unwrap();
        let mut r0 = vec![0.0; n];
        let mut rp = vec![0.0; n];
        let mut rm = vec![0.0; n];
        let mut lu = vec![0.0; n];
        op.residual_into(&u, &mut r0, &mut lu);
        let eps = 1e-6;
        for j in 0..n {
            let mut up = u.clone();
            up[j] += eps;
            let mut um = u.clone();
            um[j] -= eps;
            op.residual_into(&up, &mut rp, &mut lu);
            op.residual_into(&um, &mut rm, &mut lu);
            let col: Vec<f64> = (0..n).map(|i| (rp[i] - rm[i]) / (2.0 * eps)).collect();
            // J^{-1} col should be the unit vector e_j
            let e = jac.solve(&col);
            for (i, x) in e.iter().enumerate() {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((x - want).abs() < 1e-6, "col {j} row {i}: {x}");
            }
        }
    }
}
