//! Coercivity constant and discrete Sobolev ratio.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::EnergyError;
use crate::assembly::OperatorFactor;
use crate::grid::{apply_operator_slice, GridError, MatrixField, ScalarField};
use crate::problem::{ProblemData, SOBOLEV_EXPONENT};

/// Iteration cap of the Lanczos iteration.
pub const POWER_MAX_ITER: usize = 10_000;
/// Number of random starts used by [`sobolev_ratio`].
pub const SOBOLEV_STARTS: u64 = 5;
const SOBOLEV_MAX_ITER: usize = 300;
const POWER_SEED: u64 = 0x5eed_c0e5;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `lambda(h) = inf_{v != 0} (|v|_A^2 - integral h v^2) / |v|_A^2`.
///
/// Computed as `1 - sigma_max`, where `sigma_max` is the largest eigenvalue
/// of `L_A^{-1} diag(h)`, self-adjoint in the `L_A` inner product. A Lanczos
/// iteration in that inner product with full reorthogonalization stops once
/// the residual bound of the top Ritz pair drops below `1e-10 max(1, |sigma|)`,
/// which also bounds the eigenvalue error.
pub fn coercivity_lambda(h: &ScalarField, data: &ProblemData) -> Result<f64, EnergyError> {
    if *h.grid() != data.grid {
        return Err(GridError::Mismatch.into());
    }
    coercivity_lambda_with(h.values(), &data.a, None)
}

/// Largest eigenvalue of a symmetric tridiagonal matrix and the last
/// component of its unit eigenvector.
fn top_ritz(alpha: &[f64], beta: &[f64]) -> (f64, f64) {
    let k = alpha.len();
    let t = DMatrix::from_fn(k, k, |i, j| {
        if i == j {
            alpha[i]
        } else if i + 1 == j {
            beta[i]
        } else if j + 1 == i {
            beta[j]
        } else {
            0.0
        }
    });
    let eig = SymmetricEigen::new(t);
    let (top, _) =
        eig.eigenvalues
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, &v)| {
                if v > bv {
                    (i, v)
                } else {
                    (bi, bv)
                }
            });
    (eig.eigenvalues[top], eig.eigenvectors[(k - 1, top)])
}

pub(crate) fn coercivity_lambda_with(
    h: &[f64],
    a: &MatrixField,
    factor: Option<&OperatorFactor>,
) -> Result<f64, EnergyError> {
    if h.iter().all(|&x| x == 0.0) {
        return Ok(1.0);
    }
    let owned;
    let factor = match factor {
        Some(f) => f,
        None => {
            owned = OperatorFactor::new(a)?;
            &owned
        }
    };
    let n = a.grid().len();
    let max_iter = n.min(POWER_MAX_ITER);

    let mut rng = ChaCha8Rng::seed_from_u64(POWER_SEED);
    let mut q: Vec<f64> = (0..n).map(|_| 1.0 + 0.1 * rng.random::<f64>()).collect();
    let mut lq = vec![0.0; n];
    apply_operator_slice(a, &q, &mut lq);
    let norm = dot(&q, &lq).sqrt();
    q.iter_mut().for_each(|v| *v /= norm);
    lq.iter_mut().for_each(|v| *v /= norm);

    // Basis vectors and their images under L_A.
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut images: Vec<Vec<f64>> = Vec::new();
    let mut alphas = Vec::new();
    let mut betas = Vec::new();
    let mut bound = f64::INFINITY;
    let mut w = vec![0.0; n];
    let mut lw = vec![0.0; n];
    for k in 0..max_iter {
        // w = L^{-1} H q, so that <w, L q> = q^T H q.
        for i in 0..n {
            lw[i] = h[i] * q[i];
        }
        w.copy_from_slice(&lw);
        factor.solve_in_place(&mut w);
        alphas.push(dot(&q, &lw));
        basis.push(std::mem::take(&mut q));
        images.push(std::mem::take(&mut lq));
        // Two passes of Gram-Schmidt in the L_A inner product.
        for _ in 0..2 {
            for (b, lb) in basis.iter().zip(&images) {
                let c = dot(&w, lb);
                for i in 0..n {
                    w[i] -= c * b[i];
                    lw[i] -= c * lb[i];
                }
            }
        }
        apply_operator_slice(a, &w, &mut lw);
        let beta = dot(&w, &lw).max(0.0).sqrt();
        let (theta, last) = top_ritz(&alphas, &betas);
        bound = beta * last.abs();
        if bound <= 1e-10 * theta.abs().max(1.0) || k + 1 == n {
            return Ok(1.0 - theta);
        }
        betas.push(beta);
        q = w.iter().map(|x| x / beta).collect();
        lq = lw.iter().map(|x| x / beta).collect();
    }
    Err(EnergyError::NoConvergence {
        iterations: max_iter,
        residual: bound,
    })
}

/// Best constant found for `|v|_6 <= C |grad v|_2` on the grid.
///
/// Each of [`SOBOLEV_STARTS`] seeded random starts is driven by the
/// normalized ascent `v <- L^{-1}(|v|^4 v) / |.|`, which never decreases the
/// quotient. The result is a lower bound on the discrete constant.
pub fn sobolev_ratio(data: &ProblemData) -> Result<f64, EnergyError> {
    let grid = data.grid;
    let identity = MatrixField::identity(grid);
    let factor = OperatorFactor::new(&identity)?;
    let n = grid.len();
    let vol = grid.cell_volume();
    let q = SOBOLEV_EXPONENT;
    let quotient = |v: &[f64], lv: &mut [f64]| -> f64 {
        apply_operator_slice(&identity, v, lv);
        let grad = (dot(v, lv) * vol).sqrt();
        let lq = (v.iter().map(|x| x.abs().powf(q)).sum::<f64>() * vol).powf(1.0 / q);
        lq / grad
    };
    let mut best = 0.0f64;
    let mut lv = vec![0.0; n];
    for start in 0..SOBOLEV_STARTS {
        let mut rng = ChaCha8Rng::seed_from_u64(start + 1);
        let mut v: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let mut current = quotient(&v, &mut lv);
        best = best.max(current);
        for _ in 0..SOBOLEV_MAX_ITER {
            let mut w: Vec<f64> = v.iter().map(|x| x.abs().powf(q - 2.0) * x).collect();
            factor.solve_in_place(&mut w);
            let scale = w.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            if !(scale > 0.0 && scale.is_finite()) {
                break;
            }
            w.iter_mut().for_each(|x| *x /= scale);
            let next = quotient(&w, &mut lv);
            v = w;
            best = best.max(next);
            if (next - current).abs() <= 1e-12 * next {
                break;
            }
            current = next;
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;

    fn data_1d(n: usize) -> ProblemData {
        let grid = Grid::unit(1, n).unwrap();
        ProblemData::model(ScalarField::zeros(grid), ScalarField::zeros(grid), 1.0, 2.0).unwrap()
    }

    #[test]
    fn zero_potential_gives_exactly_one() {
        let d = data_1d(3);
        assert_eq!(
            coercivity_lambda(&ScalarField::zeros(d.grid), &d).unwrap(),
            1.0
        );
    }

    #[test]
    fn constant_potential_hand_values() {
        let d = data_1d(3);
        let lam1 = 16.0 * (2.0 - 2f64.sqrt());
        let one = coercivity_lambda(&ScalarField::constant(d.grid, 1.0), &d).unwrap();
        assert!((one - (1.0 - 1.0 / lam1)).abs() < 1e-10);
        assert!((one - 0.893_305_8).abs() < 1e-7);
        let twenty = coercivity_lambda(&ScalarField::constant(d.grid, 20.0), &d).unwrap();
        assert!((twenty - (1.0 - 20.0 / lam1)).abs() < 1e-10);
    }

    #[test]
    fn negative_potential_increases_lambda() {
        let d = data_1d(7);
        let lam = coercivity_lambda(&ScalarField::constant(d.grid, -5.0), &d).unwrap();
        // the infimum is attained at the highest Dirichlet mode
        let top = 256.0 * (7.0 * std::f64::consts::PI / 16.0).sin().powi(2);
        assert!((lam - (1.0 + 5.0 / top)).abs() < 1e-9);
    }

    #[test]
    fn sobolev_ratio_beats_single_node_candidate() {
        let d = data_1d(3);
        let c = sobolev_ratio(&d).unwrap();
        let single = 0.25f64.powf(1.0 / 6.0) / 8f64.sqrt();
        assert!(c >= single - 1e-12, "{c} < {single}");
    }
}
