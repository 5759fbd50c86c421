use super::{l2_slice, SolveKind, SolveResult, SolverError};
use crate::energy::coercivity_lambda;
use crate::grid::{apply_operator_slice, for_each_operator_entry, GridError, ScalarField};
use crate::linalg::conjugate_gradient;
use crate::problem::ProblemData;

const CG_TOL: f64 = 1e-12;

/// Solves `(L_A - h) v = rhs` by Jacobi-preconditioned conjugate gradients.
///
/// Refuses non-coercive potentials (`lambda(h) <= 0`), for which the
/// operator is not positive definite.
pub fn solve_linear(
    h: &ScalarField,
    rhs: &ScalarField,
    data: &ProblemData,
) -> Result<SolveResult, SolverError> {
    if *h.grid() != data.grid || *rhs.grid() != data.grid {
        return Err(GridError::Mismatch.into());
    }
    let lambda = coercivity_lambda(h, data)?;
    if !(lambda > 0.0) {
        return Err(SolverError::NotCoercive { lambda });
    }
    let (v, iterations) = solve_shifted(h.values(), rhs.values(), data)?;
    let grid = data.grid;
    let n = grid.len();
    let mut lv = vec![0.0; n];
    apply_operator_slice(&data.a, &v, &mut lv);
    let r: Vec<f64> = (0..n)
        .map(|i| lv[i] - h.values()[i] * v[i] - rhs.values()[i])
        .collect();
    let vol = grid.cell_volume();
    let scale = (l2_slice(&lv, vol) + l2_slice(rhs.values(), vol)).max(1.0);
    let mut out = SolveResult::new(SolveKind::Linear);
    out.residual_norm = l2_slice(&r, vol) / scale;
    out.iterations = iterations;
    out.converged = true;
    out.min_v = Some(v.iter().cloned().fold(f64::INFINITY, f64::min));
    out.v = Some(ScalarField::from_vec(grid, v));
    Ok(out)
}

/// Unchecked CG solve of `(L_A - h) v = rhs`.
pub(crate) fn solve_shifted(
    h: &[f64],
    rhs: &[f64],
    data: &ProblemData,
) -> Result<(Vec<f64>, usize), SolverError> {
    let a = &data.a;
    let n = data.grid.len();
    let diagonal: Vec<f64> = (0..n)
        .map(|row| {
            let mut d = -h[row];
            for_each_operator_entry(a, row, |col, c| {
                if col == row {
                    d += c;
                }
            });
            d
        })
        .collect();
    let apply = |x: &[f64], y: &mut [f64]| {
        apply_operator_slice(a, x, y);
        for i in 0..n {
            y[i] -= h[i] * x[i];
        }
    };
    let mut v = vec![0.0; n];
    let outcome = conjugate_gradient(apply, &diagonal, rhs, &mut v, CG_TOL, 20 * n + 100)?;
    Ok((v, outcome.iterations))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;

    #[test]
    fn quadratic_is_reproduced() {
        let grid = Grid::unit(1, 3).unwrap();
        let z = ScalarField::zeros(grid);
        let data = ProblemData::model(z.clone(), z.clone(), 1.0, 2.0).unwrap();
        let res = solve_linear(&z, &ScalarField::constant(grid, 32.0), &data).unwrap();
        for (x, y) in res.v().values().iter().zip([3.0, 4.0, 3.0]) {
            assert!((x - y).abs() < 1e-12);
        }
        let zero = solve_linear(&z, &z, &data).unwrap();
        assert!(zero.v().values().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn non_coercive_potential_is_refused() {
        let grid = Grid::unit(1, 3).unwrap();
        let z = ScalarField::zeros(grid);
        let data = ProblemData::model(z.clone(), z.clone(), 1.0, 2.0).unwrap();
        let err = solve_linear(&ScalarField::constant(grid, 20.0), &z, &data).unwrap_err();
        assert!(matches!(err, SolverError::NotCoercive { .. }));
    }
}
