use super::{IterationRecord, SolveKind, SolveResult, SolverError};
use crate::assembly::operator_matrix;
use crate::energy::Functional;
use crate::grid::{GridError, ScalarField};
use crate::linalg::{BandLu, LinalgError};
use crate::nonlinearity::g_prime_raw;
use crate::problem::ProblemData;

const ARMIJO: f64 = 1e-4;
const MAX_HALVINGS: usize = 40;
const SINGULAR_SHIFT: f64 = 1e-12;

pub(crate) struct NewtonOutcome {
    pub v: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
    pub stalled: bool,
    pub log: Vec<IterationRecord>,
}

/// Factors `L_A - diag(c0 + mu f) - diag(c0 g'(v))`; a singular matrix is
/// retried once with a tiny diagonal shift.
fn factor_jacobian(fun: &Functional, v: &[f64]) -> Result<BandLu, LinalgError> {
    let d = fun.data;
    let c0 = d.c0.values();
    let diag: Vec<f64> = (0..v.len())
        .map(|i| {
            let mut s = fun.potential()[i];
            if c0[i] != 0.0 {
                s += c0[i] * g_prime_raw(v[i], d.coupling.at(i));
            }
            s
        })
        .collect();
    match operator_matrix(&d.a, Some(&diag))?.factor() {
        Err(LinalgError::Singular { column }) => {
            log::warn!("singular Newton Jacobian (column {column}); shifting by {SINGULAR_SHIFT}");
            let shifted: Vec<f64> = diag.iter().map(|x| x - SINGULAR_SHIFT).collect();
            operator_matrix(&d.a, Some(&shifted))?.factor()
        }
        other => other,
    }
}

fn sq(r: &[f64]) -> f64 {
    r.iter().map(|x| x * x).sum()
}

/// Damped Newton on the nodal residual of the transformed equation, with an
/// Armijo rule on `|r|^2 / 2`. Stops at `tol` or when no damped step makes
/// progress (`stalled`).
pub(crate) fn newton_core(
    fun: &Functional,
    mut v: Vec<f64>,
    tol: f64,
    max_iter: usize,
) -> Result<NewtonOutcome, SolverError> {
    let n = v.len();
    let mut r = vec![0.0; n];
    let mut lv = vec![0.0; n];
    let mut trial = vec![0.0; n];
    let mut rt = vec![0.0; n];
    fun.gradient_into(&v, &mut r, &mut lv);
    let mut res = fun.scaled_norm(&r, &lv);
    let mut log = Vec::new();
    let record = |k: usize, v: &[f64], res: f64| IterationRecord {
        iteration: k,
        residual: res,
        energy: fun.value(v),
        cerami: (1.0 + fun.h1_norm(v)) * res,
    };
    log.push(record(0, &v, res));
    let mut iterations = 0;
    while res > tol {
        if iterations == max_iter {
            return Err(SolverError::MaxIterations {
                iterations,
                residual: res,
            });
        }
        if !res.is_finite() {
            return Err(crate::energy::EnergyError::NonFinite { what: "residual" }.into());
        }
        let lu = factor_jacobian(fun, &v)?;
        let mut step = r.clone();
        lu.solve_in_place(&mut step);
        let r2 = sq(&r);
        let mut alpha = 1.0;
        let mut accepted = false;
        for _ in 0..MAX_HALVINGS {
            for i in 0..n {
                trial[i] = v[i] - alpha * step[i];
            }
            fun.gradient_into(&trial, &mut rt, &mut lv);
            let t2 = sq(&rt);
            if t2.is_finite() && t2 <= (1.0 - 2.0 * ARMIJO * alpha) * r2 {
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        iterations += 1;
        if !accepted {
            return Ok(NewtonOutcome {
                v,
                iterations,
                residual: res,
                stalled: true,
                log,
            });
        }
        std::mem::swap(&mut v, &mut trial);
        std::mem::swap(&mut r, &mut rt);
        res = fun.scaled_norm(&r, &lv);
        log.push(record(iterations, &v, res));
    }
    Ok(NewtonOutcome {
        v,
        iterations,
        residual: res,
        stalled: false,
        log,
    })
}

/// Newton's method for `-div(A grad v) - (c0 + mu f) v = c0 g(v) + f`
/// started at `v_init`, run until the scaled residual is at most `tol`.
pub fn newton_transformed(
    data: &ProblemData,
    v_init: &ScalarField,
    tol: f64,
) -> Result<SolveResult, SolverError> {
    if *v_init.grid() != data.grid {
        return Err(GridError::Mismatch.into());
    }
    let fun = Functional::new(data)?;
    let out = newton_core(&fun, v_init.values().to_vec(), tol, 100)?;
    if out.stalled {
        return Err(SolverError::LineSearch {
            iteration: out.iterations,
            residual: out.residual,
        });
    }
    Ok(result_from(&fun, SolveKind::Newton, out))
}

pub(crate) fn result_from(fun: &Functional, kind: SolveKind, out: NewtonOutcome) -> SolveResult {
    let mut res = SolveResult::new(kind);
    res.iterations = out.iterations;
    res.residual_norm = out.residual;
    res.energy = Some(fun.value(&out.v));
    res.min_v = Some(out.v.iter().cloned().fold(f64::INFINITY, f64::min));
    res.converged = !out.stalled;
    res.log = out.log;
    res.v = Some(ScalarField::from_vec(fun.data.grid, out.v));
    res
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;

    #[test]
    fn affine_residual_takes_one_step() {
        let grid = Grid::unit(2, 6).unwrap();
        let f = ScalarField::from_fn(grid, |x| 1.0 + x[0]);
        let data = ProblemData::model(ScalarField::zeros(grid), f, 0.7, 2.0).unwrap();
        let res = newton_transformed(&data, &ScalarField::zeros(grid), 1e-12).unwrap();
        assert_eq!(res.iterations, 1);
        assert!(res.residual_norm <= 1e-12);
        let again = newton_transformed(&data, res.v(), 1e-12).unwrap();
        assert_eq!(again.iterations, 0);
        assert_eq!(again.v(), res.v());
    }
}
