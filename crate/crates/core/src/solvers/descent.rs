use super::linear::solve_shifted;
use super::newton::{newton_core, result_from};
use super::{IterationRecord, SolveKind, SolveResult, SolverError, SolverOptions};
use crate::assembly::{operator_matrix, OperatorFactor};
use crate::energy::{probe_bump, EnergyError, Functional};
use crate::grid::dot_slice;
use crate::problem::ProblemData;

const ARMIJO: f64 = 1e-4;
const MAX_HALVINGS: usize = 60;
/// Descent hands over to Newton below this scaled residual.
const HANDOVER: f64 = 1e-6;

/// Default ball radius: four times the energy norm of the solution of the
/// problem with `c0 = 0`, `(L_A - mu f) v = f`. Falls back to the norm of
/// the probe bump when that solution vanishes (`f = 0`).
pub fn default_rho(data: &ProblemData) -> Result<f64, SolverError> {
    let fun = Functional::new(data)?;
    let mu_f: Vec<f64> = (0..data.grid.len())
        .map(|i| data.coupling.at(i) * data.f.values()[i])
        .collect();
    let v = match solve_shifted(&mu_f, data.f.values(), data) {
        Ok((v, _)) => v,
        // (L_A - mu f) need not be definite; fall back to a direct solve.
        Err(_) => {
            let lu = operator_matrix(&data.a, Some(&mu_f))?.factor()?;
            lu.solve(data.f.values())
        }
    };
    let norm = fun.h1_norm(&v);
    let rho = if norm > 0.0 {
        4.0 * norm
    } else {
        fun.h1_norm(probe_bump(data).values())
    };
    if rho.is_finite() && rho > 0.0 {
        Ok(rho)
    } else {
        Err(EnergyError::InvalidRadius(rho).into())
    }
}

fn project(v: &mut [f64], fun: &Functional, rho: f64) -> bool {
    let norm = fun.h1_norm(v);
    if norm > rho {
        let s = rho / norm;
        v.iter_mut().for_each(|x| *x *= s);
        true
    } else {
        false
    }
}

/// Local minimizer of `I` in the ball `|v| <= rho` (energy norm).
///
/// Projected Sobolev-gradient descent from `v = 0` with Armijo
/// backtracking, followed by a Newton polish once the residual is small.
pub fn minimize_local(
    data: &ProblemData,
    rho: f64,
    opts: &SolverOptions,
) -> Result<SolveResult, SolverError> {
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(EnergyError::InvalidRadius(rho).into());
    }
    let fun = Functional::new(data)?;
    let factor = OperatorFactor::new(&data.a)?;
    let n = data.grid.len();
    let vol = fun.vol();
    let mut v = vec![0.0; n];
    let mut r = vec![0.0; n];
    let mut lv = vec![0.0; n];
    let mut trial = vec![0.0; n];
    let mut energy = 0.0;
    let mut log = Vec::new();
    let mut alpha = 1.0f64;
    let mut iterations = 0;
    let handover = HANDOVER.max(opts.tol);
    let mut projected = false;
    loop {
        fun.gradient_into(&v, &mut r, &mut lv);
        let res = fun.scaled_norm(&r, &lv);
        log.push(IterationRecord {
            iteration: iterations,
            residual: res,
            energy,
            cerami: (1.0 + fun.h1_norm(&v)) * res,
        });
        log::trace!(
            "descent {iterations}: residual {res:.3e} energy {energy:.9e} alpha {alpha:.3e}"
        );
        if res <= handover {
            break;
        }
        if iterations == opts.max_iter {
            return Err(SolverError::MaxIterations {
                iterations,
                residual: res,
            });
        }
        let d = factor.solve(&r);
        let slope = dot_slice(&r, &d) * vol;
        // The preconditioned Hessian is close to the identity near 0, so
        // steps beyond 1 only oscillate.
        alpha = (2.0 * alpha).min(1.0);
        let mut accepted = false;
        for _ in 0..MAX_HALVINGS {
            for i in 0..n {
                trial[i] = v[i] - alpha * d[i];
            }
            let hit = project(&mut trial, &fun, rho);
            let e = fun.value(&trial);
            if e.is_finite() && e <= energy - ARMIJO * alpha * slope {
                accepted = true;
                projected = hit;
                energy = e;
                break;
            }
            alpha *= 0.5;
        }
        iterations += 1;
        if !accepted {
            // Energy differences are below round-off; let Newton finish.
            break;
        }
        std::mem::swap(&mut v, &mut trial);
    }
    if projected && fun.h1_norm(&v) >= rho * (1.0 - 1e-12) {
        return Err(SolverError::ProjectionActive { rho });
    }

    let polished = newton_core(&fun, v.clone(), opts.polish_tol, opts.newton_max_iter)?;
    let descent_res = fun.residual_norm(&v);
    let polish_ok = polished.residual <= descent_res
        && fun.h1_norm(&polished.v) <= rho
        && fun.value(&polished.v) <= energy + 1e-9 * (1.0 + energy.abs());
    let mut result = if polish_ok {
        let mut out = result_from(&fun, SolveKind::LocalMin, polished);
        out.iterations += iterations;
        out
    } else {
        let mut out = result_from(
            &fun,
            SolveKind::LocalMin,
            super::newton::NewtonOutcome {
                residual: descent_res,
                v,
                iterations,
                stalled: false,
                log: Vec::new(),
            },
        );
        out.iterations = iterations;
        out
    };
    let mut full_log = log;
    let offset = iterations;
    full_log.extend(result.log.iter().skip(1).map(|rec| IterationRecord {
        iteration: rec.iteration + offset,
        ..*rec
    }));
    result.log = full_log;
    result.converged = result.residual_norm <= opts.tol;
    if !result.converged {
        return Err(SolverError::MaxIterations {
            iterations: result.iterations,
            residual: result.residual_norm,
        });
    }
    let e = result.energy.unwrap_or(f64::NAN);
    let f_nonzero = data.f.values().iter().any(|&x| x != 0.0);
    if e > 0.0 || (f_nonzero && !(e < 0.0)) {
        return Err(SolverError::Postcondition(format!(
            "local minimum has energy {e:.6e}"
        )));
    }
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Grid, ScalarField};

    #[test]
    fn zero_source_gives_zero() {
        let grid = Grid::unit(2, 7).unwrap();
        let c0 = ScalarField::constant(grid, 0.3);
        let data = ProblemData::model(c0, ScalarField::zeros(grid), 1.0, 2.0).unwrap();
        let rho = default_rho(&data).unwrap();
        let res = minimize_local(&data, rho, &SolverOptions::default()).unwrap();
        assert!(res.v().values().iter().all(|&x| x == 0.0));
        assert_eq!(res.energy, Some(0.0));
    }
}
