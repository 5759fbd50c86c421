//! Sub/super-solution bracket and the bracketed Newton solver for
//! `-div(A grad u) = H(x, u, grad u)`.

use serde::{Deserialize, Serialize};

use super::descent::{default_rho, minimize_local};
use super::uequation::{newton_u, UOperator};
use super::{SolveKind, SolveResult, SolverError, SolverOptions, Stage};
use crate::grid::ScalarField;
use crate::nonlinearity::{sign_normalize, v_to_u, GradientCoupling};
use crate::problem::ProblemData;

/// Tolerance of the nodal sub/super-solution inequalities, relative to
/// `max(1, |L_A u|_inf + |f|_inf)`.
const BRACKET_TOL: f64 = 1e-8;

/// Built-in right-hand sides `H(x, u, grad u)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum HChoice {
    /// `c0 u + mu(x) <A grad u, grad u> + f`.
    #[default]
    Model,
    /// `c0 u + mu(x) min(<A grad u, grad u>, q_max) + f`.
    Clipped { q_max: f64 },
}

impl HChoice {
    fn clip(self) -> Option<f64> {
        match self {
            Self::Model => None,
            Self::Clipped { q_max } => Some(q_max),
        }
    }
}

/// `u_lower = -u_upper <= u <= u_upper` for every solution.
#[derive(Debug, Clone, PartialEq)]
pub struct Bracket {
    pub lower: ScalarField,
    pub upper: ScalarField,
    /// Gradient slope of the extremal equation.
    pub slope: f64,
    pub extremal: SolveResult,
}

fn scale_of(op: &UOperator, u: &[f64]) -> f64 {
    let mut r = vec![0.0; u.len()];
    let mut lu = vec![0.0; u.len()];
    op.residual_into(u, &mut r, &mut lu);
    let lmax = lu.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let fmax = op.f.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    (lmax + fmax).max(1.0)
}

fn check_inequality(
    op: &UOperator,
    u: &[f64],
    sign: f64,
    which: &'static str,
) -> Result<(), SolverError> {
    let n = u.len();
    let mut r = vec![0.0; n];
    let mut lu = vec![0.0; n];
    op.residual_into(u, &mut r, &mut lu);
    let scale = scale_of(op, u);
    for (node, x) in r.iter().enumerate() {
        if sign * x / scale < -BRACKET_TOL {
            return Err(SolverError::BracketViolation {
                which,
                node,
                residual: x / scale,
            });
        }
    }
    Ok(())
}

/// Builds `u_upper` from the extremal equation
/// `-div(A grad u) = s <A grad u, grad u> + c0 u + |f|` with slope
/// `s = mu_max / min(lambda, 1)`, solved on its minimizer branch, and sets
/// `u_lower = -u_upper`. Both inequalities are verified against `choice`.
pub fn build_bracket(
    data: &ProblemData,
    choice: HChoice,
    opts: &SolverOptions,
) -> Result<Bracket, SolverError> {
    let (data, _) = sign_normalize(data)?;
    let grid = data.grid;
    let slope = data.coupling.upper() / data.a.lower().min(1.0);
    let extremal = ProblemData::new(
        data.a.clone(),
        data.c0.clone(),
        data.f.map(f64::abs),
        GradientCoupling::Constant(slope),
        data.p,
    )?;
    let rho = match opts.rho {
        Some(r) => r,
        None => default_rho(&extremal)?,
    };
    let mut branch = minimize_local(&extremal, rho, opts)?;
    let u0 = v_to_u(branch.v(), &extremal.coupling)?;
    let ext_op = UOperator::model(&extremal);
    let polished = newton_u(
        &ext_op,
        u0.into_values(),
        opts.polish_tol,
        opts.newton_max_iter,
        None,
    )?;
    if polished.residual > opts.tol {
        return Err(SolverError::MaxIterations {
            iterations: polished.iterations,
            residual: polished.residual,
        });
    }
    let upper = polished.u;
    if let Some((node, &x)) = upper.iter().enumerate().find(|(_, x)| **x < 0.0) {
        return Err(SolverError::BracketViolation {
            which: "nonnegativity of the supersolution",
            node,
            residual: x,
        });
    }
    let lower: Vec<f64> = upper.iter().map(|x| -x).collect();

    let mut op = UOperator::model(&data);
    op.clip = choice.clip();
    check_inequality(&op, &upper, 1.0, "supersolution")?;
    check_inequality(&op, &lower, -1.0, "subsolution")?;

    branch.u = Some(ScalarField::from_vec(grid, upper.clone()));
    Ok(Bracket {
        lower: ScalarField::from_vec(grid, lower),
        upper: ScalarField::from_vec(grid, upper),
        slope,
        extremal: branch,
    })
}

/// Damped Newton on `-div(A grad u) = H(x, u, grad u)` from `u = 0`, with
/// every iterate clamped into the bracket from [`build_bracket`].
pub fn solve_general(
    data: &ProblemData,
    choice: HChoice,
    opts: &SolverOptions,
) -> Result<(SolveResult, Bracket), SolverError> {
    let (normalized, flip) =
        sign_normalize(data).map_err(|e| SolverError::from(e).at(Stage::Normalize))?;
    let bracket = build_bracket(&normalized, choice, opts).map_err(|e| e.at(Stage::Bracket))?;
    let mut op = UOperator::model(&normalized);
    op.clip = choice.clip();
    let lo = bracket.lower.values();
    let hi = bracket.upper.values();
    let out = newton_u(
        &op,
        vec![0.0; normalized.grid.len()],
        opts.polish_tol,
        opts.newton_max_iter,
        Some((lo, hi)),
    )
    .map_err(|e| e.at(Stage::General))?;
    let inside = out
        .u
        .iter()
        .zip(lo.iter().zip(hi))
        .all(|(x, (l, h))| *x >= l - 1e-10 && *x <= h + 1e-10);
    let mut result = SolveResult::new(SolveKind::Bracketed);
    result.iterations = out.iterations;
    result.residual_norm = out.residual;
    result.converged = out.residual <= opts.tol;
    result.bracket_ok = Some(inside);
    result.log = out
        .history
        .iter()
        .enumerate()
        .map(|(k, &r)| super::IterationRecord {
            iteration: k,
            residual: r,
            energy: f64::NAN,
            cerami: f64::NAN,
        })
        .collect();
    if !result.converged {
        return Err(SolverError::MaxIterations {
            iterations: out.iterations,
            residual: out.residual,
        }
        .at(Stage::General));
    }
    let u = ScalarField::from_vec(normalized.grid, out.u);
    result.u = Some(flip.restore(u));
    let bracket = Bracket {
        lower: flip.restore(bracket.lower),
        upper: flip.restore(bracket.upper),
        ..bracket
    };
    // After a flip the bracket is mirrored, so lower and upper trade places.
    let bracket = match flip {
        crate::nonlinearity::SignFlip::Identity => bracket,
        crate::nonlinearity::SignFlip::Flipped => Bracket {
            lower: bracket.upper,
            upper: bracket.lower,
            ..bracket
        },
    };
    Ok((result, bracket))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;

    #[test]
    fn zero_data_gives_zero_bracket_and_solution() {
        let grid = Grid::unit(2, 6).unwrap();
        let z = ScalarField::zeros(grid);
        let data = ProblemData::model(z.clone(), z, 1.0, 2.0).unwrap();
        let (res, br) = solve_general(&data, HChoice::Model, &SolverOptions::default()).unwrap();
        assert!(br.upper.values().iter().all(|&x| x == 0.0));
        assert!(res.u().values().iter().all(|&x| x == 0.0));
    }
}
