use serde::Serialize;

use super::descent::{default_rho, minimize_local};
use super::mountain::{mountain_pass, PathState, DISTINCT};
use super::{max_abs_diff, SolveResult, SolverError, SolverOptions, Stage};
use crate::energy::{
    check_hypotheses, find_v0, probe_bump, ray_scan, sphere_energy_min, HypothesisReport, ProbeBump,
};
use crate::nonlinearity::{sign_normalize, v_to_u, SignFlip};
use crate::problem::{ProblemData, ProblemError};

/// Random directions sampled on the sphere `|v| = rho`.
const SPHERE_SAMPLES: usize = 16;
/// Points of the ray scan written for plotting.
const RAY_POINTS: usize = 101;

/// The minimizer and the mountain-pass solution, with the diagnostics
/// gathered on the way.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BothSolutions {
    pub flip: SignFlip,
    pub report: HypothesisReport,
    pub rho: f64,
    /// Smallest sampled energy on the sphere of radius `rho`.
    pub sphere_min: f64,
    pub v0: ProbeBump,
    pub min: SolveResult,
    pub mp: SolveResult,
    /// `|u1 - u2|_inf / max(1, |u1|_inf)`.
    pub separation: f64,
    pub sup_u_min: f64,
    pub sup_u_mp: f64,
    /// `(t, I(t phi))` from `t = 0` to the far point.
    #[serde(skip)]
    pub ray: Vec<(f64, f64)>,
    #[serde(skip)]
    pub path: PathState,
    /// Path energies before each mountain-pass sweep.
    #[serde(skip)]
    pub profiles: Vec<Vec<f64>>,
}

/// Checks `v > -1/(2 mu)` nodewise and, if it holds, attaches `u`.
fn certify(
    result: &mut SolveResult,
    data: &ProblemData,
    flip: SignFlip,
) -> Result<(), SolverError> {
    let v = result.v().clone();
    let mut worst: Option<(f64, f64)> = None;
    for (i, &x) in v.values().iter().enumerate() {
        let bound = -0.5 / data.coupling.at(i);
        if !(x > bound) && worst.is_none() {
            worst = Some((x, bound));
        }
    }
    result.lower_bound_ok = Some(worst.is_none());
    if let Some((min_v, bound)) = worst {
        return Err(SolverError::Certificate { min_v, bound });
    }
    let u = v_to_u(&v, &data.coupling).map_err(|e| SolverError::from(e).at(Stage::Transform))?;
    result.u = Some(flip.restore(u));
    Ok(())
}

/// The minimizer branch alone.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MinSolution {
    pub flip: SignFlip,
    pub report: HypothesisReport,
    pub rho: f64,
    pub min: SolveResult,
    pub sup_u: f64,
}

/// Sign normalization, the hypothesis check and the ball radius.
fn prepare(
    data: &ProblemData,
    opts: &SolverOptions,
) -> Result<(ProblemData, SignFlip, HypothesisReport, f64), SolverError> {
    let (data, flip) =
        sign_normalize(data).map_err(|e| SolverError::from(e).at(Stage::Normalize))?;
    // A vanishing c0 is let through: the local minimum still exists and the
    // far point search reports the missing geometry.
    match data.check_multiplicity() {
        Ok(()) | Err(ProblemError::TrivialC0) => {}
        Err(e) => return Err(SolverError::Hypotheses(e.to_string()).at(Stage::Check)),
    }
    let report = check_hypotheses(&data).map_err(|e| SolverError::from(e).at(Stage::Check))?;
    if !report.all_ok() {
        let failed: Vec<&str> = [
            ("h1", report.h1_ok),
            ("h2", report.h2_ok),
            ("h2prime", report.h2prime_ok),
            ("coercive", report.coercive_ok),
        ]
        .iter()
        .filter(|(_, ok)| !ok)
        .map(|(name, _)| *name)
        .collect();
        return Err(SolverError::Hypotheses(failed.join(", ")).at(Stage::Check));
    }
    let rho = match opts.rho {
        Some(r) => r,
        None => default_rho(&data).map_err(|e| e.at(Stage::Rho))?,
    };
    Ok((data, flip, report, rho))
}

/// Local minimizer in the ball, certified and mapped back to `u`.
pub fn solve_model_min(
    data: &ProblemData,
    opts: &SolverOptions,
) -> Result<MinSolution, SolverError> {
    let (data, flip, report, rho) = prepare(data, opts)?;
    let mut min = minimize_local(&data, rho, opts).map_err(|e| e.at(Stage::LocalMin))?;
    certify(&mut min, &data, flip).map_err(|e| e.at(Stage::Certificate))?;
    let sup_u = min.u().max_abs();
    Ok(MinSolution {
        flip,
        report,
        rho,
        min,
        sup_u,
    })
}

/// Runs the whole two-solution pipeline: sign normalization, hypothesis
/// check, local minimization in the ball of radius `rho`, the far point
/// `v0`, the mountain-pass search, the lower-bound certificate and the map
/// back to the original unknown.
pub fn solve_model_both(
    data: &ProblemData,
    opts: &SolverOptions,
) -> Result<BothSolutions, SolverError> {
    let (data, flip, report, rho) = prepare(data, opts)?;
    let data = &data;
    let clock = std::time::Instant::now();
    let mut min = minimize_local(data, rho, opts).map_err(|e| e.at(Stage::LocalMin))?;
    log::info!(
        "local minimum after {:?}: energy {:?}",
        clock.elapsed(),
        min.energy
    );
    let v0 = find_v0(data, rho).map_err(|e| SolverError::from(e).at(Stage::FindV0))?;
    log::info!("far point t = {:.3e} after {:?}", v0.t, clock.elapsed());
    let sphere_min = sphere_energy_min(
        data,
        rho,
        &[probe_bump(data), min.v().clone()],
        SPHERE_SAMPLES,
        opts.seed,
    )
    .map_err(|e| SolverError::from(e).at(Stage::FindV0))?;
    if !(sphere_min > 0.0) {
        return Err(SolverError::SphereNotPositive {
            rho,
            min: sphere_min,
        }
        .at(Stage::FindV0));
    }
    let phi = probe_bump(data);
    let ts: Vec<f64> = (0..RAY_POINTS)
        .map(|k| v0.t * k as f64 / (RAY_POINTS - 1) as f64)
        .collect();
    let ray = ray_scan(&phi, data, &ts).map_err(|e| SolverError::from(e).at(Stage::FindV0))?;

    log::info!("sphere and ray checks done after {:?}", clock.elapsed());
    let run =
        mountain_pass(data, &v0.v0, opts, Some(min.v())).map_err(|e| e.at(Stage::MountainPass))?;
    let mut mp = run.result;

    let e_min = min.energy.unwrap_or(f64::NAN);
    let e_mp = mp.energy.unwrap_or(f64::NAN);
    if !(e_min <= 0.0 && e_mp > 0.0) {
        return Err(SolverError::Postcondition(format!(
            "energy ordering I(v_min) = {e_min:.6e} <= 0 < I(v_mp) = {e_mp:.6e} failed"
        ))
        .at(Stage::MountainPass));
    }
    certify(&mut min, data, flip).map_err(|e| e.at(Stage::Certificate))?;
    certify(&mut mp, data, flip).map_err(|e| e.at(Stage::Certificate))?;

    let u1 = min.u().values();
    let u2 = mp.u().values();
    let sup_u_min = min.u().max_abs();
    let sup_u_mp = mp.u().max_abs();
    let separation = max_abs_diff(u1, u2) / sup_u_min.max(1.0);
    if !(separation >= DISTINCT) {
        return Err(SolverError::NotDistinct { separation }.at(Stage::MountainPass));
    }
    Ok(BothSolutions {
        flip,
        report,
        rho,
        sphere_min,
        v0,
        min,
        mp,
        separation,
        sup_u_min,
        sup_u_mp,
        ray,
        path: run.path,
        profiles: run.profiles,
    })
}
