use rayon::prelude::*;

use super::newton::{newton_core, result_from};
use super::{max_abs_diff, IterationRecord, SolveKind, SolveResult, SolverError, SolverOptions};
use crate::assembly::OperatorFactor;
use crate::energy::{EnergyError, Functional};
use crate::grid::{dot_slice, GridError, ScalarField};
use crate::problem::ProblemData;

const ARMIJO: f64 = 1e-4;
const MAX_HALVINGS: usize = 60;
const POLISH_EVERY: usize = 10;
const POLISH_ITERS: usize = 25;
const STALL_SWEEPS: usize = 200;
/// Relative sup-norm separation below which two fields count as equal.
pub(crate) const DISTINCT: f64 = 1e-4;

/// A discrete path from `0` to `v0`.
#[derive(Debug, Clone, PartialEq)]
pub struct PathState {
    /// `nodes[0] = 0` and `nodes[P - 1] = v0`; both are never modified.
    pub nodes: Vec<ScalarField>,
    pub energies: Vec<f64>,
    /// Highest-energy node (lowest index on ties).
    pub max_index: usize,
}

impl PathState {
    pub fn max_energy(&self) -> f64 {
        self.energies[self.max_index]
    }
}

/// Everything recorded by a mountain-pass search.
#[derive(Debug, Clone, PartialEq)]
pub struct MountainPassRun {
    pub result: SolveResult,
    pub path: PathState,
    /// Path energies before every sweep.
    pub profiles: Vec<Vec<f64>>,
}

fn argmax(e: &[f64]) -> usize {
    let mut k = 0;
    for (i, &x) in e.iter().enumerate() {
        if x > e[k] {
            k = i;
        }
    }
    k
}

fn path_energies(fun: &Functional, nodes: &[Vec<f64>]) -> Vec<f64> {
    nodes.par_iter().map(|v| fun.value(v)).collect()
}

/// Piecewise-linear resampling at uniform energy-norm arclength.
fn reparameterize(fun: &Functional, nodes: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let p = nodes.len();
    let n = nodes[0].len();
    let mut diff = vec![0.0; n];
    let mut arc = vec![0.0; p];
    for j in 1..p {
        for i in 0..n {
            diff[i] = nodes[j][i] - nodes[j - 1][i];
        }
        arc[j] = arc[j - 1] + fun.h1_norm(&diff);
    }
    let total = arc[p - 1];
    let mut out = Vec::with_capacity(p);
    out.push(nodes[0].clone());
    let mut seg = 1;
    for j in 1..p - 1 {
        let s = total * j as f64 / (p - 1) as f64;
        while seg < p - 1 && arc[seg] < s {
            seg += 1;
        }
        let len = arc[seg] - arc[seg - 1];
        let w = if len > 0.0 {
            (s - arc[seg - 1]) / len
        } else {
            0.0
        };
        let (a, b) = (&nodes[seg - 1], &nodes[seg]);
        out.push((0..n).map(|i| a[i] + w * (b[i] - a[i])).collect());
    }
    out.push(nodes[p - 1].clone());
    out
}

/// Mountain-pass critical point on paths from `0` to `v0`.
///
/// Each sweep moves the highest node of the path by an Armijo
/// Sobolev-gradient step on `I` and then resamples the path to uniform
/// arclength, keeping the resampling only if it does not raise the path
/// maximum. The path maximum is therefore non-increasing. Every few sweeps a
/// Newton polish from the highest node is attempted; it is accepted when it
/// converges to a point of positive energy distinct from `minimizer`.
pub fn mountain_pass(
    data: &ProblemData,
    v0: &ScalarField,
    opts: &SolverOptions,
    minimizer: Option<&ScalarField>,
) -> Result<MountainPassRun, SolverError> {
    if *v0.grid() != data.grid {
        return Err(GridError::Mismatch.into());
    }
    let p = opts.path_nodes.max(3);
    let fun = Functional::new(data)?;
    if !(fun.value(v0.values()) <= 0.0) {
        return Err(SolverError::Postcondition(
            "mountain pass needs I(v0) <= 0".into(),
        ));
    }
    let factor = OperatorFactor::new(&data.a)?;
    let n = data.grid.len();
    let vol = fun.vol();
    let mut nodes: Vec<Vec<f64>> = (0..p)
        .map(|j| {
            let s = j as f64 / (p - 1) as f64;
            v0.values().iter().map(|x| s * x).collect()
        })
        .collect();
    let mut energies = path_energies(&fun, &nodes);
    let mut profiles = Vec::new();
    let mut log = Vec::new();
    let mut r = vec![0.0; n];
    let mut lv = vec![0.0; n];
    let mut trial = vec![0.0; n];
    let mut alpha = 1.0f64;
    let mut best_max = f64::INFINITY;
    let mut since_best = 0;

    let distinct = |v: &[f64]| match minimizer {
        Some(m) => {
            let scale = m.max_abs().max(1.0);
            max_abs_diff(v, m.values()) / scale > DISTINCT
        }
        None => true,
    };
    let try_polish = |v: &[f64], iters: usize| -> Result<Option<SolveResult>, SolverError> {
        let out = newton_core(&fun, v.to_vec(), opts.polish_tol, iters);
        let out = match out {
            Ok(o) => o,
            Err(SolverError::MaxIterations { .. }) => return Ok(None),
            Err(e) => return Err(e),
        };
        let e = fun.value(&out.v);
        if out.residual <= opts.tol && e > 0.0 && distinct(&out.v) {
            Ok(Some(result_from(&fun, SolveKind::MountainPass, out)))
        } else {
            Ok(None)
        }
    };

    for sweep in 0..=opts.max_iter {
        let k = argmax(&energies);
        profiles.push(energies.clone());
        if k == 0 || k == p - 1 {
            return Err(SolverError::PathCollapse { sweep });
        }
        let path_max = energies[k];
        if path_max < best_max * (1.0 - 1e-13) || best_max == f64::INFINITY {
            best_max = path_max;
            since_best = 0;
        } else {
            since_best += 1;
        }
        let v = &nodes[k];
        fun.gradient_into(v, &mut r, &mut lv);
        let res = fun.scaled_norm(&r, &lv);
        log::debug!("sweep {sweep}: node {k} energy {path_max:.6e} residual {res:.3e}");
        log.push(IterationRecord {
            iteration: sweep,
            residual: res,
            energy: path_max,
            cerami: (1.0 + fun.h1_norm(v)) * res,
        });
        let stalled = since_best >= STALL_SWEEPS;
        let last = sweep == opts.max_iter;
        if res <= opts.tol || (sweep + 1) % POLISH_EVERY == 0 || stalled || last {
            let iters = if res <= opts.tol {
                opts.newton_max_iter
            } else {
                POLISH_ITERS
            };
            if let Some(mut result) = try_polish(v, iters)? {
                result.iterations = sweep;
                let mut full = log.clone();
                let offset = sweep;
                full.extend(result.log.iter().skip(1).map(|rec| IterationRecord {
                    iteration: rec.iteration + offset,
                    ..*rec
                }));
                result.log = full;
                let max_index = k;
                let nodes = nodes
                    .into_iter()
                    .map(|x| ScalarField::from_vec(data.grid, x))
                    .collect();
                return Ok(MountainPassRun {
                    result,
                    path: PathState {
                        nodes,
                        energies,
                        max_index,
                    },
                    profiles,
                });
            }
            if stalled || last {
                return Err(SolverError::MaxIterations {
                    iterations: sweep,
                    residual: res,
                });
            }
        }

        let d = factor.solve(&r);
        let slope = dot_slice(&r, &d) * vol;
        // Keep the moved node between its neighbours so the path stays
        // resolved.
        let gap = |j: usize| {
            let diff: Vec<f64> = nodes[j].iter().zip(v).map(|(a, b)| a - b).collect();
            fun.h1_norm(&diff)
        };
        let reach = 0.5 * gap(k - 1).min(gap(k + 1));
        let d_norm = fun.h1_norm(&d);
        let cap = if d_norm > 0.0 { reach / d_norm } else { 1e3 };
        alpha = (2.0 * alpha).min(1e3).min(cap);
        let mut moved = false;
        for _ in 0..MAX_HALVINGS {
            for i in 0..n {
                trial[i] = v[i] - alpha * d[i];
            }
            let e = fun.value(&trial);
            if e.is_finite() && e <= path_max - ARMIJO * alpha * slope {
                moved = true;
                energies[k] = e;
                break;
            }
            alpha *= 0.5;
        }
        if !moved {
            // The step is below energy resolution; only a polish can help.
            since_best = STALL_SWEEPS;
            continue;
        }
        nodes[k].copy_from_slice(&trial);

        let current_max = energies.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let candidate = reparameterize(&fun, &nodes);
        let cand_e = path_energies(&fun, &candidate);
        let cand_max = cand_e.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if cand_max <= current_max && cand_e.iter().all(|e| e.is_finite()) {
            nodes = candidate;
            energies = cand_e;
        }
    }
    Err(EnergyError::NonFinite { what: "path" }.into())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn argmax_prefers_lowest_index() {
        assert_eq!(argmax(&[0.0, 2.0, 1.0, 2.0]), 1);
    }
}
