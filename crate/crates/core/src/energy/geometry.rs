//! Mountain-pass geometry: rays, the far point `v0`, and sphere sampling.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{EnergyError, Functional};
use crate::grid::{GridError, ScalarField};
use crate::problem::ProblemData;

/// Doubling budget of [`find_v0`]: `t` ranges over `1, 2, ..., 2^200`.
pub const FIND_V0_MAX_DOUBLINGS: u32 = 200;

/// `(t, I(t v))` for every `t` in `ts`.
pub fn ray_scan(
    v: &ScalarField,
    data: &ProblemData,
    ts: &[f64],
) -> Result<Vec<(f64, f64)>, EnergyError> {
    if *v.grid() != data.grid {
        return Err(GridError::Mismatch.into());
    }
    let fun = Functional::new(data)?;
    let mut tv = vec![0.0; v.len()];
    Ok(ts
        .iter()
        .map(|&t| {
            for (x, y) in tv.iter_mut().zip(v.values()) {
                *x = t * y;
            }
            (t, fun.value(&tv))
        })
        .collect())
}

/// The nonnegative probe direction: a gaussian centred at the maximizer of
/// `c0`, with standard deviation a quarter of the shortest box side, times
/// the lowest sine mode of the box, scaled to unit maximum.
pub fn probe_bump(data: &ProblemData) -> ScalarField {
    let grid = data.grid;
    let centre = grid.coords(data.c0.argmax());
    let lengths = grid.lengths();
    let sigma = 0.25 * lengths.iter().cloned().fold(f64::INFINITY, f64::min);
    let bump = ScalarField::from_fn(grid, |x| {
        let mut r2 = 0.0;
        let mut window = 1.0;
        for d in 0..x.len() {
            r2 += (x[d] - centre[d]).powi(2);
            window *= (PI * x[d] / lengths[d]).sin();
        }
        (-0.5 * r2 / (sigma * sigma)).exp() * window
    });
    let top = bump.max();
    bump.scaled(1.0 / top)
}

/// A point beyond the mountain range: `I(v0) <= 0` with `|v0| > rho`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeBump {
    #[serde(skip)]
    pub v0: ScalarField,
    pub t: f64,
    pub doublings: u32,
    pub energy: f64,
    pub norm: f64,
}

/// Doubles `t` from 1 until `I(t phi) <= 0` and `|t phi| > rho`, with `phi`
/// the [`probe_bump`].
pub fn find_v0(data: &ProblemData, rho: f64) -> Result<ProbeBump, EnergyError> {
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(EnergyError::InvalidRadius(rho));
    }
    let fun = Functional::new(data)?;
    let phi = probe_bump(data);
    let phi_norm = fun.h1_norm(phi.values());
    let mut tv = vec![0.0; phi.len()];
    let mut t = 1.0f64;
    for doublings in 0..=FIND_V0_MAX_DOUBLINGS {
        for (x, y) in tv.iter_mut().zip(phi.values()) {
            *x = t * y;
        }
        let energy = fun.value(&tv);
        let norm = t * phi_norm;
        if !energy.is_finite() {
            break;
        }
        if energy <= 0.0 && norm > rho {
            return Ok(ProbeBump {
                v0: ScalarField::from_vec(data.grid, tv),
                t,
                doublings,
                energy,
                norm,
            });
        }
        t *= 2.0;
    }
    Err(EnergyError::GeometryNotFound {
        max_doublings: FIND_V0_MAX_DOUBLINGS,
    })
}

/// Smallest sampled value of `I` on the sphere `|v| = rho`.
///
/// Directions are the given ones (both signs) plus `random` seeded smooth
/// fields built from the lowest sine modes of the box.
pub fn sphere_energy_min(
    data: &ProblemData,
    rho: f64,
    directions: &[ScalarField],
    random: usize,
    seed: u64,
) -> Result<f64, EnergyError> {
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(EnergyError::InvalidRadius(rho));
    }
    let fun = Functional::new(data)?;
    let grid = data.grid;
    let lengths = grid.lengths();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut dirs: Vec<ScalarField> = directions.to_vec();
    for _ in 0..random {
        let modes: Vec<([usize; 3], f64)> = (0..6)
            .map(|_| {
                let mut k = [1usize; 3];
                for kd in k.iter_mut().take(grid.dim()) {
                    *kd = rng.random_range(1..=3);
                }
                (k, rng.random_range(-1.0..1.0))
            })
            .collect();
        dirs.push(ScalarField::from_fn(grid, |x| {
            modes
                .iter()
                .map(|(k, c)| {
                    c * (0..x.len())
                        .map(|d| (PI * k[d] as f64 * x[d] / lengths[d]).sin())
                        .product::<f64>()
                })
                .sum()
        }));
    }
    let mut best = f64::INFINITY;
    let mut scratch = vec![0.0; grid.len()];
    for d in &dirs {
        if *d.grid() != grid {
            return Err(GridError::Mismatch.into());
        }
        let norm = fun.h1_norm(d.values());
        if norm == 0.0 {
            continue;
        }
        for sign in [1.0, -1.0] {
            let s = sign * rho / norm;
            for (x, y) in scratch.iter_mut().zip(d.values()) {
                *x = s * y;
            }
            best = best.min(fun.value(&scratch));
        }
    }
    if !best.is_finite() {
        return Err(EnergyError::NonFinite {
            what: "sphere energy",
        });
    }
    Ok(best)
}
