//! The variational functional of the transformed problem and the
//! diagnostics built on it.
//!
//! ```text
//! I(v) = 1/2 integral( <A grad v, grad v> - (c0 + mu f) v^2 ) - integral c0 G(v) - integral f v
//! ```
//!
//! Its critical points solve `-div(A grad v) - (c0 + mu f) v = c0 g(v) + f`.

mod geometry;
mod hypotheses;
mod spectral;

pub use geometry::{
    find_v0, probe_bump, ray_scan, sphere_energy_min, ProbeBump, FIND_V0_MAX_DOUBLINGS,
};
pub use hypotheses::{check_hypotheses, HypothesisReport};
pub use spectral::{coercivity_lambda, sobolev_ratio, POWER_MAX_ITER, SOBOLEV_STARTS};

use serde::Serialize;
use thiserror::Error;

use crate::grid::{apply_operator_slice, h1_seminorm_sq_slice, GridError, ScalarField};
use crate::linalg::LinalgError;
use crate::nonlinearity::{g_primitive_raw, g_raw};
use crate::problem::{ProblemData, ProblemError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EnergyError {
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("non-finite {what} (overflow for large |v|?)")]
    NonFinite { what: &'static str },
    #[error("eigenvalue iteration did not converge in {iterations} iterations (residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("geometry not found: I(t phi) stayed positive up to t = 2^{max_doublings}")]
    GeometryNotFound { max_doublings: u32 },
    #[error("radius must be positive and finite (got {0})")]
    InvalidRadius(f64),
}

/// The terms of `I(v)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergyBreakdown {
    /// `1/2 integral(<A grad v, grad v> - (c0 + mu f) v^2)`.
    pub quadratic: f64,
    /// `integral c0 G(v)`.
    pub g_term: f64,
    /// `integral f v`.
    pub linear: f64,
    pub total: f64,
    /// Scaled `L^2` norm of the residual, see [`residual_norm`].
    pub residual_norm: f64,
}

/// Slice-level evaluation shared by the solvers.
pub(crate) struct Functional<'a> {
    pub(crate) data: &'a ProblemData,
    potential: Vec<f64>,
    vol: f64,
    f_norm: f64,
}

impl<'a> Functional<'a> {
    pub(crate) fn new(data: &'a ProblemData) -> Result<Self, ProblemError> {
        data.require_normalized()?;
        let vol = data.grid.cell_volume();
        let f_norm = (data.f.values().iter().map(|x| x * x).sum::<f64>() * vol).sqrt();
        Ok(Self {
            data,
            potential: data.linear_potential(),
            vol,
            f_norm,
        })
    }

    pub(crate) fn potential(&self) -> &[f64] {
        &self.potential
    }

    pub(crate) fn parts(&self, v: &[f64]) -> (f64, f64, f64) {
        let d = self.data;
        let h1 = h1_seminorm_sq_slice(&d.a, v);
        let mut pot = 0.0;
        let mut gterm = 0.0;
        let mut lin = 0.0;
        let c0 = d.c0.values();
        let f = d.f.values();
        for i in 0..v.len() {
            let x = v[i];
            pot += self.potential[i] * x * x;
            if c0[i] != 0.0 {
                gterm += c0[i] * g_primitive_raw(x, d.coupling.at(i));
            }
            lin += f[i] * x;
        }
        (
            0.5 * (h1 - pot * self.vol),
            gterm * self.vol,
            lin * self.vol,
        )
    }

    pub(crate) fn value(&self, v: &[f64]) -> f64 {
        let (q, g, l) = self.parts(v);
        q - g - l
    }

    /// Nodal residual; also returns `L_A v` in `lv`.
    pub(crate) fn gradient_into(&self, v: &[f64], out: &mut [f64], lv: &mut [f64]) {
        let d = self.data;
        apply_operator_slice(&d.a, v, lv);
        let c0 = d.c0.values();
        let f = d.f.values();
        for i in 0..v.len() {
            let mut r = lv[i] - self.potential[i] * v[i] - f[i];
            if c0[i] != 0.0 {
                r -= c0[i] * g_raw(v[i], d.coupling.at(i));
            }
            out[i] = r;
        }
    }

    pub(crate) fn gradient(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; v.len()];
        let mut lv = vec![0.0; v.len()];
        self.gradient_into(v, &mut out, &mut lv);
        out
    }

    pub(crate) fn l2(&self, v: &[f64]) -> f64 {
        (v.iter().map(|x| x * x).sum::<f64>() * self.vol).sqrt()
    }

    /// `|r|_2 / max(1, |L_A v|_2 + |f|_2)`.
    pub(crate) fn scaled_norm(&self, r: &[f64], lv: &[f64]) -> f64 {
        self.l2(r) / (self.l2(lv) + self.f_norm).max(1.0)
    }

    pub(crate) fn residual_norm(&self, v: &[f64]) -> f64 {
        let mut r = vec![0.0; v.len()];
        let mut lv = vec![0.0; v.len()];
        self.gradient_into(v, &mut r, &mut lv);
        self.scaled_norm(&r, &lv)
    }

    /// `H^1` (energy) norm `sqrt(<L_A v, v>)`.
    pub(crate) fn h1_norm(&self, v: &[f64]) -> f64 {
        h1_seminorm_sq_slice(&self.data.a, v).max(0.0).sqrt()
    }

    pub(crate) fn vol(&self) -> f64 {
        self.vol
    }
}

fn check_grid(v: &ScalarField, data: &ProblemData) -> Result<(), EnergyError> {
    if *v.grid() == data.grid {
        Ok(())
    } else {
        Err(GridError::Mismatch.into())
    }
}

/// Evaluates `I(v)` term by term.
pub fn energy(v: &ScalarField, data: &ProblemData) -> Result<EnergyBreakdown, EnergyError> {
    check_grid(v, data)?;
    let fun = Functional::new(data)?;
    let (quadratic, g_term, linear) = fun.parts(v.values());
    let total = quadratic - g_term - linear;
    if !total.is_finite() {
        return Err(EnergyError::NonFinite { what: "energy" });
    }
    Ok(EnergyBreakdown {
        quadratic,
        g_term,
        linear,
        total,
        residual_norm: fun.residual_norm(v.values()),
    })
}

/// Nodal residual `L_A v - (c0 + mu f) v - c0 g(v) - f`, the quadrature
/// Riesz representative of `I'(v)`.
pub fn energy_gradient(v: &ScalarField, data: &ProblemData) -> Result<ScalarField, EnergyError> {
    check_grid(v, data)?;
    let fun = Functional::new(data)?;
    let r = fun.gradient(v.values());
    if r.iter().any(|x| !x.is_finite()) {
        return Err(EnergyError::NonFinite { what: "gradient" });
    }
    Ok(ScalarField::from_vec(data.grid, r))
}

/// Scaled residual `|I'(v)|_2 / max(1, |L_A v|_2 + |f|_2)`; the convergence
/// measure used by every solver.
pub fn residual_norm(v: &ScalarField, data: &ProblemData) -> Result<f64, EnergyError> {
    check_grid(v, data)?;
    Ok(Functional::new(data)?.residual_norm(v.values()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;

    fn fixture() -> (ProblemData, ScalarField) {
        let grid = Grid::unit(1, 3).unwrap();
        let data = ProblemData::model(
            ScalarField::zeros(grid),
            ScalarField::constant(grid, 1.0),
            1.0,
            2.0,
        )
        .unwrap();
        let v = ScalarField::new(grid, vec![0.0, 1.0, 0.0]).unwrap();
        (data, v)
    }

    #[test]
    fn energy_hand_value() {
        let (data, v) = fixture();
        let e = energy(&v, &data).unwrap();
        // 1/2 * 8 - 1/2 * 0.25 - 0.25
        assert!((e.total - 3.625).abs() < 1e-14);
        assert!((e.quadratic - 3.875).abs() < 1e-14);
        assert_eq!(e.g_term, 0.0);
        assert!((e.linear - 0.25).abs() < 1e-15);
        assert_eq!(e.total, e.quadratic - e.g_term - e.linear);
    }

    #[test]
    fn gradient_hand_value() {
        let (data, v) = fixture();
        let r = energy_gradient(&v, &data).unwrap();
        assert_eq!(r.values(), &[-17.0, 30.0, -17.0]);
    }

    #[test]
    fn zero_field_has_zero_energy() {
        let (data, _) = fixture();
        let e = energy(&ScalarField::zeros(data.grid), &data).unwrap();
        assert_eq!(e.total, 0.0);
    }

    #[test]
    fn unnormalized_coupling_is_rejected() {
        let (mut data, v) = fixture();
        data.coupling = crate::nonlinearity::GradientCoupling::Constant(-1.0);
        assert!(matches!(
            energy(&v, &data),
            Err(EnergyError::Problem(ProblemError::NotNormalized))
        ));
    }
}
