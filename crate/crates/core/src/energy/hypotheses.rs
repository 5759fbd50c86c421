//! Measured smallness and coercivity conditions.

use serde::Serialize;

use super::spectral::{coercivity_lambda_with, sobolev_ratio};
use super::EnergyError;
use crate::grid::{lp_norm, ScalarField};
use crate::problem::{ProblemData, HALF_DIM_EXPONENT};

/// Norms, constants and flags describing one problem instance.
///
/// `sobolev_ratio` stands in for the continuum Sobolev constant, so every
/// flag is a statement about the discretization.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HypothesisReport {
    pub c0_norm_p: f64,
    pub f_plus_norm_half_dim: f64,
    pub f_minus_norm_half_dim: f64,
    pub f_minus_norm_p: f64,
    /// Largest value of the coupling.
    pub mu: f64,
    pub p: f64,
    pub sobolev_ratio: f64,
    /// `1/C_h - mu |f|_{1.5}`.
    pub margin: f64,
    /// `|c0 + mu f^+|_{1.5}`.
    pub c0_mu_f_plus_norm_half_dim: f64,
    /// `lambda(c0 + mu f^+)`.
    pub lambda: f64,
    pub ellipticity_lower: f64,
    pub ellipticity_upper: f64,
    /// Structural assumptions: ellipticity bounds, admissible exponent,
    /// finite data norms, nonzero coupling.
    pub h1_ok: bool,
    pub h2_ok: bool,
    pub h2prime_ok: bool,
    pub coercive_ok: bool,
}

impl HypothesisReport {
    pub fn all_ok(&self) -> bool {
        self.h1_ok && self.h2_ok && self.h2prime_ok && self.coercive_ok
    }
}

/// Computes every report field. A failing hypothesis is an outcome here,
/// not an error.
pub fn check_hypotheses(data: &ProblemData) -> Result<HypothesisReport, EnergyError> {
    let grid = data.grid;
    let p = data.p;
    let s = HALF_DIM_EXPONENT;
    let f_plus = data.f.positive_part();
    let f_minus = data.f.negative_part();
    let c0_norm_p = lp_norm(&data.c0, p)?;
    let f_plus_norm = lp_norm(&f_plus, s)?;
    let f_minus_norm = lp_norm(&f_minus, s)?;
    let f_minus_norm_p = lp_norm(&f_minus, p)?;
    let f_norm = lp_norm(&data.f, s)?;
    let mu = data.coupling.upper().abs();

    let h: Vec<f64> = (0..grid.len())
        .map(|i| data.c0.values()[i] + data.coupling.at(i).abs() * f_plus.values()[i])
        .collect();
    let h_field = ScalarField::new(grid, h)?;
    let h_norm = lp_norm(&h_field, s)?;
    let lambda = coercivity_lambda_with(h_field.values(), &data.a, None)?;

    let c_h = sobolev_ratio(data)?;
    let inv = 1.0 / c_h;
    let margin = inv - mu * f_norm;

    let h1_ok = data.a.lower() > 0.0
        && data.a.upper().is_finite()
        && mu > 0.0
        && [c0_norm_p, f_norm, f_minus_norm_p]
            .iter()
            .all(|x| x.is_finite());

    Ok(HypothesisReport {
        c0_norm_p,
        f_plus_norm_half_dim: f_plus_norm,
        f_minus_norm_half_dim: f_minus_norm,
        f_minus_norm_p,
        mu,
        p,
        sobolev_ratio: c_h,
        margin,
        c0_mu_f_plus_norm_half_dim: h_norm,
        lambda,
        ellipticity_lower: data.a.lower(),
        ellipticity_upper: data.a.upper(),
        h1_ok,
        h2_ok: margin > 0.0,
        h2prime_ok: h_norm < inv,
        coercive_ok: lambda > 0.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;

    #[test]
    fn trivial_data_passes_everything() {
        let grid = Grid::unit(2, 5).unwrap();
        let z = ScalarField::zeros(grid);
        let d = ProblemData::model(z.clone(), z, 1.0, 2.0).unwrap();
        let r = check_hypotheses(&d).unwrap();
        assert!(r.all_ok());
        assert_eq!(r.lambda, 1.0);
    }

    #[test]
    fn huge_coupling_fails_smallness() {
        let grid = Grid::unit(1, 7).unwrap();
        let d = ProblemData::model(
            ScalarField::zeros(grid),
            ScalarField::constant(grid, 1.0),
            1e6,
            2.0,
        )
        .unwrap();
        let r = check_hypotheses(&d).unwrap();
        assert!(!r.h2_ok);
        assert!(!r.coercive_ok);
    }
}
