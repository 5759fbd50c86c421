//! Scalar calculus of the transformed problem.
//!
//! With `v = (e^{mu u} - 1) / mu` the quadratic gradient term disappears and
//! the equation becomes semilinear with the nonlinearity
//!
//! ```text
//! g(s) = (1/mu) (1 + mu s) ln(1 + mu s) - s    for s > -1/mu
//!      = -s                                   for s <= -1/mu
//! ```
//!
//! Everything here is expressed through `x = mu s`: `g = phi(x) / mu`,
//! `G = Phi(x) / mu^2` and `H = Psi(x) / mu^2`, where `phi`, `Phi`, `Psi` do
//! not depend on `mu`. Near `x = 0` the closed forms cancel catastrophically,
//! so truncated Taylor series take over for `|x| < 0.1`.

use thiserror::Error;

use crate::grid::ScalarField;
use crate::problem::ProblemData;

/// Magnitude cap for `g'` at the kink `s = -1/mu`.
pub const G_PRIME_CAP: f64 = 1e6;

const SERIES_RADIUS: f64 = 0.1;
const SERIES_TERMS: usize = 24;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NonlinearityError {
    #[error("coupling must be positive (got {0})")]
    NonPositiveCoupling(f64),
    #[error("coupling must be nonzero")]
    ZeroCoupling,
    #[error("node {node}: v = {value} violates v > -1/mu = {bound}")]
    DomainViolation { node: usize, value: f64, bound: f64 },
    #[error("node {node}: exp(mu u) overflows for u = {value}")]
    Overflow { node: usize, value: f64 },
    #[error("coupling field value {value} at node {node} outside [{lower}, {upper}]")]
    CouplingOutOfBounds {
        node: usize,
        value: f64,
        lower: f64,
        upper: f64,
    },
    #[error("coupling field has {got} values for a grid of {expected} nodes")]
    CouplingLength { expected: usize, got: usize },
}

/// The gradient coupling `mu`: a constant, or a nodal field with bounds
/// `0 < lower <= mu(x) <= upper`.
#[derive(Debug, Clone, PartialEq)]
pub enum GradientCoupling {
    Constant(f64),
    Field {
        values: Vec<f64>,
        lower: f64,
        upper: f64,
    },
}

impl GradientCoupling {
    pub fn field(values: Vec<f64>, lower: f64, upper: f64) -> Result<Self, NonlinearityError> {
        if !(lower > 0.0) {
            return Err(NonlinearityError::NonPositiveCoupling(lower));
        }
        for (node, &value) in values.iter().enumerate() {
            if !(value >= lower && value <= upper) {
                return Err(NonlinearityError::CouplingOutOfBounds {
                    node,
                    value,
                    lower,
                    upper,
                });
            }
        }
        Ok(Self::Field {
            values,
            lower,
            upper,
        })
    }

    #[inline]
    pub fn at(&self, node: usize) -> f64 {
        match self {
            Self::Constant(mu) => *mu,
            Self::Field { values, .. } => values[node],
        }
    }

    pub fn scalar(&self) -> Option<f64> {
        match self {
            Self::Constant(mu) => Some(*mu),
            Self::Field { .. } => None,
        }
    }

    /// Upper bound of `mu` (the constant itself in scalar mode).
    pub fn upper(&self) -> f64 {
        match self {
            Self::Constant(mu) => *mu,
            Self::Field { upper, .. } => *upper,
        }
    }

    pub fn lower(&self) -> f64 {
        match self {
            Self::Constant(mu) => *mu,
            Self::Field { lower, .. } => *lower,
        }
    }

    pub fn is_positive(&self) -> bool {
        self.lower() > 0.0
    }

    pub(crate) fn check_len(&self, len: usize) -> Result<(), NonlinearityError> {
        match self {
            Self::Field { values, .. } if values.len() != len => {
                Err(NonlinearityError::CouplingLength {
                    expected: len,
                    got: values.len(),
                })
            }
            _ => Ok(()),
        }
    }
}

// ---------------------------------------------------------------------------
// mu-free kernels in x = mu s.

/// `phi(x) = (1+x) ln(1+x) - x` for `x > -1`, `-x` otherwise.
#[inline]
fn phi(x: f64) -> f64 {
    let w = 1.0 + x;
    if w <= 0.0 {
        -x
    } else if x.abs() < SERIES_RADIUS {
        // sum_{k>=2} (-1)^k x^k / (k (k-1))
        let mut term = x * x;
        let mut acc = 0.0;
        for k in 2..SERIES_TERMS {
            let k = k as f64;
            acc += term / (k * (k - 1.0));
            term *= -x;
        }
        acc
    } else {
        w * x.ln_1p() - x
    }
}

/// `Phi(x) = integral_0^x phi`.
#[inline]
fn phi_primitive(x: f64) -> f64 {
    let w = 1.0 + x;
    if w <= 0.0 {
        0.25 - 0.5 * x * x
    } else if x.abs() < SERIES_RADIUS {
        // sum_{k>=2} (-1)^k x^{k+1} / ((k+1) k (k-1))
        let mut term = x * x * x;
        let mut acc = 0.0;
        for k in 2..SERIES_TERMS {
            let k = k as f64;
            acc += term / ((k + 1.0) * k * (k - 1.0));
            term *= -x;
        }
        acc
    } else {
        w * w * (0.5 * x.ln_1p() - 0.25) + 0.25 - 0.5 * x * x
    }
}

/// `Psi(x) = x phi(x) / 2 - Phi(x)`.
#[inline]
fn psi(x: f64) -> f64 {
    let w = 1.0 + x;
    if w <= 0.0 {
        -0.25
    } else if x.abs() < SERIES_RADIUS {
        // sum_{k>=2} (-1)^k x^{k+1} / (2 k (k+1))
        let mut term = x * x * x;
        let mut acc = 0.0;
        for k in 2..SERIES_TERMS {
            let k = k as f64;
            acc += term / (2.0 * k * (k + 1.0));
            term *= -x;
        }
        acc
    } else {
        0.5 * x * phi(x) - phi_primitive(x)
    }
}

// Unchecked evaluations used in nodal loops; `mu > 0` is a caller invariant.

#[inline]
pub(crate) fn g_raw(s: f64, mu: f64) -> f64 {
    phi(mu * s) / mu
}

#[inline]
pub(crate) fn g_prime_raw(s: f64, mu: f64) -> f64 {
    let w = 1.0 + mu * s;
    if w > 0.0 {
        (mu * s).ln_1p().max(-G_PRIME_CAP)
    } else if w < 0.0 {
        -1.0
    } else {
        -G_PRIME_CAP
    }
}

#[inline]
pub(crate) fn g_primitive_raw(s: f64, mu: f64) -> f64 {
    phi_primitive(mu * s) / (mu * mu)
}

#[inline]
pub(crate) fn g_defect_raw(s: f64, mu: f64) -> f64 {
    psi(mu * s) / (mu * mu)
}

fn check_mu(mu: f64) -> Result<(), NonlinearityError> {
    if mu > 0.0 && mu.is_finite() {
        Ok(())
    } else {
        Err(NonlinearityError::NonPositiveCoupling(mu))
    }
}

/// The transformed nonlinearity `g`; continuous and nonnegative.
pub fn g(s: f64, mu: f64) -> Result<f64, NonlinearityError> {
    check_mu(mu)?;
    Ok(g_raw(s, mu))
}

/// `g'(s) = ln(1 + mu s)` right of the kink, `-1` left of it, and
/// `-G_PRIME_CAP` exactly at `s = -1/mu`.
pub fn g_prime(s: f64, mu: f64) -> Result<f64, NonlinearityError> {
    check_mu(mu)?;
    Ok(g_prime_raw(s, mu))
}

/// Antiderivative `G(s) = integral_0^s g`, in closed form.
pub fn g_primitive(s: f64, mu: f64) -> Result<f64, NonlinearityError> {
    check_mu(mu)?;
    Ok(g_primitive_raw(s, mu))
}

/// `H(s) = g(s) s / 2 - G(s)`; equal to `-1/(4 mu^2)` for `s <= -1/mu`.
pub fn g_defect(s: f64, mu: f64) -> Result<f64, NonlinearityError> {
    check_mu(mu)?;
    Ok(g_defect_raw(s, mu))
}

/// `u = ln(1 + mu v) / mu`, nodewise; requires `v > -1/mu` everywhere.
pub fn v_to_u(
    v: &ScalarField,
    coupling: &GradientCoupling,
) -> Result<ScalarField, NonlinearityError> {
    coupling.check_len(v.len())?;
    let mut out = Vec::with_capacity(v.len());
    for (node, &value) in v.values().iter().enumerate() {
        let mu = coupling.at(node);
        check_mu(mu)?;
        if !(1.0 + mu * value > 0.0) {
            return Err(NonlinearityError::DomainViolation {
                node,
                value,
                bound: -1.0 / mu,
            });
        }
        out.push((mu * value).ln_1p() / mu);
    }
    Ok(ScalarField::from_vec(*v.grid(), out))
}

/// `v = (e^{mu u} - 1) / mu`, nodewise; overflow is an error.
pub fn u_to_v(
    u: &ScalarField,
    coupling: &GradientCoupling,
) -> Result<ScalarField, NonlinearityError> {
    coupling.check_len(u.len())?;
    let mut out = Vec::with_capacity(u.len());
    for (node, &value) in u.values().iter().enumerate() {
        let mu = coupling.at(node);
        check_mu(mu)?;
        let v = (mu * value).exp_m1() / mu;
        if !v.is_finite() {
            return Err(NonlinearityError::Overflow { node, value });
        }
        out.push(v);
    }
    Ok(ScalarField::from_vec(*u.grid(), out))
}

/// Whether [`sign_normalize`] negated the problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SignFlip {
    Identity,
    Flipped,
}

impl SignFlip {
    /// Maps a solution of the normalized problem back to the original one.
    pub fn restore(self, u: ScalarField) -> ScalarField {
        match self {
            Self::Identity => u,
            Self::Flipped => u.map(|x| -x),
        }
    }
}

/// Reduces `mu < 0` to `mu > 0`: replacing `u` by `-u` maps `(mu, f)` to
/// `(-mu, -f)`.
pub fn sign_normalize(problem: &ProblemData) -> Result<(ProblemData, SignFlip), NonlinearityError> {
    match &problem.coupling {
        GradientCoupling::Constant(mu) if *mu == 0.0 => Err(NonlinearityError::ZeroCoupling),
        GradientCoupling::Constant(mu) if *mu < 0.0 => {
            let mut flipped = problem.clone();
            flipped.coupling = GradientCoupling::Constant(-mu);
            flipped.f = problem.f.map(|x| -x);
            Ok((flipped, SignFlip::Flipped))
        }
        GradientCoupling::Field { lower, .. } if *lower <= 0.0 => {
            Err(NonlinearityError::NonPositiveCoupling(*lower))
        }
        _ => Ok((problem.clone(), SignFlip::Identity)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{E, LN_2};

    #[test]
    fn g_hand_values() {
        assert_eq!(g(0.0, 1.7).unwrap(), 0.0);
        assert_eq!(g(-2.0, 1.0).unwrap(), 2.0);
        assert!((g(1.0, 1.0).unwrap() - (2.0 * LN_2 - 1.0)).abs() < 1e-15);
        assert_eq!(
            g(1.0, 0.0),
            Err(NonlinearityError::NonPositiveCoupling(0.0))
        );
        assert!(g(1.0, -1.0).is_err());
    }

    #[test]
    fn g_prime_hand_values() {
        assert_eq!(g_prime(0.0, 3.0).unwrap(), 0.0);
        assert_eq!(g_prime(-2.0, 1.0).unwrap(), -1.0);
        assert!((g_prime(E - 1.0, 1.0).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(g_prime(-1.0, 1.0).unwrap(), -G_PRIME_CAP);
    }

    #[test]
    fn primitive_and_defect_hand_values() {
        assert_eq!(g_primitive(0.0, 2.0).unwrap(), 0.0);
        assert!((g_primitive(-1.0, 1.0).unwrap() + 0.25).abs() < 1e-15);
        assert_eq!(g_defect(0.0, 1.0).unwrap(), 0.0);
        assert_eq!(g_defect(-2.0, 1.0).unwrap(), -0.25);
        assert!((g_defect(1.0, 1.0).unwrap() - (0.75 - LN_2)).abs() < 1e-15);
    }

    #[test]
    fn series_and_closed_form_agree_at_switch() {
        for x in [SERIES_RADIUS * 0.999_999, -SERIES_RADIUS * 0.999_999] {
            let w = 1.0 + x;
            let phi_closed = w * x.ln_1p() - x;
            let prim_closed = w * w * (0.5 * x.ln_1p() - 0.25) + 0.25 - 0.5 * x * x;
            assert!((phi(x) - phi_closed).abs() < 1e-15);
            assert!((phi_primitive(x) - prim_closed).abs() < 1e-15);
            assert!((psi(x) - (0.5 * x * phi_closed - prim_closed)).abs() < 1e-15);
        }
    }

    #[test]
    fn transforms_roundtrip() {
        let grid = crate::grid::Grid::unit(1, 4).unwrap();
        let mu = GradientCoupling::Constant(1.0);
        let v = ScalarField::new(grid, vec![0.0, E - 1.0, -0.5, 3.0]).unwrap();
        let u = v_to_u(&v, &mu).unwrap();
        assert!((u.values()[1] - 1.0).abs() < 1e-15);
        let back = u_to_v(&u, &mu).unwrap();
        for (a, b) in back.values().iter().zip(v.values()) {
            assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0));
        }
    }

    #[test]
    fn v_to_u_rejects_inadmissible_values() {
        let grid = crate::grid::Grid::unit(1, 2).unwrap();
        let v = ScalarField::new(grid, vec![0.0, -1.0]).unwrap();
        let err = v_to_u(&v, &GradientCoupling::Constant(1.0)).unwrap_err();
        assert!(matches!(
            err,
            NonlinearityError::DomainViolation { node: 1, .. }
        ));
    }

    #[test]
    fn u_to_v_reports_overflow() {
        let grid = crate::grid::Grid::unit(1, 2).unwrap();
        let u = ScalarField::new(grid, vec![0.0, 800.0]).unwrap();
        let err = u_to_v(&u, &GradientCoupling::Constant(1.0)).unwrap_err();
        assert!(matches!(err, NonlinearityError::Overflow { node: 1, .. }));
    }

    #[test]
    fn coupling_field_bounds_are_enforced() {
        assert!(GradientCoupling::field(vec![0.5, 1.0], 0.5, 1.0).is_ok());
        assert!(GradientCoupling::field(vec![0.4, 1.0], 0.5, 1.0).is_err());
        assert!(GradientCoupling::field(vec![0.0], 0.0, 1.0).is_err());
    }
}
