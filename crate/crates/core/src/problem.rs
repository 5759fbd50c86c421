//! The coefficient bundle defining one problem instance.

use thiserror::Error;

use crate::grid::{Grid, GridError, MatrixField, ScalarField};
use crate::nonlinearity::{GradientCoupling, NonlinearityError};

/// Lebesgue exponent standing in for `N/2` in the smallness checks.
pub const HALF_DIM_EXPONENT: f64 = 1.5;
/// Sobolev exponent `2* = 2N/(N-2)` for `N = 3`, used in every dimension.
pub const SOBOLEV_EXPONENT: f64 = 6.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProblemError {
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Coupling(#[from] NonlinearityError),
    #[error("control exponent p = {p} is not admissible in dimension {dim} (need {need})")]
    Exponent {
        p: f64,
        dim: usize,
        need: &'static str,
    },
    #[error("multiplicity requires c0 >= 0 at every node (node {node} has {value})")]
    NegativeC0 { node: usize, value: f64 },
    #[error("multiplicity requires c0 to be nonzero somewhere")]
    TrivialC0,
    #[error("coupling must be positive here; apply sign normalization first")]
    NotNormalized,
}

/// `-div(A grad u) = c0 u + mu <A grad u, grad u> + f` on a box, together
/// with the integrability exponent `p` of the data.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemData {
    pub grid: Grid,
    pub a: MatrixField,
    pub c0: ScalarField,
    pub f: ScalarField,
    pub coupling: GradientCoupling,
    pub p: f64,
}

impl ProblemData {
    pub fn new(
        a: MatrixField,
        c0: ScalarField,
        f: ScalarField,
        coupling: GradientCoupling,
        p: f64,
    ) -> Result<Self, ProblemError> {
        let grid = *a.grid();
        if *c0.grid() != grid || *f.grid() != grid {
            return Err(GridError::Mismatch.into());
        }
        coupling.check_len(grid.len())?;
        if let GradientCoupling::Constant(mu) = coupling {
            if mu == 0.0 {
                return Err(NonlinearityError::ZeroCoupling.into());
            }
            if !mu.is_finite() {
                return Err(NonlinearityError::NonPositiveCoupling(mu).into());
            }
        }
        check_exponent(p, grid.dim())?;
        Ok(Self {
            grid,
            a,
            c0,
            f,
            coupling,
            p,
        })
    }

    /// The model problem `-Laplace u = c0 u + mu |grad u|^2 + f`.
    pub fn model(c0: ScalarField, f: ScalarField, mu: f64, p: f64) -> Result<Self, ProblemError> {
        let a = MatrixField::identity(*c0.grid());
        Self::new(a, c0, f, GradientCoupling::Constant(mu), p)
    }

    /// `c0 >= 0` everywhere and `c0` not identically zero.
    pub fn check_multiplicity(&self) -> Result<(), ProblemError> {
        if let Some((node, &value)) = self.c0.values().iter().enumerate().find(|(_, c)| **c < 0.0) {
            return Err(ProblemError::NegativeC0 { node, value });
        }
        if self.c0.values().iter().all(|&c| c == 0.0) {
            return Err(ProblemError::TrivialC0);
        }
        Ok(())
    }

    pub fn require_normalized(&self) -> Result<(), ProblemError> {
        if self.coupling.is_positive() {
            Ok(())
        } else {
            Err(ProblemError::NotNormalized)
        }
    }

    /// Nodal `c0 + mu f`, the linear potential of the transformed equation.
    pub fn linear_potential(&self) -> Vec<f64> {
        self.c0
            .values()
            .iter()
            .zip(self.f.values())
            .enumerate()
            .map(|(i, (c, f))| c + self.coupling.at(i) * f)
            .collect()
    }

    /// Copy with a different zero-order coefficient.
    pub fn with_c0(&self, c0: ScalarField) -> Result<Self, ProblemError> {
        Self::new(
            self.a.clone(),
            c0,
            self.f.clone(),
            self.coupling.clone(),
            self.p,
        )
    }

    /// Copy with a different source term.
    pub fn with_f(&self, f: ScalarField) -> Result<Self, ProblemError> {
        Self::new(
            self.a.clone(),
            self.c0.clone(),
            f,
            self.coupling.clone(),
            self.p,
        )
    }
}

fn check_exponent(p: f64, dim: usize) -> Result<(), ProblemError> {
    let ok = if dim >= 3 {
        p > dim as f64 / 2.0
    } else {
        p >= HALF_DIM_EXPONENT
    };
    if ok && p.is_finite() {
        Ok(())
    } else {
        Err(ProblemError::Exponent {
            p,
            dim,
            need: if dim >= 3 { "p > N/2" } else { "p >= 1.5" },
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> Grid {
        Grid::unit(2, 3).unwrap()
    }

    #[test]
    fn exponent_rules_follow_dimension() {
        let g = grid();
        let z = ScalarField::zeros(g);
        assert!(ProblemData::model(z.clone(), z.clone(), 1.0, 1.5).is_ok());
        assert!(matches!(
            ProblemData::model(z.clone(), z.clone(), 1.0, 1.2),
            Err(ProblemError::Exponent { .. })
        ));
        let g3 = Grid::unit(3, 2).unwrap();
        let z3 = ScalarField::zeros(g3);
        assert!(ProblemData::model(z3.clone(), z3.clone(), 1.0, 1.5).is_err());
        assert!(ProblemData::model(z3.clone(), z3, 1.0, 1.6).is_ok());
    }

    #[test]
    fn multiplicity_mode_checks_c0() {
        let g = grid();
        let z = ScalarField::zeros(g);
        let p = ProblemData::model(z.clone(), z.clone(), 1.0, 2.0).unwrap();
        assert_eq!(p.check_multiplicity(), Err(ProblemError::TrivialC0));
        let mut c = vec![0.0; g.len()];
        c[4] = -0.1;
        let p = ProblemData::model(ScalarField::new(g, c).unwrap(), z.clone(), 1.0, 2.0).unwrap();
        assert!(matches!(
            p.check_multiplicity(),
            Err(ProblemError::NegativeC0 { node: 4, .. })
        ));
        assert!(ProblemData::model(z.clone(), z, 0.0, 2.0).is_err());
    }
}
