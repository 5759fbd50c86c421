//! Tensor-product box grids with homogeneous Dirichlet boundary.
//!
//! Only interior nodes carry unknowns. Node `m = (m_0, .., m_{N-1})` sits at
//! `x_d = (m_d + 1) h_d`, so the box along axis `d` is `[0, (n_d + 1) h_d]`
//! and every boundary value is implicitly zero. Nodes are stored row-major:
//! the last axis varies fastest.

mod field;
pub mod io;
mod ops;

pub use field::{MatrixField, ScalarField};
pub use ops::{
    apply_operator, centered_gradient, dot, gradient_sq, h1_seminorm_sq, integrate, l2_norm,
    lp_norm,
};
pub(crate) use ops::{
    apply_operator_slice, centered_gradient_slice, dot_slice, for_each_operator_entry,
    h1_seminorm_sq_slice,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest supported spatial dimension.
pub const MAX_DIM: usize = 3;

/// Errors raised by grid construction and grid operators.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum GridError {
    #[error("dimension must be 1, 2 or 3 (got {0})")]
    InvalidDimension(usize),
    #[error("axis {axis}: interior node count must be at least 2 (got {count})")]
    InvalidCount { axis: usize, count: usize },
    #[error("axis {axis}: spacing must be positive and finite (got {spacing})")]
    InvalidSpacing { axis: usize, spacing: f64 },
    #[error("fields live on different grids")]
    Mismatch,
    #[error("expected {expected} nodal values, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("non-finite value at node {index}")]
    NonFinite { index: usize },
    #[error("matrix at node {node} is not symmetric")]
    NotSymmetric { node: usize },
    #[error("matrix at node {node} has eigenvalue {value} outside [{lower}, {upper}]")]
    EigenvalueOutOfBounds {
        node: usize,
        value: f64,
        lower: f64,
        upper: f64,
    },
    #[error("ellipticity bounds must satisfy 0 < lower <= upper (got {lower}, {upper})")]
    InvalidBounds { lower: f64, upper: f64 },
    #[error("Lebesgue exponent must be >= 1 (got {0})")]
    InvalidExponent(f64),
}

/// An `N`-dimensional box of interior nodes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    dim: usize,
    n: [usize; MAX_DIM],
    h: [f64; MAX_DIM],
}

impl Grid {
    /// Builds a grid from interior counts and spacings (one per axis).
    pub fn new(counts: &[usize], spacings: &[f64]) -> Result<Self, GridError> {
        let dim = counts.len();
        if dim == 0 || dim > MAX_DIM {
            return Err(GridError::InvalidDimension(dim));
        }
        if spacings.len() != dim {
            return Err(GridError::LengthMismatch {
                expected: dim,
                got: spacings.len(),
            });
        }
        let mut n = [1; MAX_DIM];
        let mut h = [1.0; MAX_DIM];
        for axis in 0..dim {
            if counts[axis] < 2 {
                return Err(GridError::InvalidCount {
                    axis,
                    count: counts[axis],
                });
            }
            if !(spacings[axis] > 0.0 && spacings[axis].is_finite()) {
                return Err(GridError::InvalidSpacing {
                    axis,
                    spacing: spacings[axis],
                });
            }
            n[axis] = counts[axis];
            h[axis] = spacings[axis];
        }
        Ok(Self { dim, n, h })
    }

    /// Builds a grid covering `[0, L_d]` along each axis with `n_d` interior nodes.
    pub fn from_lengths(counts: &[usize], lengths: &[f64]) -> Result<Self, GridError> {
        if counts.len() != lengths.len() {
            return Err(GridError::LengthMismatch {
                expected: counts.len(),
                got: lengths.len(),
            });
        }
        let spacings: Vec<f64> = counts
            .iter()
            .zip(lengths)
            .map(|(&n, &l)| l / (n as f64 + 1.0))
            .collect();
        Self::new(counts, &spacings)
    }

    /// Unit-length cube `[0,1]^dim` with `n` interior nodes per axis.
    pub fn unit(dim: usize, n: usize) -> Result<Self, GridError> {
        Self::from_lengths(&vec![n; dim], &vec![1.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn counts(&self) -> &[usize] {
        &self.n[..self.dim]
    }

    pub fn spacings(&self) -> &[f64] {
        &self.h[..self.dim]
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        self.h[axis]
    }

    pub fn count(&self, axis: usize) -> usize {
        self.n[axis]
    }

    /// Box side length `(n_d + 1) h_d`.
    pub fn length(&self, axis: usize) -> f64 {
        (self.n[axis] as f64 + 1.0) * self.h[axis]
    }

    pub fn lengths(&self) -> Vec<f64> {
        (0..self.dim).map(|d| self.length(d)).collect()
    }

    /// Measure of the box.
    pub fn volume(&self) -> f64 {
        (0..self.dim).map(|d| self.length(d)).product()
    }

    /// Total number of interior nodes.
    pub fn len(&self) -> usize {
        self.counts().iter().product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Quadrature weight of one node.
    pub fn cell_volume(&self) -> f64 {
        self.spacings().iter().product()
    }

    /// Linear-index stride of each axis.
    pub fn stride(&self, axis: usize) -> usize {
        self.n[axis + 1..self.dim].iter().product()
    }

    pub fn index(&self, multi: &[usize]) -> usize {
        debug_assert_eq!(multi.len(), self.dim);
        multi
            .iter()
            .enumerate()
            .fold(0, |acc, (d, &m)| acc * self.n[d] + m)
    }

    pub fn multi_index(&self, mut index: usize) -> [usize; MAX_DIM] {
        let mut multi = [0; MAX_DIM];
        for d in (0..self.dim).rev() {
            multi[d] = index % self.n[d];
            index /= self.n[d];
        }
        multi
    }

    /// Physical coordinates of a node (unused axes are zero).
    pub fn coords(&self, index: usize) -> [f64; MAX_DIM] {
        let multi = self.multi_index(index);
        let mut x = [0.0; MAX_DIM];
        for d in 0..self.dim {
            x[d] = (multi[d] as f64 + 1.0) * self.h[d];
        }
        x
    }

    /// Neighbour along `axis` in direction `step` (`+1` or `-1`), or `None`
    /// when that node lies on the boundary.
    #[inline]
    pub fn neighbor(&self, index: usize, axis: usize, step: isize) -> Option<usize> {
        let stride = self.stride(axis);
        let m = (index / stride) % self.n[axis];
        if step > 0 {
            (m + 1 < self.n[axis]).then_some(index + stride)
        } else {
            (m > 0).then(|| index - stride)
        }
    }

    /// Half-bandwidth of the operator matrix in the row-major ordering.
    pub fn bandwidth(&self, with_cross_terms: bool) -> usize {
        if self.dim == 1 {
            return 1;
        }
        if with_cross_terms {
            self.stride(0) + self.stride(1)
        } else {
            self.stride(0)
        }
    }

    /// Smallest eigenvalue of the discrete Dirichlet Laplacian on this grid
    /// (closed form for the 3-point stencil).
    pub fn laplacian_min_eigenvalue(&self) -> f64 {
        (0..self.dim)
            .map(|d| {
                let h = self.h[d];
                let s = (std::f64::consts::PI * h / (2.0 * self.length(d))).sin();
                4.0 * s * s / (h * h)
            })
            .sum()
    }

    /// Same node counts, with spacing halved and one node inserted between
    /// each pair (`n -> 2n + 1`); the box is unchanged.
    pub fn refined(&self) -> Self {
        let counts: Vec<usize> = self.counts().iter().map(|&n| 2 * n + 1).collect();
        let spacings: Vec<f64> = self.spacings().iter().map(|&h| h / 2.0).collect();
        Self::new(&counts, &spacings).expect("refinement of a valid grid is valid")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_geometry() {
        assert_eq!(Grid::new(&[], &[]), Err(GridError::InvalidDimension(0)));
        assert!(matches!(
            Grid::new(&[1], &[0.5]),
            Err(GridError::InvalidCount { axis: 0, count: 1 })
        ));
        assert!(matches!(
            Grid::new(&[3, 3], &[0.25, -1.0]),
            Err(GridError::InvalidSpacing { axis: 1, .. })
        ));
        assert!(Grid::new(&[3, 3, 3, 3], &[0.1; 4]).is_err());
    }

    #[test]
    fn index_roundtrip_3d() {
        let g = Grid::new(&[3, 4, 5], &[0.1, 0.2, 0.3]).unwrap();
        assert_eq!(g.len(), 60);
        for i in 0..g.len() {
            let m = g.multi_index(i);
            assert_eq!(g.index(&m[..3]), i);
        }
        assert_eq!(g.stride(0), 20);
        assert_eq!(g.stride(2), 1);
        assert!((g.length(1) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn neighbors_stop_at_boundary() {
        let g = Grid::unit(2, 3).unwrap();
        let corner = g.index(&[0, 0]);
        assert_eq!(g.neighbor(corner, 0, -1), None);
        assert_eq!(g.neighbor(corner, 1, -1), None);
        assert_eq!(g.neighbor(corner, 0, 1), Some(g.index(&[1, 0])));
        assert_eq!(g.neighbor(corner, 1, 1), Some(g.index(&[0, 1])));
        let last = g.index(&[2, 2]);
        assert_eq!(g.neighbor(last, 1, 1), None);
    }

    #[test]
    fn refinement_keeps_box() {
        let g = Grid::from_lengths(&[7, 3], &[1.0, 2.0]).unwrap();
        let r = g.refined();
        assert_eq!(r.counts(), &[15, 7]);
        assert!((r.length(1) - 2.0).abs() < 1e-14);
    }
}
