use super::{Grid, GridError, MAX_DIM};

/// Nodal values of a scalar on the interior nodes of a grid.
///
/// Boundary values are implicitly zero.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: Grid,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self, GridError> {
        if values.len() != grid.len() {
            return Err(GridError::LengthMismatch {
                expected: grid.len(),
                got: values.len(),
            });
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(GridError::NonFinite { index });
        }
        Ok(Self { grid, values })
    }

    /// Wraps values produced by in-crate arithmetic; finiteness is the
    /// caller's responsibility.
    pub(crate) fn from_vec(grid: Grid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self { grid, values }
    }

    pub fn zeros(grid: Grid) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.len()],
        }
    }

    pub fn constant(grid: Grid, value: f64) -> Self {
        Self {
            grid,
            values: vec![value; grid.len()],
        }
    }

    /// Samples `f` at node coordinates.
    pub fn from_fn(grid: Grid, mut f: impl FnMut(&[f64]) -> f64) -> Self {
        let values = (0..grid.len())
            .map(|i| f(&grid.coords(i)[..grid.dim()]))
            .collect();
        Self { grid, values }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self::from_vec(self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        self.map(|v| alpha * v)
    }

    /// `self + alpha * other`.
    pub fn add_scaled(&self, alpha: f64, other: &ScalarField) -> Result<Self, GridError> {
        self.check_same_grid(other)?;
        Ok(Self::from_vec(
            self.grid,
            self.values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a + alpha * b)
                .collect(),
        ))
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Positive part `max(v, 0)`.
    pub fn positive_part(&self) -> Self {
        self.map(|v| v.max(0.0))
    }

    /// Negative part `max(-v, 0)`.
    pub fn negative_part(&self) -> Self {
        self.map(|v| (-v).max(0.0))
    }

    /// Index of the largest value; ties go to the lowest index.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &v) in self.values.iter().enumerate() {
            if v > self.values[best] {
                best = i;
            }
        }
        best
    }

    pub(crate) fn check_same_grid(&self, other: &ScalarField) -> Result<(), GridError> {
        if self.grid == other.grid {
            Ok(())
        } else {
            Err(GridError::Mismatch)
        }
    }
}

/// A symmetric `N x N` coefficient matrix at every interior node, with
/// ellipticity bounds `lower * I <= A(x) <= upper * I`.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixField {
    grid: Grid,
    entries: Vec<f64>,
    lower: f64,
    upper: f64,
    diagonal: bool,
}

impl MatrixField {
    /// Validates nodal matrices (row-major, `N*N` per node). When `bounds`
    /// is `None` the tightest bounds are computed from the nodal spectra.
    pub fn new(
        grid: Grid,
        entries: Vec<f64>,
        bounds: Option<(f64, f64)>,
    ) -> Result<Self, GridError> {
        let dim = grid.dim();
        let block = dim * dim;
        if entries.len() != grid.len() * block {
            return Err(GridError::LengthMismatch {
                expected: grid.len() * block,
                got: entries.len(),
            });
        }
        if let Some(index) = entries.iter().position(|v| !v.is_finite()) {
            return Err(GridError::NonFinite {
                index: index / block,
            });
        }
        let mut diagonal = true;
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for node in 0..grid.len() {
            let m = &entries[node * block..(node + 1) * block];
            let scale = m.iter().fold(0.0f64, |s, v| s.max(v.abs())).max(1.0);
            for i in 0..dim {
                for j in 0..i {
                    if (m[i * dim + j] - m[j * dim + i]).abs() > 1e-12 * scale {
                        return Err(GridError::NotSymmetric { node });
                    }
                    if m[i * dim + j] != 0.0 {
                        diagonal = false;
                    }
                }
            }
            let eig = symmetric_eigenvalues(m, dim);
            for &e in &eig[..dim] {
                lo = lo.min(e);
                hi = hi.max(e);
                if let Some((lower, upper)) = bounds {
                    let slack = 1e-12 * upper.abs().max(1.0);
                    if e < lower - slack || e > upper + slack {
                        return Err(GridError::EigenvalueOutOfBounds {
                            node,
                            value: e,
                            lower,
                            upper,
                        });
                    }
                }
            }
        }
        let (lower, upper) = bounds.unwrap_or((lo, hi));
        if !(lower > 0.0 && lower <= upper) {
            return Err(GridError::InvalidBounds { lower, upper });
        }
        Ok(Self {
            grid,
            entries,
            lower,
            upper,
            diagonal,
        })
    }

    pub fn identity(grid: Grid) -> Self {
        Self::isotropic(&ScalarField::constant(grid, 1.0)).expect("identity is elliptic")
    }

    /// `A(x) = a(x) I`; requires `a > 0`.
    pub fn isotropic(a: &ScalarField) -> Result<Self, GridError> {
        let grid = *a.grid();
        let dim = grid.dim();
        let mut entries = vec![0.0; grid.len() * dim * dim];
        for (node, &value) in a.values().iter().enumerate() {
            for d in 0..dim {
                entries[node * dim * dim + d * dim + d] = value;
            }
        }
        Self::new(grid, entries, None)
    }

    /// The same matrix at every node.
    pub fn constant(
        grid: Grid,
        matrix: &[f64],
        bounds: Option<(f64, f64)>,
    ) -> Result<Self, GridError> {
        let entries = matrix
            .iter()
            .copied()
            .cycle()
            .take(grid.len() * matrix.len())
            .collect();
        Self::new(grid, entries, bounds)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Declared ellipticity constant `lambda`.
    pub fn lower(&self) -> f64 {
        self.lower
    }

    /// Declared upper bound `Lambda`.
    pub fn upper(&self) -> f64 {
        self.upper
    }

    /// True when every off-diagonal entry vanishes.
    pub fn is_diagonal(&self) -> bool {
        self.diagonal
    }

    #[inline]
    pub fn entry(&self, node: usize, i: usize, j: usize) -> f64 {
        let dim = self.grid.dim();
        self.entries[node * dim * dim + i * dim + j]
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }
}

/// Eigenvalues of a symmetric `dim x dim` matrix (`dim <= 3`), ascending.
pub(crate) fn symmetric_eigenvalues(m: &[f64], dim: usize) -> [f64; MAX_DIM] {
    match dim {
        1 => [m[0], 0.0, 0.0],
        2 => {
            let (a, b, d) = (m[0], m[1], m[3]);
            let mean = 0.5 * (a + d);
            let rad = (0.25 * (a - d) * (a - d) + b * b).sqrt();
            [mean - rad, mean + rad, 0.0]
        }
        _ => {
            // Trigonometric solution of the characteristic cubic.
            let (a00, a01, a02, a11, a12, a22) = (m[0], m[1], m[2], m[4], m[5], m[8]);
            let p1 = a01 * a01 + a02 * a02 + a12 * a12;
            if p1 == 0.0 {
                let mut e = [a00, a11, a22];
                e.sort_by(f64::total_cmp);
                return e;
            }
            let q = (a00 + a11 + a22) / 3.0;
            let p2 = (a00 - q).powi(2) + (a11 - q).powi(2) + (a22 - q).powi(2) + 2.0 * p1;
            let p = (p2 / 6.0).sqrt();
            let b = |r: usize, c: usize| (m[r * 3 + c] - if r == c { q } else { 0.0 }) / p;
            let det = b(0, 0) * (b(1, 1) * b(2, 2) - b(1, 2) * b(2, 1))
                - b(0, 1) * (b(1, 0) * b(2, 2) - b(1, 2) * b(2, 0))
                + b(0, 2) * (b(1, 0) * b(2, 1) - b(1, 1) * b(2, 0));
            let r = (det / 2.0).clamp(-1.0, 1.0);
            let phi = r.acos() / 3.0;
            let e_max = q + 2.0 * p * phi.cos();
            let e_min = q + 2.0 * p * (phi + 2.0 * std::f64::consts::PI / 3.0).cos();
            let e_mid = 3.0 * q - e_max - e_min;
            [e_min, e_mid, e_max]
        }
    }
}
