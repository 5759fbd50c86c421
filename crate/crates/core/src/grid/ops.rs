//! Finite-difference operators, quadrature and norms.
//!
//! The diffusion operator `-div(A grad v)` uses flux differences across
//! cell faces for the diagonal of `A` (face coefficient = mean of the two
//! adjacent nodal values, or the interior value on a boundary face) and the
//! composition of centred differences `-D_i (a_ij D_j v)` for off-diagonal
//! entries. Both pieces are symmetric under the quadrature pairing, and
//! `h1_seminorm_sq` is the matching energy, so `<L v, v> = |v|_A^2` holds to
//! round-off.

use super::{GridError, MatrixField, ScalarField, MAX_DIM};

/// Emits `(column, coefficient)` pairs of row `row` of the discrete operator.
/// Columns may repeat; boundary neighbours are dropped (zero Dirichlet data).
#[inline]
pub(crate) fn for_each_operator_entry(
    a: &MatrixField,
    row: usize,
    mut emit: impl FnMut(usize, f64),
) {
    let grid = a.grid();
    let dim = grid.dim();
    let mut diag = 0.0;
    for d in 0..dim {
        let h = grid.spacing(d);
        let inv_h2 = 1.0 / (h * h);
        let here = a.entry(row, d, d);
        for step in [-1isize, 1] {
            match grid.neighbor(row, d, step) {
                Some(nb) => {
                    let face = 0.5 * (here + a.entry(nb, d, d));
                    diag += face * inv_h2;
                    emit(nb, -face * inv_h2);
                }
                None => diag += here * inv_h2,
            }
        }
    }
    emit(row, diag);
    if a.is_diagonal() {
        return;
    }
    for d in 0..dim {
        for e in 0..dim {
            if d == e {
                continue;
            }
            let denom = 4.0 * grid.spacing(d) * grid.spacing(e);
            for sd in [-1isize, 1] {
                let Some(y) = grid.neighbor(row, d, sd) else {
                    continue;
                };
                let coef = -(sd as f64) * a.entry(y, d, e) / denom;
                if let Some(yp) = grid.neighbor(y, e, 1) {
                    emit(yp, coef);
                }
                if let Some(ym) = grid.neighbor(y, e, -1) {
                    emit(ym, -coef);
                }
            }
        }
    }
}

pub(crate) fn apply_operator_slice(a: &MatrixField, v: &[f64], out: &mut [f64]) {
    debug_assert_eq!(v.len(), a.grid().len());
    for (row, slot) in out.iter_mut().enumerate() {
        let mut acc = 0.0;
        for_each_operator_entry(a, row, |col, c| acc += c * v[col]);
        *slot = acc;
    }
}

fn check(a: &MatrixField, v: &ScalarField) -> Result<(), GridError> {
    if a.grid() == v.grid() {
        Ok(())
    } else {
        Err(GridError::Mismatch)
    }
}

/// Second-order discretization of `-div(A grad v)` with zero Dirichlet data.
pub fn apply_operator(a: &MatrixField, v: &ScalarField) -> Result<ScalarField, GridError> {
    check(a, v)?;
    let mut out = vec![0.0; v.len()];
    apply_operator_slice(a, v.values(), &mut out);
    Ok(ScalarField::from_vec(*v.grid(), out))
}

/// Centred-difference gradient at a node, with ghost value zero outside.
#[inline]
pub fn centered_gradient(v: &ScalarField, node: usize) -> [f64; MAX_DIM] {
    centered_gradient_slice(v.grid(), v.values(), node)
}

#[inline]
pub(crate) fn centered_gradient_slice(
    grid: &super::Grid,
    v: &[f64],
    node: usize,
) -> [f64; MAX_DIM] {
    let mut g = [0.0; MAX_DIM];
    for (d, slot) in g.iter_mut().enumerate().take(grid.dim()) {
        let plus = grid.neighbor(node, d, 1).map_or(0.0, |j| v[j]);
        let minus = grid.neighbor(node, d, -1).map_or(0.0, |j| v[j]);
        *slot = (plus - minus) / (2.0 * grid.spacing(d));
    }
    g
}

/// Nodal `<A grad v, grad v>` with centred differences.
pub fn gradient_sq(a: &MatrixField, v: &ScalarField) -> Result<ScalarField, GridError> {
    check(a, v)?;
    let grid = *v.grid();
    let dim = grid.dim();
    let out = (0..grid.len())
        .map(|node| {
            let g = centered_gradient(v, node);
            let mut acc = 0.0;
            for i in 0..dim {
                for j in 0..dim {
                    acc += a.entry(node, i, j) * g[i] * g[j];
                }
            }
            acc
        })
        .collect();
    Ok(ScalarField::from_vec(grid, out))
}

/// Node-centred quadrature `sum v_i * prod h_j` (sequential summation order).
pub fn integrate(v: &ScalarField) -> f64 {
    v.values().iter().sum::<f64>() * v.grid().cell_volume()
}

/// Quadrature pairing `integral of u * v`.
pub fn dot(u: &ScalarField, v: &ScalarField) -> Result<f64, GridError> {
    u.check_same_grid(v)?;
    Ok(dot_slice(u.values(), v.values()) * u.grid().cell_volume())
}

#[inline]
pub(crate) fn dot_slice(u: &[f64], v: &[f64]) -> f64 {
    u.iter().zip(v).map(|(a, b)| a * b).sum()
}

/// Discrete `L^2` norm.
pub fn l2_norm(v: &ScalarField) -> f64 {
    (dot_slice(v.values(), v.values()) * v.grid().cell_volume()).sqrt()
}

/// Discrete `L^p` norm, `p >= 1`.
pub fn lp_norm(v: &ScalarField, p: f64) -> Result<f64, GridError> {
    if !(p >= 1.0) || !p.is_finite() {
        return Err(GridError::InvalidExponent(p));
    }
    let sum: f64 = v.values().iter().map(|x| x.abs().powf(p)).sum();
    Ok((sum * v.grid().cell_volume()).powf(1.0 / p))
}

/// Energy `integral of <A grad v, grad v>` assembled face by face; equals the
/// quadrature pairing of `apply_operator(a, v)` with `v`.
pub fn h1_seminorm_sq(a: &MatrixField, v: &ScalarField) -> Result<f64, GridError> {
    check(a, v)?;
    Ok(h1_seminorm_sq_slice(a, v.values()))
}

pub(crate) fn h1_seminorm_sq_slice(a: &MatrixField, v: &[f64]) -> f64 {
    let grid = a.grid();
    let dim = grid.dim();
    let mut acc = 0.0;
    for node in 0..grid.len() {
        for d in 0..dim {
            let h = grid.spacing(d);
            let here = a.entry(node, d, d);
            match grid.neighbor(node, d, 1) {
                Some(nb) => {
                    let diff = (v[nb] - v[node]) / h;
                    acc += 0.5 * (here + a.entry(nb, d, d)) * diff * diff;
                }
                None => acc += here * (v[node] / h).powi(2),
            }
            if grid.neighbor(node, d, -1).is_none() {
                acc += here * (v[node] / h).powi(2);
            }
        }
        if !a.is_diagonal() {
            let g = centered_gradient_slice(grid, v, node);
            for i in 0..dim {
                for j in 0..dim {
                    if i != j {
                        acc += a.entry(node, i, j) * g[i] * g[j];
                    }
                }
            }
        }
    }
    acc * grid.cell_volume()
}
