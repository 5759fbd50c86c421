#![allow(dead_code)]

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use noncoercive_core::nonlinearity::g;
use noncoercive_core::{GradientCoupling, Grid, MatrixField, ProblemData, ScalarField};

/// Dense `-div(A grad v)` assembled from first principles: face-averaged
/// flux differences for the diagonal of `A` and `-D_d (a_de D_e v)` with
/// centred differences for the rest.
pub fn dense_operator(a: &MatrixField) -> DMatrix<f64> {
    let grid = *a.grid();
    let n = grid.len();
    let dim = grid.dim();
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        let mi = grid.multi_index(i);
        for d in 0..dim {
            let h2 = grid.spacing(d).powi(2);
            for step in [-1i64, 1] {
                let k = mi[d] as i64 + step;
                if k < 0 || k >= grid.count(d) as i64 {
                    m[(i, i)] += a.entry(i, d, d) / h2;
                    continue;
                }
                let mut mj = mi;
                mj[d] = k as usize;
                let j = grid.index(&mj[..dim]);
                let face = 0.5 * (a.entry(i, d, d) + a.entry(j, d, d));
                m[(i, i)] += face / h2;
                m[(i, j)] -= face / h2;
            }
        }
    }
    if a.is_diagonal() {
        return m;
    }
    for d in 0..dim {
        for e in 0..dim {
            if d == e {
                continue;
            }
            let cd = centred(&grid, d);
            let ce = centred(&grid, e);
            let w = DMatrix::from_fn(n, n, |i, j| if i == j { a.entry(i, d, e) } else { 0.0 });
            m -= &cd * w * ce;
        }
    }
    m
}

/// Centred first difference along `axis`, zero outside the box.
pub fn centred(grid: &Grid, axis: usize) -> DMatrix<f64> {
    let n = grid.len();
    let dim = grid.dim();
    let h = grid.spacing(axis);
    let mut c = DMatrix::zeros(n, n);
    for i in 0..n {
        let mi = grid.multi_index(i);
        for step in [-1i64, 1] {
            let k = mi[axis] as i64 + step;
            if k < 0 || k >= grid.count(axis) as i64 {
                continue;
            }
            let mut mj = mi;
            mj[axis] = k as usize;
            c[(i, grid.index(&mj[..dim]))] += step as f64 / (2.0 * h);
        }
    }
    c
}

/// Smooth, uniformly elliptic, non-diagonal coefficient field.
pub fn anisotropic(grid: Grid) -> MatrixField {
    let dim = grid.dim();
    let mut entries = Vec::with_capacity(grid.len() * dim * dim);
    for i in 0..grid.len() {
        let x = grid.coords(i);
        let a11 = 1.5 + 0.5 * (PI * x[0]).sin();
        let a22 = 1.0 + 0.3 * x[1];
        let off = 0.3 * (PI * x[1]).cos();
        if dim == 1 {
            entries.push(a11);
        } else {
            entries.extend([a11, off, off, a22]);
        }
    }
    MatrixField::new(grid, entries, None).unwrap()
}

pub fn bump(grid: Grid, amplitude: f64, width: f64) -> ScalarField {
    ScalarField::from_fn(grid, |x| {
        let r2: f64 = x[..grid.dim()].iter().map(|c| (c - 0.5).powi(2)).sum();
        amplitude * (-r2 / (2.0 * width * width)).exp()
    })
}

pub fn sine_product(grid: Grid, amplitude: f64) -> ScalarField {
    ScalarField::from_fn(grid, |x| {
        amplitude
            * x[..grid.dim()]
                .iter()
                .map(|c| (PI * c).sin())
                .product::<f64>()
    })
}

/// The multiplicity fixture on an `n x n` interior grid.
pub fn fixture(n: usize, mu: f64) -> ProblemData {
    let grid = Grid::unit(2, n).unwrap();
    ProblemData::model(bump(grid, 0.5, 0.2), sine_product(grid, 0.1), mu, 2.0).unwrap()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}

pub struct Instance {
    pub name: &'static str,
    pub data: ProblemData,
    pub potentials: Vec<ScalarField>,
}

pub fn data_with(a: MatrixField) -> ProblemData {
    let grid = *a.grid();
    let z = ScalarField::zeros(grid);
    ProblemData::new(a, z.clone(), z, GradientCoupling::Constant(1.0), 2.0).unwrap()
}

/// Every 1D and 2D oracle instance, all with at most 400 nodes.
pub fn instances() -> Vec<Instance> {
    let mut out = Vec::new();
    let grids = [
        ("1d n=3", Grid::unit(1, 3).unwrap()),
        ("1d n=50", Grid::unit(1, 50).unwrap()),
        ("1d n=399 L=2", Grid::from_lengths(&[399], &[2.0]).unwrap()),
        ("2d 5x5", Grid::unit(2, 5).unwrap()),
        (
            "2d 10x12 box",
            Grid::from_lengths(&[10, 12], &[1.0, 1.5]).unwrap(),
        ),
        (
            "2d 19x21",
            Grid::from_lengths(&[19, 21], &[1.0, 1.0]).unwrap(),
        ),
    ];
    for (name, grid) in grids {
        let iso = ScalarField::from_fn(grid, |x| 1.0 + 0.5 * x[0]);
        let lam1 = grid.laplacian_min_eigenvalue();
        let potentials = vec![
            ScalarField::zeros(grid),
            ScalarField::constant(grid, 1.0),
            bump(grid, 0.6 * lam1, 0.2),
            ScalarField::from_fn(grid, |x| 0.4 * lam1 * (6.0 * x[0]).sin()),
        ];
        out.push(Instance {
            name,
            data: data_with(MatrixField::identity(grid)),
            potentials: potentials.clone(),
        });
        out.push(Instance {
            name,
            data: data_with(MatrixField::isotropic(&iso).unwrap()),
            potentials: potentials.clone(),
        });
        if grid.dim() == 2 {
            out.push(Instance {
                name,
                data: data_with(anisotropic(grid)),
                potentials,
            });
        }
    }
    out
}

/// `1 - max eig(L^{-1/2} h L^{-1/2})` through a dense Cholesky factor.
pub fn dense_lambda(l: &DMatrix<f64>, h: &ScalarField) -> f64 {
    let chol = l.clone().cholesky().expect("operator is positive definite");
    let lower = chol.l();
    let inv = lower.clone().try_inverse().unwrap();
    let hm = DMatrix::from_diagonal(&DVector::from_column_slice(h.values()));
    let m = &inv * hm * inv.transpose();
    let m = (&m + m.transpose()) * 0.5;
    let top = m.symmetric_eigenvalues().max();
    1.0 - top
}

/// Five-point Gauss-Legendre nodes and weights on [-1, 1].
const GL5: [(f64, f64); 5] = [
    (0.0, 0.568_888_888_888_888_9),
    (-0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
    (0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
    (-0.906_179_845_938_664, 0.236_926_885_056_189_1),
    (0.906_179_845_938_664, 0.236_926_885_056_189_1),
];

pub fn gauss(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    let w = (b - a) / panels as f64;
    (0..panels)
        .map(|k| {
            let lo = a + k as f64 * w;
            let mid = lo + 0.5 * w;
            GL5.iter()
                .map(|(x, wt)| wt * f(mid + 0.5 * w * x))
                .sum::<f64>()
                * 0.5
                * w
        })
        .sum()
}

/// `integral_0^s g`, split at the kink `-1/mu` where `g'` has a
/// logarithmic singularity.
pub fn primitive_oracle(s: f64, mu: f64) -> f64 {
    let gg = |t: f64| g(t, mu).unwrap();
    let kink = -1.0 / mu;
    if s >= 0.0 {
        gauss(gg, 0.0, s, 200)
    } else if s >= kink {
        -graded_between(&gg, kink, s, 0.0)
    } else {
        -(graded_between(&gg, kink, kink, 0.0) + gauss(gg, s, kink, 200))
    }
}

/// `integral_s^b g` for `kink <= s <= b`, grading panels toward `kink`.
pub fn graded_between(gg: &impl Fn(f64) -> f64, kink: f64, s: f64, b: f64) -> f64 {
    if s == b {
        return 0.0;
    }
    let mut total = 0.0;
    let mut hi = b;
    for _ in 0..60 {
        let lo = kink + 0.5 * (hi - kink);
        if lo <= s {
            break;
        }
        total += gauss(gg, lo, hi, 4);
        hi = lo;
    }
    total + gauss(gg, s, hi, 8)
}
