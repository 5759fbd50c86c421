//! Structural invariants of the discretization, the transform and the
//! energy, on random grids and fields.

mod common;

use common::anisotropic;
use noncoercive_core::energy::{coercivity_lambda, energy};
use noncoercive_core::grid::{apply_operator, dot, h1_seminorm_sq, lp_norm};
use noncoercive_core::nonlinearity::{u_to_v, v_to_u};
use noncoercive_core::solvers::solve_linear;
use noncoercive_core::{GradientCoupling, Grid, MatrixField, ProblemData, ScalarField};
use proptest::prelude::*;

fn grid_strategy() -> impl Strategy<Value = Grid> {
    prop_oneof![
        (2usize..20, 0.5f64..2.0).prop_map(|(n, l)| Grid::from_lengths(&[n], &[l]).unwrap()),
        (2usize..9, 2usize..9, 0.5f64..2.0).prop_map(|(nx, ny, l)| Grid::from_lengths(
            &[nx, ny],
            &[l, 1.0]
        )
        .unwrap()),
        (2usize..5, 2usize..5, 2usize..5).prop_map(|(a, b, c)| Grid::from_lengths(
            &[a, b, c],
            &[1.0, 1.0, 1.0]
        )
        .unwrap()),
    ]
}

/// A grid, a coefficient field on it and two random fields.
fn setup() -> impl Strategy<Value = (MatrixField, ScalarField, ScalarField)> {
    (grid_strategy(), 0usize..3).prop_flat_map(|(grid, kind)| {
        let n = grid.len();
        (
            prop::collection::vec(-2.0f64..2.0, n),
            prop::collection::vec(-2.0f64..2.0, n),
        )
            .prop_map(move |(u, v)| {
                let a = match kind {
                    0 => MatrixField::identity(grid),
                    1 => MatrixField::isotropic(&ScalarField::from_fn(grid, |x| 1.0 + x[0] * x[0]))
                        .unwrap(),
                    _ if grid.dim() == 2 => anisotropic(grid),
                    _ => MatrixField::identity(grid),
                };
                (
                    a,
                    ScalarField::new(grid, u).unwrap(),
                    ScalarField::new(grid, v).unwrap(),
                )
            })
    })
}

fn scale(a: &MatrixField, u: &ScalarField, v: &ScalarField) -> f64 {
    let lu = apply_operator(a, u).unwrap();
    let lv = apply_operator(a, v).unwrap();
    1.0 + lu.max_abs() * v.max_abs() + lv.max_abs() * u.max_abs()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn operator_is_symmetric((a, u, v) in setup()) {
        let lu = apply_operator(&a, &u).unwrap();
        let lv = apply_operator(&a, &v).unwrap();
        let lhs = dot(&lu, &v).unwrap();
        let rhs = dot(&u, &lv).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * scale(&a, &u, &v), "{lhs} vs {rhs}");
    }

    #[test]
    fn summation_by_parts((a, _u, v) in setup()) {
        let lv = apply_operator(&a, &v).unwrap();
        let pairing = dot(&lv, &v).unwrap();
        let energy = h1_seminorm_sq(&a, &v).unwrap();
        prop_assert!((pairing - energy).abs() <= 1e-12 * scale(&a, &v, &v));
    }

    #[test]
    fn operator_is_linear((a, u, v) in setup(), alpha in -5.0f64..5.0) {
        let lu = apply_operator(&a, &u).unwrap();
        let lv = apply_operator(&a, &v).unwrap();
        let combo = u.add_scaled(alpha, &v).unwrap();
        let lc = apply_operator(&a, &combo).unwrap();
        let want = lu.add_scaled(alpha, &lv).unwrap();
        let tol = 1e-12 * (1.0 + lu.max_abs() + alpha.abs() * lv.max_abs());
        for (x, y) in lc.values().iter().zip(want.values()) {
            prop_assert!((x - y).abs() <= tol);
        }
        let scaled = apply_operator(&a, &u.scaled(3.7)).unwrap();
        for (x, y) in scaled.values().iter().zip(lu.values()) {
            prop_assert!((x - 3.7 * y).abs() <= 1e-12 * (1.0 + lu.max_abs()));
        }
    }

    #[test]
    fn energy_norm_is_positive((a, _u, v) in setup()) {
        let e = h1_seminorm_sq(&a, &v).unwrap();
        if v.max_abs() > 0.0 {
            prop_assert!(e > 0.0);
        } else {
            prop_assert_eq!(e, 0.0);
        }
    }

    #[test]
    fn quadratics_are_reproduced(grid in grid_strategy()) {
        let lengths = grid.lengths();
        let dim = grid.dim();
        // A product of per-axis quadratics vanishing on the box boundary.
        let q = |x: &[f64], skip: Option<usize>| -> f64 {
            (0..dim)
                .filter(|&d| Some(d) != skip)
                .map(|d| x[d] * (lengths[d] - x[d]))
                .product()
        };
        let v = ScalarField::from_fn(grid, |x| q(x, None));
        let lv = apply_operator(&MatrixField::identity(grid), &v).unwrap();
        for i in 0..grid.len() {
            let x = grid.coords(i);
            let want: f64 = (0..dim).map(|d| 2.0 * q(&x[..dim], Some(d))).sum();
            prop_assert!((lv.values()[i] - want).abs() <= 1e-9 * (1.0 + want.abs()));
        }
    }

    #[test]
    fn transform_round_trip(
        grid in grid_strategy(),
        mu in 0.1f64..4.0,
        seed in prop::collection::vec(-0.999f64..30.0, 1..2),
    ) {
        let lo = -1.0 / mu;
        let v = ScalarField::from_fn(grid, |x| {
            let t = (x[0] * 7.3 + seed[0]).sin();
            if t < 0.0 { -t * 0.999 * lo } else { t * 30.0 }
        });
        let c = GradientCoupling::Constant(mu);
        let u = v_to_u(&v, &c).unwrap();
        let back = u_to_v(&u, &c).unwrap();
        for (x, y) in back.values().iter().zip(v.values()) {
            prop_assert!((x - y).abs() <= 1e-12 * (1.0 + y.abs()) / (1.0 + mu * y).min(1.0));
        }
    }

    #[test]
    fn lp_norm_is_homogeneous((_a, _u, v) in setup(), alpha in -10.0f64..10.0, p in 1.0f64..8.0) {
        let base = lp_norm(&v, p).unwrap();
        let scaled = lp_norm(&v.scaled(alpha), p).unwrap();
        prop_assert!((scaled - alpha.abs() * base).abs() <= 1e-12 * (1.0 + alpha.abs() * base));
    }

    #[test]
    fn maximum_principle(
        (a, _u, v) in setup(),
        theta in -2.0f64..0.9,
    ) {
        let grid = *a.grid();
        let lam1 = grid.laplacian_min_eigenvalue() * a.lower();
        let h = ScalarField::from_fn(grid, |x| theta * lam1 * (0.5 + 0.5 * (3.0 * x[0]).cos()));
        let rhs = v.map(f64::abs);
        let z = ScalarField::zeros(grid);
        let data = ProblemData::new(a, z.clone(), z, GradientCoupling::Constant(1.0), 2.0).unwrap();
        prop_assume!(coercivity_lambda(&h, &data).unwrap() > 0.0);
        let sol = solve_linear(&h, &rhs, &data).unwrap();
        let tol = 1e-10 * (1.0 + sol.v().max_abs());
        prop_assert!(sol.v().min() >= -tol, "min {}", sol.v().min());
    }

    #[test]
    fn breakdown_adds_up((a, c, v) in setup(), mu in 0.2f64..2.0, amp in 0.0f64..5.0) {
        let grid = *a.grid();
        let c0 = c.map(|x| x.abs());
        let f = ScalarField::from_fn(grid, |x| (2.0 * x[0]).sin());
        let data = ProblemData::new(a, c0, f, GradientCoupling::Constant(mu), 2.0).unwrap();
        let w = v.scaled(amp);
        let b = energy(&w, &data).unwrap();
        let sum = b.quadratic - b.g_term - b.linear;
        prop_assert!((b.total - sum).abs() <= 1e-12 * (1.0 + b.quadratic.abs() + b.g_term.abs() + b.linear.abs()));
    }

    #[test]
    fn coercive_energy_bound((a, _u, v) in setup(), amp in 0.0f64..100.0) {
        let grid = *a.grid();
        let z = ScalarField::zeros(grid);
        let data = ProblemData::new(a.clone(), z.clone(), z.clone(), GradientCoupling::Constant(1.0), 2.0).unwrap();
        let lambda = coercivity_lambda(&z, &data).unwrap();
        let w = v.scaled(amp);
        let e = energy(&w, &data).unwrap().total;
        let norm2 = h1_seminorm_sq(&a, &w).unwrap();
        prop_assert!(e >= 0.5 * lambda * norm2 * (1.0 - 1e-12));
        if w.max_abs() > 0.0 {
            prop_assert!(e > 0.0);
        }
    }
}

#[test]
fn hand_stencil_values() {
    let grid = Grid::unit(1, 3).unwrap();
    let a = MatrixField::identity(grid);
    let v = ScalarField::new(grid, vec![0.0, 1.0, 0.0]).unwrap();
    assert_eq!(
        apply_operator(&a, &v).unwrap().values(),
        &[-16.0, 32.0, -16.0]
    );
    assert_eq!(h1_seminorm_sq(&a, &v).unwrap(), 8.0);
    let g2 = noncoercive_core::grid::gradient_sq(&a, &v).unwrap();
    assert_eq!(g2.values(), &[4.0, 0.0, 4.0]);
    let ones = ScalarField::constant(grid, 1.0);
    assert_eq!(noncoercive_core::grid::integrate(&ones), 0.75);
    assert!((lp_norm(&ones, 2.0).unwrap() - 0.75f64.sqrt()).abs() < 1e-15);
    let g2d = Grid::unit(2, 3).unwrap();
    assert_eq!(
        noncoercive_core::grid::integrate(&ScalarField::constant(g2d, 2.0)),
        1.125
    );
}
