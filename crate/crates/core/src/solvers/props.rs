//! Runtime property suite: the calculus of `g`, `G`, `H` and the consistency
//! of the energy gradient, each reported as a pass/fail line.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::energy::Functional;
use crate::grid::{dot_slice, Grid, ScalarField};
use crate::nonlinearity::{g_defect_raw, g_prime_raw, g_primitive_raw, g_raw};
use crate::problem::ProblemData;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PropCheck {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, passed: bool, detail: String) -> PropCheck {
    PropCheck {
        name,
        passed,
        detail,
    }
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

/// One Simpson panel: end points with their values, the midpoint value and
/// the panel's Simpson estimate.
fn adaptive(
    f: &impl Fn(f64) -> f64,
    (a, fa): (f64, f64),
    (b, fb): (f64, f64),
    fm: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        left + right + delta / 15.0
    } else {
        adaptive(f, (a, fa), (m, fm), flm, left, 0.5 * tol, depth - 1)
            + adaptive(f, (m, fm), (b, fb), frm, right, 0.5 * tol, depth - 1)
    }
}

/// Adaptive Simpson quadrature of `f` over `[a, b]`.
pub fn integrate_adaptive(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let (fa, fm, fb) = (f(a), f(0.5 * (a + b)), f(b));
    let whole = simpson(a, b, fa, fm, fb);
    adaptive(&f, (a, fa), (b, fb), fm, whole, tol, 50)
}

/// `integral_0^s g`, split at the kink `-1/mu`.
fn g_quadrature(s: f64, mu: f64) -> f64 {
    let g = |t: f64| g_raw(t, mu);
    let kink = -1.0 / mu;
    if s < kink {
        integrate_adaptive(g, 0.0, kink, 1e-14) + integrate_adaptive(g, kink, s, 1e-14)
    } else {
        integrate_adaptive(g, 0.0, s, 1e-14)
    }
}

fn log_samples(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..count)
        .map(|k| (a + (b - a) * k as f64 / (count - 1) as f64).exp())
        .collect()
}

/// Closed-form `G` against quadrature, and the constant value of `H` left of
/// the kink.
pub fn primitive_checks() -> Vec<PropCheck> {
    let mut worst = 0.0f64;
    for mu in [0.5, 1.0, 2.0] {
        for k in 0..=200 {
            let s = -5.0 + 10.0 * k as f64 / 200.0;
            worst = worst.max((g_primitive_raw(s, mu) - g_quadrature(s, mu)).abs());
        }
    }
    let mut h_worst = 0.0f64;
    for mu in [0.5, 1.0, 2.0] {
        let want = -g_primitive_raw(-1.0 / mu, mu) - 0.5 / (mu * mu);
        for s in [-1.0 / mu, -1.5 / mu, -3.0 / mu, -50.0, -1e4] {
            h_worst = h_worst.max((g_defect_raw(s, mu) - want).abs());
        }
    }
    let h1 = g_defect_raw(-2.0, 1.0);
    vec![
        check(
            "G closed form = quadrature on [-5, 5]",
            worst <= 1e-10,
            format!("max abs error {worst:.3e}"),
        ),
        check(
            "H = -G(-1/mu) - 1/(2 mu^2) left of the kink",
            h_worst <= 1e-12,
            format!("max abs error {h_worst:.3e}"),
        ),
        check(
            "H = -1/4 left of the kink for mu = 1",
            (h1 + 0.25).abs() <= 1e-10,
            format!("H(-2) = {h1}"),
        ),
    ]
}

/// The six structural properties of `g`, `G`, `H` in finite-sample form.
pub fn lemma_checks() -> Vec<PropCheck> {
    let mu = 1.0;
    let mags = log_samples(1e-8, 1e6, 141);
    let signed: Vec<f64> = mags.iter().flat_map(|&s| [s, -s]).collect();

    let positive = g_raw(0.0, mu) == 0.0 && signed.iter().all(|&s| g_raw(s, mu) > 0.0);
    let growth = signed
        .iter()
        .map(|&s| g_raw(s, mu).abs() / s.abs().powf(1.5))
        .fold(0.0f64, f64::max);
    let decay: Vec<f64> = [1e-1, 1e-2, 1e-3]
        .iter()
        .map(|&s| (g_raw(s, mu) / s).abs())
        .collect();
    let decay_ok = decay[0] > decay[1] && decay[1] > decay[2] && decay[2] < 1e-2;
    let big = [10.0, 1e3, 1e5];
    let gs: Vec<f64> = big.iter().map(|&s| g_raw(s, mu) / s).collect();
    let gg: Vec<f64> = big
        .iter()
        .map(|&s| g_primitive_raw(s, mu) / (s * s))
        .collect();
    let superlinear = gs[0] < gs[1] && gs[1] < gs[2] && gg[0] < gg[1] && gg[1] < gg[2];

    let pos: Vec<f64> = std::iter::once(0.0)
        .chain(log_samples(1e-6, 1e4, 61))
        .collect();
    let mut scaling_violation = 0.0f64;
    for (i, &s) in pos.iter().enumerate() {
        for &t in &pos[i..] {
            if t == 0.0 {
                continue;
            }
            let lhs = g_defect_raw(s, mu);
            let rhs = s / t * g_defect_raw(t, mu);
            let slack = 1e-13 * (lhs.abs() + rhs.abs());
            scaling_violation = scaling_violation.max(lhs - rhs - slack);
        }
    }
    let mut constant = true;
    for m in [0.5, 1.0, 2.0] {
        let base = g_defect_raw(-1.0 / m, m);
        for s in
            std::iter::once(-1.0 / m).chain(log_samples(1.0 / m + 1e-9, 1e6, 40).iter().map(|x| -x))
        {
            constant &= g_defect_raw(s, m) == base;
        }
    }
    vec![
        check(
            "g > 0 away from 0, g(0) = 0",
            positive,
            format!("{} samples", signed.len()),
        ),
        check(
            "|g(s)| / |s|^1.5 bounded",
            growth.is_finite() && growth < 10.0,
            format!("sup {growth:.4}"),
        ),
        check(
            "|g(s)/s| decreasing to 0 as s -> 0",
            decay_ok,
            format!("{decay:?}"),
        ),
        check(
            "g(s)/s and G(s)/s^2 increasing for large s",
            superlinear,
            format!("g/s {gs:?}, G/s^2 {gg:?}"),
        ),
        check(
            "H(s) <= (s/t) H(t) for 0 <= s <= t",
            scaling_violation <= 0.0,
            format!("worst excess {scaling_violation:.3e}"),
        ),
        check("H constant for s <= -1/mu", constant, String::new()),
    ]
}

/// Central differences of `g` and `G` against `g'` and `g`: error at two
/// step sizes and their ratio (second order gives about 100).
pub fn derivative_checks() -> Vec<PropCheck> {
    let mu = 1.0;
    let points = [-3.0, -0.5, 0.2, 1.0, 4.0, 30.0];
    let err = |eps: f64, f: &dyn Fn(f64) -> f64, df: &dyn Fn(f64) -> f64| {
        points
            .iter()
            .map(|&s| ((f(s + eps) - f(s - eps)) / (2.0 * eps) - df(s)).abs())
            .sum::<f64>()
    };
    let g = |s: f64| g_raw(s, mu);
    let dg = |s: f64| g_prime_raw(s, mu);
    let big_g = |s: f64| g_primitive_raw(s, mu);
    let (e1, e2) = (err(1e-2, &g, &dg), err(1e-3, &g, &dg));
    let (f1, f2) = (err(1e-2, &big_g, &g), err(1e-3, &big_g, &g));
    vec![
        check(
            "g' = central difference of g, O(eps^2)",
            e1 / e2 > 50.0 && e2 < 1e-5,
            format!("errors {e1:.3e} -> {e2:.3e}"),
        ),
        check(
            "g = central difference of G, O(eps^2)",
            f1 / f2 > 50.0 && f2 < 1e-5,
            format!("errors {f1:.3e} -> {f2:.3e}"),
        ),
    ]
}

/// Directional derivative of `I` against the quadrature pairing with the
/// energy gradient, on 20 random pairs over a 17 x 17 grid.
pub fn gradient_checks(seed: u64) -> Vec<PropCheck> {
    let grid = Grid::unit(2, 17).expect("valid grid");
    let c0 = ScalarField::from_fn(grid, |x| {
        0.5 * (-((x[0] - 0.5).powi(2) + (x[1] - 0.5).powi(2)) / 0.08).exp()
    });
    let f = ScalarField::from_fn(grid, |x| 0.1 * (PI * x[0]).sin() * (PI * x[1]).sin());
    let data = ProblemData::model(c0, f, 1.0, 2.0).expect("valid data");
    let fun = Functional::new(&data).expect("normalized");
    let vol = grid.cell_volume();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = grid.len();
    let mut worst = 0.0f64;
    let (mut coarse, mut fine) = (0.0, 0.0);
    let pairs = 20;
    for _ in 0..pairs {
        let v: Vec<f64> = (0..n).map(|_| rng.random_range(-0.5..2.0)).collect();
        let phi: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let e = fun.value(&v);
        let dir = dot_slice(&fun.gradient(&v), &phi) * vol;
        let fd = |eps: f64| {
            let p: Vec<f64> = v.iter().zip(&phi).map(|(a, b)| a + eps * b).collect();
            let m: Vec<f64> = v.iter().zip(&phi).map(|(a, b)| a - eps * b).collect();
            ((fun.value(&p) - fun.value(&m)) / (2.0 * eps) - dir).abs()
        };
        worst = worst.max(fd(1e-4) / (1.0 + e.abs()));
        coarse += fd(1e-2);
        fine += fd(1e-3);
    }
    let ratio = coarse / fine;
    vec![
        check(
            "dI(v)[phi] = <I'(v), phi> at eps = 1e-4",
            worst <= 1e-6,
            format!("worst scaled error {worst:.3e} over {pairs} pairs"),
        ),
        check(
            "directional difference error is O(eps^2)",
            (50.0..=200.0).contains(&ratio),
            format!("error ratio {ratio:.1} for eps 1e-2 -> 1e-3"),
        ),
    ]
}

/// All property checks.
pub fn run_all(seed: u64) -> Vec<PropCheck> {
    let mut out = primitive_checks();
    out.extend(lemma_checks());
    out.extend(derivative_checks());
    out.extend(gradient_checks(seed));
    out
}
