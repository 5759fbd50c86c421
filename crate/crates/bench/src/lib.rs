//! Problem instances shared by the benchmarks.

use std::f64::consts::PI;

use noncoercive_core::{Grid, ProblemData, ScalarField};

/// The multiplicity fixture on an `n x n` interior grid of the unit square.
pub fn fixture(n: usize) -> ProblemData {
    let grid = Grid::unit(2, n).expect("valid grid");
    let c0 = ScalarField::from_fn(grid, |x| {
        let r2 = (x[0] - 0.5).powi(2) + (x[1] - 0.5).powi(2);
        0.5 * (-r2 / 0.08).exp()
    });
    let f = ScalarField::from_fn(grid, |x| 0.1 * (PI * x[0]).sin() * (PI * x[1]).sin());
    ProblemData::model(c0, f, 1.0, 2.0).expect("valid fixture")
}

/// A smooth field of moderate size for kernel timings.
pub fn probe(grid: Grid) -> ScalarField {
    ScalarField::from_fn(grid, |x| (PI * x[0]).sin() * (2.0 * PI * x[1]).sin())
}
