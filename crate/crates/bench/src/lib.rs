//! Fixtures shared by the benchmarks.

use std::f64::consts::PI;

use mesomem_core::grid::GridField;
use mesomem_core::minimize::profile_field;
use mesomem_core::{Configuration, Grid, ModelParams, PeriodicCurve, PhaseCurve, PhaseMap, Shape};

/// Disk phase on an `n × n` unit square with its profile field.
pub fn disk_fixture(n: usize, eps: f64) -> (GridField, PhaseMap, ModelParams) {
    let grid = Grid::rect(1.0, 1.0, n, n).expect("grid");
    let chi = PhaseMap::disk(grid, 0.25).expect("disk");
    let p = ModelParams::new(1.0, eps).expect("params");
    let sdist: Vec<f64> = (0..grid.len())
        .map(|k| {
            let x = grid.node(k);
            0.25 - (x[0] - 0.5).hypot(x[1] - 0.5)
        })
        .collect();
    (profile_field(&chi, &sdist, &p), chi, p)
}

/// Ellipse with half of its length in phase 1 and a smooth mass.
pub fn ellipse_configuration(n: usize) -> Configuration {
    let curve = PeriodicCurve::from_shape(&Shape::Ellipse { a: 1.0, b: 0.6 }, n).expect("curve");
    let chi = (0..n).map(|i| u8::from(2 * i >= n)).collect();
    let mass = (0..n)
        .map(|i| 1.0 + 0.2 * (2.0 * PI * i as f64 / n as f64).sin())
        .collect();
    Configuration::normal_rays(curve, chi, mass).expect("configuration")
}

/// Unit circle with phase 1 on its upper half.
pub fn half_circle() -> PhaseCurve {
    PhaseCurve::from_arcs(Shape::Circle { r: 1.0 }, &[(0.0, PI)]).expect("phase curve")
}
