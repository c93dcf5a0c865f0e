//! Random instances shared by the integration suites.
#![allow(dead_code)]

use mesomem_core::curve::{dot, PeriodicCurve, Vec2};
use mesomem_core::{Configuration, Grid, GridField, ModelParams, Phase, PhaseMap, Shape};
use rand::Rng;
use std::f64::consts::PI;

/// Smooth field `m0 + Σ a_k cos(2πk·x + φ_k)` with a few low modes per axis.
pub fn smooth_field(grid: Grid, rng: &mut impl Rng) -> GridField {
    let m0 = rng.gen_range(0.75..1.1);
    let modes: Vec<(f64, f64, f64, f64)> = (0..4)
        .map(|_| {
            (
                rng.gen_range(-0.15..0.15),
                rng.gen_range(1..4) as f64,
                rng.gen_range(0..4) as f64,
                rng.gen_range(0.0..2.0 * PI),
            )
        })
        .collect();
    let (ex, ey) = (grid.extent(0), grid.extent(1));
    GridField::from_fn(grid, |p| {
        m0 + modes
            .iter()
            .map(|&(a, kx, ky, ph)| {
                let ky = if grid.dim() == 2 { ky } else { 0.0 };
                a * (2.0 * PI * (kx * p[0] / ex + ky * p[1] / ey) + ph).cos()
            })
            .sum::<f64>()
    })
}

/// Nodewise independent field in `[lo, hi)`.
pub fn noise_field(grid: Grid, lo: f64, hi: f64, rng: &mut impl Rng) -> GridField {
    GridField::from_fn(grid, |_| rng.gen_range(lo..hi))
}

pub fn random_phase(grid: Grid, rng: &mut impl Rng) -> PhaseMap {
    PhaseMap::from_fn(grid, |_| rng.gen_bool(0.5))
}

/// Random valid configuration: ellipse, rays tilted from the normal by a
/// smooth angle below 0.3, piecewise phase on up to three arcs, smooth
/// positive mass.
pub fn random_configuration(n: usize, rng: &mut impl Rng) -> Configuration {
    let shape = Shape::Ellipse {
        a: rng.gen_range(0.6..1.4),
        b: rng.gen_range(0.6..1.4),
    };
    let curve = PeriodicCurve::from_shape(&shape, n).unwrap();
    let l = curve.length();
    let tilt_amp = rng.gen_range(0.0..0.3);
    let tilt_k = rng.gen_range(1..4) as f64;
    let tilt_ph = rng.gen_range(0.0..2.0 * PI);
    let theta: Vec<Vec2> = (0..n)
        .map(|i| {
            let phi = tilt_amp * (2.0 * PI * tilt_k * curve.s(i) / l + tilt_ph).sin();
            let (sn, cs) = phi.sin_cos();
            let nu = curve.normal()[i];
            let t = curve.tangent()[i];
            [cs * nu[0] + sn * t[0], cs * nu[1] + sn * t[1]]
        })
        .collect();
    let cuts: Vec<f64> = {
        let mut c: Vec<f64> = (0..2 * rng.gen_range(0..3))
            .map(|_| rng.gen_range(0.0..l))
            .collect();
        c.sort_by(f64::total_cmp);
        c
    };
    let first = Phase::from(rng.gen_bool(0.5));
    let chi: Vec<Phase> = (0..n)
        .map(|i| first ^ (cuts.iter().filter(|&&c| c <= curve.s(i)).count() % 2) as Phase)
        .collect();
    let m0 = rng.gen_range(0.3..1.2);
    let ma = rng.gen_range(0.0..0.25);
    let mk = rng.gen_range(1..5) as f64;
    let mass = (0..n)
        .map(|i| m0 + ma * (2.0 * PI * mk * curve.s(i) / l).cos())
        .collect();
    debug_assert!(theta.iter().zip(curve.normal()).all(|(t, nu)| dot(*t, *nu) > 0.9));
    Configuration::new(curve, theta, chi, mass).unwrap()
}

pub fn random_params(rng: &mut impl Rng) -> ModelParams {
    let c = rng.gen_range(0.2..2.0);
    let eps = rng.gen_range(0.01..0.2);
    ModelParams::new(c, eps).unwrap()
}
