//! Closed planar curves sampled at uniform arclength.
//!
//! Orientation conventions: `(a, b)⊥ = (-b, a)`, the normal is `ν = γ'⊥`
//! and the curvature is `κ = -γ''·ν`, so a counterclockwise circle of
//! radius `R` has `κ = -1/R` and `ν` pointing inward. Derivatives of nodal
//! data use fourth-order periodic central differences.

mod ray;
mod shape;

pub use ray::{
    embedding_check, images_overlap, ray_map, ray_mass, ray_offset, series_threshold, Embedding, RayGeometry,
};
pub(crate) use shape::ArcTable;
pub use shape::{resample_polyline, Frame, PeriodicSpline, Shape};

use std::io::{BufRead, Write};
use std::path::Path;

use crate::error::{Error, Result};

pub type Vec2 = [f64; 2];

pub fn perp(v: Vec2) -> Vec2 {
    [-v[1], v[0]]
}

pub fn dot(a: Vec2, b: Vec2) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

pub fn norm(v: Vec2) -> f64 {
    v[0].hypot(v[1])
}

pub fn normalize(v: Vec2) -> Vec2 {
    let n = norm(v);
    [v[0] / n, v[1] / n]
}

/// Fourth-order periodic first derivative of uniformly spaced samples.
pub fn periodic_d1(f: &[f64], h: f64) -> Vec<f64> {
    let n = f.len();
    (0..n)
        .map(|i| {
            let at = |k: isize| f[(i as isize + k).rem_euclid(n as isize) as usize];
            (-at(2) + 8.0 * at(1) - 8.0 * at(-1) + at(-2)) / (12.0 * h)
        })
        .collect()
}

/// Fourth-order periodic second derivative of uniformly spaced samples.
pub fn periodic_d2(f: &[f64], h: f64) -> Vec<f64> {
    let n = f.len();
    (0..n)
        .map(|i| {
            let at = |k: isize| f[(i as isize + k).rem_euclid(n as isize) as usize];
            (-at(2) + 16.0 * at(1) - 30.0 * at(0) + 16.0 * at(-1) - at(-2)) / (12.0 * h * h)
        })
        .collect()
}

fn split(v: &[Vec2]) -> (Vec<f64>, Vec<f64>) {
    (v.iter().map(|p| p[0]).collect(), v.iter().map(|p| p[1]).collect())
}

fn join(x: Vec<f64>, y: Vec<f64>) -> Vec<Vec2> {
    x.into_iter().zip(y).map(|(a, b)| [a, b]).collect()
}

/// Componentwise [`periodic_d1`] of planar samples.
pub fn periodic_d1_vec(v: &[Vec2], h: f64) -> Vec<Vec2> {
    let (x, y) = split(v);
    join(periodic_d1(&x, h), periodic_d1(&y, h))
}

/// Componentwise [`periodic_d2`] of planar samples.
pub fn periodic_d2_vec(v: &[Vec2], h: f64) -> Vec<Vec2> {
    let (x, y) = split(v);
    join(periodic_d2(&x, h), periodic_d2(&y, h))
}

/// Four-point periodic Lagrange interpolation of nodal data at fractional
/// node position `u` (in units of the spacing).
pub fn periodic_interp(f: &[f64], u: f64) -> f64 {
    let n = f.len() as isize;
    let base = u.floor();
    let x = u - base;
    let i = base as isize;
    let at = |k: isize| f[(i + k).rem_euclid(n) as usize];
    let w_m1 = -x * (x - 1.0) * (x - 2.0) / 6.0;
    let w_0 = (x + 1.0) * (x - 1.0) * (x - 2.0) / 2.0;
    let w_1 = -(x + 1.0) * x * (x - 2.0) / 2.0;
    let w_2 = (x + 1.0) * x * (x - 1.0) / 6.0;
    w_m1 * at(-1) + w_0 * at(0) + w_1 * at(1) + w_2 * at(2)
}

/// Closed curve sampled at `s_i = i L / n`.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicCurve {
    length: f64,
    points: Vec<Vec2>,
    tangent: Vec<Vec2>,
    normal: Vec<Vec2>,
    kappa: Vec<f64>,
}

/// Minimum number of samples for the difference stencils.
pub const MIN_SAMPLES: usize = 8;

impl PeriodicCurve {
    /// Curve from samples already at uniform arclength spacing `length / n`.
    pub fn from_arclength_samples(points: Vec<Vec2>, length: f64) -> Result<Self> {
        let n = points.len();
        if n < MIN_SAMPLES {
            return Err(Error::DegenerateCurve(format!(
                "need at least {MIN_SAMPLES} samples, got {n}"
            )));
        }
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::DegenerateCurve(format!("length {length} must be > 0")));
        }
        let h = length / n as f64;
        let d1 = periodic_d1_vec(&points, h);
        if let Some(i) = d1.iter().position(|v| !(norm(*v) > 0.0)) {
            return Err(Error::DegenerateCurve(format!("zero tangent at sample {i}")));
        }
        let d2 = periodic_d2_vec(&points, h);
        let tangent: Vec<Vec2> = d1.into_iter().map(normalize).collect();
        let normal: Vec<Vec2> = tangent.iter().map(|t| perp(*t)).collect();
        let kappa = d2.iter().zip(&normal).map(|(a, nu)| -dot(*a, *nu)).collect();
        Ok(Self {
            length,
            points,
            tangent,
            normal,
            kappa,
        })
    }

    /// Uniform arclength samples of an analytic or spline shape.
    pub fn from_shape(shape: &Shape, n: usize) -> Result<Self> {
        let length = shape.length();
        let points = (0..n)
            .map(|i| shape.point(i as f64 * length / n as f64))
            .collect();
        Self::from_arclength_samples(points, length)
    }

    pub fn n(&self) -> usize {
        self.points.len()
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    /// Node spacing `L / n`.
    pub fn h(&self) -> f64 {
        self.length / self.n() as f64
    }

    pub fn s(&self, i: usize) -> f64 {
        i as f64 * self.h()
    }

    pub fn points(&self) -> &[Vec2] {
        &self.points
    }

    pub fn tangent(&self) -> &[Vec2] {
        &self.tangent
    }

    pub fn normal(&self) -> &[Vec2] {
        &self.normal
    }

    pub fn kappa(&self) -> &[f64] {
        &self.kappa
    }

    /// Periodic trapezoid rule for nodal values.
    pub fn integrate(&self, values: impl IntoIterator<Item = f64>) -> f64 {
        crate::quadrature::periodic_trapezoid(values, self.h())
    }

    /// `∫κ ds`; equals `-2π` for a counterclockwise simple curve.
    pub fn turning(&self) -> f64 {
        self.integrate(self.kappa.iter().copied())
    }

    /// `∫κ² ds`.
    pub fn elastica(&self) -> f64 {
        self.integrate(self.kappa.iter().map(|k| k * k))
    }

    pub fn d1(&self, f: &[f64]) -> Vec<f64> {
        periodic_d1(f, self.h())
    }

    pub fn d1_vec(&self, f: &[Vec2]) -> Vec<Vec2> {
        periodic_d1_vec(f, self.h())
    }

    /// Interpolated position at arclength `s` (any real, taken mod `L`).
    pub fn point_at(&self, s: f64) -> Vec2 {
        let u = s / self.h();
        let (x, y) = split(&self.points);
        // positions are smooth, so plain Lagrange interpolation is fine
        [periodic_interp(&x, u), periodic_interp(&y, u)]
    }

    /// Same curve with every point moved by `offset`.
    pub fn translated(&self, offset: Vec2) -> Self {
        let mut c = self.clone();
        for p in &mut c.points {
            p[0] += offset[0];
            p[1] += offset[1];
        }
        c
    }

    /// Same curve with its parametrization shifted by `k` nodes.
    pub fn shifted(&self, k: usize) -> Self {
        let rot = |v: &[Vec2]| {
            let mut v = v.to_vec();
            v.rotate_left(k % self.n());
            v
        };
        let mut kappa = self.kappa.clone();
        kappa.rotate_left(k % self.n());
        Self {
            length: self.length,
            points: rot(&self.points),
            tangent: rot(&self.tangent),
            normal: rot(&self.normal),
            kappa,
        }
    }

    /// Reads `n length` followed by `n` lines `x y`. Points are taken to be
    /// at uniform arclength; use [`Shape::from_polyline`] for arbitrary
    /// polylines.
    pub fn read(path: &Path) -> Result<Self> {
        let f = std::fs::File::open(path)?;
        Self::read_from(std::io::BufReader::new(f)).map_err(|e| e.with_path(path))
    }

    pub fn read_from(r: impl BufRead) -> Result<Self> {
        let (length, rows) = read_table(r, 2)?;
        let points = rows.into_iter().map(|r| [r[0], r[1]]).collect();
        Self::from_arclength_samples(points, length)
    }

    pub fn write_to(&self, mut w: impl Write) -> Result<()> {
        writeln!(w, "{} {}", self.n(), self.length)?;
        for p in &self.points {
            writeln!(w, "{:e} {:e}", p[0], p[1])?;
        }
        Ok(())
    }
}

/// Parses a header `n length` and `n` rows of at least `cols` numbers.
pub(crate) fn read_table(r: impl BufRead, cols: usize) -> Result<(f64, Vec<Vec<f64>>)> {
    let mut lines = r.lines().filter(|l| {
        l.as_ref()
            .map_or(true, |s| !s.trim().is_empty() && !s.trim_start().starts_with('#'))
    });
    let header = lines.next().ok_or_else(|| Error::parse("empty curve file"))??;
    let mut tok = header.split_whitespace();
    let n: usize = tok
        .next()
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| Error::parse(format!("bad header {header:?}")))?;
    let length: f64 = tok
        .next()
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| Error::parse(format!("bad header {header:?}")))?;
    let mut rows = Vec::with_capacity(n);
    for (k, line) in lines.enumerate() {
        let line = line?;
        let vals: Vec<f64> = line
            .split_whitespace()
            .map(|t| t.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::parse(format!("bad number on data line {}", k + 1)))?;
        if vals.len() != cols {
            return Err(Error::parse(format!(
                "data line {} has {} columns, expected {cols}",
                k + 1,
                vals.len()
            )));
        }
        rows.push(vals);
    }
    if rows.len() != n {
        return Err(Error::parse(format!(
            "header declares {n} rows, found {}",
            rows.len()
        )));
    }
    Ok((length, rows))
}
