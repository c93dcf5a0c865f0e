//! Closed shapes that can be evaluated at any arclength: circles, ellipses
//! and periodic cubic splines through polylines.

use std::f64::consts::PI;
use std::path::Path;

use super::{norm, perp, PeriodicCurve, Vec2};
use crate::error::{Error, Result};
use crate::quadrature::gl_panel;

/// Position, unit tangent, normal and curvature at one arclength.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Frame {
    pub point: Vec2,
    pub tangent: Vec2,
    pub normal: Vec2,
    pub kappa: f64,
}

impl Frame {
    /// From a regular parametrization `c` with derivatives `c'`, `c''`.
    fn from_derivatives(c: Vec2, d1: Vec2, d2: Vec2) -> Self {
        let speed = norm(d1);
        let tangent = [d1[0] / speed, d1[1] / speed];
        let cross = d1[0] * d2[1] - d1[1] * d2[0];
        Self {
            point: c,
            tangent,
            normal: perp(tangent),
            kappa: -cross / speed.powi(3),
        }
    }
}

/// Cumulative arclength of a regular periodic parametrization on
/// `[0, period)`, tabulated at panel breaks and inverted by Newton's method.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct ArcTable {
    breaks: Vec<f64>,
    cum: Vec<f64>,
}

impl ArcTable {
    pub(crate) fn new(breaks: Vec<f64>, speed: &impl Fn(f64) -> f64) -> Self {
        let mut cum = vec![0.0];
        for w in breaks.windows(2) {
            let last = *cum.last().unwrap();
            cum.push(last + gl_panel(w[0], w[1], speed));
        }
        Self { breaks, cum }
    }

    pub(crate) fn length(&self) -> f64 {
        *self.cum.last().unwrap()
    }

    fn period(&self) -> f64 {
        *self.breaks.last().unwrap()
    }

    /// Arclength at parameter `u` in `[0, period]`.
    pub(crate) fn forward(&self, u: f64, speed: &impl Fn(f64) -> f64) -> f64 {
        let k = match self.breaks.binary_search_by(|b| b.total_cmp(&u)) {
            Ok(k) => return self.cum[k],
            Err(0) => return 0.0,
            Err(k) if k >= self.breaks.len() => return self.length(),
            Err(k) => k - 1,
        };
        self.cum[k] + gl_panel(self.breaks[k], u, speed)
    }

    /// Parameter at arclength `s` (reduced mod the length).
    pub(crate) fn invert(&self, s: f64, speed: &impl Fn(f64) -> f64) -> f64 {
        let len = self.length();
        let s = s.rem_euclid(len);
        let k = match self.cum.binary_search_by(|c| c.total_cmp(&s)) {
            Ok(k) => return self.breaks[k].min(self.period()) % self.period(),
            Err(k) => k - 1,
        };
        let (u0, u1) = (self.breaks[k], self.breaks[k + 1]);
        let (c0, c1) = (self.cum[k], self.cum[k + 1]);
        let mut u = u0 + (u1 - u0) * (s - c0) / (c1 - c0);
        for _ in 0..30 {
            let f = c0 + gl_panel(u0, u, speed) - s;
            let du = f / speed(u);
            u = (u - du).clamp(u0, u1);
            if du.abs() < 1e-15 * (1.0 + u.abs()) {
                break;
            }
        }
        u
    }
}

/// Periodic cubic spline through a closed polyline, parametrized by
/// cumulative chord length.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicSpline {
    knots: Vec<f64>,
    points: Vec<Vec2>,
    second: Vec<Vec2>,
    table: ArcTable,
}

impl PeriodicSpline {
    pub fn new(points: Vec<Vec2>) -> Result<Self> {
        let n = points.len();
        if n < super::MIN_SAMPLES {
            return Err(Error::DegenerateCurve(format!(
                "need at least {} points, got {n}",
                super::MIN_SAMPLES
            )));
        }
        let mut knots = vec![0.0];
        for i in 0..n {
            let (a, b) = (points[i], points[(i + 1) % n]);
            let chord = norm([b[0] - a[0], b[1] - a[1]]);
            if !(chord > 0.0) {
                return Err(Error::DegenerateCurve(format!("repeated point at index {i}")));
            }
            knots.push(knots[i] + chord);
        }
        let h: Vec<f64> = knots.windows(2).map(|w| w[1] - w[0]).collect();
        let solve = |coord: usize| {
            let y = |k: usize| points[k % n][coord];
            let rhs: Vec<f64> = (0..n)
                .map(|k| {
                    let hp = h[(k + n - 1) % n];
                    6.0 * ((y(k + 1) - y(k)) / h[k] - (y(k) - y(k + n - 1)) / hp)
                })
                .collect();
            let sub: Vec<f64> = (0..n).map(|k| h[(k + n - 1) % n]).collect();
            let diag: Vec<f64> = (0..n).map(|k| 2.0 * (h[(k + n - 1) % n] + h[k])).collect();
            let sup: Vec<f64> = h.clone();
            cyclic_tridiagonal(&sub, &diag, &sup, &rhs)
        };
        let (mx, my) = (solve(0), solve(1));
        let second = mx.into_iter().zip(my).map(|(a, b)| [a, b]).collect();
        let mut spline = Self {
            knots,
            points,
            second,
            table: ArcTable {
                breaks: vec![],
                cum: vec![],
            },
        };
        let breaks = spline.knots.clone();
        spline.table = ArcTable::new(breaks, &|u| spline.speed(u));
        Ok(spline)
    }

    fn period(&self) -> f64 {
        *self.knots.last().unwrap()
    }

    /// Value and first two derivatives at chord parameter `u`.
    fn eval(&self, u: f64) -> (Vec2, Vec2, Vec2) {
        let n = self.points.len();
        let u = u.rem_euclid(self.period());
        let k = match self.knots.binary_search_by(|c| c.total_cmp(&u)) {
            Ok(k) => k.min(n - 1),
            Err(k) => k - 1,
        };
        let (u0, u1) = (self.knots[k], self.knots[k + 1]);
        let h = u1 - u0;
        let (a, b) = (u1 - u, u - u0);
        let mut out = ([0.0; 2], [0.0; 2], [0.0; 2]);
        for c in 0..2 {
            let (y0, y1) = (self.points[k][c], self.points[(k + 1) % n][c]);
            let (m0, m1) = (self.second[k][c], self.second[(k + 1) % n][c]);
            let c0 = y0 / h - m0 * h / 6.0;
            let c1 = y1 / h - m1 * h / 6.0;
            out.0[c] = m0 * a.powi(3) / (6.0 * h) + m1 * b.powi(3) / (6.0 * h) + c0 * a + c1 * b;
            out.1[c] = -m0 * a * a / (2.0 * h) + m1 * b * b / (2.0 * h) - c0 + c1;
            out.2[c] = (m0 * a + m1 * b) / h;
        }
        out
    }

    fn speed(&self, u: f64) -> f64 {
        norm(self.eval(u).1)
    }
}

/// Solves a cyclic tridiagonal system
/// `sub[i] x[i-1] + diag[i] x[i] + sup[i] x[i+1] = rhs[i]` (indices mod n)
/// by the Sherman–Morrison correction of the Thomas algorithm.
fn cyclic_tridiagonal(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let gamma = -diag[0];
    let mut b = diag.to_vec();
    b[0] -= gamma;
    b[n - 1] -= sub[0] * sup[n - 1] / gamma;
    let thomas = |d: &[f64]| {
        let mut c = vec![0.0; n];
        let mut x = vec![0.0; n];
        c[0] = sup[0] / b[0];
        x[0] = d[0] / b[0];
        for i in 1..n {
            let m = b[i] - sub[i] * c[i - 1];
            c[i] = sup[i] / m;
            x[i] = (d[i] - sub[i] * x[i - 1]) / m;
        }
        for i in (0..n - 1).rev() {
            x[i] -= c[i] * x[i + 1];
        }
        x
    };
    let x = thomas(rhs);
    let mut u = vec![0.0; n];
    u[0] = gamma;
    u[n - 1] = sup[n - 1];
    let z = thomas(&u);
    let fact = (x[0] + sub[0] * x[n - 1] / gamma) / (1.0 + z[0] + sub[0] * z[n - 1] / gamma);
    x.iter().zip(&z).map(|(a, b)| a - fact * b).collect()
}

/// Closed shape with exact (or spline-exact) arclength evaluation.
#[derive(Debug, Clone, PartialEq)]
pub enum Shape {
    /// Counterclockwise circle of radius `r` centered at the origin,
    /// starting at `(r, 0)`.
    Circle {
        r: f64,
    },
    /// Counterclockwise ellipse `(a cos φ, b sin φ)`, starting at `(a, 0)`.
    Ellipse {
        a: f64,
        b: f64,
    },
    Spline(Box<PeriodicSpline>),
}

/// Panels for the ellipse arclength table.
const ELLIPSE_PANELS: usize = 256;

impl Shape {
    /// Parses `circle:R`, `ellipse:a:b` or `file:path`.
    pub fn parse(spec: &str) -> Result<Self> {
        let parts: Vec<&str> = spec.splitn(3, ':').collect();
        let num = |s: &str| -> Result<f64> {
            s.parse::<f64>()
                .map_err(|_| Error::parse(format!("bad number {s:?} in shape {spec:?}")))
        };
        let shape = match parts.as_slice() {
            ["circle", r] => Shape::Circle { r: num(r)? },
            ["ellipse", a, b] => Shape::Ellipse {
                a: num(a)?,
                b: num(b)?,
            },
            ["file", path] => return Self::from_file(Path::new(path)),
            _ => return Err(Error::parse(format!("unknown shape {spec:?}"))),
        };
        shape.validate()?;
        Ok(shape)
    }

    fn validate(&self) -> Result<()> {
        let ok = match self {
            Shape::Circle { r } => r.is_finite() && *r > 0.0,
            Shape::Ellipse { a, b } => a.is_finite() && b.is_finite() && *a > 0.0 && *b > 0.0,
            Shape::Spline(_) => true,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::DegenerateCurve(format!("{self:?}")))
        }
    }

    /// Closed polyline from a curve file (`n length` header, `x y` rows);
    /// the header length is ignored and recomputed.
    pub fn from_file(path: &Path) -> Result<Self> {
        let f = std::fs::File::open(path)?;
        let (_, rows) = super::read_table(std::io::BufReader::new(f), 2).map_err(|e| e.with_path(path))?;
        Self::from_polyline(rows.into_iter().map(|r| [r[0], r[1]]).collect())
    }

    pub fn from_polyline(points: Vec<Vec2>) -> Result<Self> {
        Ok(Shape::Spline(Box::new(PeriodicSpline::new(points)?)))
    }

    fn ellipse_speed(a: f64, b: f64) -> impl Fn(f64) -> f64 {
        move |phi: f64| (a * phi.sin()).hypot(b * phi.cos())
    }

    fn ellipse_table(a: f64, b: f64) -> &'static ArcTable {
        use std::collections::HashMap;
        use std::sync::{Mutex, OnceLock};
        static CACHE: OnceLock<Mutex<HashMap<(u64, u64), &'static ArcTable>>> = OnceLock::new();
        let cache = CACHE.get_or_init(Default::default);
        let mut map = cache.lock().unwrap_or_else(|e| e.into_inner());
        map.entry((a.to_bits(), b.to_bits())).or_insert_with(|| {
            let breaks = (0..=ELLIPSE_PANELS)
                .map(|k| 2.0 * PI * k as f64 / ELLIPSE_PANELS as f64)
                .collect();
            Box::leak(Box::new(ArcTable::new(breaks, &Self::ellipse_speed(a, b))))
        })
    }

    pub fn length(&self) -> f64 {
        match self {
            Shape::Circle { r } => 2.0 * PI * r,
            Shape::Ellipse { a, b } => Self::ellipse_table(*a, *b).length(),
            Shape::Spline(sp) => sp.table.length(),
        }
    }

    /// Frame at arclength `s` (any real, taken mod the length).
    pub fn frame(&self, s: f64) -> Frame {
        match self {
            Shape::Circle { r } => {
                let phi = s / r;
                let (sn, cs) = phi.sin_cos();
                let tangent = [-sn, cs];
                Frame {
                    point: [r * cs, r * sn],
                    tangent,
                    normal: perp(tangent),
                    kappa: -1.0 / r,
                }
            }
            Shape::Ellipse { a, b } => {
                if a == b {
                    return Shape::Circle { r: *a }.frame(s);
                }
                let speed = Self::ellipse_speed(*a, *b);
                let phi = Self::ellipse_table(*a, *b).invert(s, &speed);
                let (sn, cs) = phi.sin_cos();
                Frame::from_derivatives([a * cs, b * sn], [-a * sn, b * cs], [-a * cs, -b * sn])
            }
            Shape::Spline(sp) => {
                let u = sp.table.invert(s, &|u| sp.speed(u));
                let (c, d1, d2) = sp.eval(u);
                Frame::from_derivatives(c, d1, d2)
            }
        }
    }

    pub fn point(&self, s: f64) -> Vec2 {
        self.frame(s).point
    }

    pub fn sample(&self, n: usize) -> Result<PeriodicCurve> {
        PeriodicCurve::from_shape(self, n)
    }
}

/// Uniform-arclength resampling of a closed polyline through a periodic
/// cubic spline.
pub fn resample_polyline(points: Vec<Vec2>, n: usize) -> Result<PeriodicCurve> {
    Shape::from_polyline(points)?.sample(n)
}
