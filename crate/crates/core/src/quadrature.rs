//! One-dimensional quadrature rules.

use std::sync::OnceLock;

/// Gauss–Legendre nodes and weights on [-1, 1], computed by Newton's method
/// on the Legendre recurrence.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { z } else { p1 };
            let pnm1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (z * pn - pnm1) / (z * z - 1.0);
            let dz = pn / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

fn gl10() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(10))
}

/// 10-point Gauss–Legendre on a single panel [a, b].
pub fn gl_panel<F: Fn(f64) -> f64>(a: f64, b: f64, f: &F) -> f64 {
    let (x, w) = gl10();
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    x.iter()
        .zip(w)
        .map(|(xi, wi)| wi * f(mid + half * xi))
        .sum::<f64>()
        * half
}

/// [`gl_panel`] for `K` integrands evaluated together.
pub fn gl_panel_array<const K: usize, F: FnMut(f64) -> [f64; K]>(a: f64, b: f64, mut f: F) -> [f64; K] {
    let (x, w) = gl10();
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let mut out = [0.0; K];
    for (xi, wi) in x.iter().zip(w) {
        let v = f(mid + half * xi);
        for k in 0..K {
            out[k] += wi * v[k];
        }
    }
    out.map(|v| v * half)
}

/// Composite 10-point Gauss–Legendre over consecutive breakpoints.
pub fn gl_composite<F: Fn(f64) -> f64>(breaks: &[f64], f: &F) -> f64 {
    breaks.windows(2).map(|p| gl_panel(p[0], p[1], f)).sum()
}

/// Breakpoints on [a, b] that are fine (`first` wide) at both ends and grow
/// geometrically toward the middle, never exceeding `max_width`.
pub fn graded_breaks(a: f64, b: f64, first: f64, max_width: f64) -> Vec<f64> {
    assert!(b > a && first > 0.0 && max_width > 0.0);
    let half = 0.5 * (b - a);
    let mut left = vec![0.0];
    let mut w = first.min(max_width);
    let mut pos = 0.0;
    while pos + w < half {
        pos += w;
        left.push(pos);
        w = (w * 1.5).min(max_width);
    }
    let mut out: Vec<f64> = left.iter().map(|d| a + d).collect();
    out.push(0.5 * (a + b));
    for d in left.iter().rev() {
        out.push(b - d);
    }
    out.dedup_by(|p, q| (*p - *q).abs() <= 0.0);
    out
}

const GK_X: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const GK_WK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const GK_WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

fn gk15<F: Fn(f64) -> f64>(a: f64, b: f64, f: &F) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = fc * GK_WK[7];
    let mut g = fc * GK_WG[3];
    for j in 0..7 {
        let dx = h * GK_X[j];
        let s = f(c - dx) + f(c + dx);
        k += GK_WK[j] * s;
        if j % 2 == 1 {
            g += GK_WG[j / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

/// Adaptive Gauss–Kronrod (7/15) integration of `f` over [a, b] to the
/// requested absolute or relative tolerance.
pub fn adaptive<F: Fn(f64) -> f64>(a: f64, b: f64, abs_tol: f64, rel_tol: f64, f: F) -> f64 {
    let mut stack = vec![(a, b)];
    let mut total = 0.0;
    let (whole, _) = gk15(a, b, &f);
    let scale = whole.abs();
    let width = b - a;
    let mut evals = 0usize;
    while let Some((lo, hi)) = stack.pop() {
        let (v, err) = gk15(lo, hi, &f);
        evals += 1;
        let local_tol = (abs_tol.max(rel_tol * scale)) * (hi - lo) / width;
        if err <= local_tol || evals > 200_000 || (hi - lo) < 1e-14 * width {
            total += v;
        } else {
            let mid = 0.5 * (lo + hi);
            stack.push((lo, mid));
            stack.push((mid, hi));
        }
    }
    total
}

/// Periodic trapezoid rule with uniform spacing `h`.
pub fn periodic_trapezoid(values: impl IntoIterator<Item = f64>, h: f64) -> f64 {
    values.into_iter().sum::<f64>() * h
}
