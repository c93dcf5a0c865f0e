//! Ray offsets and the sampled embedding test for the ray map
//! `ψ(s, m) = γ(s) + t(s, m) θ(s)`.

use rayon::prelude::*;
use serde::Serialize;

use super::{Vec2, MIN_SAMPLES};
use crate::error::{Error, Result};
use crate::meso::Configuration;

/// Local ray data: alignment `A = ν·θ` and rotation rate `B = θ'·θ⊥`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RayGeometry {
    pub a: f64,
    pub b: f64,
}

/// `|B|` below which [`ray_offset`] switches to its Taylor expansion.
pub fn series_threshold(a: f64, m: f64, eps: f64) -> f64 {
    1e-6 * a * a / (eps * m.abs().max(1.0))
}

/// Distance along the ray carrying stacked mass `m`:
/// `t = (A/B)[1 - (1 - 2Bεm/A²)^½]`.
///
/// Evaluated as `2εm / (A(1 + (1 - x)^½))` with `x = 2Bεm/A²`, which is the
/// same expression without the cancellation; for `|B|` below
/// [`series_threshold`] the third-order expansion in `B` is used. Negative
/// `m` gives negative `t`.
pub fn ray_offset(a: f64, b: f64, m: f64, eps: f64) -> Result<f64> {
    if b.abs() < series_threshold(a, m, eps) {
        let em = eps * m;
        return Ok(em / a + b * em * em / (2.0 * a.powi(3)) + b * b * em.powi(3) / (2.0 * a.powi(5)));
    }
    let x = 2.0 * b * eps * m / (a * a);
    let disc = 1.0 - x;
    if disc < 0.0 {
        return Err(Error::RayOverrun {
            m,
            discriminant: disc,
        });
    }
    Ok(2.0 * eps * m / (a * (1.0 + disc.sqrt())))
}

/// Inverse of [`ray_offset`]: `m = (A t - B t²/2) / ε`.
pub fn ray_mass(a: f64, b: f64, t: f64, eps: f64) -> f64 {
    (a * t - 0.5 * b * t * t) / eps
}

/// Ray map at arclength `s` and mass coordinate `m`, interpolating the
/// configuration between nodes.
pub fn ray_map(z: &Configuration, eps: f64, s: f64, m: f64) -> Result<Vec2> {
    let c = &z.curve;
    let u = s / c.h();
    let interp = |f: &dyn Fn(usize) -> f64| {
        let vals: Vec<f64> = (0..c.n()).map(f).collect();
        super::periodic_interp(&vals, u)
    };
    let p = [interp(&|i| c.points()[i][0]), interp(&|i| c.points()[i][1])];
    let th = super::normalize([interp(&|i| z.theta[i][0]), interp(&|i| z.theta[i][1])]);
    let geo = z.ray_geometry();
    let a = interp(&|i| geo[i].a);
    let b = interp(&|i| geo[i].b);
    let t = ray_offset(a, b, m, eps)?;
    Ok([p[0] + t * th[0], p[1] + t * th[1]])
}

/// Outcome of a sampled embedding or overlap test. Witnesses are `(s, m)`
/// coordinates of the lower-left corners of two intersecting cells.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum Embedding {
    Pass {
        cells: usize,
    },
    Fail {
        witness: [(f64, f64); 2],
        reason: String,
    },
}

impl Embedding {
    pub fn passed(&self) -> bool {
        matches!(self, Embedding::Pass { .. })
    }
}

struct Mesh {
    /// Cell corners, counterclockwise in (s, m) index space.
    cells: Vec<[Vec2; 4]>,
    /// (s index, m index, s, m) per cell.
    labels: Vec<(usize, usize, f64, f64)>,
    ns: usize,
}

/// Samples `ψ` on `ns` rays (evenly spread over the nodes) and `nm` mass
/// levels spanning the open interval `(-M, M)`.
fn ray_mesh(z: &Configuration, eps: f64, ns: usize, nm: usize) -> std::result::Result<Mesh, Embedding> {
    let c = &z.curve;
    let geo = z.ray_geometry();
    let nodes: Vec<usize> = (0..ns).map(|k| k * c.n() / ns).collect();
    let shrink = 1.0 - 1e-9;
    let mut grid = vec![[0.0; 2]; ns * nm];
    for (k, &i) in nodes.iter().enumerate() {
        for l in 0..nm {
            let m = z.mass[i] * shrink * (2.0 * l as f64 / (nm - 1) as f64 - 1.0);
            let t = match ray_offset(geo[i].a, geo[i].b, m, eps) {
                Ok(t) => t,
                Err(e) => {
                    return Err(Embedding::Fail {
                        witness: [(c.s(i), m), (c.s(i), m)],
                        reason: e.to_string(),
                    })
                }
            };
            let p = c.points()[i];
            let th = z.theta[i];
            grid[k * nm + l] = [p[0] + t * th[0], p[1] + t * th[1]];
        }
    }
    let mut cells = Vec::with_capacity(ns * (nm - 1));
    let mut labels = Vec::with_capacity(ns * (nm - 1));
    for k in 0..ns {
        let k1 = (k + 1) % ns;
        for l in 0..nm - 1 {
            cells.push([
                grid[k * nm + l],
                grid[k1 * nm + l],
                grid[k1 * nm + l + 1],
                grid[k * nm + l + 1],
            ]);
            let i = nodes[k];
            let m = z.mass[i] * shrink * (2.0 * l as f64 / (nm - 1) as f64 - 1.0);
            labels.push((k, l, c.s(i), m));
        }
    }
    Ok(Mesh { cells, labels, ns })
}

fn orient(a: Vec2, b: Vec2, c: Vec2) -> f64 {
    (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
}

fn segments_cross(p1: Vec2, p2: Vec2, q1: Vec2, q2: Vec2) -> bool {
    let d1 = orient(q1, q2, p1);
    let d2 = orient(q1, q2, p2);
    let d3 = orient(p1, p2, q1);
    let d4 = orient(p1, p2, q2);
    d1 * d2 < 0.0 && d3 * d4 < 0.0
}

fn strictly_inside(p: Vec2, poly: &[Vec2; 4]) -> bool {
    let mut inside = false;
    for k in 0..4 {
        let (a, b) = (poly[k], poly[(k + 1) % 4]);
        if orient(a, b, p) == 0.0 && (p[0] - a[0]) * (p[0] - b[0]) <= 0.0 {
            return false;
        }
        if (a[1] > p[1]) != (b[1] > p[1]) {
            let x = a[0] + (p[1] - a[1]) * (b[0] - a[0]) / (b[1] - a[1]);
            if p[0] < x {
                inside = !inside;
            }
        }
    }
    inside
}

fn cells_intersect(a: &[Vec2; 4], b: &[Vec2; 4]) -> bool {
    for i in 0..4 {
        for j in 0..4 {
            if segments_cross(a[i], a[(i + 1) % 4], b[j], b[(j + 1) % 4]) {
                return true;
            }
        }
    }
    a.iter().any(|p| strictly_inside(*p, b)) || b.iter().any(|p| strictly_inside(*p, a))
}

fn bbox(c: &[Vec2; 4]) -> [f64; 4] {
    let mut b = [f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY];
    for p in c {
        b[0] = b[0].min(p[0]);
        b[1] = b[1].min(p[1]);
        b[2] = b[2].max(p[0]);
        b[3] = b[3].max(p[1]);
    }
    b
}

/// First intersecting pair `(i, j)` with `i` from `a`, `j` from `b` for
/// which `skip(i, j)` is false, by sort-and-sweep over bounding boxes.
fn first_hit(
    a: &[[Vec2; 4]],
    b: &[[Vec2; 4]],
    skip: &(dyn Fn(usize, usize) -> bool + Sync),
) -> Option<(usize, usize)> {
    let boxes_b: Vec<[f64; 4]> = b.iter().map(bbox).collect();
    let mut order: Vec<usize> = (0..b.len()).collect();
    order.sort_by(|&x, &y| boxes_b[x][0].total_cmp(&boxes_b[y][0]));
    let starts: Vec<f64> = order.iter().map(|&k| boxes_b[k][0]).collect();
    (0..a.len())
        .into_par_iter()
        .filter_map(|i| {
            let ba = bbox(&a[i]);
            let end = starts.partition_point(|&x| x <= ba[2]);
            order[..end].iter().find_map(|&j| {
                let bb = boxes_b[j];
                if bb[2] < ba[0] || bb[3] < ba[1] || bb[1] > ba[3] || skip(i, j) {
                    return None;
                }
                cells_intersect(&a[i], &b[j]).then_some((i, j))
            })
        })
        .min()
}

fn check_resolution(resolution: usize) -> Result<()> {
    if resolution < 16 {
        return Err(Error::Parameter(format!(
            "embedding resolution must be >= 16 samples per direction, got {resolution}"
        )));
    }
    Ok(())
}

/// Sampled sufficient test that `ψ` is an embedding: non-adjacent cells of
/// the induced mesh must not intersect, and every sampled ray must stay
/// within its focal capacity.
pub fn embedding_check(z: &Configuration, eps: f64, resolution: usize) -> Result<Embedding> {
    check_resolution(resolution)?;
    let ns = resolution.min(z.curve.n()).max(MIN_SAMPLES);
    let mesh = match ray_mesh(z, eps, ns, resolution) {
        Ok(m) => m,
        Err(fail) => return Ok(fail),
    };
    let ns = mesh.ns;
    let labels = &mesh.labels;
    let adjacent = move |i: usize, j: usize| {
        let (ki, li, ..) = labels[i];
        let (kj, lj, ..) = labels[j];
        let dk = ki.abs_diff(kj);
        let dk = dk.min(ns - dk);
        dk <= 1 && li.abs_diff(lj) <= 1
    };
    Ok(match first_hit(&mesh.cells, &mesh.cells, &adjacent) {
        None => Embedding::Pass {
            cells: mesh.cells.len(),
        },
        Some((i, j)) => Embedding::Fail {
            witness: [(labels[i].2, labels[i].3), (labels[j].2, labels[j].3)],
            reason: "ray cells intersect".into(),
        },
    })
}

/// Sampled test that the ray-map images of two configurations are
/// disjoint.
pub fn images_overlap(
    z1: &Configuration,
    z2: &Configuration,
    eps: f64,
    resolution: usize,
) -> Result<Embedding> {
    check_resolution(resolution)?;
    let mesh = |z: &Configuration| ray_mesh(z, eps, resolution.min(z.curve.n()).max(MIN_SAMPLES), resolution);
    let (a, b) = match (mesh(z1), mesh(z2)) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(f), _) | (_, Err(f)) => return Ok(f),
    };
    Ok(match first_hit(&a.cells, &b.cells, &|_, _| false) {
        None => Embedding::Pass {
            cells: a.cells.len() + b.cells.len(),
        },
        Some((i, j)) => Embedding::Fail {
            witness: [(a.labels[i].2, a.labels[i].3), (b.labels[j].2, b.labels[j].3)],
            reason: "images of different configurations intersect".into(),
        },
    })
}
