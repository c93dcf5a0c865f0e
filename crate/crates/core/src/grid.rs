//! Phase-separation energy on uniform rectangular grids in one or two
//! dimensions.
//!
//! Nodes sit at cell centers `(i + 1/2) h` and are stored row-major
//! (`idx = j * nx + i`). Gradients use centered differences in the interior
//! and one-sided differences on the first and last node of each axis; the
//! same stencil drives the energy, its exact gradient and [`tv_of_h`].

use serde::{Deserialize, Serialize};
use std::fmt;
use std::io::{BufRead, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::{ModelParams, Phase};
use crate::parallel::{chunked_sum, fill};

/// Minimum node count per axis.
pub const MIN_NODES: usize = 4;

/// Uniform cell-centered grid on `[0, extent_x] (x [0, extent_y])`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    dim: usize,
    n: [usize; 2],
    extent: [f64; 2],
}

impl Grid {
    pub fn line(extent: f64, n: usize) -> Result<Self> {
        Self::validate(extent, n)?;
        Ok(Self {
            dim: 1,
            n: [n, 1],
            extent: [extent, 1.0],
        })
    }

    pub fn rect(extent_x: f64, extent_y: f64, nx: usize, ny: usize) -> Result<Self> {
        Self::validate(extent_x, nx)?;
        Self::validate(extent_y, ny)?;
        Ok(Self {
            dim: 2,
            n: [nx, ny],
            extent: [extent_x, extent_y],
        })
    }

    fn validate(extent: f64, n: usize) -> Result<()> {
        if n < MIN_NODES {
            return Err(Error::Parameter(format!(
                "grid needs at least {MIN_NODES} nodes per axis, got {n}"
            )));
        }
        if !(extent.is_finite() && extent > 0.0) {
            return Err(Error::Parameter(format!("grid extent must be > 0, got {extent}")));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n(&self, axis: usize) -> usize {
        self.n[axis]
    }

    pub fn extent(&self, axis: usize) -> f64 {
        self.extent[axis]
    }

    pub fn h(&self, axis: usize) -> f64 {
        self.extent[axis] / self.n[axis] as f64
    }

    /// Largest spacing over the active axes.
    pub fn h_max(&self) -> f64 {
        (0..self.dim).map(|a| self.h(a)).fold(0.0, f64::max)
    }

    pub fn len(&self) -> usize {
        self.n[0] * self.n[1]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Measure of one cell (length in 1D, area in 2D).
    pub fn cell_volume(&self) -> f64 {
        (0..self.dim).map(|a| self.h(a)).product()
    }

    /// Measure of Ω.
    pub fn volume(&self) -> f64 {
        (0..self.dim).map(|a| self.extent[a]).product()
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.n[0] + i
    }

    /// Node coordinates; the second entry is 0 in 1D.
    pub fn node(&self, idx: usize) -> [f64; 2] {
        let i = idx % self.n[0];
        let j = idx / self.n[0];
        let x = (i as f64 + 0.5) * self.h(0);
        let y = if self.dim == 2 {
            (j as f64 + 0.5) * self.h(1)
        } else {
            0.0
        };
        [x, y]
    }

    fn check_same(&self, other: &Grid) -> Result<()> {
        if self != other {
            return Err(Error::GridMismatch(format!("{self} vs {other}")));
        }
        Ok(())
    }

    /// Stencil derivative of `v` along `axis` at node `idx`.
    fn diff(&self, v: &[f64], axis: usize, idx: usize) -> f64 {
        let n = self.n[axis];
        let stride = if axis == 0 { 1 } else { self.n[0] };
        let k = if axis == 0 {
            idx % self.n[0]
        } else {
            idx / self.n[0]
        };
        let h = self.h(axis);
        if k == 0 {
            (v[idx + stride] - v[idx]) / h
        } else if k == n - 1 {
            (v[idx] - v[idx - stride]) / h
        } else {
            (v[idx + stride] - v[idx - stride]) / (2.0 * h)
        }
    }

    /// Squared stencil gradient norm at a node.
    fn grad_sq(&self, v: &[f64], idx: usize) -> f64 {
        (0..self.dim).map(|a| self.diff(v, a, idx).powi(2)).sum()
    }
}

impl fmt::Display for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.dim == 1 {
            write!(f, "1D n={} extent={}", self.n[0], self.extent[0])
        } else {
            write!(
                f,
                "2D n={}x{} extent={}x{}",
                self.n[0], self.n[1], self.extent[0], self.extent[1]
            )
        }
    }
}

/// Nodal mass density `M`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    pub grid: Grid,
    pub values: Vec<f64>,
}

/// Nodal phase indicator `χ ∈ {0, 1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseMap {
    pub grid: Grid,
    pub values: Vec<Phase>,
}

impl GridField {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!("{} values for {grid}", values.len())));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Parameter(format!("non-finite value at node {i}")));
        }
        Ok(Self { grid, values })
    }

    pub fn constant(grid: Grid, value: f64) -> Self {
        Self {
            grid,
            values: vec![value; grid.len()],
        }
    }

    pub fn from_fn(grid: Grid, mut f: impl FnMut([f64; 2]) -> f64) -> Self {
        let values = (0..grid.len()).map(|k| f(grid.node(k))).collect();
        Self { grid, values }
    }

    /// Per-phase well bottoms `1/a(χ)`.
    pub fn well_bottoms(chi: &PhaseMap, params: &ModelParams) -> Self {
        let values = chi.values.iter().map(|&p| 1.0 / params.a(p)).collect();
        Self {
            grid: chi.grid,
            values,
        }
    }

    /// `max |M - 1|`.
    pub fn sup_dist_to_one(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max((v - 1.0).abs()))
    }
}

impl PhaseMap {
    pub fn new(grid: Grid, values: Vec<Phase>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!("{} values for {grid}", values.len())));
        }
        if let Some(i) = values.iter().position(|&v| v > 1) {
            return Err(Error::Parameter(format!("phase value at node {i} is not 0 or 1")));
        }
        Ok(Self { grid, values })
    }

    pub fn constant(grid: Grid, phase: Phase) -> Self {
        Self {
            grid,
            values: vec![phase.min(1); grid.len()],
        }
    }

    pub fn from_fn(grid: Grid, mut f: impl FnMut([f64; 2]) -> bool) -> Self {
        let values = (0..grid.len()).map(|k| Phase::from(f(grid.node(k)))).collect();
        Self { grid, values }
    }

    /// `χ = 1` on `x > extent_x / 2`.
    pub fn half(grid: Grid) -> Self {
        let mid = 0.5 * grid.extent(0);
        Self::from_fn(grid, |p| p[0] > mid)
    }

    /// `χ = 1` on the disk of radius `r` centered in Ω (2D only).
    pub fn disk(grid: Grid, r: f64) -> Result<Self> {
        if grid.dim() != 2 {
            return Err(Error::Parameter("disk phase requires a 2D grid".into()));
        }
        let c = [0.5 * grid.extent(0), 0.5 * grid.extent(1)];
        Ok(Self::from_fn(grid, |p| (p[0] - c[0]).hypot(p[1] - c[1]) < r))
    }

    /// Optimal phase `χ̄ = [M > a*]` of a mass field.
    pub fn threshold(m: &GridField, params: &ModelParams) -> Self {
        let d = params.derived();
        let values = m
            .values
            .iter()
            .map(|&v| crate::model::threshold_phase(v, &d))
            .collect();
        Self { grid: m.grid, values }
    }
}

/// `E_ε(M, χ) = Σ V [ε⁻²(1 - a(χ)M)² + ½|∇M|²]`.
pub fn grid_energy(m: &GridField, chi: &PhaseMap, params: &ModelParams) -> Result<f64> {
    m.grid.check_same(&chi.grid)?;
    let g = &m.grid;
    let v = &m.values;
    let sum = chunked_sum(g.len(), |k| {
        params.well_potential(v[k], chi.values[k]) + 0.5 * g.grad_sq(v, k)
    });
    Ok(g.cell_volume() * sum)
}

/// Exact gradient of [`grid_energy`] with respect to the nodal values.
///
/// With `D` the stencil matrix of one axis, the gradient-energy part
/// contributes `V Dᵀ D M`, a wide discrete Laplacian with the one-sided
/// rows at the boundary.
pub fn grid_energy_gradient(m: &GridField, chi: &PhaseMap, params: &ModelParams) -> Result<GridField> {
    m.grid.check_same(&chi.grid)?;
    let g = m.grid;
    let v = &m.values;
    let vol = g.cell_volume();
    let mut out = vec![0.0; g.len()];
    fill(&mut out, |k| params.well_slope(v[k], chi.values[k]));
    for axis in 0..g.dim() {
        let mut d = vec![0.0; g.len()];
        fill(&mut d, |k| g.diff(v, axis, k));
        apply_transpose(&g, axis, &d, &mut out);
    }
    for o in &mut out {
        *o *= vol;
    }
    Ok(GridField { grid: g, values: out })
}

/// `out += Dᵀ d` for the stencil of `axis`.
fn apply_transpose(g: &Grid, axis: usize, d: &[f64], out: &mut [f64]) {
    let n = g.n(axis);
    let stride = if axis == 0 { 1 } else { g.n(0) };
    let lines = g.len() / n;
    let h = g.h(axis);
    let inv_h = 1.0 / h;
    let inv_2h = 0.5 / h;
    for line in 0..lines {
        let base = if axis == 0 { line * g.n(0) } else { line };
        let at = |k: usize| base + k * stride;
        out[at(0)] -= inv_h * d[at(0)];
        out[at(1)] += inv_h * d[at(0)];
        for k in 1..n - 1 {
            out[at(k + 1)] += inv_2h * d[at(k)];
            out[at(k - 1)] -= inv_2h * d[at(k)];
        }
        out[at(n - 1)] += inv_h * d[at(n - 1)];
        out[at(n - 2)] -= inv_h * d[at(n - 1)];
    }
}

/// Energy with the optimal phase `χ̄ = [M > a*]`.
pub fn reduced_energy(m: &GridField, params: &ModelParams) -> f64 {
    let chi = PhaseMap::threshold(m, params);
    grid_energy(m, &chi, params).expect("threshold phase shares the grid")
}

/// Face-counting total variation of `χ`: each face between differing phases
/// contributes its measure (`h` of the other axis in 2D, 1 in 1D).
pub fn discrete_perimeter(chi: &PhaseMap) -> f64 {
    let g = &chi.grid;
    let v = &chi.values;
    let (nx, ny) = (g.n(0), g.n(1));
    let mut total = 0.0;
    let face_x = if g.dim() == 2 { g.h(1) } else { 1.0 };
    for j in 0..ny {
        let count = (0..nx - 1)
            .filter(|&i| v[g.index(i, j)] != v[g.index(i + 1, j)])
            .count();
        total += count as f64 * face_x;
    }
    if g.dim() == 2 {
        let face_y = g.h(0);
        for j in 0..ny - 1 {
            let count = (0..nx)
                .filter(|&i| v[g.index(i, j)] != v[g.index(i, j + 1)])
                .count();
            total += count as f64 * face_y;
        }
    }
    total
}

/// Value of the sharp-interface limit energy: finite only on `M ≡ 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LimitValue {
    Finite(f64),
    Infinite,
}

impl LimitValue {
    pub fn finite(&self) -> Option<f64> {
        match self {
            LimitValue::Finite(v) => Some(*v),
            LimitValue::Infinite => None,
        }
    }
}

impl fmt::Display for LimitValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LimitValue::Finite(v) => write!(f, "{v}"),
            LimitValue::Infinite => f.write_str("infinite"),
        }
    }
}

impl Serialize for LimitValue {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            LimitValue::Finite(v) => s.serialize_f64(*v),
            LimitValue::Infinite => s.serialize_str("infinite"),
        }
    }
}

/// Default sup-norm tolerance for `M = 1` in [`limit_energy`].
pub const LIMIT_TOL: f64 = 1e-12;

/// `c²/√8 · Per(χ)` if `‖M - 1‖∞ ≤ tol`, otherwise [`LimitValue::Infinite`].
pub fn limit_energy(m: &GridField, chi: &PhaseMap, params: &ModelParams, tol: f64) -> LimitValue {
    if m.sup_dist_to_one() <= tol {
        LimitValue::Finite(params.line_tension() * discrete_perimeter(chi))
    } else {
        LimitValue::Infinite
    }
}

/// Discrete total variation `Σ V |∇(H∘M)|` with the energy stencil.
pub fn tv_of_h(m: &GridField, params: &ModelParams) -> f64 {
    let g = &m.grid;
    let u: Vec<f64> = m.values.iter().map(|&v| params.antiderivative_h(v)).collect();
    g.cell_volume() * chunked_sum(g.len(), |k| g.grad_sq(&u, k).sqrt())
}

/// Slack allowed in the discrete Modica–Mortola inequality,
/// `10 · h · energy`.
pub fn young_tolerance(grid: &Grid, energy: f64) -> f64 {
    10.0 * grid.h_max() * energy
}

fn write_header(w: &mut impl Write, g: &Grid) -> Result<()> {
    if g.dim() == 1 {
        writeln!(w, "1 {} {}", g.n(0), g.extent(0))?;
    } else {
        writeln!(w, "2 {} {} {} {}", g.n(0), g.n(1), g.extent(0), g.extent(1))?;
    }
    Ok(())
}

fn read_body(r: impl BufRead) -> Result<(Grid, Vec<String>)> {
    let mut lines = r
        .lines()
        .map(|l| l.map_err(Error::from))
        .filter(|l| l.as_ref().map_or(true, |s| !s.trim().is_empty()));
    let header = lines.next().ok_or_else(|| Error::parse("empty field file"))??;
    let tok: Vec<&str> = header.split_whitespace().collect();
    let num = |s: &str| -> Result<f64> {
        s.parse::<f64>()
            .map_err(|_| Error::parse(format!("bad number {s:?} in header")))
    };
    let int = |s: &str| -> Result<usize> {
        s.parse::<usize>()
            .map_err(|_| Error::parse(format!("bad count {s:?} in header")))
    };
    let grid = match tok.as_slice() {
        ["1", n, ex] => Grid::line(num(ex)?, int(n)?)?,
        ["2", nx, ny, ex, ey] => Grid::rect(num(ex)?, num(ey)?, int(nx)?, int(ny)?)?,
        _ => return Err(Error::parse(format!("bad field header {header:?}"))),
    };
    let body: Vec<String> = lines.collect::<Result<_>>()?;
    if body.len() != grid.len() {
        return Err(Error::parse(format!(
            "expected {} values, found {}",
            grid.len(),
            body.len()
        )));
    }
    Ok((grid, body))
}

impl GridField {
    pub fn read(path: &Path) -> Result<Self> {
        let f = std::fs::File::open(path)?;
        Self::read_from(std::io::BufReader::new(f)).map_err(|e| e.with_path(path))
    }

    pub fn read_from(r: impl BufRead) -> Result<Self> {
        let (grid, body) = read_body(r)?;
        let values = body
            .iter()
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::parse(format!("bad value {s:?}")))
            })
            .collect::<Result<_>>()?;
        Self::new(grid, values)
    }

    pub fn write_to(&self, mut w: impl Write) -> Result<()> {
        write_header(&mut w, &self.grid)?;
        for v in &self.values {
            writeln!(w, "{v:e}")?;
        }
        Ok(())
    }
}

impl PhaseMap {
    pub fn read(path: &Path) -> Result<Self> {
        let f = std::fs::File::open(path)?;
        Self::read_from(std::io::BufReader::new(f)).map_err(|e| e.with_path(path))
    }

    pub fn read_from(r: impl BufRead) -> Result<Self> {
        let (grid, body) = read_body(r)?;
        let values = body
            .iter()
            .map(|s| match s.trim() {
                "0" => Ok(0),
                "1" => Ok(1),
                other => Err(Error::parse(format!("phase value {other:?} is not 0 or 1"))),
            })
            .collect::<Result<_>>()?;
        Self::new(grid, values)
    }

    pub fn write_to(&self, mut w: impl Write) -> Result<()> {
        write_header(&mut w, &self.grid)?;
        for v in &self.values {
            writeln!(w, "{v}")?;
        }
        Ok(())
    }
}
