//! Descent solvers for the grid energy and ε-continuation sweeps.
//!
//! For fixed `χ` the energy is a strictly convex quadratic in `M`, so plain
//! gradient descent converges from any start. Steps are taken in the L²
//! metric (the nodal gradient divided by the cell volume) and the two-point
//! step is safeguarded by backtracking, so every accepted step decreases
//! the energy.

use serde::Serialize;
use std::io::Write;
use std::time::Instant;

use crate::error::{Error, Result};
use crate::grid::{
    discrete_perimeter, grid_energy, grid_energy_gradient, Grid, GridField, LimitValue, PhaseMap,
};
use crate::model::{ModelParams, Phase};

/// Step-size rule for [`minimize_fixed_phase`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum StepRule {
    /// Constant step `1/L` from a Gershgorin bound on the Hessian.
    Fixed,
    /// Barzilai–Borwein two-point step with backtracking.
    AdaptiveTwoPoint,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MinimizeOptions {
    pub max_iters: usize,
    /// Stop once the L² norm of the energy density gradient is below this.
    pub grad_tol: f64,
    pub step_rule: StepRule,
    /// Seed for randomized initial data; the solvers themselves are
    /// deterministic.
    pub seed: u64,
}

impl Default for MinimizeOptions {
    fn default() -> Self {
        Self {
            max_iters: 20_000,
            grad_tol: 1e-8,
            step_rule: StepRule::AdaptiveTwoPoint,
            seed: 0,
        }
    }
}

impl MinimizeOptions {
    fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(Error::Parameter("max_iters must be >= 1".into()));
        }
        if !(self.grad_tol > 0.0) {
            return Err(Error::Parameter("grad_tol must be > 0".into()));
        }
        Ok(())
    }
}

/// Outcome of a descent run.
#[derive(Debug, Clone)]
pub struct Minimized {
    pub field: GridField,
    pub energy: f64,
    pub iterations: usize,
    pub grad_norm: f64,
    /// `false` if the iteration cap was reached first.
    pub converged: bool,
}

fn l2_norm(g: &[f64], vol: f64) -> f64 {
    // g holds ∂E/∂M_k = V·density
    (g.iter().map(|v| v * v).sum::<f64>() / vol).sqrt()
}

fn warn_resolution(grid: &Grid, params: &ModelParams) {
    if grid.h_max() > params.eps() / 4.0 {
        log::warn!(
            "grid spacing {} exceeds eps/4 = {}; the transition layer is under-resolved",
            grid.h_max(),
            params.eps() / 4.0
        );
    }
}

/// A stall at the fixed step counts as convergence when the predicted
/// decrease is below this fraction of the energy.
const STALL_REL: f64 = 1e-12;

/// Minimize `E_ε(·, χ)` starting from the per-phase well bottoms.
pub fn minimize_fixed_phase(
    chi: &PhaseMap,
    params: &ModelParams,
    opts: &MinimizeOptions,
) -> Result<Minimized> {
    minimize_from(GridField::well_bottoms(chi, params), chi, params, opts)
}

/// Minimize `E_ε(·, χ)` from a given initial field.
pub fn minimize_from(
    init: GridField,
    chi: &PhaseMap,
    params: &ModelParams,
    opts: &MinimizeOptions,
) -> Result<Minimized> {
    opts.validate()?;
    warn_resolution(&init.grid, params);
    let grid = init.grid;
    let vol = grid.cell_volume();
    let lipschitz = 2.0 * params.lambda().powi(2) / params.eps().powi(2)
        + (0..grid.dim()).map(|a| 3.0 / grid.h(a).powi(2)).sum::<f64>();
    let fixed_step = 1.0 / lipschitz;

    let mut m = init;
    let mut energy = grid_energy(&m, chi, params)?;
    let mut grad = grid_energy_gradient(&m, chi, params)?;
    let mut gnorm = l2_norm(&grad.values, vol);
    let mut step = fixed_step;
    let mut iterations = 0;
    let mut stalled = false;

    while gnorm > opts.grad_tol && iterations < opts.max_iters {
        iterations += 1;
        // directional decrease along -g/V is |g|²/V
        let decrease = gnorm * gnorm;
        let mut alpha = step;
        let (trial, trial_energy) = loop {
            let values = m
                .values
                .iter()
                .zip(&grad.values)
                .map(|(x, g)| x - alpha * g / vol)
                .collect();
            let trial = GridField { grid, values };
            let e = grid_energy(&trial, chi, params)?;
            if !e.is_finite() {
                return Err(Error::Diverged {
                    iteration: iterations,
                    reason: format!("non-finite energy at step {alpha:e}"),
                });
            }
            if e <= energy - 1e-4 * alpha * decrease || alpha <= fixed_step {
                break (trial, e);
            }
            alpha *= 0.5;
        };
        if trial_energy >= energy {
            // The fixed step guarantees descent in exact arithmetic, so this
            // only happens once the predicted decrease drowns in round-off.
            stalled = fixed_step * decrease <= STALL_REL * energy.abs().max(f64::MIN_POSITIVE);
            if !stalled {
                return Err(Error::Diverged {
                    iteration: iterations,
                    reason: format!("no descent at the guaranteed step (|grad| = {gnorm:e})"),
                });
            }
            break;
        }
        let new_grad = grid_energy_gradient(&trial, chi, params)?;
        step = match opts.step_rule {
            StepRule::Fixed => fixed_step,
            StepRule::AdaptiveTwoPoint => {
                let mut ss = 0.0;
                let mut sy = 0.0;
                for k in 0..grid.len() {
                    let s = trial.values[k] - m.values[k];
                    let y = (new_grad.values[k] - grad.values[k]) / vol;
                    ss += s * s;
                    sy += s * y;
                }
                if sy > 0.0 {
                    (ss / sy).max(fixed_step)
                } else {
                    fixed_step
                }
            }
        };
        m = trial;
        energy = trial_energy;
        grad = new_grad;
        gnorm = l2_norm(&grad.values, vol);
    }
    let converged = gnorm <= opts.grad_tol || stalled;
    if stalled {
        log::debug!("descent reached round-off after {iterations} iterations, |grad| = {gnorm:e}");
    }
    if !converged {
        log::warn!("descent stopped after {iterations} iterations with |grad| = {gnorm:e}");
    }
    Ok(Minimized {
        field: m,
        energy,
        iterations,
        grad_norm: gnorm,
        converged,
    })
}

/// Result of [`minimize_alternating`].
#[derive(Debug, Clone)]
pub struct Alternating {
    pub field: GridField,
    pub phase: PhaseMap,
    pub energy: f64,
    /// Total descent iterations over all rounds.
    pub iterations: usize,
    pub rounds: usize,
    pub converged: bool,
}

/// Maximum number of threshold/descent rounds.
pub const MAX_ROUNDS: usize = 100;

/// Alternate exact thresholding in `χ` with descent in `M` until the phase
/// map is a fixed point.
pub fn minimize_alternating(
    m0: &GridField,
    params: &ModelParams,
    opts: &MinimizeOptions,
) -> Result<Alternating> {
    let mut m = m0.clone();
    let mut chi = PhaseMap::threshold(&m, params);
    let mut iterations = 0;
    for round in 1..=MAX_ROUNDS {
        let res = minimize_from(m, &chi, params, opts)?;
        iterations += res.iterations;
        m = res.field;
        let next = PhaseMap::threshold(&m, params);
        if next == chi {
            return Ok(Alternating {
                field: m,
                phase: chi,
                energy: res.energy,
                iterations,
                rounds: round,
                converged: res.converged,
            });
        }
        chi = next;
    }
    let energy = grid_energy(&m, &chi, params)?;
    Ok(Alternating {
        field: m,
        phase: chi,
        energy,
        iterations,
        rounds: MAX_ROUNDS,
        converged: false,
    })
}

/// Phase geometry for an ε-sweep. Analytic shapes are re-digitized on each
/// refined grid; a stored map keeps its own grid.
#[derive(Debug, Clone)]
pub enum PhaseShape {
    /// `χ = 1` on the right half of Ω.
    Half,
    /// `χ = 1` on a centered disk (2D).
    Disk { r: f64 },
    /// A fixed phase map on a fixed grid.
    Map(PhaseMap),
}

impl PhaseShape {
    fn digitize(&self, grid: Grid) -> Result<PhaseMap> {
        match self {
            PhaseShape::Half => Ok(PhaseMap::half(grid)),
            PhaseShape::Disk { r } => PhaseMap::disk(grid, *r),
            PhaseShape::Map(map) => Ok(map.clone()),
        }
    }

    /// Signed distance to the phase boundary, positive inside `{χ = 1}`.
    /// Infinite (with sign) when the phase is constant.
    pub fn signed_distance(&self, chi: &PhaseMap) -> Vec<f64> {
        let g = chi.grid;
        match self {
            PhaseShape::Half => {
                let mid = 0.5 * g.extent(0);
                (0..g.len()).map(|k| g.node(k)[0] - mid).collect()
            }
            PhaseShape::Disk { r } => {
                let c = [0.5 * g.extent(0), 0.5 * g.extent(1)];
                (0..g.len())
                    .map(|k| {
                        let p = g.node(k);
                        r - (p[0] - c[0]).hypot(p[1] - c[1])
                    })
                    .collect()
            }
            PhaseShape::Map(_) => face_distance(chi),
        }
    }
}

/// Brute-force distance from each node to the nearest face separating the
/// two phases.
fn face_distance(chi: &PhaseMap) -> Vec<f64> {
    let g = chi.grid;
    let (hx, hy) = (g.h(0), if g.dim() == 2 { g.h(1) } else { 0.0 });
    // faces as segments (a, b)
    let mut faces: Vec<([f64; 2], [f64; 2])> = Vec::new();
    for j in 0..g.n(1) {
        for i in 0..g.n(0) {
            let k = g.index(i, j);
            let p = g.node(k);
            if i + 1 < g.n(0) && chi.values[k] != chi.values[g.index(i + 1, j)] {
                let x = p[0] + 0.5 * hx;
                faces.push(([x, p[1] - 0.5 * hy], [x, p[1] + 0.5 * hy]));
            }
            if g.dim() == 2 && j + 1 < g.n(1) && chi.values[k] != chi.values[g.index(i, j + 1)] {
                let y = p[1] + 0.5 * hy;
                faces.push(([p[0] - 0.5 * hx, y], [p[0] + 0.5 * hx, y]));
            }
        }
    }
    (0..g.len())
        .map(|k| {
            let sign = if chi.values[k] == 1 { 1.0 } else { -1.0 };
            let p = g.node(k);
            let d = faces
                .iter()
                .map(|(a, b)| segment_distance(p, *a, *b))
                .fold(f64::INFINITY, f64::min);
            sign * d
        })
        .collect()
}

fn segment_distance(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let ab = [b[0] - a[0], b[1] - a[1]];
    let ap = [p[0] - a[0], p[1] - a[1]];
    let len2 = ab[0] * ab[0] + ab[1] * ab[1];
    let t = if len2 > 0.0 {
        ((ap[0] * ab[0] + ap[1] * ab[1]) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    (ap[0] - t * ab[0]).hypot(ap[1] - t * ab[1])
}

/// Grid geometry for a sweep: Ω and the resolution `h = ε / nodes_per_eps`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepGrid {
    pub dim: usize,
    pub extent: [f64; 2],
    pub nodes_per_eps: f64,
}

impl SweepGrid {
    pub fn grid_for(&self, eps: f64) -> Result<Grid> {
        let count = |ext: f64| ((ext * self.nodes_per_eps / eps).ceil() as usize).max(4);
        if self.dim == 1 {
            Grid::line(self.extent[0], count(self.extent[0]))
        } else {
            Grid::rect(
                self.extent[0],
                self.extent[1],
                count(self.extent[0]),
                count(self.extent[1]),
            )
        }
    }
}

/// `M = q_ε(sdist)` on the grid of `chi`.
pub fn profile_field(chi: &PhaseMap, sdist: &[f64], params: &ModelParams) -> GridField {
    let values = sdist
        .iter()
        .zip(&chi.values)
        .map(|(&d, &p)| {
            if d.is_finite() {
                params.optimal_profile(d).0
            } else {
                1.0 / params.a(p)
            }
        })
        .collect();
    GridField {
        grid: chi.grid,
        values,
    }
}

/// One ε of a sweep.
#[derive(Debug, Clone, Serialize)]
pub struct SweepRecord {
    pub eps: f64,
    pub min_energy: f64,
    pub profile_energy: f64,
    pub limit_energy: LimitValue,
    /// `|min_energy - limit| / limit`, or the absolute difference when the
    /// limit vanishes.
    pub gap: f64,
    pub iters: usize,
    pub seconds: f64,
}

impl SweepRecord {
    /// Relative gap of the profile-constructed energy.
    pub fn profile_gap(&self) -> f64 {
        relative_gap(self.profile_energy, self.limit_energy)
    }
}

fn relative_gap(value: f64, limit: LimitValue) -> f64 {
    match limit {
        LimitValue::Finite(l) if l > 0.0 => (value - l).abs() / l,
        LimitValue::Finite(_) => value.abs(),
        LimitValue::Infinite => f64::NAN,
    }
}

#[derive(Debug, Clone, Default, Serialize)]
#[serde(transparent)]
pub struct SweepReport {
    pub records: Vec<SweepRecord>,
}

impl SweepReport {
    pub fn write_csv(&self, w: impl Write) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        for r in &self.records {
            out.serialize(r)?;
        }
        if self.records.is_empty() {
            out.write_record([
                "eps",
                "min_energy",
                "profile_energy",
                "limit_energy",
                "gap",
                "iters",
                "seconds",
            ])?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn write_json(&self, w: impl Write) -> Result<()> {
        serde_json::to_writer_pretty(w, self)?;
        Ok(())
    }
}

/// For each ε (strictly decreasing): digitize the phase on a grid with
/// `h = ε / nodes_per_eps`, build `M = q_ε(sdist)`, minimize from it, and
/// compare both energies with `c²/√8 · Per(χ)` on the same grid.
pub fn epsilon_sweep(
    shape: &PhaseShape,
    geometry: &SweepGrid,
    eps_list: &[f64],
    params: &ModelParams,
    opts: &MinimizeOptions,
) -> Result<SweepReport> {
    if eps_list.is_empty() {
        return Err(Error::Parameter("empty eps list".into()));
    }
    if eps_list.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::Parameter("eps list must be strictly decreasing".into()));
    }
    let mut records = Vec::with_capacity(eps_list.len());
    for &eps in eps_list {
        let start = Instant::now();
        let p = params.at_eps(eps)?;
        let grid = match shape {
            PhaseShape::Map(map) => map.grid,
            _ => geometry.grid_for(eps)?,
        };
        let chi = shape.digitize(grid)?;
        let sdist = shape.signed_distance(&chi);
        let init = profile_field(&chi, &sdist, &p);
        let profile_energy = grid_energy(&init, &chi, &p)?;
        let res = minimize_from(init, &chi, &p, opts)?;
        let limit = LimitValue::Finite(p.line_tension() * discrete_perimeter(&chi));
        log::info!(
            "eps={eps}: grid {grid}, profile {profile_energy:.7}, min {:.7} ({} iters)",
            res.energy,
            res.iterations
        );
        records.push(SweepRecord {
            eps,
            min_energy: res.energy,
            profile_energy,
            limit_energy: limit,
            gap: relative_gap(res.energy, limit),
            iters: res.iterations,
            seconds: start.elapsed().as_secs_f64(),
        });
    }
    Ok(SweepReport { records })
}

/// Phase map that is constant `phase` on `grid`; convenience for sweeps.
pub fn constant_shape(grid: Grid, phase: Phase) -> PhaseShape {
    PhaseShape::Map(PhaseMap::constant(grid, phase))
}
