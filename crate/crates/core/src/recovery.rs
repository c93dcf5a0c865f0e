//! Recovery sequences for a single phase-decorated curve.
//!
//! Given a smooth closed curve `γ` with a piecewise constant phase `χ`, the
//! construction places the optimal profile across every jump of `χ`,
//! `M* = q_ε(sdist(·, J))`, and restores the prescribed per-phase masses by
//! pushing the curve along its normal, `γ̃ = γ + (r ρ₀ + t ρ₁) ν`, with two
//! bumps `ρ₀`, `ρ₁` supported away from the jumps inside the respective
//! phases. The amplitudes `(r, t)` solve `Φ(r, t) = 0` where
//!
//! `Φ = ∫ (1-χ, χ) M* |γ̃'| ds - targets`,  `|γ̃'|² = (1 + wκ)² + w'²`.
//!
//! The perturbed curve is then resampled at uniform arclength, with `χ` and
//! `M` transported along, and rays along the new normal.
//!
//! All integrals are taken in the original arclength of `γ` with composite
//! Gauss–Legendre panels graded toward the jumps, so the masses are exact to
//! quadrature precision rather than to the node spacing.

use serde::Serialize;
use std::io::Write;
use std::time::Instant;

use crate::curve::{embedding_check, ArcTable, Embedding, PeriodicCurve, Shape};
use crate::error::{Error, Result};
use crate::meso::{bending_energy, phase_masses, separation_energy, Configuration, MassPair};
use crate::model::{ModelParams, Phase};
use crate::quadrature::{adaptive, gl_composite, gl_panel_array, graded_breaks};

/// Jumps closer than this to the origin trigger an origin shift.
const ORIGIN_TOL: f64 = 1e-9;

/// `∫_{-1}^{1} exp(-1/(1-x²)) dx`.
const MOLLIFIER_MASS: f64 = 0.443_993_816_168_079_4;

/// Closed curve with a phase that jumps at finitely many arclengths.
///
/// Arclength is measured from `origin` on the underlying shape, chosen so
/// that `0` is not a jump.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseCurve {
    shape: Shape,
    origin: f64,
    length: f64,
    jumps: Vec<f64>,
    start_phase: Phase,
}

/// Maximal interval of constant phase, `[start, end)` with `end` possibly
/// beyond the length (wrapping through the origin).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseArc {
    pub start: f64,
    pub end: f64,
    pub phase: Phase,
}

impl PhaseArc {
    pub fn len(&self) -> f64 {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.len() <= 0.0
    }
}

impl PhaseCurve {
    /// Phase 1 on the union of the arcs `[s0, s1)` (shape arclength, taken
    /// periodically) and phase 0 elsewhere.
    pub fn from_arcs(shape: Shape, arcs: &[(f64, f64)]) -> Result<Self> {
        let length = shape.length();
        for &(a, b) in arcs {
            if !(a.is_finite() && b.is_finite() && b > a) {
                return Err(Error::Parameter(format!("arc {a}:{b} must satisfy s0 < s1")));
            }
        }
        if arcs.iter().any(|&(a, b)| b - a >= length) {
            return Ok(Self::constant(shape, 1));
        }
        let inside = |x: f64| arcs.iter().any(|&(a, b)| (x - a).rem_euclid(length) < b - a);
        let mut cand: Vec<f64> = arcs
            .iter()
            .flat_map(|&(a, b)| [a.rem_euclid(length), b.rem_euclid(length)])
            .collect();
        cand.sort_by(f64::total_cmp);
        cand.dedup_by(|x, y| (*x - *y).abs() < ORIGIN_TOL);
        // an endpoint is a jump when the phase differs on its two sides
        let probe = 1e-7 * length;
        let jumps: Vec<f64> = cand
            .into_iter()
            .filter(|&x| inside(x - probe) != inside(x + probe))
            .collect();
        if jumps.is_empty() {
            return Ok(Self::constant(shape, Phase::from(inside(0.5 * length))));
        }
        let near_origin = jumps.iter().any(|&j| j < ORIGIN_TOL || length - j < ORIGIN_TOL);
        let origin = if near_origin {
            // middle of the first arc
            let j0 = jumps[0];
            let j1 = if jumps.len() > 1 { jumps[1] } else { j0 + length };
            0.5 * (j0 + j1)
        } else {
            0.0
        };
        let mut shifted: Vec<f64> = jumps.iter().map(|&j| (j - origin).rem_euclid(length)).collect();
        shifted.sort_by(f64::total_cmp);
        Ok(Self {
            shape,
            origin,
            length,
            jumps: shifted,
            start_phase: Phase::from(inside(origin)),
        })
    }

    /// Single-phase curve.
    pub fn constant(shape: Shape, phase: Phase) -> Self {
        let length = shape.length();
        Self {
            shape,
            origin: 0.0,
            length,
            jumps: Vec::new(),
            start_phase: phase,
        }
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    /// Shape arclength of this curve's `s = 0`.
    pub fn origin(&self) -> f64 {
        self.origin
    }

    /// Sorted jump positions in `(0, L)`.
    pub fn jumps(&self) -> &[f64] {
        &self.jumps
    }

    pub fn phase_at(&self, s: f64) -> Phase {
        let s = s.rem_euclid(self.length);
        let count = self.jumps.partition_point(|&j| j <= s);
        self.start_phase ^ (count % 2) as Phase
    }

    /// Periodic distance to the nearest jump, positive where `χ = 1`;
    /// `±∞` for a single-phase curve.
    pub fn sdist(&self, s: f64) -> f64 {
        let sign = if self.phase_at(s) == 1 { 1.0 } else { -1.0 };
        let s = s.rem_euclid(self.length);
        let d = self
            .jumps
            .iter()
            .map(|&j| {
                let d = (s - j).abs();
                d.min(self.length - d)
            })
            .fold(f64::INFINITY, f64::min);
        sign * d
    }

    pub fn frame(&self, s: f64) -> crate::curve::Frame {
        self.shape.frame(s + self.origin)
    }

    pub fn kappa(&self, s: f64) -> f64 {
        self.frame(s).kappa
    }

    /// Arcs of constant phase in order of their start.
    pub fn arcs(&self) -> Vec<PhaseArc> {
        let nj = self.jumps.len();
        if nj == 0 {
            return vec![PhaseArc {
                start: 0.0,
                end: self.length,
                phase: self.start_phase,
            }];
        }
        (0..nj)
            .map(|k| {
                let start = self.jumps[k];
                let end = if k + 1 < nj {
                    self.jumps[k + 1]
                } else {
                    self.jumps[0] + self.length
                };
                PhaseArc {
                    start,
                    end,
                    phase: self.phase_at(0.5 * (start + end)),
                }
            })
            .collect()
    }

    /// Length of each phase, i.e. the masses of the limit state `M ≡ 1`.
    pub fn phase_lengths(&self) -> MassPair {
        let mut m = MassPair { m1: 0.0, m2: 0.0 };
        for arc in self.arcs() {
            if arc.phase == 0 {
                m.m1 += arc.len();
            } else {
                m.m2 += arc.len();
            }
        }
        m
    }

    /// Smallest distance between distinct jumps (infinite without jumps).
    pub fn min_jump_gap(&self) -> f64 {
        if self.jumps.len() < 2 {
            return f64::INFINITY;
        }
        self.arcs()
            .iter()
            .map(PhaseArc::len)
            .fold(f64::INFINITY, f64::min)
    }

    /// `∫κ² ds` of the underlying shape.
    pub fn elastica(&self) -> f64 {
        adaptive(0.0, self.length, 1e-13, 1e-13, |s| self.kappa(s).powi(2))
    }
}

/// Limit energy of a phase-decorated curve, with both candidate bending
/// constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LimitEnergy {
    /// `(1/4)∫κ²`.
    pub elastica_quarter: f64,
    /// `(1/2)∫κ²`.
    pub elastica_half: f64,
    /// `(c²/√8)·#J`.
    pub line_tension: f64,
}

impl LimitEnergy {
    pub fn quarter_total(&self) -> f64 {
        self.elastica_quarter + self.line_tension
    }

    pub fn half_total(&self) -> f64 {
        self.elastica_half + self.line_tension
    }
}

pub fn limit_energy_curve(pc: &PhaseCurve, params: &ModelParams) -> LimitEnergy {
    let k2 = pc.elastica();
    LimitEnergy {
        elastica_quarter: 0.25 * k2,
        elastica_half: 0.5 * k2,
        line_tension: params.line_tension() * pc.jumps().len() as f64,
    }
}

/// Unit-area mollifier `exp(-1/(1-x²))` on `[center - half, center + half]`,
/// periodic with the curve length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Bump {
    pub center: f64,
    pub half_width: f64,
}

impl Bump {
    /// `(ρ, ρ')` at `s`.
    pub fn eval(&self, s: f64, period: f64) -> (f64, f64) {
        let d = (s - self.center + 0.5 * period).rem_euclid(period) - 0.5 * period;
        let x = d / self.half_width;
        if x.abs() >= 1.0 {
            return (0.0, 0.0);
        }
        let u = 1.0 - x * x;
        let rho = (-1.0 / u).exp() / (self.half_width * MOLLIFIER_MASS);
        (rho, rho * (-2.0 * x / (u * u)) / self.half_width)
    }

    pub fn support(&self) -> (f64, f64) {
        (self.center - self.half_width, self.center + self.half_width)
    }
}

/// The two perturbation bumps. A bump is absent when its phase is.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PerturbationFields {
    pub rho0: Option<Bump>,
    pub rho1: Option<Bump>,
    pub delta: f64,
}

impl PerturbationFields {
    pub fn rho(&self, phase: Phase) -> Result<&Bump> {
        let b = if phase == 0 { &self.rho0 } else { &self.rho1 };
        b.as_ref()
            .ok_or_else(|| Error::NoBumpSupport(format!("phase {phase} is empty")))
    }

    fn bumps(&self) -> impl Iterator<Item = &Bump> {
        self.rho0.iter().chain(self.rho1.iter())
    }

    /// `(ρ₀, ρ₀', ρ₁, ρ₁')` at `s`.
    fn eval(&self, s: f64, period: f64) -> [f64; 4] {
        let e = |b: &Option<Bump>| b.map_or((0.0, 0.0), |b| b.eval(s, period));
        let (a, da) = e(&self.rho0);
        let (b, db) = e(&self.rho1);
        [a, da, b, db]
    }
}

/// Panels per bump support.
const BUMP_PANELS: usize = 512;

/// Bump in the longest arc of each present phase, kept `delta` away from
/// its jumps. Bumps have unit area; each must satisfy
/// `|∫ρκ| ≥ 0.1 · mean|κ|` over its support.
pub fn build_bumps(pc: &PhaseCurve, delta: f64) -> Result<PerturbationFields> {
    if !(delta.is_finite() && delta > 0.0) {
        return Err(Error::Parameter(format!("bump margin {delta} must be > 0")));
    }
    let arcs = pc.arcs();
    let pick = |phase: Phase| -> Result<Option<Bump>> {
        let Some(arc) = arcs
            .iter()
            .filter(|a| a.phase == phase)
            .max_by(|a, b| a.len().total_cmp(&b.len()))
        else {
            return Ok(None);
        };
        if arc.len() <= 4.0 * delta {
            return Err(Error::NoBumpSupport(format!(
                "longest phase-{phase} arc has length {} <= 4 delta = {}",
                arc.len(),
                4.0 * delta
            )));
        }
        let bump = Bump {
            center: 0.5 * (arc.start + arc.end),
            half_width: 0.5 * arc.len() - delta,
        };
        let (a, b) = bump.support();
        let breaks: Vec<f64> = (0..=BUMP_PANELS)
            .map(|k| a + (b - a) * k as f64 / BUMP_PANELS as f64)
            .collect();
        let weighted = gl_composite(&breaks, &|s| bump.eval(s, pc.length()).0 * pc.kappa(s));
        let mean_abs = gl_composite(&breaks, &|s| pc.kappa(s).abs()) / (b - a);
        if !(weighted.abs() >= 0.1 * mean_abs && mean_abs > 0.0) {
            return Err(Error::NoBumpSupport(format!(
                "phase-{phase} bump has |∫ρκ| = {:e}, below 0.1 mean|κ| = {:e}",
                weighted.abs(),
                0.1 * mean_abs
            )));
        }
        Ok(Some(bump))
    };
    Ok(PerturbationFields {
        rho0: pick(0)?,
        rho1: pick(1)?,
        delta,
    })
}

/// Quadrature breakpoints on one arc: graded toward jumps on the profile
/// scale, with bump support ends inserted.
fn arc_breaks(pc: &PhaseCurve, fields: &PerturbationFields, arc: &PhaseArc, eps: f64) -> Vec<f64> {
    let len = arc.len();
    let mut breaks = if pc.jumps().is_empty() {
        (0..=256).map(|k| arc.start + len * k as f64 / 256.0).collect()
    } else {
        graded_breaks(arc.start, arc.end, (eps / 20.0).min(len / 64.0), len / 128.0)
    };
    for b in fields.bumps() {
        let (lo, hi) = b.support();
        for e in [lo, hi] {
            let e = arc.start + (e - arc.start).rem_euclid(pc.length());
            if e > arc.start && e < arc.end {
                breaks.push(e);
            }
        }
    }
    breaks.sort_by(f64::total_cmp);
    breaks.dedup_by(|x, y| (*x - *y).abs() < 1e-14 * pc.length());
    breaks
}

/// Perturbed curve `γ + (rρ₀ + tρ₁)ν` in the original arclength.
#[derive(Debug, Clone, Copy)]
struct Perturbed<'a> {
    pc: &'a PhaseCurve,
    fields: &'a PerturbationFields,
    r: f64,
    t: f64,
}

/// Local geometry of the perturbed curve at one parameter.
#[derive(Debug, Clone, Copy)]
struct Local {
    /// `1 + wκ`.
    stretch: f64,
    /// `|γ̃'|`.
    speed: f64,
    /// `∂|γ̃'|/∂r`, `∂|γ̃'|/∂t`.
    dspeed: [f64; 2],
}

impl Perturbed<'_> {
    fn local(&self, s: f64) -> Local {
        let [a, da, b, db] = self.fields.eval(s, self.pc.length());
        if a == 0.0 && b == 0.0 && da == 0.0 && db == 0.0 {
            return Local {
                stretch: 1.0,
                speed: 1.0,
                dspeed: [0.0; 2],
            };
        }
        let kappa = self.pc.kappa(s);
        let w = self.r * a + self.t * b;
        let dw = self.r * da + self.t * db;
        let stretch = 1.0 + w * kappa;
        let speed = stretch.hypot(dw);
        Local {
            stretch,
            speed,
            dspeed: [
                (stretch * kappa * a + dw * da) / speed,
                (stretch * kappa * b + dw * db) / speed,
            ],
        }
    }

    fn speed(&self, s: f64) -> f64 {
        self.local(s).speed
    }

    fn offset(&self, s: f64) -> f64 {
        let [a, _, b, _] = self.fields.eval(s, self.pc.length());
        self.r * a + self.t * b
    }
}

/// `Φ` and its Jacobian in `(r, t)`.
fn deficit_with_jacobian(
    pc: &PhaseCurve,
    fields: &PerturbationFields,
    params: &ModelParams,
    r: f64,
    t: f64,
    targets: MassPair,
) -> Result<([f64; 2], [[f64; 2]; 2])> {
    let curve = Perturbed { pc, fields, r, t };
    let mut phi = [-targets.m1, -targets.m2];
    let mut jac = [[0.0; 2]; 2];
    let mut worst = (f64::INFINITY, 0.0);
    for arc in pc.arcs() {
        let k = arc.phase as usize;
        let breaks = arc_breaks(pc, fields, &arc, params.eps());
        for w in breaks.windows(2) {
            let [m, dr, dt] = gl_panel_array(w[0], w[1], |s| {
                let loc = curve.local(s);
                if loc.stretch < worst.0 {
                    worst = (loc.stretch, s);
                }
                let q = params.optimal_profile(pc.sdist(s)).0;
                [q * loc.speed, q * loc.dspeed[0], q * loc.dspeed[1]]
            });
            phi[k] += m;
            jac[k][0] += dr;
            jac[k][1] += dt;
        }
    }
    if !(worst.0 > 0.0) {
        return Err(Error::Immersion {
            s: worst.1.rem_euclid(pc.length()),
        });
    }
    Ok((phi, jac))
}

/// Mass deficit `Φ(r, t)`: per-phase masses of the profile on the perturbed
/// curve minus `targets`. `params.eps()` is the profile width.
///
/// Folding of the offset curve (`1 + wκ <= 0` somewhere) is reported as an
/// immersion failure.
pub fn mass_deficit(
    pc: &PhaseCurve,
    fields: &PerturbationFields,
    params: &ModelParams,
    r: f64,
    t: f64,
    targets: MassPair,
) -> Result<(f64, f64)> {
    let (phi, _) = deficit_with_jacobian(pc, fields, params, r, t, targets)?;
    Ok((phi[0], phi[1]))
}

/// `A = ∫ [[(1-χ)ρ₀, (1-χ)ρ₁], [χρ₀, χρ₁]] κ ds`, the derivative of `Φ` at
/// `r = t = 0` in the limit of a flat profile.
pub fn jacobian_at_zero(pc: &PhaseCurve, fields: &PerturbationFields) -> Result<[[f64; 2]; 2]> {
    let mut a = [[0.0; 2]; 2];
    for arc in pc.arcs() {
        let k = arc.phase as usize;
        let breaks = arc_breaks(pc, fields, &arc, pc.length());
        for w in breaks.windows(2) {
            let [x, y] = gl_panel_array(w[0], w[1], |s| {
                let [r0, _, r1, _] = fields.eval(s, pc.length());
                if r0 == 0.0 && r1 == 0.0 {
                    return [0.0; 2];
                }
                let kappa = pc.kappa(s);
                [r0 * kappa, r1 * kappa]
            });
            a[k][0] += x;
            a[k][1] += y;
        }
    }
    let det = active_det(&a, fields);
    if !(det.abs() > 1e-12) {
        return Err(Error::SingularJacobian(det.abs()));
    }
    Ok(a)
}

/// Determinant restricted to the phases that carry a bump.
fn active_det(a: &[[f64; 2]; 2], fields: &PerturbationFields) -> f64 {
    match (fields.rho0.is_some(), fields.rho1.is_some()) {
        (true, true) => a[0][0] * a[1][1] - a[0][1] * a[1][0],
        (true, false) => a[0][0],
        (false, true) => a[1][1],
        (false, false) => 0.0,
    }
}

/// Tuning of the recovery construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RecoveryOptions {
    /// Distance kept between bump supports and jumps.
    pub delta: f64,
    /// Bound on `|r|`, `|t|`; defaults to half the curve length.
    pub delta0: Option<f64>,
    /// Node count of the resampled curve; defaults to the next power of two
    /// of `10 L / ε`.
    pub nodes: Option<usize>,
    /// Newton stops once `max |Φ|` is below this.
    pub tol: f64,
    pub max_newton: usize,
    pub embedding_resolution: usize,
}

impl Default for RecoveryOptions {
    fn default() -> Self {
        Self {
            delta: 0.1,
            delta0: None,
            nodes: None,
            tol: 1e-12,
            max_newton: 60,
            embedding_resolution: 64,
        }
    }
}

/// Newton solution of the mass constraint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MassSolution {
    pub r: f64,
    pub t: f64,
    pub residual: MassPair,
    pub iterations: usize,
}

/// Damped Newton iteration for `Φ(r, t) = 0` from `guess`, using the
/// analytic derivative of the quadrature.
pub fn solve_mass_constraint(
    pc: &PhaseCurve,
    fields: &PerturbationFields,
    params: &ModelParams,
    targets: MassPair,
    opts: &RecoveryOptions,
    guess: (f64, f64),
) -> Result<MassSolution> {
    jacobian_at_zero(pc, fields)?;
    let bound = opts.delta0.unwrap_or(0.5 * pc.length());
    let active = [fields.rho0.is_some(), fields.rho1.is_some()];
    let mut x = [
        if active[0] { guess.0 } else { 0.0 },
        if active[1] { guess.1 } else { 0.0 },
    ];
    let norm = |p: &[f64; 2]| p[0].abs().max(p[1].abs());
    let eval = |x: &[f64; 2]| deficit_with_jacobian(pc, fields, params, x[0], x[1], targets);
    let (mut phi, mut jac) = match eval(&x) {
        Ok(v) => v,
        Err(_) => {
            x = [0.0; 2];
            eval(&x)?
        }
    };
    for it in 0..=opts.max_newton {
        if norm(&phi) <= opts.tol {
            return Ok(MassSolution {
                r: x[0],
                t: x[1],
                residual: MassPair {
                    m1: phi[0],
                    m2: phi[1],
                },
                iterations: it,
            });
        }
        if it == opts.max_newton {
            break;
        }
        let step = match active {
            [true, true] => {
                let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
                if det == 0.0 {
                    return Err(Error::SingularJacobian(0.0));
                }
                [
                    (jac[1][1] * phi[0] - jac[0][1] * phi[1]) / det,
                    (jac[0][0] * phi[1] - jac[1][0] * phi[0]) / det,
                ]
            }
            [true, false] => [phi[0] / jac[0][0], 0.0],
            [false, true] => [0.0, phi[1] / jac[1][1]],
            [false, false] => return Err(Error::SingularJacobian(0.0)),
        };
        if !(step[0].is_finite() && step[1].is_finite()) {
            return Err(Error::Newton(format!("non-finite step at iteration {it}")));
        }
        let mut alpha = 1.0;
        let mut accepted = None;
        for _ in 0..40 {
            let trial = [x[0] - alpha * step[0], x[1] - alpha * step[1]];
            if norm(&trial) < bound {
                if let Ok((p, j)) = eval(&trial) {
                    if norm(&p) < norm(&phi) {
                        accepted = Some((trial, p, j));
                        break;
                    }
                }
            }
            alpha *= 0.5;
        }
        let Some((trial, p, j)) = accepted else {
            return Err(Error::Newton(format!(
                "no damped step decreases |Φ| = {:e} at iteration {it} (r = {}, t = {})",
                norm(&phi),
                x[0],
                x[1]
            )));
        };
        x = trial;
        phi = p;
        jac = j;
    }
    Err(Error::Newton(format!(
        "|Φ| = {:e} after {} iterations",
        norm(&phi),
        opts.max_newton
    )))
}

/// Recovered configuration and its checks.
#[derive(Debug, Clone)]
pub struct Recovered {
    pub config: Configuration,
    /// Masses minus targets by quadrature in the new arclength.
    pub mass_residuals: MassPair,
    /// Same by the periodic trapezoid rule on the nodes; only first order
    /// because `χM` jumps.
    pub node_residuals: MassPair,
    pub embedding: Embedding,
}

/// Smallest power of two that is at least `x`, and at least 256.
fn node_count(x: f64) -> usize {
    (x.ceil() as usize).max(256).next_power_of_two()
}

/// Resample `γ̃` at uniform arclength, transport `χ` and `M*`, set `θ` to
/// the new normal, and re-verify the masses.
pub fn build_recovery(
    pc: &PhaseCurve,
    fields: &PerturbationFields,
    params: &ModelParams,
    r: f64,
    t: f64,
    targets: MassPair,
    opts: &RecoveryOptions,
) -> Result<Recovered> {
    let len = pc.length();
    let curve = Perturbed { pc, fields, r, t };
    // fold check before tabulating
    deficit_with_jacobian(pc, fields, params, r, t, targets)?;

    let mut breaks = vec![0.0, len];
    for b in fields.bumps() {
        let (lo, hi) = b.support();
        for k in 0..=BUMP_PANELS {
            breaks.push((lo + (hi - lo) * k as f64 / BUMP_PANELS as f64).rem_euclid(len));
        }
    }
    breaks.sort_by(f64::total_cmp);
    breaks.dedup_by(|x, y| (*x - *y).abs() < 1e-14 * len);
    let speed = |s: f64| curve.speed(s);
    let table = ArcTable::new(breaks, &speed);
    let new_len = table.length();
    let psi = |s: f64| (s / len).floor() * new_len + table.forward(s.rem_euclid(len), &speed);

    let n = opts
        .nodes
        .unwrap_or_else(|| node_count(10.0 * new_len / params.eps()));
    let h = new_len / n as f64;
    let mut params_s = vec![0.0; n];
    crate::parallel::fill(&mut params_s, |i| table.invert(i as f64 * h, &speed));
    let points = params_s
        .iter()
        .map(|&s| {
            let f = pc.frame(s);
            let w = curve.offset(s);
            [f.point[0] + w * f.normal[0], f.point[1] + w * f.normal[1]]
        })
        .collect();
    let chi: Vec<Phase> = params_s.iter().map(|&s| pc.phase_at(s)).collect();
    let mass: Vec<f64> = params_s
        .iter()
        .map(|&s| params.optimal_profile(pc.sdist(s)).0)
        .collect();
    let config =
        Configuration::normal_rays(PeriodicCurve::from_arclength_samples(points, new_len)?, chi, mass)?;

    // masses again, now integrating in the new arclength
    let mut masses = [-targets.m1, -targets.m2];
    for arc in pc.arcs() {
        let old = arc_breaks(pc, fields, &arc, params.eps());
        let new: Vec<f64> = old.iter().map(|&b| psi(b)).collect();
        masses[arc.phase as usize] += gl_composite(&new, &|u: f64| {
            let s = table.invert(u, &speed);
            params.optimal_profile(pc.sdist(s)).0
        });
    }
    let nodal = phase_masses(&config);
    let embedding = embedding_check(&config, params.eps(), opts.embedding_resolution)?;
    Ok(Recovered {
        config,
        mass_residuals: MassPair {
            m1: masses[0],
            m2: masses[1],
        },
        node_residuals: MassPair {
            m1: nodal.m1 - targets.m1,
            m2: nodal.m2 - targets.m2,
        },
        embedding,
    })
}

/// Well term `∫ ε⁻²(1 - a(χ)M*)² |γ̃'| ds` outside the `delta`-neighborhood
/// of the jumps, evaluated from the signed profile deficit so that values far
/// below machine epsilon relative to one stay accurate.
pub fn off_jump_tail(
    pc: &PhaseCurve,
    fields: &PerturbationFields,
    params: &ModelParams,
    r: f64,
    t: f64,
    delta: f64,
) -> f64 {
    if pc.jumps().is_empty() {
        return 0.0;
    }
    let curve = Perturbed { pc, fields, r, t };
    let inv_e2 = 1.0 / params.eps().powi(2);
    pc.arcs()
        .iter()
        .filter(|arc| arc.len() > 2.0 * delta)
        .map(|arc| {
            let inner = PhaseArc {
                start: arc.start + delta,
                end: arc.end - delta,
                phase: arc.phase,
            };
            let mut breaks = graded_breaks(
                inner.start,
                inner.end,
                (params.eps() / 20.0).min(inner.len() / 64.0),
                inner.len() / 128.0,
            );
            for b in fields.bumps() {
                let (lo, hi) = b.support();
                for e in [lo, hi] {
                    let e = inner.start + (e - inner.start).rem_euclid(pc.length());
                    if e > inner.start && e < inner.end {
                        breaks.push(e);
                    }
                }
            }
            breaks.sort_by(f64::total_cmp);
            gl_composite(&breaks, &|s| {
                let d = params.profile_deficit(pc.sdist(s));
                inv_e2 * d * d * curve.speed(s)
            })
        })
        .sum()
}

/// Least-squares line `y = slope·x + intercept`.
pub fn fit_line(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Checks attached to one record that do not go into the CSV.
#[derive(Debug, Clone, Serialize)]
pub struct RecoveryDiagnostics {
    pub nodes: usize,
    pub length: f64,
    pub newton_iterations: usize,
    pub node_residuals: MassPair,
    pub off_jump_tail: f64,
    pub embedding: Embedding,
    pub seconds: f64,
}

/// One ε of a recovery sweep. Numerical fields are empty when the
/// construction failed at this ε.
#[derive(Debug, Clone, Serialize)]
pub struct RecoveryRecord {
    pub eps: f64,
    pub r: Option<f64>,
    pub t: Option<f64>,
    pub res1: Option<f64>,
    pub res2: Option<f64>,
    #[serde(rename = "E_part")]
    pub e_part: Option<f64>,
    #[serde(rename = "G_part")]
    pub g_part: Option<f64>,
    pub total: Option<f64>,
    pub limit_quarter: f64,
    pub limit_half: f64,
    /// `|total - limit_quarter| / limit_quarter`.
    pub gap: Option<f64>,
    #[serde(skip)]
    pub diagnostics: Option<RecoveryDiagnostics>,
    #[serde(skip)]
    pub error: Option<String>,
    #[serde(skip)]
    pub config: Option<Configuration>,
}

impl RecoveryRecord {
    pub fn converged(&self) -> bool {
        self.error.is_none()
    }

    fn failed(eps: f64, limit: &LimitEnergy, err: Error) -> Self {
        log::warn!("recovery failed at eps={eps}: {err}");
        Self {
            eps,
            r: None,
            t: None,
            res1: None,
            res2: None,
            e_part: None,
            g_part: None,
            total: None,
            limit_quarter: limit.quarter_total(),
            limit_half: limit.half_total(),
            gap: None,
            diagnostics: None,
            error: Some(err.to_string()),
            config: None,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
#[serde(transparent)]
pub struct RecoveryReport {
    pub records: Vec<RecoveryRecord>,
}

pub const RECOVERY_HEADER: [&str; 11] = [
    "eps",
    "r",
    "t",
    "res1",
    "res2",
    "E_part",
    "G_part",
    "total",
    "limit_quarter",
    "limit_half",
    "gap",
];

impl RecoveryReport {
    pub fn write_csv(&self, w: impl Write) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        if self.records.is_empty() {
            out.write_record(RECOVERY_HEADER)?;
        }
        for r in &self.records {
            out.serialize(r)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn write_json(&self, w: impl Write) -> Result<()> {
        serde_json::to_writer_pretty(w, self)?;
        Ok(())
    }

    pub fn any_converged(&self) -> bool {
        self.records.iter().any(RecoveryRecord::converged)
    }

    /// Least-squares slope of `ln(off-jump tail)` against `1/ε` over the
    /// converged records with a positive tail.
    pub fn tail_slope(&self) -> Option<f64> {
        let (xs, ys): (Vec<f64>, Vec<f64>) = self
            .records
            .iter()
            .filter_map(|r| {
                let d = r.diagnostics.as_ref()?;
                (d.off_jump_tail > 0.0).then(|| (1.0 / r.eps, d.off_jump_tail.ln()))
            })
            .unzip();
        (xs.len() >= 2).then(|| fit_line(&xs, &ys).0)
    }
}

/// Recovery construction for each ε of a strictly decreasing list, with
/// continuation of `(r, t)` from one ε to the next. Failures at single ε are
/// recorded and the sweep continues.
pub fn limsup_report(
    pc: &PhaseCurve,
    eps_list: &[f64],
    params: &ModelParams,
    targets: MassPair,
    opts: &RecoveryOptions,
) -> Result<RecoveryReport> {
    if eps_list.is_empty() {
        return Err(Error::Parameter("empty eps list".into()));
    }
    if eps_list.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::Parameter("eps list must be strictly decreasing".into()));
    }
    let gap = pc.min_jump_gap();
    if 3.0 * eps_list[0] >= gap {
        return Err(Error::Parameter(format!(
            "3 eps = {} must be below the smallest jump gap {gap}",
            3.0 * eps_list[0]
        )));
    }
    let fields = build_bumps(pc, opts.delta)?;
    let limit = limit_energy_curve(pc, params);
    let mut guess = (0.0, 0.0);
    let mut records = Vec::with_capacity(eps_list.len());
    for &eps in eps_list {
        let start = Instant::now();
        let p = params.at_eps(eps)?;
        let attempt = || -> Result<RecoveryRecord> {
            let sol = solve_mass_constraint(pc, &fields, &p, targets, opts, guess)?;
            let rec = build_recovery(pc, &fields, &p, sol.r, sol.t, targets, opts)?;
            if !rec.embedding.passed() {
                log::warn!("eps={eps}: recovered curve failed the embedding check");
            }
            let e_part = separation_energy(&rec.config, &p);
            let g_part = bending_energy(&rec.config, &p)?;
            let total = e_part + g_part;
            let reference = limit.quarter_total();
            let tail = off_jump_tail(pc, &fields, &p, sol.r, sol.t, opts.delta);
            log::info!(
                "eps={eps}: r={:.6e} t={:.6e} E={e_part:.7} G={g_part:.7} total={total:.7}",
                sol.r,
                sol.t
            );
            Ok(RecoveryRecord {
                eps,
                r: Some(sol.r),
                t: Some(sol.t),
                res1: Some(rec.mass_residuals.m1),
                res2: Some(rec.mass_residuals.m2),
                e_part: Some(e_part),
                g_part: Some(g_part),
                total: Some(total),
                limit_quarter: reference,
                limit_half: limit.half_total(),
                gap: Some((total - reference).abs() / reference),
                diagnostics: Some(RecoveryDiagnostics {
                    nodes: rec.config.n(),
                    length: rec.config.curve.length(),
                    newton_iterations: sol.iterations,
                    node_residuals: rec.node_residuals,
                    off_jump_tail: tail,
                    embedding: rec.embedding,
                    seconds: start.elapsed().as_secs_f64(),
                }),
                error: None,
                config: Some(rec.config),
            })
        };
        match attempt() {
            Ok(rec) => {
                guess = (rec.r.unwrap_or(0.0), rec.t.unwrap_or(0.0));
                records.push(rec);
            }
            Err(err) => {
                guess = (0.0, 0.0);
                records.push(RecoveryRecord::failed(eps, &limit, err));
            }
        }
    }
    Ok(RecoveryReport { records })
}
