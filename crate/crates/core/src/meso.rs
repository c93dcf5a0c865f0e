//! Single-curve mesoscale energies and families of configurations.
//!
//! A [`Configuration`] attaches to every node of a closed curve a unit ray
//! direction `θ`, a phase `χ` and a stacked lipid mass `M`. Because `χ` is a
//! nodal attribute, a single ray never carries both lipid types.

use serde::Serialize;
use std::io::{BufRead, Write};
use std::path::Path;

use crate::curve::{dot, norm, perp, Embedding, PeriodicCurve, RayGeometry, Vec2};
use crate::error::{Error, Result};
use crate::model::{ModelParams, Phase};

/// Tolerance on `|θ| = 1` when constructing configurations.
pub const UNIT_TOL: f64 = 1e-9;

/// Tuple `(γ, θ, χ, M)` on a sampled closed curve.
#[derive(Debug, Clone, PartialEq)]
pub struct Configuration {
    pub curve: PeriodicCurve,
    pub theta: Vec<Vec2>,
    pub chi: Vec<Phase>,
    pub mass: Vec<f64>,
}

/// Per-phase total masses. `m1` is the phase-0 mass `∫(1-χ)M`, `m2` the
/// phase-1 mass `∫χM`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MassPair {
    pub m1: f64,
    pub m2: f64,
}

impl Configuration {
    pub fn new(curve: PeriodicCurve, theta: Vec<Vec2>, chi: Vec<Phase>, mass: Vec<f64>) -> Result<Self> {
        let n = curve.n();
        if theta.len() != n || chi.len() != n || mass.len() != n {
            return Err(Error::Parameter(format!(
                "configuration fields must have {n} entries (theta {}, chi {}, mass {})",
                theta.len(),
                chi.len(),
                mass.len()
            )));
        }
        if let Some(i) = theta.iter().position(|t| (norm(*t) - 1.0).abs() > UNIT_TOL) {
            return Err(Error::Parameter(format!(
                "theta at node {i} is not a unit vector"
            )));
        }
        if let Some(i) = chi.iter().position(|&c| c > 1) {
            return Err(Error::Parameter(format!("phase at node {i} is not 0 or 1")));
        }
        if let Some(i) = mass.iter().position(|m| !(m.is_finite() && *m >= 0.0)) {
            return Err(Error::Parameter(format!(
                "mass at node {i} must be finite and >= 0"
            )));
        }
        Ok(Self {
            curve,
            theta,
            chi,
            mass,
        })
    }

    /// Configuration with rays along the curve normal, `θ = ν`.
    pub fn normal_rays(curve: PeriodicCurve, chi: Vec<Phase>, mass: Vec<f64>) -> Result<Self> {
        let theta = curve.normal().to_vec();
        Self::new(curve, theta, chi, mass)
    }

    pub fn n(&self) -> usize {
        self.curve.n()
    }

    /// `ν·θ` per node.
    pub fn alignment(&self) -> Vec<f64> {
        self.curve
            .normal()
            .iter()
            .zip(&self.theta)
            .map(|(nu, th)| dot(*nu, *th))
            .collect()
    }

    /// `θ'` by the curve's difference stencil.
    pub fn theta_prime(&self) -> Vec<Vec2> {
        self.curve.d1_vec(&self.theta)
    }

    /// `(ν·θ, θ'·θ⊥)` per node.
    pub fn ray_geometry(&self) -> Vec<RayGeometry> {
        self.alignment()
            .into_iter()
            .zip(self.theta_prime())
            .zip(&self.theta)
            .map(|((a, dt), th)| RayGeometry {
                a,
                b: dot(dt, perp(*th)),
            })
            .collect()
    }

    /// Alignment per node, or the first node where `ν·θ <= 0`.
    fn checked_alignment(&self) -> Result<Vec<f64>> {
        let a = self.alignment();
        if let Some(node) = a.iter().position(|&v| !(v > 0.0)) {
            return Err(Error::Transversality { node, value: a[node] });
        }
        Ok(a)
    }

    /// Reads `n length` and `n` rows `x y theta_x theta_y chi mass`.
    pub fn read(path: &Path) -> Result<Self> {
        let f = std::fs::File::open(path)?;
        Self::read_from(std::io::BufReader::new(f)).map_err(|e| e.with_path(path))
    }

    pub fn read_from(r: impl BufRead) -> Result<Self> {
        let (length, rows) = crate::curve::read_table(r, 6)?;
        let points = rows.iter().map(|r| [r[0], r[1]]).collect();
        let theta = rows.iter().map(|r| [r[2], r[3]]).collect();
        let chi = rows
            .iter()
            .enumerate()
            .map(|(k, r)| match r[4] {
                v if v == 0.0 => Ok(0),
                v if v == 1.0 => Ok(1),
                v => Err(Error::parse(format!(
                    "phase {v} on data line {} is not 0 or 1",
                    k + 1
                ))),
            })
            .collect::<Result<_>>()?;
        let mass = rows.iter().map(|r| r[5]).collect();
        let curve = PeriodicCurve::from_arclength_samples(points, length)?;
        Self::new(curve, theta, chi, mass)
    }

    pub fn write_to(&self, mut w: impl Write) -> Result<()> {
        writeln!(w, "{} {}", self.n(), self.curve.length())?;
        for i in 0..self.n() {
            let p = self.curve.points()[i];
            let t = self.theta[i];
            writeln!(
                w,
                "{:e} {:e} {:e} {:e} {} {:e}",
                p[0], p[1], t[0], t[1], self.chi[i], self.mass[i]
            )?;
        }
        Ok(())
    }
}

/// Per-phase masses by the periodic trapezoid rule.
pub fn phase_masses(z: &Configuration) -> MassPair {
    let m1 = z.curve.integrate(
        z.chi
            .iter()
            .zip(&z.mass)
            .map(|(&c, &m)| if c == 0 { m } else { 0.0 }),
    );
    let m2 = z.curve.integrate(
        z.chi
            .iter()
            .zip(&z.mass)
            .map(|(&c, &m)| if c == 1 { m } else { 0.0 }),
    );
    MassPair { m1, m2 }
}

/// Reduced distance `∫ M²/(ν·θ) + ε²|θ'|²M⁴/(4(ν·θ)⁵)`.
pub fn reduced_distance(curve: &PeriodicCurve, theta: &[Vec2], mass: &[f64], eps: f64) -> Result<f64> {
    let z = Configuration::new(curve.clone(), theta.to_vec(), vec![0; curve.n()], mass.to_vec())?;
    let a = z.checked_alignment()?;
    let dt = z.theta_prime();
    let e2 = eps * eps;
    Ok(z.curve.integrate((0..z.n()).map(|i| {
        let m = mass[i];
        let t2 = dot(dt[i], dt[i]);
        m * m / a[i] + e2 * t2 * m.powi(4) / (4.0 * a[i].powi(5))
    })))
}

/// Separation energy `∫ ε⁻²(1 - a(χ)M)² + (σ/2)|M'|²`.
pub fn separation_energy(z: &Configuration, params: &ModelParams) -> f64 {
    let dm = z.curve.d1(&z.mass);
    let half_sigma = 0.5 * params.sigma();
    z.curve.integrate(
        (0..z.n()).map(|i| params.well_potential(z.mass[i], z.chi[i]) + half_sigma * dm[i] * dm[i]),
    )
}

/// Bending energy `∫ ε⁻²((1-ν·θ)/ν·θ) a²M² + a²|θ'|²M⁴/(4(ν·θ)⁵)`.
pub fn bending_energy(z: &Configuration, params: &ModelParams) -> Result<f64> {
    let a = z.checked_alignment()?;
    let dt = z.theta_prime();
    let inv_e2 = 1.0 / (params.eps() * params.eps());
    Ok(z.curve.integrate((0..z.n()).map(|i| {
        let w = params.a(z.chi[i]);
        let m = z.mass[i];
        let t2 = dot(dt[i], dt[i]);
        let tilt = (1.0 - a[i]) / a[i];
        inv_e2 * tilt * w * w * m * m + w * w * t2 * m.powi(4) / (4.0 * a[i].powi(5))
    })))
}

/// `F_ε = 2λM₁ + 2M₂ + ε²(E_ε + G_ε)`.
pub fn reduced_full_energy(z: &Configuration, params: &ModelParams) -> Result<f64> {
    let masses = phase_masses(z);
    let e = separation_energy(z, params);
    let g = bending_energy(z, params)?;
    let eps2 = params.eps() * params.eps();
    Ok(2.0 * params.lambda() * masses.m1 + 2.0 * masses.m2 + eps2 * (e + g))
}

/// `F̃_ε = L + λ²𝒟(M⁽¹⁾) + 𝒟(M⁽²⁾) + (σ/2)ε²∫|M'|²`.
pub fn primitive_energy(z: &Configuration, params: &ModelParams) -> Result<f64> {
    let eps = params.eps();
    let split = |phase: Phase| -> Vec<f64> {
        z.chi
            .iter()
            .zip(&z.mass)
            .map(|(&c, &m)| if c == phase { m } else { 0.0 })
            .collect()
    };
    let d1 = reduced_distance(&z.curve, &z.theta, &split(0), eps)?;
    let d2 = reduced_distance(&z.curve, &z.theta, &split(1), eps)?;
    let dm = z.curve.d1(&z.mass);
    let grad = z.curve.integrate(dm.iter().map(|d| d * d));
    let lambda = params.lambda();
    Ok(z.curve.length() + lambda * lambda * d1 + d2 + 0.5 * params.sigma() * eps * eps * grad)
}

/// `ℰ_ε = E_ε + G_ε`.
pub fn rescaled_energy(z: &Configuration, params: &ModelParams) -> Result<f64> {
    Ok(separation_energy(z, params) + bending_energy(z, params)?)
}

/// All single-curve quantities at once.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergyBreakdown {
    pub separation: f64,
    pub bending: f64,
    pub reduced_full: f64,
    pub primitive: f64,
    pub masses: MassPair,
    /// `F̃_ε - F_ε`.
    pub identity_residual: f64,
}

pub fn energy_breakdown(z: &Configuration, params: &ModelParams) -> Result<EnergyBreakdown> {
    let reduced_full = reduced_full_energy(z, params)?;
    let primitive = primitive_energy(z, params)?;
    Ok(EnergyBreakdown {
        separation: separation_energy(z, params),
        bending: bending_energy(z, params)?,
        reduced_full,
        primitive,
        masses: phase_masses(z),
        identity_residual: primitive - reduced_full,
    })
}

/// Result of [`family_energy`]. Disjointness is a sampled check only.
#[derive(Debug, Clone, Serialize)]
pub struct FamilyReport {
    /// `Σ F_ε(Z_i)`.
    pub value: f64,
    /// `Σ E_ε(Z_i)`, the phase-separation part.
    pub phase_part: f64,
    /// `Σ G_ε(Z_i)`, the bending part.
    pub bending_part: f64,
    pub masses: MassPair,
    /// Total masses minus targets.
    pub residuals: MassPair,
    /// `(i, j, result)` for every pair `i < j`.
    pub overlaps: Vec<(usize, usize, Embedding)>,
    pub disjoint_sampled: bool,
}

/// Resolution of the pairwise image test in [`family_energy`].
pub const FAMILY_RESOLUTION: usize = 32;

/// Family energy, mass residuals and a sampled pairwise-disjointness check.
pub fn family_energy(zs: &[Configuration], params: &ModelParams, targets: MassPair) -> Result<FamilyReport> {
    if zs.is_empty() {
        return Err(Error::Parameter(
            "family must contain at least one configuration".into(),
        ));
    }
    let mut value = 0.0;
    let mut phase_part = 0.0;
    let mut bending_part = 0.0;
    let mut masses = MassPair { m1: 0.0, m2: 0.0 };
    for z in zs {
        value += reduced_full_energy(z, params)?;
        phase_part += separation_energy(z, params);
        bending_part += bending_energy(z, params)?;
        let m = phase_masses(z);
        masses.m1 += m.m1;
        masses.m2 += m.m2;
    }
    let mut overlaps = Vec::new();
    for i in 0..zs.len() {
        for j in i + 1..zs.len() {
            let res = crate::curve::images_overlap(&zs[i], &zs[j], params.eps(), FAMILY_RESOLUTION)?;
            overlaps.push((i, j, res));
        }
    }
    let disjoint_sampled = overlaps.iter().all(|(_, _, r)| r.passed());
    Ok(FamilyReport {
        value,
        phase_part,
        bending_part,
        masses,
        residuals: MassPair {
            m1: masses.m1 - targets.m1,
            m2: masses.m2 - targets.m2,
        },
        overlaps,
        disjoint_sampled,
    })
}
