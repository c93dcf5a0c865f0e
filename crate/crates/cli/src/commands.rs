use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use mesomem_core::curve::{embedding_check, Embedding};
use mesomem_core::meso::{energy_breakdown, family_energy, FamilyReport};
use mesomem_core::minimize::{epsilon_sweep, MinimizeOptions, PhaseShape, SweepGrid, SweepReport};
use mesomem_core::recovery::{limsup_report, RecoveryOptions};
use mesomem_core::{Configuration, Error, MassPair, ModelParams, PeriodicCurve, PhaseCurve, PhaseMap, Shape};
use serde::Serialize;

use crate::args::{CurveEnergyArgs, ProfileArgs, RecoveryArgs, SweepArgs};
use crate::svg::{self, Plot, Series, PALETTE};

/// How a command failed; decides the exit code.
#[derive(Debug)]
pub enum Failure {
    /// Bad flags or input files (exit 2).
    Usage(anyhow::Error),
    /// The computation itself failed (exit 1).
    Numerical(anyhow::Error),
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Numerical(_) => 1,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Usage(e) | Failure::Numerical(e) => write!(f, "{e:#}"),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Parameter(_)
            | Error::Parse { .. }
            | Error::GridMismatch(_)
            | Error::DegenerateCurve(_)
            | Error::Transversality { .. } => Failure::Usage(e.into()),
            _ => Failure::Numerical(e.into()),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Numerical(e.into())
    }
}

pub type Outcome = std::result::Result<(), Failure>;

fn usage(msg: impl std::fmt::Display) -> Failure {
    Failure::Usage(anyhow::anyhow!("{msg}"))
}

/// Input files that cannot be read are a usage problem, not a numerical one.
fn input<T>(r: mesomem_core::Result<T>, what: &Path) -> Result<T, Failure> {
    r.map_err(|e| match e {
        Error::Io(io) => usage(format!("{}: {io}", what.display())),
        other => other.into(),
    })
}

/// Global run settings shared by all commands.
#[derive(Debug, Clone, Copy, Default)]
pub struct RunContext {
    pub deterministic: bool,
}

struct Output {
    dir: Option<PathBuf>,
}

impl Output {
    fn new(dir: Option<PathBuf>) -> Result<Self, Failure> {
        if let Some(d) = &dir {
            fs::create_dir_all(d)?;
        }
        Ok(Self { dir })
    }

    /// Writes `name` in the output directory, or to stdout for the primary
    /// table when there is none.
    fn primary(&self, name: &str, f: impl FnOnce(&mut dyn Write) -> mesomem_core::Result<()>) -> Outcome {
        match &self.dir {
            Some(d) => {
                let mut w = BufWriter::new(File::create(d.join(name))?);
                f(&mut w)?;
                w.flush()?;
            }
            None => {
                let stdout = io::stdout();
                let mut w = stdout.lock();
                f(&mut w)?;
                w.flush()?;
            }
        }
        Ok(())
    }

    /// Secondary files are only written to a directory.
    fn extra(&self, name: &str, f: impl FnOnce(&mut dyn Write) -> mesomem_core::Result<()>) -> Outcome {
        if let Some(d) = &self.dir {
            let path = d.join(name);
            let mut w = BufWriter::new(File::create(&path)?);
            f(&mut w)?;
            w.flush()?;
            log::info!("wrote {}", path.display());
        }
        Ok(())
    }

    fn text(&self, name: &str, body: &str) -> Outcome {
        self.extra(name, |w| Ok(w.write_all(body.as_bytes())?))
    }
}

fn json(w: &mut dyn Write, value: &impl Serialize) -> mesomem_core::Result<()> {
    serde_json::to_writer_pretty(&mut *w, value)?;
    writeln!(w)?;
    Ok(())
}

fn check_eps_list(list: &[f64]) -> Result<(), Failure> {
    if list.is_empty() {
        return Err(usage("--eps-list is empty"));
    }
    if list.iter().any(|e| !(e.is_finite() && *e > 0.0)) {
        return Err(usage("--eps-list entries must be positive"));
    }
    if list.windows(2).any(|w| w[1] >= w[0]) {
        return Err(usage("--eps-list must be strictly decreasing"));
    }
    Ok(())
}

pub fn profile(a: &ProfileArgs, _ctx: RunContext) -> Outcome {
    let p = ModelParams::new(a.c, a.eps)?;
    let rmin = a.rmin.unwrap_or(-10.0 * a.eps);
    let rmax = a.rmax.unwrap_or(10.0 * a.eps);
    if !(rmin < rmax) || a.n == 0 {
        return Err(usage("need rmin < rmax and n >= 1"));
    }
    let rows: Vec<[f64; 4]> = (0..=a.n)
        .map(|k| {
            let r = rmin + (rmax - rmin) * k as f64 / a.n as f64;
            let (q, dq) = p.optimal_profile(r);
            [r, q, dq, p.equipartition_residual(r)]
        })
        .collect();
    let out = Output::new(a.out.clone())?;
    out.primary("profile.csv", |w| {
        let mut csv = csv::Writer::from_writer(w);
        csv.write_record(["r", "q", "q_slope", "equipartition_residual"])?;
        for row in &rows {
            csv.write_record(row.iter().map(|v| format!("{v:e}")))?;
        }
        csv.flush()?;
        Ok(())
    })?;
    let col = |k: usize| rows.iter().map(|r| [r[0], r[k]]).collect::<Vec<_>>();
    let title = format!("c = {}, eps = {}", a.c, a.eps);
    out.text(
        "profile.svg",
        &svg::figure(&[
            Plot::new(&format!("profile q ({title})"), "r", "q").add(Series::line("q", col(1), PALETTE[0])),
            Plot::new("slope q'", "r", "q'").add(Series::line("q'", col(2), PALETTE[1])),
        ]),
    )
}

fn phase_shape(spec: &str) -> Result<PhaseShape, Failure> {
    match spec.split_once(':') {
        None if spec == "half" => Ok(PhaseShape::Half),
        Some(("disk", r)) => {
            let r: f64 = r.parse().map_err(|_| usage(format!("bad disk radius {r:?}")))?;
            Ok(PhaseShape::Disk { r })
        }
        Some(("file", path)) => {
            let path = Path::new(path);
            Ok(PhaseShape::Map(input(PhaseMap::read(path), path)?))
        }
        _ => Err(usage(format!(
            "unknown phase {spec:?}; expected half, disk:R or file:PATH"
        ))),
    }
}

pub fn grid_sweep(a: &SweepArgs, ctx: RunContext) -> Outcome {
    check_eps_list(&a.eps_list)?;
    let p = ModelParams::new(a.c, a.eps_list[0])?;
    let shape = phase_shape(&a.phase)?;
    if !matches!(shape, PhaseShape::Map(_)) && !(a.dim == 1 || a.dim == 2) {
        return Err(usage("--dim must be 1 or 2"));
    }
    if matches!(shape, PhaseShape::Disk { .. }) && a.dim != 2 {
        return Err(usage("disk phases need --dim 2"));
    }
    let geometry = SweepGrid {
        dim: a.dim,
        extent: [a.extent, a.extent],
        nodes_per_eps: a.n.unwrap_or(if a.dim == 1 { 16.0 } else { 4.0 }),
    };
    if geometry.nodes_per_eps < 4.0 && !matches!(shape, PhaseShape::Map(_)) {
        log::warn!("--n {} leaves h > eps/4", geometry.nodes_per_eps);
    }
    let opts = MinimizeOptions {
        max_iters: a.max_iters,
        grad_tol: a.grad_tol,
        ..Default::default()
    };
    let mut report = epsilon_sweep(&shape, &geometry, &a.eps_list, &p, &opts)?;
    if ctx.deterministic {
        for r in &mut report.records {
            r.seconds = 0.0;
        }
    }
    let out = Output::new(a.out.clone())?;
    out.primary("sweep.csv", |w| report.write_csv(w))?;
    out.extra("sweep.json", |w| json(w, &report))?;
    out.text("sweep.svg", &sweep_figure(&report, a.c))
}

fn sweep_figure(report: &SweepReport, c: f64) -> String {
    let pick = |f: &dyn Fn(&mesomem_core::minimize::SweepRecord) -> Option<f64>| {
        report
            .records
            .iter()
            .filter_map(|r| f(r).map(|v| [r.eps, v]))
            .collect::<Vec<_>>()
    };
    svg::figure(&[Plot::new(&format!("grid energy, c = {c}"), "eps", "energy")
        .log_x()
        .add(Series::line("minimized", pick(&|r| Some(r.min_energy)), PALETTE[0]).with_markers())
        .add(Series::line("profile", pick(&|r| Some(r.profile_energy)), PALETTE[2]).with_markers())
        .add(Series::line("c^2/sqrt(8) Per", pick(&|r| r.limit_energy.finite()), PALETTE[1]).dashed())])
}

#[derive(Serialize)]
struct ConfigEntry {
    path: String,
    nodes: usize,
    length: f64,
    #[serde(rename = "E_eps")]
    separation: f64,
    #[serde(rename = "G_eps")]
    bending: f64,
    #[serde(rename = "F_eps")]
    reduced_full: f64,
    #[serde(rename = "F_tilde_eps")]
    primitive: f64,
    masses: MassPair,
    identity_residual: f64,
    embedding: Embedding,
}

#[derive(Serialize)]
struct CurveEnergyReport {
    c: f64,
    eps: f64,
    configurations: Vec<ConfigEntry>,
    family: Option<FamilyReport>,
}

fn parse_pair(s: &str) -> Result<MassPair, Failure> {
    let bad = || usage(format!("expected m1:m2, got {s:?}"));
    let (a, b) = s.split_once(':').ok_or_else(bad)?;
    Ok(MassPair {
        m1: a.trim().parse().map_err(|_| bad())?,
        m2: b.trim().parse().map_err(|_| bad())?,
    })
}

pub fn curve_energy(a: &CurveEnergyArgs, _ctx: RunContext) -> Outcome {
    let p = ModelParams::new(a.c, a.eps)?;
    let targets = a.targets.as_deref().map(parse_pair).transpose()?;
    let configs: Vec<Configuration> = a
        .config
        .iter()
        .map(|path| input(Configuration::read(path), path))
        .collect::<Result<_, _>>()?;
    let mut entries = Vec::with_capacity(configs.len());
    for (z, path) in configs.iter().zip(&a.config) {
        let b = energy_breakdown(z, &p)?;
        entries.push(ConfigEntry {
            path: path.display().to_string(),
            nodes: z.n(),
            length: z.curve.length(),
            separation: b.separation,
            bending: b.bending,
            reduced_full: b.reduced_full,
            primitive: b.primitive,
            masses: b.masses,
            identity_residual: b.identity_residual,
            embedding: embedding_check(z, a.eps, a.resolution)?,
        });
    }
    let family = if configs.len() > 1 || targets.is_some() {
        let own = entries
            .iter()
            .fold(MassPair { m1: 0.0, m2: 0.0 }, |acc, e| MassPair {
                m1: acc.m1 + e.masses.m1,
                m2: acc.m2 + e.masses.m2,
            });
        Some(family_energy(&configs, &p, targets.unwrap_or(own))?)
    } else {
        None
    };
    let report = CurveEnergyReport {
        c: a.c,
        eps: a.eps,
        configurations: entries,
        family,
    };
    Output::new(a.out.clone())?.primary("energy.json", |w| json(w, &report))
}

fn parse_arcs(arcs: &[String]) -> Result<Vec<(f64, f64)>, Failure> {
    arcs.iter()
        .map(|s| {
            let p = parse_pair(s).map_err(|_| usage(format!("bad arc {s:?}; expected s0:s1")))?;
            Ok((p.m1, p.m2))
        })
        .collect()
}

pub fn recovery(a: &RecoveryArgs, _ctx: RunContext) -> Outcome {
    check_eps_list(&a.eps_list)?;
    let p = ModelParams::new(a.c, a.eps_list[0])?;
    let shape = Shape::parse(&a.curve).map_err(|e| match e {
        Error::Io(io) => usage(format!("{}: {io}", a.curve)),
        other => other.into(),
    })?;
    let arcs = parse_arcs(&a.arcs)?;
    let pc = if arcs.is_empty() {
        PhaseCurve::constant(shape, 1)
    } else {
        PhaseCurve::from_arcs(shape, &arcs)?
    };
    let opts = RecoveryOptions {
        delta: a.delta,
        nodes: a.nodes,
        ..Default::default()
    };
    let report = limsup_report(&pc, &a.eps_list, &p, pc.phase_lengths(), &opts)?;
    for r in &report.records {
        if let Some(e) = &r.error {
            log::warn!("eps = {}: {e}", r.eps);
        }
    }
    let out = Output::new(a.out.clone())?;
    out.primary("recovery.csv", |w| report.write_csv(w))?;
    out.extra("recovery.json", |w| json(w, &report))?;

    let pick = |f: &dyn Fn(&mesomem_core::recovery::RecoveryRecord) -> Option<f64>| {
        report
            .records
            .iter()
            .filter_map(|r| f(r).map(|v| [r.eps, v]))
            .collect::<Vec<_>>()
    };
    out.text(
        "recovery_energy.svg",
        &svg::figure(&[Plot::new(
            &format!("recovery energy, {} (c = {})", a.curve, a.c),
            "eps",
            "energy",
        )
        .log_x()
        .add(Series::line("total", pick(&|r| r.total), PALETTE[0]).with_markers())
        .add(Series::line("E part", pick(&|r| r.e_part), PALETTE[2]).with_markers())
        .add(Series::line("G part", pick(&|r| r.g_part), PALETTE[3]).with_markers())
        .add(
            Series::line(
                "limit (1/4 bending)",
                pick(&|r| Some(r.limit_quarter)),
                PALETTE[1],
            )
            .dashed(),
        )
        .add(Series::line("limit (1/2 bending)", pick(&|r| Some(r.limit_half)), PALETTE[4]).dashed())]),
    )?;
    if let Some((rec, z)) = report
        .records
        .iter()
        .rev()
        .find_map(|r| Some((r, r.config.as_ref()?)))
    {
        let reference = PeriodicCurve::from_shape(pc.shape(), z.n())?;
        let class: Vec<usize> = z.chi.iter().map(|&c| c as usize).collect();
        out.text(
            "recovery_curve.svg",
            &svg::closed_curve(
                &format!("recovered curve at eps = {} (phase 0 blue, phase 1 red)", rec.eps),
                z.curve.points(),
                &class,
                Some(reference.points()),
            ),
        )?;
    }
    if !report.any_converged() {
        return Err(Failure::Numerical(anyhow::anyhow!(
            "no eps in the list produced a recovery"
        )));
    }
    Ok(())
}
