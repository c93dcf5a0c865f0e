//! Flag definitions and `key = value` settings files.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{ArgAction, CommandFactory, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(
    name = "mesomem",
    version,
    about = "Mesoscale membrane energy experiments",
    args_override_self = true
)]
pub struct Cli {
    /// Worker threads for grid reductions; defaults to all cores.
    #[arg(long, global = true, env = "MESOMEM_THREADS")]
    pub threads: Option<usize>,

    /// Ordered reductions and zeroed timings, for byte-identical reports.
    #[arg(long, global = true)]
    pub deterministic: bool,

    /// File of `key = value` lines supplying defaults for the subcommand's
    /// flags. Flags given on the command line win.
    #[arg(long, global = true, value_name = "FILE")]
    pub settings: Option<PathBuf>,

    /// More log output (repeatable).
    #[arg(short, long, global = true, action = ArgAction::Count)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Tabulate the optimal transition profile.
    Profile(ProfileArgs),
    /// Minimize the grid energy over a decreasing list of ε.
    GridSweep(SweepArgs),
    /// Energies and checks of stored curve configurations.
    CurveEnergy(CurveEnergyArgs),
    /// Build mass-preserving recovery configurations for a curve with phases.
    Recovery(RecoveryArgs),
}

#[derive(Debug, clap::Args)]
pub struct ProfileArgs {
    #[arg(long)]
    pub c: f64,
    #[arg(long)]
    pub eps: f64,
    /// Left end of the sample range; defaults to -10ε.
    #[arg(long, allow_negative_numbers = true)]
    pub rmin: Option<f64>,
    /// Right end of the sample range; defaults to 10ε.
    #[arg(long, allow_negative_numbers = true)]
    pub rmax: Option<f64>,
    /// Number of sample intervals; `n + 1` rows are written.
    #[arg(long, default_value_t = 1000)]
    pub n: usize,
    /// Output directory; the table goes to stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, clap::Args)]
pub struct SweepArgs {
    /// Spatial dimension (1 or 2); ignored for `file:` phases.
    #[arg(long, default_value_t = 1)]
    pub dim: usize,
    /// Grid nodes per ε; defaults to 16 in 1D and 4 in 2D.
    #[arg(long)]
    pub n: Option<f64>,
    #[arg(long)]
    pub c: f64,
    /// Strictly decreasing, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    pub eps_list: Vec<f64>,
    /// `half`, `disk:R` or `file:PATH`.
    #[arg(long, default_value = "half")]
    pub phase: String,
    /// Side length of the square (or interval) domain.
    #[arg(long, default_value_t = 1.0)]
    pub extent: f64,
    #[arg(long, default_value_t = 20_000)]
    pub max_iters: usize,
    #[arg(long, default_value_t = 1e-8)]
    pub grad_tol: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, clap::Args)]
pub struct CurveEnergyArgs {
    /// Configuration file; repeat for a family.
    #[arg(long, required = true)]
    pub config: Vec<PathBuf>,
    #[arg(long)]
    pub c: f64,
    #[arg(long)]
    pub eps: f64,
    /// Family mass targets `m1:m2`; defaults to the family's own masses.
    #[arg(long)]
    pub targets: Option<String>,
    /// Cells per side of the sampled embedding test.
    #[arg(long, default_value_t = 64)]
    pub resolution: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, clap::Args)]
pub struct RecoveryArgs {
    /// `circle:R`, `ellipse:A:B` or `file:PATH`.
    #[arg(long)]
    pub curve: String,
    /// Phase-1 arcs `s0:s1[,s0:s1...]` in arclength; the whole curve is
    /// phase 1 when omitted.
    #[arg(long, value_delimiter = ',')]
    pub arcs: Vec<String>,
    #[arg(long)]
    pub c: f64,
    /// Strictly decreasing, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "0.1,0.01,0.001")]
    pub eps_list: Vec<f64>,
    /// Distance between bump supports and jumps.
    #[arg(long, default_value_t = 0.1)]
    pub delta: f64,
    /// Node count of the recovered curves; scales with 1/ε when omitted.
    #[arg(long)]
    pub nodes: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Splice the `--settings` file into `args` right after the subcommand name.
/// Keys are long flag names (`_` and `-` are interchangeable); unknown keys
/// are rejected.
pub fn expand_settings(args: Vec<OsString>) -> anyhow::Result<Vec<OsString>> {
    let mut rest = Vec::with_capacity(args.len());
    let mut path = None;
    let mut it = args.into_iter();
    while let Some(a) = it.next() {
        match a.to_str() {
            Some("--settings") => {
                let Some(p) = it.next() else {
                    bail!("--settings needs a file argument");
                };
                path = Some(PathBuf::from(p));
            }
            Some(s) if s.starts_with("--settings=") => path = Some(PathBuf::from(&s["--settings=".len()..])),
            _ => rest.push(a),
        }
    }
    let Some(path) = path else {
        return Ok(rest);
    };
    let cmd = Cli::command();
    let Some((pos, sub)) = rest
        .iter()
        .enumerate()
        .skip(1)
        .find_map(|(k, a)| cmd.find_subcommand(a.to_str()?).map(|s| (k, s)))
    else {
        bail!("--settings requires a subcommand");
    };
    let tokens = settings_tokens(&path, sub, &cmd)?;
    rest.splice(pos + 1..pos + 1, tokens);
    Ok(rest)
}

fn settings_tokens(path: &Path, sub: &clap::Command, root: &clap::Command) -> anyhow::Result<Vec<OsString>> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading settings {}", path.display()))?;
    let mut out = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            bail!("{}:{}: expected `key = value`", path.display(), k + 1);
        };
        let key = key.trim().replace('_', "-");
        let value = value.trim();
        let arg = sub
            .get_arguments()
            .chain(root.get_arguments().filter(|a| a.is_global_set()))
            .find(|a| a.get_long() == Some(key.as_str()) && key != "settings" && key != "help");
        let Some(arg) = arg else {
            bail!(
                "{}:{}: unknown key {key:?} for `{}`",
                path.display(),
                k + 1,
                sub.get_name()
            );
        };
        if arg.get_action().takes_values() {
            out.push(format!("--{key}").into());
            out.push(value.into());
        } else {
            match value {
                "true" => out.push(format!("--{key}").into()),
                "false" => {}
                _ => bail!(
                    "{}:{}: {key} takes true or false, got {value:?}",
                    path.display(),
                    k + 1
                ),
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn os(v: &[&str]) -> Vec<OsString> {
        v.iter().map(OsString::from).collect()
    }

    fn settings(text: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(text.as_bytes()).unwrap();
        f
    }

    #[test]
    fn definitions_are_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn settings_are_spliced_after_the_subcommand() {
        let f = settings("# defaults\neps = 0.04\nc=1\n\ndeterministic = true\n");
        let p = f.path().to_str().unwrap();
        let args = expand_settings(os(&["mesomem", "--settings", p, "profile", "--c", "2"])).unwrap();
        let cli = Cli::try_parse_from(args).unwrap();
        assert!(cli.deterministic);
        let Command::Profile(a) = cli.command else {
            panic!()
        };
        assert_eq!((a.c, a.eps), (2.0, 0.04));
    }

    #[test]
    fn underscores_name_the_same_flag() {
        let f = settings("eps_list = 0.1,0.05\nc = 1\n");
        let p = format!("--settings={}", f.path().display());
        let args = expand_settings(os(&["mesomem", "grid-sweep", &p])).unwrap();
        let Command::GridSweep(a) = Cli::try_parse_from(args).unwrap().command else {
            panic!()
        };
        assert_eq!(a.eps_list, vec![0.1, 0.05]);
    }

    #[test]
    fn unknown_and_malformed_keys_are_rejected() {
        for text in [
            "epsilon = 1\n",
            "c 1\n",
            "deterministic = yes\n",
            "settings = x\n",
            "phase = half\n",
        ] {
            let f = settings(text);
            let p = f.path().to_str().unwrap();
            assert!(
                expand_settings(os(&["mesomem", "profile", "--settings", p])).is_err(),
                "{text}"
            );
        }
    }

    #[test]
    fn no_settings_leaves_arguments_alone() {
        let a = os(&["mesomem", "profile", "--c", "1"]);
        assert_eq!(expand_settings(a.clone()).unwrap(), a);
    }
}
