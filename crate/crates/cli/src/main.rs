mod args;
mod commands;
mod svg;

use std::process::ExitCode;

use clap::Parser;
use mesomem_core::parallel::set_reduction;
use mesomem_core::Reduction;

use args::{expand_settings, Cli, Command};
use commands::{Failure, RunContext};

fn main() -> ExitCode {
    let argv = match expand_settings(std::env::args_os().collect()) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
    };
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();

    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.exit_code())
        }
    }
}

fn run(cli: &Cli) -> Result<(), Failure> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Failure::Usage(anyhow::anyhow!("--threads must be at least 1")));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Usage(e.into()))?;
    }
    if cli.deterministic {
        set_reduction(Reduction::Ordered);
    }
    let ctx = RunContext {
        deterministic: cli.deterministic,
    };
    match &cli.command {
        Command::Profile(a) => commands::profile(a, ctx),
        Command::GridSweep(a) => commands::grid_sweep(a, ctx),
        Command::CurveEnergy(a) => commands::curve_energy(a, ctx),
        Command::Recovery(a) => commands::recovery(a, ctx),
    }
}
