use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use nse3dvar::commands::{self, Context};
use nse3dvar::config::SweepParam;
use nse3dvar::{plot, sweep, CliError, Config};

/// 3DVAR filtering experiments for 2D periodic Navier-Stokes.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    /// key=value configuration file; omitted keys take their defaults
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory for inputs and outputs
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Sets the truth, initial-mean, noise and filter seeds to N, N+1, N+2, N+3
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
    /// Suppress progress messages
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Spin up and write the truth trajectory
    Truth,
    /// Draw noisy observations of the stored truth
    Observe,
    /// Run the configured filter against the stored truth/observations
    Filter,
    /// Write the per-step lower and upper error bounds
    Bounds,
    /// Run the filter once per parameter value and summarize
    Sweep {
        /// eta, alpha, lambda, omega or sigma0 (default: sweep.parameter)
        #[arg(long)]
        param: Option<SweepParam>,
        /// Comma-separated values (default: sweep.values)
        #[arg(long, value_delimiter = ',', num_args = 0..)]
        values: Option<Vec<f64>>,
    },
    /// Emit a matplotlib script for each record CSV
    Plot {
        #[arg(required = true)]
        csv: Vec<PathBuf>,
        /// Also run the scripts with python3
        #[arg(long)]
        render: bool,
    },
}

fn run(cli: Cli) -> Result<Vec<PathBuf>, CliError> {
    let mut cfg = match &cli.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    if let Some(s) = cli.seed {
        cfg.override_seed(s);
    }
    let ctx = Context {
        cfg,
        out: cli.out,
        quiet: cli.quiet,
    };
    match cli.cmd {
        Cmd::Truth => commands::truth(&ctx),
        Cmd::Observe => commands::observe(&ctx),
        Cmd::Filter => commands::filter(&ctx),
        Cmd::Bounds => commands::bounds(&ctx),
        Cmd::Sweep { param, values } => {
            let param = param.unwrap_or(ctx.cfg.sweep_param);
            let values = values.unwrap_or_else(|| ctx.cfg.sweep_values.clone());
            sweep::run(&ctx, param, &values)
        }
        Cmd::Plot { csv, render } => {
            let mut out = Vec::new();
            for p in &csv {
                commands::ensure_exists(p)?;
                out.extend(plot::emit(p, &ctx.out, render)?);
            }
            Ok(out)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let quiet = cli.quiet;
    match run(cli) {
        Ok(paths) => {
            if !quiet {
                for p in paths {
                    println!("{}", p.display());
                }
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error[{}]: {e}", e.class());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
