//! `voltex`: small-time implied-volatility expansions under rough Bergomi
//! and regular stochastic volatility, with a Monte Carlo cross-check.
//!
//! A run is described by a TOML configuration (see [`config`] for the
//! schema) and/or command-line flags; flags win over the file. Results
//! are written as CSV (default) or JSON to stdout or to `--output`.
//!
//! Exit codes: 0 on success, 1 when `check-appendix` finds a failing
//! identity, 2 on usage or configuration errors.
//!
//! The `VOLTEX_THREADS` environment variable caps the Monte Carlo worker
//! count (0 or unset: one worker per core). Results are independent of
//! the worker count bit for bit.

mod commands;
mod config;
mod output;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

use config::{
    resolve, CliError, EstimatorKind, FileConfig, FormatKind, KernelKind, Overrides, Result,
};
use output::{render_csv, render_json, Table};

#[derive(Parser)]
#[command(
    name = "voltex",
    version,
    about = "Small-time smile expansions under rough and regular stochastic volatility"
)]
struct Cli {
    /// TOML run configuration file
    #[arg(long, value_name = "FILE", global = true)]
    config: Option<PathBuf>,

    /// Bundled parameter preset: fig1-left, fig1-right, fig2-left, fig2-right
    #[arg(long, value_name = "NAME", global = true)]
    preset: Option<String>,

    /// Maturity in years; repeat the flag to give several (replaces theta_list)
    #[arg(long = "theta", value_name = "YEARS", global = true)]
    theta: Vec<f64>,

    /// Monte Carlo path count
    #[arg(long, value_name = "N", global = true)]
    paths: Option<u64>,

    /// Monte Carlo time steps
    #[arg(long, value_name = "N", global = true)]
    steps: Option<usize>,

    /// Monte Carlo seed
    #[arg(long, value_name = "N", global = true)]
    seed: Option<u64>,

    /// Monte Carlo estimator
    #[arg(long, value_enum, value_name = "KIND", global = true)]
    estimator: Option<EstimatorKind>,

    /// Pair paths antithetically (true or false)
    #[arg(long, value_name = "BOOL", global = true)]
    antithetic: Option<bool>,

    /// Output format
    #[arg(long, value_enum, value_name = "FMT", global = true)]
    format: Option<FormatKind>,

    /// Output file (stdout when omitted)
    #[arg(long, value_name = "FILE", global = true)]
    output: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Expansion coefficient table, one row per maturity
    Coeffs,
    /// Second-order implied-vol smile on the z grid
    Smile,
    /// Expansion smile against a Monte Carlo smile on shared paths
    McCompare,
    /// At-the-money skew term structure with a power-law fit footer
    Skew {
        /// Half-width of the skew finite-difference bump, in z units
        #[arg(long, value_name = "Z", default_value_t = 0.02)]
        bump_z: f64,
        /// Expansion columns only; skip the Monte Carlo skew
        #[arg(long)]
        no_mc: bool,
    },
    /// Second-order density of the normalized log return on the x grid
    Density,
    /// Monte Carlo checks of the kernel-functional identities
    CheckAppendix {
        /// Kernel choice
        #[arg(long, value_enum, value_name = "KIND")]
        kernel: Option<KernelKind>,
        /// Exponent h for the fractional-power kernel
        #[arg(long, value_name = "H")]
        kernel_h: Option<f64>,
    },
}

/// Apply `VOLTEX_THREADS` before any parallel work starts. 0 or unset
/// leaves the default (one worker per core).
fn init_threads() -> Result<()> {
    let value = match std::env::var("VOLTEX_THREADS") {
        Err(std::env::VarError::NotPresent) => return Ok(()),
        Err(e) => return Err(CliError(format!("VOLTEX_THREADS: {e}"))),
        Ok(v) => v,
    };
    let n: usize = value.trim().parse().map_err(|_| {
        CliError(format!(
            "VOLTEX_THREADS must be a nonnegative integer (0 = one worker per core), \
             got \"{value}\""
        ))
    })?;
    if n > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError(format!("cannot configure the thread pool: {e}")))?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<i32> {
    let mut file = match &cli.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };

    if let Command::CheckAppendix { kernel, kernel_h } = &cli.command {
        if kernel.is_some() || kernel_h.is_some() {
            let section = file.appendix.get_or_insert_with(Default::default);
            if let Some(k) = kernel {
                section.kernel = Some(*k);
            }
            if let Some(h) = kernel_h {
                section.h = Some(*h);
            }
        }
    }

    let overrides = Overrides {
        preset: cli.preset.clone(),
        theta: cli.theta.clone(),
        seed: cli.seed,
        paths: cli.paths,
        steps: cli.steps,
        estimator: cli.estimator,
        antithetic: cli.antithetic,
        format: cli.format,
        output: cli.output.clone(),
    };
    let resolved = resolve(file, &overrides)?;

    let (table, code): (Table, i32) = match &cli.command {
        Command::Coeffs => (commands::coeffs(&resolved)?, 0),
        Command::Smile => (commands::smile(&resolved)?, 0),
        Command::McCompare => (commands::mc_compare(&resolved)?, 0),
        Command::Skew { bump_z, no_mc } => (commands::skew(&resolved, *bump_z, *no_mc)?, 0),
        Command::Density => (commands::density(&resolved)?, 0),
        Command::CheckAppendix { .. } => commands::check_appendix(&resolved)?,
    };

    let text = match resolved.format {
        FormatKind::Csv => render_csv(&table),
        FormatKind::Json => render_json(&table),
    };
    match &resolved.out_path {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| CliError(format!("cannot write {}: {e}", path.display())))?,
        None => print!("{text}"),
    }
    Ok(code)
}

fn main() {
    if let Err(e) = init_threads() {
        eprintln!("error: {e}");
        std::process::exit(2);
    }
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => std::process::exit(code),
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(2);
        }
    }
}
