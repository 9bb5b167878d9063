//! Command-line orchestration for the chemoblow solver: scenario files, single
//! runs, parameter sweeps and verification suites.

pub mod config;
pub mod error;
pub mod runner;
pub mod sweep;
pub mod verify;

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::config::Config;
use crate::error::{CliError, Result};
use crate::verify::{Injection, Suite};

pub const THREADS_ENV: &str = "CHEMOBLOW_THREADS";

#[derive(Debug, Parser)]
#[command(name = "chemoblow", version, about = "Radial attraction-repulsion chemotaxis runs, sweeps and checks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Overrides {
    /// Override the number of grid cells.
    #[arg(long, value_name = "N")]
    pub cells: Option<usize>,
    /// Override the output directory.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one scenario and write its trajectory and summary.
    Run {
        config: PathBuf,
        /// Only evaluate constants and bounds, no time stepping.
        #[arg(long)]
        dry_run: bool,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Run the Cartesian product of the scenario's sweep axes.
    Sweep {
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Run a built-in verification suite.
    Verify {
        #[arg(value_enum)]
        suite: Suite,
        /// Write the machine-readable report here.
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "none", hide = true)]
        inject: Injection,
    },
    /// Print the constant ledger and blow-up time bounds of a scenario.
    Bound {
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
}

fn load(path: &Path, overrides: &Overrides) -> Result<Config> {
    let mut cfg = Config::load(path)?;
    if let Some(cells) = overrides.cells {
        cfg.grid.cells = cells;
    }
    if let Some(out) = &overrides.out {
        cfg.scenario.output_dir = Some(out.clone());
    }
    Ok(cfg)
}

fn threads() -> Result<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Ok(s) => match s.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(CliError::Config(format!("{THREADS_ENV} must be a positive integer, got {s:?}"))),
        },
        Err(_) => Ok(None),
    }
}

fn run_single(path: &Path, overrides: &Overrides, dry_run: bool) -> Result<u8> {
    let sc = load(path, overrides)?.build()?;
    let out = runner::execute(&sc, dry_run)?;
    runner::write_outputs(&sc.output_dir, &out)?;
    let s = &out.summary;
    if dry_run {
        print!("{}", runner::summary_json(s));
    } else {
        println!(
            "{}: {} at t = {} (T_LB integral {:.6e}, explicit {:.6e}) in {:.2}s",
            s.scenario,
            s.outcome,
            s.t_num.or(s.final_time).unwrap_or(0.0),
            s.t_lb_integral,
            s.t_lb_explicit,
            out.wall_seconds
        );
    }
    Ok(s.exit_code())
}

/// Execute a parsed command line and return the process exit code.
///
/// 0: success; 1: configuration or I/O error; 2: a run ended in
/// `dt_underflow` or `fault`; 3: a verification check failed.
pub fn dispatch(cli: Cli) -> u8 {
    let outcome = match cli.command {
        Command::Run {
            config,
            dry_run,
            overrides,
        } => run_single(&config, &overrides, dry_run),
        Command::Bound { config, overrides } => run_single(&config, &overrides, true),
        Command::Sweep { config, overrides } => (|| {
            let cfg = load(&config, &overrides)?;
            let dir = cfg.build()?.output_dir;
            let rows = sweep::run_sweep(&cfg, &dir, threads()?)?;
            sweep::write_sweep(&dir, &cfg, &rows)?;
            print!("{}", sweep::sweep_csv(&cfg, &rows));
            Ok(0)
        })(),
        Command::Verify { suite, out, inject } => (|| {
            let (report, secs) = verify::timed(suite, inject);
            for c in &report.checks {
                println!(
                    "{} {}: value {:.3e}, margin {:.3e} ({})",
                    if c.passed { "PASS" } else { "FAIL" },
                    c.name,
                    c.value,
                    c.margin,
                    c.detail
                );
            }
            let failed = report.checks.iter().filter(|c| !c.passed).count();
            println!("{} suite: {} checks, {failed} failed, {secs:.1}s", report.suite, report.checks.len());
            if let Some(dir) = out {
                runner::ensure_dir(&dir)?;
                let mut json = serde_json::to_string_pretty(&report).expect("report serializes");
                json.push('\n');
                runner::write_file(&dir.join(format!("verify_{}.json", report.suite)), &json)?;
            }
            Ok(if report.passed { 0 } else { 3 })
        })(),
    };
    outcome.unwrap_or_else(|e| {
        eprintln!("error: {e}");
        e.exit_code()
    })
}
