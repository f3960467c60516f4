//! `cspd` command-line entry points.
//!
//! Exit codes: 0 success, 1 other failure, 2 configuration error,
//! 3 numerical divergence.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use cspd::config::RunConfig;
use cspd::runner::{run_resonance_report, run_simulation};
use cspd::Error;

#[derive(Parser)]
#[command(name = "cspd", about = "Dirac / Chern-Simons-Proca pseudo-spectral simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a simulation and write diagnostics, summary and snapshots.
    Simulate { config: PathBuf },
    /// Classify phase resonances and write the report files.
    Resonance { config: PathBuf },
    /// Validate a configuration without computing anything.
    Check { config: PathBuf },
    /// Print the version.
    Version,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) => 2,
        Error::Divergence { .. } => 3,
        _ => 1,
    }
}

fn run(cmd: Command) -> Result<(), Error> {
    match cmd {
        Command::Version => println!("cspd {}", env!("CARGO_PKG_VERSION")),
        Command::Check { config } => {
            let cfg = RunConfig::load(&config)?;
            println!(
                "config ok: n = {}, L = {}, horizon = {}, t_end = {}, output = {}",
                cfg.grid.n,
                cfg.grid.length,
                cfg.horizon(),
                cfg.time.t_end,
                cfg.output.directory.display()
            );
        }
        Command::Simulate { config } => {
            let cfg = RunConfig::load(&config)?;
            let out = run_simulation(&cfg)?;
            let s = &out.summary;
            println!("steps {} ({} halved), records {}, wall time {:.1} s", s.steps, s.halved_steps, s.records, s.wall_time_seconds);
            println!("mass drift {:.3e}", s.mass.max_relative_drift);
            for f in &s.fits {
                match &f.fit {
                    Some(fit) => println!("decay k = {}: exponent {:.4}", f.k, fit.exponent),
                    None => println!("decay k = {}: no fit ({})", f.k, f.error.as_deref().unwrap_or("")),
                }
            }
            for (name, env) in &s.envelopes {
                println!("envelope {name}: ratio {:.3} (factor {})", env.ratio, env.factor);
            }
            for w in s.scattering.iter().filter_map(|e| e.warning.as_ref()) {
                eprintln!("warning: {w}");
            }
            println!("output in {}", cfg.output.directory.display());
        }
        Command::Resonance { config } => {
            let cfg = RunConfig::load(&config)?;
            let out = run_resonance_report(&cfg)?;
            let nonres = out.reports.iter().filter(|r| r.time_nonresonant).count();
            println!("{} reports, {} time-nonresonant", out.reports.len(), nonres);
            if let Some(c) = out.summary.coifman_meyer_constant {
                println!("multiplier norm constant {c:.4}");
            }
            println!("output in {}", cfg.output.directory.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
