use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fbi_core::app::{run_single, run_sweep, RunOptions, SWEEP_SUMMARY_FILE};
use fbi_core::config::{RawConfig, SimulationConfig};
use fbi_core::FbiError;

#[derive(Parser)]
#[command(name = "fbi", version, about = "Mixed-dimensional fluid-beam interaction simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a simulation from a config file or a preset name.
    Run {
        /// Config file path, or a preset name (obstacle_channel, light_fiber).
        config: String,
        /// Override a config entry, e.g. `fluid.viscosity=0.01`.
        #[arg(long = "override", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
        /// Run once per value, e.g. `coupling.epsilon=1e2,1e3,1e4`.
        #[arg(long, value_name = "KEY=V1,V2,...")]
        sweep: Option<String>,
        /// Write the fluid mesh to this file before running.
        #[arg(long, value_name = "PATH")]
        mesh_out: Option<PathBuf>,
        /// Print the resolved configuration and exit without writing anything.
        #[arg(long)]
        dry_run: bool,
        /// Print per-step progress to stderr.
        #[arg(short, long)]
        verbose: bool,
    },
}

fn parse_sweep(s: &str) -> Result<(String, Vec<String>), FbiError> {
    let (key, values) = s
        .split_once('=')
        .ok_or_else(|| FbiError::Config(format!("--sweep '{s}' is not of the form key=v1,v2,...")))?;
    let values: Vec<String> = values
        .split(',')
        .map(|v| v.trim().to_string())
        .filter(|v| !v.is_empty())
        .collect();
    if key.trim().is_empty() || values.is_empty() {
        return Err(FbiError::Config(format!(
            "--sweep '{s}' needs a key and at least one value"
        )));
    }
    Ok((key.trim().to_string(), values))
}

fn configure_threads() -> Result<(), FbiError> {
    let Ok(v) = std::env::var("FBI_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| FbiError::Config(format!("FBI_THREADS must be a positive integer, got '{v}'")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| FbiError::Config(format!("cannot configure thread pool: {e}")))
}

fn execute(cli: Cli) -> Result<(), FbiError> {
    let Command::Run {
        config,
        overrides,
        sweep,
        mesh_out,
        dry_run,
        verbose,
    } = cli.command;
    configure_threads()?;
    let mut raw = RawConfig::load(&config)?;
    raw.apply_overrides(&overrides)?;
    let sweep = sweep.as_deref().map(parse_sweep).transpose()?;
    let options = RunOptions {
        sweep: sweep.clone(),
        mesh_out,
        verbose,
    };

    match sweep {
        None => {
            let cfg = SimulationConfig::from_raw(raw)?;
            if dry_run {
                print!("{}", cfg.raw.render());
                return Ok(());
            }
            let out = run_single(&cfg, &options)?;
            let last = out.reports.last();
            println!(
                "completed {} steps, output in {}{}",
                out.reports.len(),
                out.dir.display(),
                last.map_or(String::new(), |r| format!(
                    ", final violation_unscaled = {:e}, violation_scaled = {:e}",
                    r.violation_unscaled, r.violation_scaled
                ))
            );
        }
        Some((key, values)) => {
            if dry_run {
                for v in &values {
                    let mut r = raw.clone();
                    r.apply_overrides(&[format!("{key}={v}")])?;
                    let cfg = SimulationConfig::from_raw(r)?;
                    println!("# {key}={v}");
                    print!("{}", cfg.raw.render());
                }
                return Ok(());
            }
            let out = run_sweep(&raw, &key, &values, &options)?;
            let base = out.runs[0].dir.parent().map(|p| p.join(SWEEP_SUMMARY_FILE));
            println!(
                "completed {} runs, summary in {}",
                out.runs.len(),
                base.map_or_else(|| SWEEP_SUMMARY_FILE.to_string(), |p| p.display().to_string())
            );
            for f in &out.fits {
                println!(
                    "log-log fit of {} vs {key}: slope = {:.4}, intercept = {:.4}, r^2 = {:.4}",
                    f.column, f.slope, f.intercept, f.r2
                );
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let messages = match &e {
                FbiError::Validation(v) => v.clone(),
                e => vec![e.to_string()],
            };
            let report = serde_json::json!({
                "status": "error",
                "kind": e.kind(),
                "message": e.to_string(),
                "errors": messages,
            });
            eprintln!("{report}");
            if e.kind() == "config" {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
