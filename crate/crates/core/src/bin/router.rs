use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use spin_router::config::{RunConfig, Scenario};
use spin_router::scenario;

/// Run one spin-wave router scenario and write its CSV artifacts.
#[derive(Parser, Debug)]
#[command(name = "router", version)]
struct Cli {
    /// absorb, full, sweep-abs, sweep-phi, mismatch-abs, mismatch-em,
    /// optimize, feasibility, coil or adiabatic
    scenario: String,
    /// key = value configuration file
    #[arg(long)]
    config: PathBuf,
    /// Output directory
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Seed for the optimizer restarts (overrides the config)
    #[arg(long)]
    seed: Option<u64>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let scenario: Scenario = match cli.scenario.parse() {
        Ok(s) => s,
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(2);
        }
    };
    let text = match std::fs::read_to_string(&cli.config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("cannot read {}: {e}", cli.config.display());
            return ExitCode::from(2);
        }
    };
    let (cfg, diags) = match RunConfig::parse(&text, Some(scenario), cli.seed) {
        Ok(v) => v,
        Err(diags) => {
            for d in diags {
                eprintln!("{d}");
            }
            return ExitCode::from(2);
        }
    };
    for d in &diags {
        eprintln!("{d}");
    }
    match scenario::run(&cfg, &cli.out, &diags) {
        Ok(summary) => {
            for (k, v) in &summary.values {
                println!("{k} = {v}");
            }
            println!("wrote {} files to {}", summary.files.len(), cli.out.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
