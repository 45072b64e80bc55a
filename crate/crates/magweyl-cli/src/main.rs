use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use magweyl_cli::config::{Scenario, ScenarioConfig};
use magweyl_cli::scenarios::run_scenario;
use magweyl_cli::CliError;

/// Runs a magweyl scenario and writes report.json, CSV datasets and plot scripts.
///
/// Exit codes: 0 all checks pass, 1 a check failed or the run stopped, 2 bad configuration.
/// The thread count follows RAYON_NUM_THREADS.
#[derive(Debug, Parser)]
#[command(name = "magweyl", version)]
struct Args {
    /// validate, compose, sqrt, resolvent, evolve or sweep
    scenario: String,
    /// JSON scenario configuration
    #[arg(long)]
    config: PathBuf,
    /// output directory (default: the config's `out`, else ./out/<scenario>)
    #[arg(long)]
    out: Option<PathBuf>,
    /// seed for randomised checks, overriding the config
    #[arg(long)]
    seed: Option<u64>,
    /// grid override such as n=32,L=8
    #[arg(long)]
    grid: Option<String>,
}

fn run(args: Args) -> Result<bool, CliError> {
    let scenario: Scenario = args.scenario.parse()?;
    let mut cfg = ScenarioConfig::load(&args.config)?;
    if let Some(s) = cfg.scenario {
        if s != scenario {
            return Err(CliError::Config(format!("config is for `{s}`, command line asks for `{scenario}`")));
        }
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(g) = &args.grid {
        cfg.grid.apply_override(g)?;
    }
    let out = args.out.or_else(|| cfg.out.clone()).unwrap_or_else(|| PathBuf::from("out").join(scenario.name()));
    let report = run_scenario(&cfg, scenario, &out)?;
    for c in &report.checks {
        println!("{c}");
    }
    if let Some(e) = &report.error {
        eprintln!("error: {e}");
    }
    println!("{} {} ({:.2} s) -> {}", scenario, if report.passed { "PASS" } else { "FAIL" }, report.wall_time_s, out.display());
    Ok(report.passed)
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(args) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
