use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use effortdyn_cli::{default_out_dir, execute, load_scenario, Command, Overrides, Scenario, ScenarioFile};

#[derive(Debug, Parser)]
#[command(name = "effortdyn", version, about = "Predator-prey model with harvesting effort: scenarios in, reports out")]
struct Args {
    command: Command,
    /// Scenario file (TOML, or JSON when the name ends in `.json`).
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// Output directory; defaults to `out/<command>`.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Parameter preset, `figure-1` through `figure-8`.
    #[arg(long)]
    preset: Option<String>,
    /// Suppress the human summary.
    #[arg(long, short)]
    quiet: bool,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let overrides = Overrides {
        preset: args.preset.clone(),
        seed: args.seed,
    };
    let scenario = match &args.scenario {
        Some(path) => load_scenario(path, args.command, &overrides),
        None => Scenario::resolve(args.command, ScenarioFile::default(), &overrides),
    };
    let scenario = match scenario {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    let out_dir = args.out.unwrap_or_else(|| default_out_dir(args.command));
    match execute(&scenario, args.scenario.as_deref(), &out_dir) {
        Ok(outcome) => {
            if !args.quiet {
                for line in &outcome.summary {
                    println!("{line}");
                }
                println!("report written to {}", out_dir.join(effortdyn_cli::REPORT_FILE).display());
            }
            if outcome.passed() {
                ExitCode::SUCCESS
            } else {
                eprintln!("one or more reproduction checks failed");
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
