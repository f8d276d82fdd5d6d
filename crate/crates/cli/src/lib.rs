//! Command-line front end for the effort-dynamics model: scenario files in,
//! reports and plot-ready tables out.

pub mod commands;
pub mod emit;
pub mod error;
pub mod scenario;

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde_json::json;

pub use commands::{run, Check, RunOutcome};
pub use error::{CliError, Result};
pub use scenario::{load_scenario_file, Command, Overrides, Scenario, ScenarioFile, TableFormat};

pub const REPORT_FILE: &str = "report.json";
pub const META_FILE: &str = "run_meta.json";

pub fn load_scenario(path: &Path, command: Command, overrides: &Overrides) -> Result<Scenario> {
    Scenario::resolve(command, load_scenario_file(path)?, overrides)
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

/// Runs a scenario and writes `report.json` plus a `run_meta.json` sidecar
/// holding everything that varies between runs.
pub fn execute(scenario: &Scenario, scenario_path: Option<&Path>, out_dir: &Path) -> Result<RunOutcome> {
    let started = SystemTime::now();
    let outcome = run(scenario, out_dir)?;
    write_json(&out_dir.join(REPORT_FILE), &outcome.report)?;
    let seconds = |t: SystemTime| t.duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0);
    let finished = SystemTime::now();
    let meta = json!({
        "tool": env!("CARGO_PKG_NAME"),
        "version": env!("CARGO_PKG_VERSION"),
        "scenario_path": scenario_path.map(|p| p.display().to_string()),
        "out_dir": out_dir.display().to_string(),
        "started_unix": seconds(started),
        "finished_unix": seconds(finished),
        "elapsed_seconds": finished.duration_since(started).map(|d| d.as_secs_f64()).unwrap_or(0.0),
    });
    write_json(&out_dir.join(META_FILE), &meta)?;
    Ok(outcome)
}

/// Default output directory: `out/<command>` under the working directory.
pub fn default_out_dir(command: Command) -> PathBuf {
    PathBuf::from("out").join(command.name())
}
