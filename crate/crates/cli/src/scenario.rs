//! Scenario files: TOML by default, JSON when the extension is `.json`.

use std::path::Path;

use effortdyn_core::dynamics::{ClassifyOptions, Tolerances};
use effortdyn_core::{Error as ModelError, Figure, ModelParams};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Simulate,
    Equilibria,
    Stability,
    Hopf,
    Regions,
    Basins,
    Optimal,
    ReproduceFigure,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Equilibria => "equilibria",
            Command::Stability => "stability",
            Command::Hopf => "hopf",
            Command::Regions => "regions",
            Command::Basins => "basins",
            Command::Optimal => "optimal",
            Command::ReproduceFigure => "reproduce-figure",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TableFormat {
    #[default]
    Csv,
    PlotData,
}

impl TableFormat {
    pub fn extension(self) -> &'static str {
        match self {
            TableFormat::Csv => "csv",
            TableFormat::PlotData => "dat",
        }
    }
}

/// Parameter overrides; fields left out come from the preset.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsSpec {
    pub a: Option<f64>,
    pub e: Option<f64>,
    pub d: Option<f64>,
    pub q: Option<f64>,
    pub m: Option<f64>,
    pub m1: Option<f64>,
    pub m2: Option<f64>,
    pub p: Option<f64>,
    pub c: Option<f64>,
    pub rho: Option<f64>,
    pub delta: Option<f64>,
}

impl ParamsSpec {
    pub fn resolve(&self, base: Option<ModelParams>) -> Result<ModelParams> {
        let pick = |name: &str, value: Option<f64>, fallback: Option<f64>| {
            value.or(fallback).ok_or_else(|| {
                CliError::invalid(format!("params.{name}"), "missing and no preset given")
            })
        };
        let b = base.as_ref();
        let params = ModelParams {
            a: pick("a", self.a, b.map(|p| p.a))?,
            e: pick("e", self.e, b.map(|p| p.e))?,
            d: pick("d", self.d, b.map(|p| p.d))?,
            q: pick("q", self.q, b.map(|p| p.q))?,
            m: pick("m", self.m, b.map(|p| p.m))?,
            m1: pick("m1", self.m1, b.map(|p| p.m1))?,
            m2: pick("m2", self.m2, b.map(|p| p.m2))?,
            p: pick("p", self.p, b.map(|p| p.p))?,
            c: pick("c", self.c, b.map(|p| p.c))?,
            rho: pick("rho", self.rho, b.map(|p| p.rho))?,
            delta: self.delta.or(b.map(|p| p.delta)).unwrap_or(0.0),
        };
        params.validate().map_err(|e| match e {
            ModelError::InvalidParam { name, reason } => {
                CliError::invalid(format!("params.{name}"), reason)
            }
            other => CliError::Model(other),
        })?;
        Ok(params)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulateSettings {
    /// Initial states; empty means the preset's labelled initials.
    pub initial: Vec<[f64; 3]>,
    pub t_end: f64,
    pub format: TableFormat,
}

impl Default for SimulateSettings {
    fn default() -> Self {
        Self {
            initial: Vec::new(),
            t_end: 1000.0,
            format: TableFormat::Csv,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HopfSettings {
    pub m_lo: f64,
    pub m_hi: f64,
    pub steps: usize,
    /// Reference fraction for the frozen-coefficient quadratic.
    pub m_ref: Option<f64>,
}

impl Default for HopfSettings {
    fn default() -> Self {
        Self {
            m_lo: 0.0,
            m_hi: 1.0,
            steps: 400,
            m_ref: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RegionSettings {
    pub c_range: [f64; 2],
    pub d_range: [f64; 2],
    pub nx: usize,
    pub ny: usize,
    pub format: TableFormat,
}

impl Default for RegionSettings {
    fn default() -> Self {
        Self {
            c_range: [0.05, 6.0],
            d_range: [0.01, 0.7],
            nx: 120,
            ny: 70,
            format: TableFormat::Csv,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BasinSettings {
    pub bounds: [[f64; 2]; 3],
    pub n: usize,
    pub t_end: f64,
}

impl Default for BasinSettings {
    fn default() -> Self {
        Self {
            bounds: [[0.01, 1.0]; 3],
            n: 32,
            t_end: 1000.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptimalSettings {
    pub bracket: [f64; 2],
    /// Overrides `params.delta`.
    pub delta: Option<f64>,
}

impl Default for OptimalSettings {
    fn default() -> Self {
        Self {
            bracket: [0.34, 1.0],
            delta: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FigureSettings {
    pub number: Option<u8>,
}

/// Optional assertions; a failed one makes the run exit nonzero.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Expectations {
    /// Every simulated trajectory ends at one of these attractors.
    pub attractors: Option<Vec<String>>,
    /// Each of these shows up among basin samples.
    pub basin_attractors: Option<Vec<String>>,
    pub region: Option<String>,
    pub e3_exists: Option<bool>,
    pub m_star: Option<[f64; 2]>,
    pub m_opt: Option<[f64; 2]>,
}

/// Raw file contents; every section is optional.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub command: Option<Command>,
    pub preset: Option<String>,
    pub seed: Option<u64>,
    pub params: Option<ParamsSpec>,
    pub tolerances: Option<Tolerances>,
    pub classify: Option<ClassifyOptions>,
    pub simulate: Option<SimulateSettings>,
    pub hopf: Option<HopfSettings>,
    pub regions: Option<RegionSettings>,
    pub basins: Option<BasinSettings>,
    pub optimal: Option<OptimalSettings>,
    pub figure: Option<FigureSettings>,
    pub expect: Option<Expectations>,
}

impl ScenarioFile {
    pub fn parse(text: &str, json: bool, path: &Path) -> Result<Self> {
        let parsed = if json {
            serde_json::from_str(text).map_err(|e| e.to_string())
        } else {
            toml::from_str(text).map_err(|e| e.to_string())
        };
        parsed.map_err(|message| CliError::Parse {
            path: path.to_path_buf(),
            message: message.trim_end().to_owned(),
        })
    }
}

pub fn load_scenario_file(path: &Path) -> Result<ScenarioFile> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let json = path
        .extension()
        .is_some_and(|ext| ext.eq_ignore_ascii_case("json"));
    ScenarioFile::parse(&text, json, path)
}

/// A validated scenario with defaults applied.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Scenario {
    pub command: Command,
    pub preset: Option<Figure>,
    pub seed: u64,
    pub params: ModelParams,
    pub tolerances: Tolerances,
    pub classify: ClassifyOptions,
    pub simulate: SimulateSettings,
    pub hopf: HopfSettings,
    pub regions: RegionSettings,
    pub basins: BasinSettings,
    pub optimal: OptimalSettings,
    pub figure: Option<Figure>,
    pub expect: Expectations,
}

/// Values given on the command line; they take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub preset: Option<String>,
    pub seed: Option<u64>,
}

fn parse_preset(field: &str, name: &str) -> Result<Figure> {
    Figure::from_name(name)
        .ok_or_else(|| CliError::invalid(field, format!("unknown preset `{name}` (expected figure-1 … figure-8)")))
}

fn check(cond: bool, field: &str, reason: &str) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(CliError::invalid(field, reason))
    }
}

fn check_range(field: &str, r: [f64; 2], positive: bool) -> Result<()> {
    let lower_ok = if positive { r[0] > 0.0 } else { r[0] >= 0.0 };
    check(
        r[0].is_finite() && r[1].is_finite() && lower_ok && r[1] >= r[0],
        field,
        if positive {
            "must be [lo, hi] with 0 < lo <= hi"
        } else {
            "must be [lo, hi] with 0 <= lo <= hi"
        },
    )
}

impl Scenario {
    pub fn resolve(command: Command, file: ScenarioFile, overrides: &Overrides) -> Result<Self> {
        if let Some(declared) = file.command {
            check(
                declared == command,
                "command",
                &format!("scenario declares `{}` but `{}` was requested", declared.name(), command.name()),
            )?;
        }
        let preset = match overrides.preset.as_deref().or(file.preset.as_deref()) {
            Some(name) => Some(parse_preset("preset", name)?),
            None => None,
        };
        let figure = match file.figure.as_ref().and_then(|f| f.number) {
            Some(n) => Some(Figure::from_number(n).ok_or_else(|| {
                CliError::invalid("figure.number", format!("{n} is not in 1..=8"))
            })?),
            None => preset,
        };
        if command == Command::ReproduceFigure && figure.is_none() {
            return Err(CliError::invalid(
                "figure.number",
                "reproduce-figure needs a figure number or a preset",
            ));
        }
        let base = preset.or(if command == Command::ReproduceFigure { figure } else { None });
        let params = file
            .params
            .unwrap_or_default()
            .resolve(base.map(Figure::params))?;

        let scenario = Scenario {
            command,
            preset,
            seed: overrides.seed.or(file.seed).unwrap_or(0),
            params,
            tolerances: file.tolerances.unwrap_or_default(),
            classify: file.classify.unwrap_or_default(),
            simulate: file.simulate.unwrap_or_default(),
            hopf: file.hopf.unwrap_or_default(),
            regions: file.regions.unwrap_or_default(),
            basins: file.basins.unwrap_or_default(),
            optimal: file.optimal.unwrap_or_default(),
            figure,
            expect: file.expect.unwrap_or_default(),
        };
        scenario.validate()?;
        Ok(scenario)
    }

    fn validate(&self) -> Result<()> {
        let t = &self.tolerances;
        check(t.abs_tol > 0.0, "tolerances.abs_tol", "must be positive")?;
        check(t.rel_tol >= 0.0, "tolerances.rel_tol", "must be nonnegative")?;
        check(t.max_step > 0.0, "tolerances.max_step", "must be positive")?;
        check(t.initial_step > 0.0, "tolerances.initial_step", "must be positive")?;
        check(t.min_step > 0.0, "tolerances.min_step", "must be positive")?;
        check(t.max_steps > 0, "tolerances.max_steps", "must be positive")?;
        if let effortdyn_core::dynamics::Method::FixedRk4 { step } = t.method {
            check(step > 0.0 && step.is_finite(), "tolerances.method.step", "must be positive")?;
        }
        let c = &self.classify;
        check(c.match_radius > 0.0, "classify.match_radius", "must be positive")?;
        check(
            c.tail_fraction > 0.0 && c.tail_fraction <= 1.0,
            "classify.tail_fraction",
            "must lie in (0, 1]",
        )?;

        let s = &self.simulate;
        check(s.t_end > 0.0 && s.t_end.is_finite(), "simulate.t_end", "must be positive")?;
        for (i, init) in s.initial.iter().enumerate() {
            check(
                init.iter().all(|v| v.is_finite() && *v >= 0.0),
                &format!("simulate.initial[{i}]"),
                "components must be finite and nonnegative",
            )?;
        }

        let h = &self.hopf;
        check(
            h.m_lo >= 0.0 && h.m_hi <= 1.0 && h.m_lo < h.m_hi,
            "hopf.m_lo",
            "need 0 <= m_lo < m_hi <= 1",
        )?;
        check(h.steps >= 1 && h.steps <= 1_000_000, "hopf.steps", "must be in 1..=1000000")?;
        if let Some(m) = h.m_ref {
            check((0.0..=1.0).contains(&m), "hopf.m_ref", "must lie in [0, 1]")?;
        }

        let r = &self.regions;
        check_range("regions.c_range", r.c_range, true)?;
        check_range("regions.d_range", r.d_range, true)?;
        check(r.nx >= 1 && r.nx <= 4000, "regions.nx", "must be in 1..=4000")?;
        check(r.ny >= 1 && r.ny <= 4000, "regions.ny", "must be in 1..=4000")?;

        let b = &self.basins;
        for (i, r) in b.bounds.iter().enumerate() {
            check_range(&format!("basins.bounds[{i}]"), *r, false)?;
        }
        check(b.n >= 1 && b.n <= 1_000_000, "basins.n", "must be in 1..=1000000")?;
        check(b.t_end > 0.0 && b.t_end.is_finite(), "basins.t_end", "must be positive")?;

        let o = &self.optimal;
        check(
            o.bracket[0] < o.bracket[1] && o.bracket[0] >= 0.0 && o.bracket[1] <= 1.0,
            "optimal.bracket",
            "need 0 <= lo < hi <= 1",
        )?;
        if let Some(delta) = o.delta {
            check(delta >= 0.0 && delta.is_finite(), "optimal.delta", "must be >= 0")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse_toml(text: &str) -> Result<ScenarioFile> {
        ScenarioFile::parse(text, false, Path::new("test.toml"))
    }

    #[test]
    fn minimal_scenario_gets_defaults() {
        let file = parse_toml("command = \"equilibria\"\npreset = \"figure-4\"\n").unwrap();
        let s = Scenario::resolve(Command::Equilibria, file, &Overrides::default()).unwrap();
        assert_eq!(s.params, Figure::Four.params());
        assert_eq!(s.seed, 0);
        assert_eq!(s.basins.n, 32);
    }

    #[test]
    fn explicit_params_without_preset() {
        let text = "[params]\na = 1.2\ne = 0.6\nd = 0.07\nq = 0.6\nm = 0.5\nm1 = 0.4\nm2 = 0.4\np = 6\nc = 3\nrho = 1\n";
        let s = Scenario::resolve(Command::Equilibria, parse_toml(text).unwrap(), &Overrides::default()).unwrap();
        assert_eq!(s.params, Figure::Four.params());
    }

    #[test]
    fn out_of_range_fraction_names_the_field() {
        let text = "preset = \"figure-4\"\n[params]\nm = 1.5\n";
        let err = Scenario::resolve(Command::Equilibria, parse_toml(text).unwrap(), &Overrides::default()).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("params.m") && msg.contains("m ∈ [0,1]"), "{msg}");
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn missing_params_are_reported() {
        let err = Scenario::resolve(Command::Equilibria, parse_toml("[params]\na = 1\n").unwrap(), &Overrides::default()).unwrap_err();
        assert!(err.to_string().contains("params.e"), "{err}");
    }

    #[test]
    fn unknown_keys_are_rejected_with_location() {
        let err = parse_toml("preset = \"figure-4\"\n[params]\nalpha = 1.0\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("alpha") && msg.contains("line 3"), "{msg}");
        let err = ScenarioFile::parse("{\"preset\": \"figure-1\", \"bogus\": 1}", true, Path::new("x.json")).unwrap_err();
        assert!(err.to_string().contains("bogus") && err.to_string().contains("line 1"), "{err}");
    }

    #[test]
    fn command_mismatch_is_an_error() {
        let file = parse_toml("command = \"hopf\"\npreset = \"figure-5\"\n").unwrap();
        assert!(Scenario::resolve(Command::Regions, file, &Overrides::default()).is_err());
    }

    #[test]
    fn cli_overrides_win() {
        let file = parse_toml("preset = \"figure-1\"\nseed = 5\n").unwrap();
        let o = Overrides {
            preset: Some("figure-2".into()),
            seed: Some(9),
        };
        let s = Scenario::resolve(Command::Simulate, file, &o).unwrap();
        assert_eq!(s.params, Figure::Two.params());
        assert_eq!(s.seed, 9);
    }

    #[test]
    fn invalid_settings_name_their_field() {
        let file = parse_toml("preset = \"figure-7\"\n[basins]\nn = 0\n").unwrap();
        let err = Scenario::resolve(Command::Basins, file, &Overrides::default()).unwrap_err();
        assert!(err.to_string().contains("basins.n"), "{err}");
    }
}
