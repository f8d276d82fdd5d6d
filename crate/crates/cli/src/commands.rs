//! Dispatch of a resolved scenario to the model library.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use effortdyn_core::bifurcation::{self, BoundaryLines};
use effortdyn_core::dynamics::{
    self, basin_sample, boundedness_monitor, classify_attractor, cycle_amplitudes,
    persistence_witness,
};
use effortdyn_core::equilibria::{self, EquilibriumKind};
use effortdyn_core::{optimal, stability, Figure, ModelParams, SysState, Tolerances};
use serde::Serialize;
use serde_json::{json, Value};

use crate::emit::{emit_tabular, format_number, Table};
use crate::error::{CliError, Result};
use crate::scenario::{Command, Scenario, TableFormat};

/// One asserted reproduction check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            passed,
            detail: detail.into(),
        }
    }
}

/// Everything a run produced. `report` is what lands in `report.json`.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub report: Value,
    pub checks: Vec<Check>,
    pub files: Vec<PathBuf>,
    pub summary: Vec<String>,
}

impl RunOutcome {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

struct Ctx<'a> {
    scenario: &'a Scenario,
    out_dir: &'a Path,
    results: BTreeMap<String, Value>,
    checks: Vec<Check>,
    files: Vec<PathBuf>,
    summary: Vec<String>,
}

fn to_value<T: Serialize>(v: &T) -> Result<Value> {
    Ok(serde_json::to_value(v)?)
}

impl Ctx<'_> {
    fn put<T: Serialize>(&mut self, key: &str, value: &T) -> Result<()> {
        self.results.insert(key.to_owned(), to_value(value)?);
        Ok(())
    }

    fn say(&mut self, line: impl Into<String>) {
        self.summary.push(line.into());
    }

    fn check(&mut self, check: Check) {
        self.say(format!(
            "[{}] {}: {}",
            if check.passed { "PASS" } else { "FAIL" },
            check.name,
            check.detail
        ));
        self.checks.push(check);
    }

    fn table(&mut self, name: &str, table: &Table, format: TableFormat) -> Result<String> {
        let file = format!("{name}.{}", format.extension());
        let path = self.out_dir.join(&file);
        emit_tabular(table, &path, format)?;
        self.files.push(path);
        Ok(file)
    }
}

pub fn run(scenario: &Scenario, out_dir: &Path) -> Result<RunOutcome> {
    std::fs::create_dir_all(out_dir).map_err(|e| CliError::io(out_dir, e))?;
    let mut ctx = Ctx {
        scenario,
        out_dir,
        results: BTreeMap::new(),
        checks: Vec::new(),
        files: Vec::new(),
        summary: Vec::new(),
    };
    let params = scenario.params;
    match scenario.command {
        Command::Simulate => {
            let initials = simulate_initials(scenario)?;
            simulate(&mut ctx, &params, &initials, scenario.simulate.t_end, "trajectory")?;
            if let Some(expected) = scenario.expect.attractors.clone() {
                expect_attractors(&mut ctx, &expected);
            }
        }
        Command::Equilibria => equilibria_cmd(&mut ctx, &params)?,
        Command::Stability => stability_cmd(&mut ctx, &params)?,
        Command::Hopf => hopf_cmd(&mut ctx, &params)?,
        Command::Regions => regions_cmd(&mut ctx, &params)?,
        Command::Basins => basins_cmd(&mut ctx, &params, "basins")?,
        Command::Optimal => optimal_cmd(&mut ctx, &params)?,
        Command::ReproduceFigure => {
            let figure = scenario
                .figure
                .ok_or_else(|| CliError::invalid("figure.number", "missing"))?;
            reproduce_figure(&mut ctx, figure)?;
        }
    }

    let Ctx {
        results,
        checks,
        files,
        summary,
        ..
    } = ctx;
    let file_names: Vec<String> = files
        .iter()
        .filter_map(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()))
        .collect();
    let report = json!({
        "command": scenario.command.name(),
        "scenario": to_value(scenario)?,
        "results": results,
        "checks": to_value(&checks)?,
        "passed": checks.iter().all(|c| c.passed),
        "files": file_names,
    });
    Ok(RunOutcome {
        report,
        checks,
        files,
        summary,
    })
}

fn simulate_initials(scenario: &Scenario) -> Result<Vec<(String, SysState)>> {
    if !scenario.simulate.initial.is_empty() {
        return Ok(scenario
            .simulate
            .initial
            .iter()
            .enumerate()
            .map(|(i, v)| (format!("S{i}"), SysState::from_array(*v)))
            .collect());
    }
    let from_preset = scenario
        .preset
        .map(|f| f.initial_conditions())
        .unwrap_or_default();
    if from_preset.is_empty() {
        return Err(CliError::invalid(
            "simulate.initial",
            "no initial states given and the preset has none",
        ));
    }
    Ok(from_preset
        .into_iter()
        .map(|(label, s)| (label.to_owned(), s))
        .collect())
}

#[derive(Debug, Clone, Serialize)]
struct RunRecord {
    label: String,
    initial: SysState,
    file: String,
    final_time: f64,
    final_state: SysState,
    attractor: dynamics::AttractorVerdict,
    boundedness: dynamics::BoundednessReport,
    meta: dynamics::TrajectoryMeta,
}

fn simulate(
    ctx: &mut Ctx<'_>,
    params: &ModelParams,
    initials: &[(String, SysState)],
    t_end: f64,
    prefix: &str,
) -> Result<Vec<RunRecord>> {
    simulate_with(ctx, params, initials, t_end, prefix, &ctx.scenario.tolerances.clone())
}

fn simulate_with(
    ctx: &mut Ctx<'_>,
    params: &ModelParams,
    initials: &[(String, SysState)],
    t_end: f64,
    prefix: &str,
    tol: &Tolerances,
) -> Result<Vec<RunRecord>> {
    let format = ctx.scenario.simulate.format;
    let opts = ctx.scenario.classify;
    let mut records = Vec::new();
    for (label, s0) in initials {
        let traj = dynamics::integrate(params, *s0, t_end, tol)?;
        let file = ctx.table(&format!("{prefix}_{label}"), &Table::trajectory(&traj), format)?;
        let verdict = classify_attractor(params, &traj, &opts);
        let end = traj.final_state();
        ctx.say(format!(
            "{label} from ({}, {}, {}) -> {} at t = {}: ({:.6e}, {:.6e}, {:.6e})",
            s0.x,
            s0.y,
            s0.effort,
            verdict.kind.label(),
            traj.final_time(),
            end.x,
            end.y,
            end.effort
        ));
        records.push(RunRecord {
            label: label.clone(),
            initial: *s0,
            file,
            final_time: traj.final_time(),
            final_state: end,
            attractor: verdict,
            boundedness: boundedness_monitor(params, &traj),
            meta: traj.meta.clone(),
        });
    }
    ctx.put(prefix, &records)?;
    Ok(records)
}

fn expect_attractors(ctx: &mut Ctx<'_>, expected: &[String]) {
    let runs: Vec<(String, String)> = ctx.results["trajectory"]
        .as_array()
        .map(|runs| {
            runs.iter()
                .map(|r| {
                    (
                        r["label"].as_str().unwrap_or_default().to_owned(),
                        r["attractor"]["kind"].as_str().unwrap_or_default().to_owned(),
                    )
                })
                .collect()
        })
        .unwrap_or_default();
    for (label, kind) in runs {
        ctx.check(Check::new(
            format!("attractor of {label}"),
            expected.contains(&kind),
            format!("{kind}, expected one of {expected:?}"),
        ));
    }
}

/// Distance of every run's end state to the given equilibrium.
fn convergence_checks(
    ctx: &mut Ctx<'_>,
    params: &ModelParams,
    records: &[RunRecord],
    target: EquilibriumKind,
    labels: &[&str],
    radius: f64,
) {
    let report = equilibria::all_equilibria(params)
        .into_iter()
        .find(|r| r.kind == target && r.exists);
    for rec in records.iter().filter(|r| labels.contains(&r.label.as_str())) {
        let check = match &report {
            Some(eq) => {
                let dist = rec.final_state.distance(&eq.state());
                Check::new(
                    format!("{} converges to {target}", rec.label),
                    dist <= radius,
                    format!("|z(t_end) - {target}| = {dist:.3e} at t = {}", rec.final_time),
                )
            }
            None => Check::new(
                format!("{} converges to {target}", rec.label),
                false,
                format!("{target} does not exist for these parameters"),
            ),
        };
        ctx.check(check);
    }
}

fn equilibria_cmd(ctx: &mut Ctx<'_>, params: &ModelParams) -> Result<()> {
    let reports = equilibria::all_equilibria(params);
    let mut residuals = BTreeMap::new();
    for r in &reports {
        ctx.say(r.explain());
        if r.exists && r.kind.system() == effortdyn_core::System::Original {
            residuals.insert(r.kind.to_string(), equilibria::verify_equilibrium(params, r)?);
        }
    }
    let interval = equilibria::coexistence_interval(params);
    match interval {
        Some((lo, hi)) => ctx.say(format!("E3 exists for m in ({lo:.6}, {hi:.6})")),
        None => ctx.say("E3 exists for no m in [0, 1]"),
    }
    ctx.put("equilibria", &reports)?;
    ctx.put("residuals", &residuals)?;
    ctx.put("coexistence_interval", &interval)?;
    if let Some(expected) = ctx.scenario.expect.e3_exists {
        let exists = equilibria::interior_equilibrium(params).exists;
        ctx.check(Check::new(
            "E3 existence",
            exists == expected,
            format!("exists = {exists}, expected {expected}"),
        ));
    }
    Ok(())
}

fn stability_cmd(ctx: &mut Ctx<'_>, params: &ModelParams) -> Result<()> {
    let verdicts = stability::classify_all(params)?;
    for v in &verdicts {
        let via = v.route.map(|k| format!(" (via {k})")).unwrap_or_default();
        ctx.say(format!("{}: {:?}{via}", v.kind, v.verdict));
        for c in &v.governing_conditions {
            ctx.say(format!("    {}: {}", c.id, if c.passed { "holds" } else { "fails" }));
        }
        for w in &v.warnings {
            ctx.say(format!("    warning: {w}"));
        }
    }
    let persistence = stability::persistence_check(params);
    ctx.say(format!(
        "persistence: {} (threshold m = {:.6})",
        persistence.persistent, persistence.threshold_m
    ));
    ctx.put("stability", &verdicts)?;
    ctx.put("persistence", &persistence)?;
    Ok(())
}

fn hopf_cmd(ctx: &mut Ctx<'_>, params: &ModelParams) -> Result<()> {
    let h = ctx.scenario.hopf.clone();
    let scan = bifurcation::hopf_scan(params, h.m_lo, h.m_hi, h.steps)?;
    let table = Table {
        header: vec!["m".into(), "delta".into()],
        rows: scan
            .delta_values
            .iter()
            .map(|(m, d)| vec![format_number(*m), format_number(*d)])
            .collect(),
    };
    if !table.rows.is_empty() {
        ctx.table("hopf_delta", &table, ctx.scenario.simulate.format)?;
    }
    match scan.m_star {
        Some(m) => ctx.say(format!("Hopf point m* = {m:.10}")),
        None => ctx.say(format!(
            "no Hopf point: {}",
            scan.reason.as_deref().unwrap_or("no admissible crossing")
        )),
    }
    if let Some(m_ref) = h.m_ref {
        let analytic = bifurcation::hopf_m_star_analytic(params, m_ref)?;
        if let Some(reason) = &analytic.reason {
            ctx.say(format!("analytic quadratic: {reason}"));
        }
        ctx.put("hopf_analytic", &analytic)?;
    }
    if let Some([lo, hi]) = ctx.scenario.expect.m_star {
        let passed = scan.m_star.is_some_and(|m| (lo..=hi).contains(&m));
        ctx.check(Check::new(
            "Hopf point",
            passed,
            format!("m* = {:?}, expected in [{lo}, {hi}]", scan.m_star),
        ));
    }
    ctx.put("hopf", &scan)?;
    Ok(())
}

fn boundary_table(lines: &BoundaryLines) -> Table {
    let mut rows = Vec::new();
    let describe = lines.describe();
    let mut text = describe.iter().map(|(_, t)| t.clone());
    for (i, k) in lines.k.iter().enumerate() {
        rows.push(vec![
            format!("L{}", i + 1),
            "affine".into(),
            format_number(lines.rho),
            format_number(*k),
            text.next().unwrap_or_default(),
        ]);
    }
    for (i, n) in lines.n.iter().enumerate() {
        rows.push(vec![
            format!("M{}", i + 1),
            "affine".into(),
            format_number(lines.m_slope),
            format_number(*n),
            text.next().unwrap_or_default(),
        ]);
    }
    for (i, r) in lines.r.iter().enumerate() {
        let (kind, value) = match r {
            Some(r) => ("horizontal", format_number(*r)),
            None => ("undefined", String::new()),
        };
        rows.push(vec![
            format!("R{}", i + 1),
            kind.into(),
            format_number(0.0),
            value,
            text.next().unwrap_or_default(),
        ]);
    }
    rows.push(vec![
        "P1".into(),
        "vertical".into(),
        String::new(),
        format_number(lines.p1_c),
        text.next().unwrap_or_default(),
    ]);
    Table {
        header: ["name", "kind", "slope", "intercept", "description"]
            .map(String::from)
            .to_vec(),
        rows,
    }
}

fn regions_cmd(ctx: &mut Ctx<'_>, params: &ModelParams) -> Result<()> {
    let r = ctx.scenario.regions.clone();
    let grid = bifurcation::region_grid(
        params,
        (r.c_range[0], r.c_range[1]),
        (r.d_range[0], r.d_range[1]),
        r.nx,
        r.ny,
    )?;
    ctx.table("regions", &Table::region_grid(&grid), r.format)?;
    let lines = bifurcation::boundary_lines(params);
    ctx.table("boundary_lines", &boundary_table(&lines), r.format)?;

    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    for (_, _, region) in grid.cells() {
        *counts.entry(region.to_string()).or_default() += 1;
    }
    ctx.say(format!("{}x{} grid, cells per region: {counts:?}", r.nx, r.ny));
    let here = bifurcation::region_classify(params, params.c, params.d)?;
    ctx.say(format!("(c, d) = ({}, {}) lies in region {}", params.c, params.d, here.label));
    if let Some(expected) = ctx.scenario.expect.region.clone() {
        ctx.check(Check::new(
            format!("region at (c, d) = ({}, {})", params.c, params.d),
            here.label.to_string() == expected,
            format!("{}, expected {expected}", here.label),
        ));
    }
    ctx.put("region_counts", &counts)?;
    ctx.put("region_at_params", &here)?;
    ctx.put("boundary_lines", &lines)?;
    ctx.put("boundary_descriptions", &lines.describe())?;
    Ok(())
}

fn basins_cmd(ctx: &mut Ctx<'_>, params: &ModelParams, key: &str) -> Result<()> {
    let b = ctx.scenario.basins.clone();
    let bounds = b.bounds.map(|[lo, hi]| (lo, hi));
    let report = basin_sample(
        params,
        bounds,
        b.n,
        b.t_end,
        ctx.scenario.seed,
        &ctx.scenario.tolerances,
        &ctx.scenario.classify,
    )?;
    let table = Table {
        header: ["index", "x0", "y0", "E0", "attractor"].map(String::from).to_vec(),
        rows: report
            .samples
            .iter()
            .map(|s| {
                vec![
                    s.index.to_string(),
                    format_number(s.initial.x),
                    format_number(s.initial.y),
                    format_number(s.initial.effort),
                    s.verdict.kind.label().to_owned(),
                ]
            })
            .collect(),
    };
    ctx.table(key, &table, TableFormat::Csv)?;
    ctx.say(format!("basin samples (seed {}): {:?}", ctx.scenario.seed, report.counts));
    if let Some(expected) = ctx.scenario.expect.basin_attractors.clone() {
        for kind in expected {
            let found = report.counts.get(&kind).copied().unwrap_or(0);
            ctx.check(Check::new(
                format!("basin of {kind} sampled"),
                found >= 1,
                format!("{found} of {} samples", b.n),
            ));
        }
    }
    ctx.put(key, &report)?;
    Ok(())
}

fn optimal_cmd(ctx: &mut Ctx<'_>, params: &ModelParams) -> Result<()> {
    let o = ctx.scenario.optimal.clone();
    let params = params.with_delta(o.delta.unwrap_or(params.delta));
    let harvest = optimal::optimal_m(&params, (o.bracket[0], o.bracket[1]))?;
    let e3 = harvest.equilibrium;
    ctx.say(format!(
        "m_opt = {:.10} (delta = {}), E3(m_opt) = ({:.6}, {:.6}, {:.6}), residual {:.3e}",
        harvest.m_opt, params.delta, e3.x, e3.y, e3.effort, harvest.residual
    ));
    if let Some([lo, hi]) = ctx.scenario.expect.m_opt {
        ctx.check(Check::new(
            "optimal m",
            (lo..=hi).contains(&harvest.m_opt),
            format!("m_opt = {}, expected in [{lo}, {hi}]", harvest.m_opt),
        ));
    }
    ctx.put("optimal", &harvest)?;
    Ok(())
}

fn owned(initials: Vec<(&'static str, SysState)>) -> Vec<(String, SysState)> {
    initials.into_iter().map(|(l, s)| (l.to_owned(), s)).collect()
}

const CONVERGENCE_RADIUS: f64 = 1e-3;

fn reproduce_figure(ctx: &mut Ctx<'_>, figure: Figure) -> Result<()> {
    let params = ctx.scenario.params;
    ctx.say(format!("reproducing {}", figure.name()));
    ctx.put("figure", &figure.number())?;
    match figure {
        Figure::One => {
            let records = simulate(ctx, &params, &owned(figure.initial_conditions()), 500.0, "trajectory")?;
            convergence_checks(ctx, &params, &records, EquilibriumKind::E0, &["P0", "P1", "P2", "P3"], CONVERGENCE_RADIUS);
        }
        Figure::Two => {
            let records = simulate(ctx, &params, &owned(figure.initial_conditions()), 1000.0, "trajectory")?;
            convergence_checks(ctx, &params, &records, EquilibriumKind::E1, &["Q0", "Q1", "Q2"], CONVERGENCE_RADIUS);
        }
        Figure::Three => {
            let (_, s0) = figure.initial_conditions()[0];
            let tol = ctx.scenario.tolerances;
            simulate(ctx, &params, &owned(figure.initial_conditions()), 1000.0, "trajectory")?;
            let witness = persistence_witness(&params, s0, 1000.0, &tol)?;
            ctx.check(Check::new(
                format!("persistence at m = {}", params.m),
                witness.succeeded,
                format!(
                    "threshold m = {:.6}, tail minima {:?}",
                    witness.check.threshold_m, witness.tail_minima
                ),
            ));
            ctx.put("persistence", &witness)?;
        }
        Figure::Four => {
            let records = simulate(ctx, &params, &owned(figure.initial_conditions()), 2000.0, "trajectory")?;
            convergence_checks(ctx, &params, &records, EquilibriumKind::E3, &["P0", "P1", "P2", "P3"], CONVERGENCE_RADIUS);
        }
        Figure::Five => {
            let scan = bifurcation::hopf_scan(&params, 0.34, 0.5, 400)?;
            ctx.check(Check::new(
                "Hopf point near 0.385",
                scan.m_star.is_some_and(|m| (m - 0.385).abs() <= 0.005),
                format!("m* = {:?}", scan.m_star),
            ));
            ctx.put("hopf", &scan)?;
            let base = ctx.scenario.tolerances;
            let tol = base.with_max_step(base.max_step.min(0.2));
            let (_, s0) = figure.initial_conditions()[0];
            let traj = dynamics::integrate(&params, s0, 2000.0, &tol)?;
            ctx.table("trajectory_P0", &Table::trajectory(&traj), ctx.scenario.simulate.format)?;
            let cycle = cycle_amplitudes(&traj, 1000.0, 2000.0);
            let decay = cycle.decay();
            ctx.check(Check::new(
                format!("sustained oscillation at m = {}", params.m),
                cycle.window_peak_to_peak > 1e-2 && decay.is_some_and(|d| d <= 0.1),
                format!(
                    "peak-to-peak {:.4e}, decay between first and last cycle {decay:?}",
                    cycle.window_peak_to_peak
                ),
            ));
            ctx.put("cycle", &cycle)?;
        }
        Figure::Six => {
            regions_cmd(ctx, &params)?;
            for (c, d, expected) in [(4.0, 0.18, "III"), (4.6, 0.3, "V")] {
                let label = bifurcation::region_classify(&params, c, d)?.label;
                ctx.check(Check::new(
                    format!("region at (c, d) = ({c}, {d})"),
                    label.to_string() == expected,
                    format!("{label}, expected {expected}"),
                ));
            }
        }
        Figure::Seven | Figure::Eight => {
            let (expected_region, pair) = if figure == Figure::Seven {
                ("III", ["E0", "E3"])
            } else {
                ("V", ["E0", "E2"])
            };
            let here = bifurcation::region_classify(&params, params.c, params.d)?;
            ctx.check(Check::new(
                format!("region at (c, d) = ({}, {})", params.c, params.d),
                here.label.to_string() == expected_region,
                format!("{}, expected {expected_region}", here.label),
            ));
            ctx.put("region_at_params", &here)?;
            basins_cmd(ctx, &params, "basins")?;
            let counts = ctx.results["basins"]["counts"].clone();
            for kind in pair {
                let found = counts[kind].as_u64().unwrap_or(0);
                ctx.check(Check::new(
                    format!("basin of {kind} sampled"),
                    found >= 1,
                    format!("{found} samples"),
                ));
            }
        }
    }
    Ok(())
}

