//! Closed-form equilibria of the original system and of both blow-up
//! charts, each with a trace of every inequality checked.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{self, ModelParams, SysState, System};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EquilibriumKind {
    E0,
    E1,
    E2,
    E3,
    E00,
    E10,
    E100,
    E01,
    E001,
}

impl EquilibriumKind {
    /// The chart whose coordinates `coords` are expressed in.
    pub fn system(self) -> System {
        use EquilibriumKind::*;
        match self {
            E0 | E1 | E2 | E3 => System::Original,
            E00 | E10 | E100 => System::Blowup,
            E01 | E001 => System::PartialBlowup,
        }
    }
}

impl fmt::Display for EquilibriumKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    #[serde(rename = "<")]
    Less,
    #[serde(rename = "<=")]
    LessEq,
    #[serde(rename = "!=")]
    NotEqual,
}

impl Relation {
    fn holds(self, lhs: f64, rhs: f64) -> bool {
        match self {
            Relation::Less => lhs < rhs,
            Relation::LessEq => lhs <= rhs,
            Relation::NotEqual => lhs != rhs,
        }
    }

    fn symbol(self) -> &'static str {
        match self {
            Relation::Less => "<",
            Relation::LessEq => "<=",
            Relation::NotEqual => "!=",
        }
    }
}

/// One evaluated inequality `lhs relation rhs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionCheck {
    pub id: String,
    pub lhs: f64,
    pub relation: Relation,
    pub rhs: f64,
    pub passed: bool,
}

impl ConditionCheck {
    pub fn new(id: impl Into<String>, lhs: f64, relation: Relation, rhs: f64) -> Self {
        Self {
            id: id.into(),
            lhs,
            relation,
            rhs,
            passed: relation.holds(lhs, rhs),
        }
    }

    pub fn lt(id: impl Into<String>, lhs: f64, rhs: f64) -> Self {
        Self::new(id, lhs, Relation::Less, rhs)
    }
}

impl fmt::Display for ConditionCheck {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{}] {}: {:.6} {} {:.6}",
            if self.passed { "ok" } else { "FAIL" },
            self.id,
            self.lhs,
            self.relation.symbol(),
            self.rhs
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumReport {
    pub kind: EquilibriumKind,
    pub coords: [f64; 3],
    pub exists: bool,
    /// Which alternative existence condition held (e.g. `"12b"`).
    pub via: Option<String>,
    pub condition_trace: Vec<ConditionCheck>,
}

impl EquilibriumReport {
    fn always(kind: EquilibriumKind, coords: [f64; 3]) -> Self {
        Self {
            kind,
            coords,
            exists: true,
            via: None,
            condition_trace: Vec::new(),
        }
    }

    pub fn state(&self) -> SysState {
        SysState::from_array(self.coords)
    }

    /// Human-readable explanation of the verdict.
    pub fn explain(&self) -> String {
        let mut out = format!(
            "{} at ({:.6}, {:.6}, {:.6}): {}",
            self.kind,
            self.coords[0],
            self.coords[1],
            self.coords[2],
            if self.exists { "exists" } else { "does not exist" }
        );
        if let Some(via) = &self.via {
            out.push_str(&format!(" (via {via})"));
        }
        for check in &self.condition_trace {
            out.push_str(&format!("\n    {check}"));
        }
        out
    }
}

/// Evaluates a chain `0 < first < second < third` as separate checks.
fn chain(prefix: &str, names: [&str; 3], values: [f64; 3]) -> (bool, Vec<ConditionCheck>) {
    let checks = vec![
        ConditionCheck::lt(format!("{prefix}: 0 < {}", names[0]), 0.0, values[0]),
        ConditionCheck::lt(
            format!("{prefix}: {} < {}", names[0], names[1]),
            values[0],
            values[1],
        ),
        ConditionCheck::lt(
            format!("{prefix}: {} < {}", names[1], names[2]),
            values[1],
            values[2],
        ),
    ];
    (checks.iter().all(|c| c.passed), checks)
}

/// Closed-form ratio with a degenerate-denominator check.
fn ratio_or_degenerate(
    id: &str,
    num: f64,
    den: f64,
    trace: &mut Vec<ConditionCheck>,
) -> Option<f64> {
    let check = ConditionCheck::new(format!("{id}.denominator"), den, Relation::NotEqual, 0.0);
    let ok = check.passed;
    if !ok {
        trace.push(check);
        return None;
    }
    Some(num / den)
}

pub fn effort_free(params: &ModelParams) -> EquilibriumReport {
    let &ModelParams { a, e, d, .. } = params;
    let x1 = 1.0 - a * (e - d) / e;
    let y1 = (e - d) * x1 / d;
    let upper = if a > 1.0 {
        a * d / (a - 1.0)
    } else {
        f64::INFINITY
    };
    let trace = vec![
        ConditionCheck::lt("7: d < e", d, e),
        ConditionCheck::new("7.i: a <= 1", a, Relation::LessEq, 1.0),
        ConditionCheck::lt("7.ii: e < ad/(a-1)", e, upper),
    ];
    let predator_viable = trace[0].passed;
    let via = if predator_viable && trace[1].passed {
        Some("7.i")
    } else if predator_viable && !trace[1].passed && trace[2].passed {
        Some("7.ii")
    } else {
        None
    };
    EquilibriumReport {
        kind: EquilibriumKind::E2,
        coords: [x1, y1, 0.0],
        exists: via.is_some(),
        via: via.map(str::to_owned),
        condition_trace: trace,
    }
}

pub fn boundary_equilibria(params: &ModelParams) -> Vec<EquilibriumReport> {
    vec![
        EquilibriumReport::always(EquilibriumKind::E0, [0.0; 3]),
        EquilibriumReport::always(EquilibriumKind::E1, [1.0, 0.0, 0.0]),
        effort_free(params),
    ]
}

/// `(x*, y*, E*)` from the closed form, whether or not it is admissible.
pub fn interior_coordinates(params: &ModelParams) -> SysState {
    let &ModelParams {
        a, e, d, m1, p, c, ..
    } = params;
    let rent = params.rent();
    let x = 1.0 - a + a * d / e + a * rent / (e * p * m1);
    let y = x * (1.0 - x) / (a + x - 1.0);
    let effort = rent * y / (c * m1);
    SysState::new(x, y, effort)
}

pub fn interior_equilibrium(params: &ModelParams) -> EquilibriumReport {
    let &ModelParams { a, e, d, m1, p, .. } = params;
    let s = interior_coordinates(params);
    let rent = params.rent();
    let trace = vec![
        ConditionCheck::lt("9: 0 < pqm - cm2", 0.0, rent),
        ConditionCheck::lt("9: pqm - cm2 < pm1(e - d)", rent, p * m1 * (e - d)),
        ConditionCheck::lt("x* > 0", 0.0, s.x),
        ConditionCheck::lt("x* < 1", s.x, 1.0),
        ConditionCheck::lt("a + x* - 1 > 0", 0.0, a + s.x - 1.0),
    ];
    let exists = trace.iter().all(|c| c.passed);
    EquilibriumReport {
        kind: EquilibriumKind::E3,
        coords: s.to_array(),
        exists,
        via: None,
        condition_trace: trace,
    }
}

pub fn blowup_equilibria(params: &ModelParams) -> Vec<EquilibriumReport> {
    let big_a = params.coef_a();
    let big_b = params.coef_b();
    let cap = params.harvest_cap();
    let gap = params.cost_gap();
    let effort_cap = params.effort_cap();

    // E10 = (x̄, 0, 0)
    let mut trace = vec![
        ConditionCheck::lt("11a: A < mq/m1", big_a, cap),
        ConditionCheck::lt("11a: mq/m1 < B", cap, big_b),
        ConditionCheck::lt("11b: B < mq/m1", big_b, cap),
        ConditionCheck::lt("11b: mq/m1 < A", cap, big_a),
    ];
    let via = if trace[0].passed && trace[1].passed {
        Some("11a")
    } else if trace[2].passed && trace[3].passed {
        Some("11b")
    } else {
        None
    };
    let ratio = ratio_or_degenerate("E10", big_a - cap, cap - big_b, &mut trace);
    let e10 = EquilibriumReport {
        kind: EquilibriumKind::E10,
        coords: [ratio.unwrap_or(f64::NAN), 0.0, 0.0],
        exists: via.is_some() && ratio.is_some(),
        via: via.filter(|_| ratio.is_some()).map(str::to_owned),
        condition_trace: trace,
    };

    // E100 = (0, 0, Ē)
    let (ok_a, mut trace) = chain(
        "12a",
        ["rho pmq/m2", "rho c - d", "mq/m1"],
        [effort_cap, gap, cap],
    );
    let (ok_b, trace_b) = chain(
        "12b",
        ["mq/m1", "rho c - d", "rho pmq/m2"],
        [cap, gap, effort_cap],
    );
    trace.extend(trace_b);
    let via = match (ok_a, ok_b) {
        (true, _) => Some("12a"),
        (false, true) => Some("12b"),
        _ => None,
    };
    let m1 = params.m1;
    let mq = params.m * params.q;
    let rho_pmq = params.rho * params.p * mq;
    let ebar = ratio_or_degenerate(
        "E100",
        m1 * gap - mq,
        rho_pmq - params.m2 * gap,
        &mut trace,
    );
    let e100 = EquilibriumReport {
        kind: EquilibriumKind::E100,
        coords: [0.0, 0.0, ebar.unwrap_or(f64::NAN)],
        exists: via.is_some() && ebar.is_some(),
        via: via.filter(|_| ebar.is_some()).map(str::to_owned),
        condition_trace: trace,
    };

    vec![
        EquilibriumReport::always(EquilibriumKind::E00, [0.0; 3]),
        e10,
        e100,
    ]
}

pub fn partial_blowup_equilibria(params: &ModelParams) -> Vec<EquilibriumReport> {
    let cap = params.harvest_cap();
    let effort_cap = params.effort_cap();
    let gap = params.e + params.cost_gap();
    let (ok_a, mut trace) = chain(
        "17a",
        ["mq/m1", "e + rho c - d", "rho pmq/m2"],
        [cap, gap, effort_cap],
    );
    let (ok_b, trace_b) = chain(
        "17b",
        ["rho pmq/m2", "e + rho c - d", "mq/m1"],
        [effort_cap, gap, cap],
    );
    trace.extend(trace_b);
    let via = match (ok_a, ok_b) {
        (true, _) => Some("17a"),
        (false, true) => Some("17b"),
        _ => None,
    };
    let mq = params.m * params.q;
    let w = ratio_or_degenerate(
        "E001",
        gap * params.m1 - mq,
        params.rho * params.p * mq - params.m2 * gap,
        &mut trace,
    );
    let e001 = EquilibriumReport {
        kind: EquilibriumKind::E001,
        coords: [1.0, 0.0, w.unwrap_or(f64::NAN)],
        exists: via.is_some() && w.is_some(),
        via: via.filter(|_| w.is_some()).map(str::to_owned),
        condition_trace: trace,
    };
    vec![
        EquilibriumReport::always(EquilibriumKind::E01, [1.0, 0.0, 0.0]),
        e001,
    ]
}

/// Every equilibrium of every chart, original ones first.
pub fn all_equilibria(params: &ModelParams) -> Vec<EquilibriumReport> {
    let mut out = boundary_equilibria(params);
    out.push(interior_equilibrium(params));
    out.extend(blowup_equilibria(params));
    out.extend(partial_blowup_equilibria(params));
    out
}

/// Max-norm of the appropriate field at the report's coordinates. The origin
/// is checked through its regular representative in the blow-up chart.
pub fn verify_equilibrium(params: &ModelParams, report: &EquilibriumReport) -> Result<f64> {
    if !report.exists {
        return Err(Error::MissingEquilibrium(report.kind));
    }
    let (system, coords) = match report.kind {
        EquilibriumKind::E0 => (System::Blowup, [0.0; 3]),
        kind => (kind.system(), report.coords),
    };
    let f = model::field(params, system, coords)?;
    Ok(f.iter().fold(0.0_f64, |acc, v| acc.max(v.abs())))
}

/// Open interval of `m` on which E3 exists, all other parameters fixed.
///
/// Every existence condition is affine in `m` with positive slope, so the
/// admissible set is a single interval intersected with `[0, 1]`.
pub fn coexistence_interval(params: &ModelParams) -> Option<(f64, f64)> {
    let &ModelParams {
        a, e, d, q, m1, m2, p, c, ..
    } = params;
    if e <= d {
        return None;
    }
    let pq = p * q;
    // rent(m) = pq m - c m2; x*(m) = base + a rent / (e p m1)
    let base = 1.0 - a + a * d / e;
    let m_for_rent = |rent: f64| (rent + c * m2) / pq;
    let m_for_x = |x: f64| m_for_rent((x - base) * e * p * m1 / a);
    let lo = m_for_rent(0.0).max(m_for_x(0.0)).max(m_for_x(1.0 - a)).max(0.0);
    let hi = m_for_rent(p * m1 * (e - d)).min(1.0);
    (lo < hi).then_some((lo, hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets::Figure;

    fn find(list: &[EquilibriumReport], kind: EquilibriumKind) -> &EquilibriumReport {
        list.iter().find(|r| r.kind == kind).unwrap()
    }

    #[test]
    fn figure_four_interior() {
        let p = Figure::Four.params();
        let r = interior_equilibrium(&p);
        assert!(r.exists);
        let expected = [0.44, 0.385, 0.1925];
        for (got, want) in r.coords.iter().zip(expected) {
            assert!((got - want).abs() < 1e-12, "{got} vs {want}");
        }
        assert!(verify_equilibrium(&p, &r).unwrap() < 1e-12);
    }

    #[test]
    fn figure_eight_has_no_interior_but_effort_free() {
        let p = Figure::Eight.params();
        let r = interior_equilibrium(&p);
        assert!(!r.exists);
        let first = &r.condition_trace[0];
        assert!(!first.passed);
        assert!((first.rhs - (-0.04)).abs() < 1e-12);

        let e2 = effort_free(&p);
        assert!(e2.exists);
        assert_eq!(e2.via.as_deref(), Some("7.ii"));
        assert!((e2.coords[0] - 0.3).abs() < 1e-12 && (e2.coords[1] - 0.3).abs() < 1e-12);
        assert!(verify_equilibrium(&p, &e2).unwrap() < 1e-12);
    }

    #[test]
    fn figure_one_has_no_effort_free_state() {
        let e2 = effort_free(&Figure::One.params());
        assert!(!e2.exists);
        let upper = e2.condition_trace.iter().find(|c| c.id.contains("7.ii")).unwrap();
        assert!((upper.rhs - 0.14).abs() < 1e-12 && !upper.passed);
    }

    #[test]
    fn origin_and_prey_axis_always_exist() {
        for fig in Figure::ALL {
            let p = fig.params();
            let b = boundary_equilibria(&p);
            assert!(find(&b, EquilibriumKind::E0).exists);
            assert!(find(&b, EquilibriumKind::E1).exists);
            assert_eq!(verify_equilibrium(&p, find(&b, EquilibriumKind::E0)).unwrap(), 0.0);
            assert_eq!(verify_equilibrium(&p, find(&b, EquilibriumKind::E1)).unwrap(), 0.0);
            let bl = blowup_equilibria(&p);
            assert_eq!(verify_equilibrium(&p, find(&bl, EquilibriumKind::E00)).unwrap(), 0.0);
            let pb = partial_blowup_equilibria(&p);
            assert_eq!(verify_equilibrium(&p, find(&pb, EquilibriumKind::E01)).unwrap(), 0.0);
        }
    }

    #[test]
    fn figure_seven_blowup_states() {
        let p = Figure::Seven.params();
        let bl = blowup_equilibria(&p);
        let e100 = find(&bl, EquilibriumKind::E100);
        assert!(e100.exists);
        assert_eq!(e100.via.as_deref(), Some("12b"));
        assert!((e100.coords[2] - 1.228 / 0.272).abs() < 1e-12);
        assert!((e100.coords[2] - 4.5147).abs() < 1e-4);
        assert!(verify_equilibrium(&p, e100).unwrap() < 1e-10);
        assert!(!find(&bl, EquilibriumKind::E10).exists);
    }

    #[test]
    fn figure_two_partial_chart() {
        let p = Figure::Two.params();
        let pb = partial_blowup_equilibria(&p);
        let e001 = find(&pb, EquilibriumKind::E001);
        assert!(!e001.exists);
        let gap = e001
            .condition_trace
            .iter()
            .find(|c| c.id == "17a: mq/m1 < e + rho c - d")
            .unwrap();
        assert!((gap.lhs - 1.2).abs() < 1e-12 && (gap.rhs - 1.13).abs() < 1e-12);
    }

    #[test]
    fn synthetic_17a_state_is_a_fixed_point() {
        // mq/m1 = 0.3 < e + rho c - d = 1.0 < rho pmq/m2 = 3.0
        let p = ModelParams {
            a: 1.0,
            e: 0.5,
            d: 0.1,
            q: 0.6,
            m: 0.5,
            m1: 1.0,
            m2: 0.3,
            p: 3.0,
            c: 0.6,
            rho: 1.0,
            delta: 0.0,
        };
        let pb = partial_blowup_equilibria(&p);
        let e001 = find(&pb, EquilibriumKind::E001);
        assert_eq!(e001.via.as_deref(), Some("17a"));
        assert!(e001.coords[2] > 0.0);
        assert!(verify_equilibrium(&p, e001).unwrap() < 1e-10);
    }

    #[test]
    fn degenerate_denominator_is_reported() {
        // mq/m1 == B makes the E10 denominator vanish exactly
        let mut p = Figure::One.params();
        p.e = 2.25;
        p.d = 0.25;
        p.q = 0.5;
        p.m = 0.5;
        p.m1 = 0.25; // mq/m1 = 1 = e - d - 1, all exact in binary
        let bl = blowup_equilibria(&p);
        let e10 = find(&bl, EquilibriumKind::E10);
        assert!(!e10.exists);
        assert!(e10
            .condition_trace
            .iter()
            .any(|c| c.id == "E10.denominator" && !c.passed));
    }

    #[test]
    fn perturbed_coordinates_leave_a_residual() {
        let p = Figure::Four.params();
        let mut r = interior_equilibrium(&p);
        r.coords[0] += 0.01;
        assert!(verify_equilibrium(&p, &r).unwrap() > 1e-4);
    }

    #[test]
    fn coexistence_interval_for_figure_four() {
        let (lo, hi) = coexistence_interval(&Figure::Four.params()).unwrap();
        // x* = 3m - 1.06 on this family
        assert!((lo - 1.06 / 3.0).abs() < 1e-12, "{lo}");
        assert!((hi - 2.06 / 3.0).abs() < 1e-12, "{hi}");
        let p = Figure::Four.params();
        for m in [lo + 1e-9, 0.5, hi - 1e-9] {
            assert!(interior_equilibrium(&p.with_m(m)).exists, "m = {m}");
        }
        for m in [lo - 1e-9, hi + 1e-9] {
            assert!(!interior_equilibrium(&p.with_m(m)).exists, "m = {m}");
        }
    }
}
