//! Local stability of every equilibrium. The singular origin and the prey
//! axis are classified through the regular states of the blow-up charts.

mod eigen;
mod lyapunov;

pub use eigen::{characteristic_cubic, cubic_roots, eigenvalues_3x3, routh_hurwitz_cubic, RouthHurwitz};
pub use lyapunov::{
    lyapunov_region_check, lyapunov_weights, persistence_check, persistence_threshold,
    LyapunovCheck, PersistenceReport,
};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::equilibria::{
    blowup_equilibria, effort_free, interior_equilibrium, partial_blowup_equilibria,
    EquilibriumKind, EquilibriumReport,
};
use crate::error::{Error, Result};
use crate::model::{self, ModelParams};

/// Real parts within this of zero count as marginal.
pub const EIGEN_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Stable,
    Unstable,
    Marginal,
}

impl Verdict {
    /// An unstable direction dominates; otherwise a root on the axis makes
    /// the verdict marginal.
    pub fn from_eigenvalues(eigenvalues: &[Complex64]) -> Self {
        if eigenvalues.iter().any(|z| z.re > EIGEN_TOL) {
            Verdict::Unstable
        } else if eigenvalues.iter().any(|z| z.re.abs() <= EIGEN_TOL) {
            Verdict::Marginal
        } else {
            Verdict::Stable
        }
    }

    pub fn is_stable(self) -> bool {
        self == Verdict::Stable
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RhTerms {
    Cubic { s11: f64, s12: f64, s13: f64 },
    /// Transverse eigenvalue plus the quadratic `mu^2 + s1 mu + s2`.
    Quadratic { lambda1: f64, s1: f64, s2: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Condition {
    pub id: String,
    pub passed: bool,
}

impl Condition {
    fn new(id: impl Into<String>, passed: bool) -> Self {
        Self {
            id: id.into(),
            passed,
        }
    }
}

/// Verdict for one regular state of a blow-up chart.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChartVerdict {
    pub kind: EquilibriumKind,
    pub coords: [f64; 3],
    pub eigenvalues: Vec<Complex64>,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityVerdict {
    pub kind: EquilibriumKind,
    pub eigenvalues: Vec<Complex64>,
    pub rh_terms: Option<RhTerms>,
    pub verdict: Verdict,
    pub governing_conditions: Vec<Condition>,
    /// The chart state through which the equilibrium attracts, if any.
    pub route: Option<EquilibriumKind>,
    /// Every existing chart state examined (origin and prey axis only).
    pub chart_states: Vec<ChartVerdict>,
    pub warnings: Vec<String>,
}

fn chart_verdict(params: &ModelParams, report: &EquilibriumReport) -> Result<ChartVerdict> {
    let jac = model::jacobian(params, report.coords, report.kind.system())?;
    let eigenvalues = eigenvalues_3x3(&jac).to_vec();
    Ok(ChartVerdict {
        kind: report.kind,
        coords: report.coords,
        verdict: Verdict::from_eigenvalues(&eigenvalues),
        eigenvalues,
    })
}

/// Shared logic for the two equilibria classified through chart states.
fn classify_through_charts(
    params: &ModelParams,
    kind: EquilibriumKind,
    chart: Vec<EquilibriumReport>,
    governing_conditions: Vec<Condition>,
) -> Result<StabilityVerdict> {
    let mut states = Vec::new();
    for report in chart.iter().filter(|r| r.exists) {
        states.push(chart_verdict(params, report)?);
    }
    let attracting = states.iter().find(|s| s.verdict.is_stable());
    let verdict = match attracting {
        Some(_) => Verdict::Stable,
        None if states.iter().any(|s| s.verdict == Verdict::Marginal) => Verdict::Marginal,
        None => Verdict::Unstable,
    };
    let route = attracting.map(|s| s.kind);
    let eigenvalues = attracting.unwrap_or(&states[0]).eigenvalues.clone();

    let mut warnings = Vec::new();
    let by_conditions = governing_conditions.iter().any(|c| c.passed);
    if verdict != Verdict::Marginal && by_conditions != verdict.is_stable() {
        warnings.push(format!(
            "closed-form stability conditions ({}) disagree with the chart eigenvalues ({:?})",
            if by_conditions { "stable" } else { "unstable" },
            verdict
        ));
    }
    Ok(StabilityVerdict {
        kind,
        eigenvalues,
        rh_terms: None,
        verdict,
        governing_conditions,
        route,
        chart_states: states,
        warnings,
    })
}

pub fn classify_origin(params: &ModelParams) -> Result<StabilityVerdict> {
    let chart = blowup_equilibria(params);
    let big_a = params.coef_a();
    let cap = params.harvest_cap();
    let gap = params.cost_gap();
    let mut conditions = vec![Condition::new(
        "13: rho c - d < mq/m1 < A",
        gap < cap && cap < big_a,
    )];

    let e10 = &chart[1];
    let ubar = e10.coords[0];
    let e = params.e;
    let eq14 = e < ((1.0 + ubar) / ubar) * (params.d + cap - params.rho * params.c);
    conditions.push(Condition::new(
        "11a + 14: e < (1 + u)/u (d + mq/m1 - rho c)",
        e10.exists && e10.via.as_deref() == Some("11a") && eq14,
    ));

    let e100 = &chart[2];
    let ebar = e100.coords[2];
    conditions.push(Condition::new(
        "12b + 15: mq/(m1 + m2 E) < A",
        e100.exists
            && e100.via.as_deref() == Some("12b")
            && params.m * params.q / (params.m1 + params.m2 * ebar) < big_a,
    ));
    classify_through_charts(params, EquilibriumKind::E0, chart, conditions)
}

pub fn classify_e1(params: &ModelParams) -> Result<StabilityVerdict> {
    let chart = partial_blowup_equilibria(params);
    let cap = params.harvest_cap();
    let e = params.e;
    let mut conditions = vec![Condition::new(
        "19: e + rho c - d < mq/m1",
        e + params.cost_gap() < cap,
    )];
    let e001 = &chart[1];
    let w = e001.coords[2];
    conditions.push(Condition::new(
        "17a + 20: e < d + mq/(m1 + m2 w)",
        e001.exists
            && e001.via.as_deref() == Some("17a")
            && e < params.d + params.m * params.q / (params.m1 + params.m2 * w),
    ));
    classify_through_charts(params, EquilibriumKind::E1, chart, conditions)
}

/// Eigenvalue `rho (pqm/m2 - c)` of E2 in the effort direction. Defined
/// whether or not E2 itself lies in the orthant.
pub fn effort_free_transverse_rate(params: &ModelParams) -> f64 {
    params.rho * (params.p * params.q * params.m / params.m2 - params.c)
}

pub fn classify_e2(params: &ModelParams) -> Result<StabilityVerdict> {
    let report = effort_free(params);
    if !report.exists {
        return Err(Error::MissingEquilibrium(EquilibriumKind::E2));
    }
    let &ModelParams {
        a, e, d, q, m, m2, p, c, ..
    } = params;
    let [x1, y1, _] = report.coords;
    let s2_den = (x1 + y1).powi(2);
    let lambda1 = effort_free_transverse_rate(params);
    let s1 = x1 - (a - e) * x1 * y1 / s2_den;
    let s2 = e * x1 * x1 * y1 / s2_den;

    let half = -s1 / 2.0;
    let disc = half * half - s2;
    let pair = if disc >= 0.0 {
        [Complex64::new(half + disc.sqrt(), 0.0), Complex64::new(half - disc.sqrt(), 0.0)]
    } else {
        [Complex64::new(half, (-disc).sqrt()), Complex64::new(half, -(-disc).sqrt())]
    };
    let mut eigenvalues = vec![Complex64::new(lambda1, 0.0), pair[0], pair[1]];
    eigenvalues.sort_by(|l, r| r.re.total_cmp(&l.re).then(r.im.total_cmp(&l.im)));
    let verdict = Verdict::from_eigenvalues(&eigenvalues);

    let printed_bound = e / (e + d) * (e / (e - d) - d);
    let printed_first = p * q * m - c * m2 < 0.0;
    let printed_second = a < printed_bound;
    let conditions = vec![
        Condition::new("lambda1 = rho (pqm/m2 - c) < 0", lambda1 < 0.0),
        Condition::new("s1 > 0", s1 > 0.0),
        Condition::new("s2 > 0", s2 > 0.0),
        Condition::new("21: pqm - cm2 < 0", printed_first),
        Condition::new("21: a < e/(e+d) (e/(e-d) - d)", printed_second),
    ];
    let mut warnings = Vec::new();
    let printed = printed_first && printed_second;
    if verdict != Verdict::Marginal && printed != verdict.is_stable() {
        warnings.push(format!(
            "closed-form test gives {} (a = {a} vs bound {printed_bound:.6}) but the direct eigenvalue test gives {:?}",
            if printed { "stable" } else { "unstable" },
            verdict
        ));
    }
    Ok(StabilityVerdict {
        kind: EquilibriumKind::E2,
        eigenvalues,
        rh_terms: Some(RhTerms::Quadratic { lambda1, s1, s2 }),
        verdict,
        governing_conditions: conditions,
        route: None,
        chart_states: Vec::new(),
        warnings,
    })
}

/// `(s11, s12, s13)` at E3 from the reduced closed forms in `x*`, `a1` and `b1`.
pub fn symbolic_rh_terms(params: &ModelParams) -> Result<[f64; 3]> {
    let report = interior_equilibrium(params);
    if !report.exists {
        return Err(Error::MissingEquilibrium(EquilibriumKind::E3));
    }
    let &ModelParams {
        a, e, m, m1, m2, p, rho, ..
    } = params;
    let (a1, b1, x) = hopf_factors(params, &report);
    let k = rho * p * m1 - m2;
    let s11 = x + a1 * (e - a) / (a * e) + m * b1 * k / (rho * p * m1 * m2);
    let s12 = a1 * x / a
        + m * a1 * b1 * (e - a) / (e * a * m2)
        + m * b1 * x * k / (rho * p * m1 * m2)
        + m * a1 * b1 / (rho * p * m1 * e);
    let s13 = m * a1 * b1 * x / (a * m2);
    Ok([s11, s12, s13])
}

/// `(a1, b1, x*)` with `a1 = a e x y / (x+y)^2` and
/// `b1 = rho p q m1 m2 y E / (m1 E + m2 y)^2` at E3.
pub fn hopf_factors(params: &ModelParams, report: &EquilibriumReport) -> (f64, f64, f64) {
    let [x, y, effort] = report.coords;
    let &ModelParams {
        a, e, q, m1, m2, p, rho, ..
    } = params;
    let a1 = a * e * x * y / (x + y).powi(2);
    let b1 = rho * p * q * m1 * m2 * y * effort / (m1 * effort + m2 * y).powi(2);
    (a1, b1, x)
}

pub fn classify_e3(params: &ModelParams) -> Result<StabilityVerdict> {
    let report = interior_equilibrium(params);
    if !report.exists {
        return Err(Error::MissingEquilibrium(EquilibriumKind::E3));
    }
    let jac = model::jacobian_original(params, &report.state())?;
    let [s11, s12, s13] = characteristic_cubic(&jac);
    let rh = routh_hurwitz_cubic(s11, s12, s13);
    let eigenvalues = cubic_roots([s11, s12, s13]).to_vec();
    let verdict = Verdict::from_eigenvalues(&eigenvalues);
    let conditions = vec![
        Condition::new("RH: s11 > 0", s11 > 0.0),
        Condition::new("RH: s12 > 0", s12 > 0.0),
        Condition::new("RH: s13 > 0", s13 > 0.0),
        Condition::new("RH: s11 s12 - s13 > 0", rh.hurwitz > 0.0),
        Condition::new("23a: a < e", params.a < params.e),
        Condition::new(
            "23a: m2 < rho p m1",
            params.m2 < params.rho * params.p * params.m1,
        ),
        Condition::new("23b: s11 s12 - s13 > 0", rh.hurwitz > 0.0),
    ];
    let mut warnings = Vec::new();
    if verdict != Verdict::Marginal && rh.stable != verdict.is_stable() {
        warnings.push(format!(
            "Routh-Hurwitz ({}) disagrees with eigenvalues ({verdict:?})",
            if rh.stable { "stable" } else { "unstable" }
        ));
    }
    Ok(StabilityVerdict {
        kind: EquilibriumKind::E3,
        eigenvalues,
        rh_terms: Some(RhTerms::Cubic { s11, s12, s13 }),
        verdict,
        governing_conditions: conditions,
        route: None,
        chart_states: Vec::new(),
        warnings,
    })
}

/// Classifies each original equilibrium that exists.
pub fn classify_all(params: &ModelParams) -> Result<Vec<StabilityVerdict>> {
    let mut out = vec![classify_origin(params)?, classify_e1(params)?];
    if effort_free(params).exists {
        out.push(classify_e2(params)?);
    }
    if interior_equilibrium(params).exists {
        out.push(classify_e3(params)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets::Figure;

    fn passed(v: &StabilityVerdict, prefix: &str) -> bool {
        v.governing_conditions
            .iter()
            .find(|c| c.id.starts_with(prefix))
            .unwrap()
            .passed
    }

    #[test]
    fn origin_figure_one_via_corner_state() {
        let v = classify_origin(&Figure::One.params()).unwrap();
        assert_eq!(v.verdict, Verdict::Stable);
        assert_eq!(v.route, Some(EquilibriumKind::E00));
        assert!(passed(&v, "13"));
        let expected = [-0.18, -0.22, -0.82];
        for (z, want) in v.eigenvalues.iter().zip(expected) {
            assert!((z.re - want).abs() < 1e-12, "{z} vs {want}");
        }
        assert!(v.warnings.is_empty());
    }

    #[test]
    fn origin_figure_seven_via_effort_axis() {
        let v = classify_origin(&Figure::Seven.params()).unwrap();
        assert_eq!(v.verdict, Verdict::Stable);
        assert_eq!(v.route, Some(EquilibriumKind::E100));
        assert!(passed(&v, "12b + 15"));
        let p = Figure::Seven.params();
        let ebar = 1.228 / 0.272;
        assert!((p.m * p.q / (p.m1 + p.m2 * ebar) - 0.136).abs() < 1e-3);
    }

    #[test]
    fn origin_figure_two_unstable() {
        let v = classify_origin(&Figure::Two.params()).unwrap();
        assert_eq!(v.verdict, Verdict::Unstable);
        assert_eq!(v.route, None);
    }

    #[test]
    fn prey_axis_cases() {
        let v = classify_e1(&Figure::Two.params()).unwrap();
        assert_eq!(v.verdict, Verdict::Stable);
        assert_eq!(v.route, Some(EquilibriumKind::E01));
        for fig in [Figure::One, Figure::Four] {
            let v = classify_e1(&fig.params()).unwrap();
            assert_eq!(v.verdict, Verdict::Unstable, "{fig:?}");
        }
    }

    #[test]
    fn effort_free_figure_eight_stable_despite_printed_bound() {
        let v = classify_e2(&Figure::Eight.params()).unwrap();
        assert_eq!(v.verdict, Verdict::Stable);
        match v.rh_terms {
            Some(RhTerms::Quadratic { lambda1, s1, s2 }) => {
                assert!(lambda1 < 0.0);
                assert!((s1 - 0.1).abs() < 1e-12);
                assert!((s2 - 0.045).abs() < 1e-12);
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(!passed(&v, "21: a <"));
        assert_eq!(v.warnings.len(), 1);
    }

    #[test]
    fn effort_free_eigenvalues_match_full_jacobian() {
        let p = Figure::Eight.params();
        let v = classify_e2(&p).unwrap();
        let jac = model::jacobian_original(&p, &effort_free(&p).state()).unwrap();
        for (l, r) in v.eigenvalues.iter().zip(eigenvalues_3x3(&jac)) {
            assert!((l - r).norm() < 1e-10, "{l} vs {r}");
        }
    }

    #[test]
    fn effort_free_unstable_when_interior_exists() {
        // E2 lies outside the orthant here; only the transverse rate is defined
        let p = Figure::Four.params();
        assert!(matches!(
            classify_e2(&p),
            Err(Error::MissingEquilibrium(EquilibriumKind::E2))
        ));
        assert!(effort_free_transverse_rate(&p) > 0.0);

        let mut p = Figure::Seven.params();
        p.c = 4.4;
        assert!(interior_equilibrium(&p).exists);
        let v = classify_e2(&p).unwrap();
        assert_eq!(v.verdict, Verdict::Unstable);
        assert!(!passed(&v, "lambda1"));
        assert!(matches!(
            classify_e2(&Figure::One.params()),
            Err(Error::MissingEquilibrium(EquilibriumKind::E2))
        ));
    }

    #[test]
    fn interior_stable_at_figure_four() {
        let v = classify_e3(&Figure::Four.params()).unwrap();
        assert_eq!(v.verdict, Verdict::Stable);
        assert!(v.eigenvalues.iter().all(|z| z.re < 0.0));
        assert!(v.warnings.is_empty());
    }

    #[test]
    fn interior_near_axis_at_figure_five() {
        let v = classify_e3(&Figure::Five.params()).unwrap();
        assert_ne!(v.verdict, Verdict::Stable);
        let pair = v.eigenvalues.iter().filter(|z| z.im != 0.0).count();
        assert_eq!(pair, 2);
        assert!(v.eigenvalues[0].re.abs() < 1e-2);
    }

    #[test]
    fn symbolic_terms_match_jacobian() {
        for fig in [Figure::Four, Figure::Five, Figure::Seven] {
            let p = fig.params();
            let sym = symbolic_rh_terms(&p).unwrap();
            let jac = model::jacobian_original(&p, &interior_equilibrium(&p).state()).unwrap();
            let num = characteristic_cubic(&jac);
            for (l, r) in sym.iter().zip(num) {
                assert!((l - r).abs() <= 1e-8 * r.abs().max(1e-12), "{fig:?}: {l} vs {r}");
            }
        }
    }
}
