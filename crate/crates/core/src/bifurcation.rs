//! Hopf detection in the harvesting fraction `m` and the two-parameter
//! (c, d) region map.

use std::collections::BTreeMap;
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::equilibria::{coexistence_interval, effort_free, interior_equilibrium};
use crate::error::{Error, Result};
use crate::model::{self, ModelParams};
use crate::stability::{
    characteristic_cubic, classify_e1, classify_e2, classify_origin, hopf_factors,
};

/// Bisection stops once `|Delta| < DELTA_TOL`.
pub const DELTA_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HopfMethod {
    AnalyticQuadratic,
    NumericScan,
}

/// A sign change of `Delta(m)` located by bisection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Crossing {
    pub m: f64,
    pub delta: f64,
    pub s11: f64,
    pub s12: f64,
    /// Central-difference `dDelta/dm` at the crossing.
    pub slope: f64,
    /// `s11 > 0` and `s12 > 0`, so the crossing is a complex pair.
    pub admissible: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HopfResult {
    pub m_star: Option<f64>,
    pub method: HopfMethod,
    pub delta_values: Vec<(f64, f64)>,
    /// `dDelta/dm` at `m_star`.
    pub transversality: Option<f64>,
    pub crossings: Vec<Crossing>,
    /// `(C1, C2, C3)` for the analytic quadratic.
    pub coefficients: Option<[f64; 3]>,
    /// The part of the requested bracket on which E3 exists.
    pub bracket: (f64, f64),
    pub reason: Option<String>,
}

/// `(s11, s12, s13)` from the Jacobian at E3(m).
pub fn rh_terms_at(params: &ModelParams, m: f64) -> Result<[f64; 3]> {
    let p = params.with_m(m);
    let report = interior_equilibrium(&p);
    if !report.exists {
        return Err(Error::MissingEquilibrium(report.kind));
    }
    let jac = model::jacobian_original(&p, &report.state())?;
    Ok(characteristic_cubic(&jac))
}

/// `Delta(m) = s11 s12 - s13` with E3 recomputed at `m`.
pub fn hurwitz_delta(params: &ModelParams, m: f64) -> Result<f64> {
    let [s11, s12, s13] = rh_terms_at(params, m)?;
    Ok(s11 * s12 - s13)
}

/// `(C1, C2, C3)` of `Delta(m) = C1 m^2 + C2 m + C3` with `a1`, `b1` and
/// `x*` frozen at their values for `params.m`.
pub fn quadratic_coefficients(params: &ModelParams) -> Result<[f64; 3]> {
    let report = interior_equilibrium(params);
    if !report.exists {
        return Err(Error::MissingEquilibrium(report.kind));
    }
    let &ModelParams {
        a, e, m1, m2, p, rho, ..
    } = params;
    let (a1, b1, x) = hopf_factors(params, &report);
    let k = rho * p * m1 - m2;
    let rpm = rho * p * m1;
    let c1 = -a1 * b1 * b1 * k * k / (rpm * rpm * m2 * m2 * e)
        + b1 * b1 * x * k * k / (rpm * rpm * m2 * m2)
        + a1 * b1 * b1 * k / (rpm * m2 * m2 * a);
    let c2 = 2.0 * a1 * b1 * x * (e - a) * k / (rpm * m2 * a * e)
        + b1 * x * x * k / (rpm * m2)
        + a1 * a1 * b1 * (e - a) / (rpm * a * e * e)
        + a1 * a1 * b1 * (e - a).powi(2) / (e * e * a * a * m2);
    let c3 = a1 * x * x / a + a1 * a1 * x * (e - a) / (e * a * a);
    Ok([c1, c2, c3])
}

pub fn hopf_m_star_analytic(params: &ModelParams, m_ref: f64) -> Result<HopfResult> {
    let at_ref = params.with_m(m_ref);
    let coefficients = quadratic_coefficients(&at_ref)?;
    let [c1, c2, c3] = coefficients;
    let mut reasons = Vec::new();
    if !(params.a < params.e) {
        reasons.push(format!("a < e fails ({} >= {})", params.a, params.e));
    }
    if !(params.m2 < params.rho * params.p * params.m1) {
        reasons.push("m2 < rho p m1 fails".to_owned());
    }
    if c1 >= 0.0 {
        reasons.push(format!("C1 = {c1:.6e} is not negative"));
    }
    let disc = c2 * c2 - 4.0 * c1 * c3;
    if disc < 0.0 {
        reasons.push(format!("discriminant C2^2 - 4 C1 C3 = {disc:.6e} < 0"));
    }
    let m_star = reasons
        .is_empty()
        .then(|| (-c2 - disc.sqrt()) / (2.0 * c1));
    Ok(HopfResult {
        m_star,
        method: HopfMethod::AnalyticQuadratic,
        delta_values: vec![(m_ref, c1 * m_ref * m_ref + c2 * m_ref + c3)],
        transversality: m_star.map(|m| 2.0 * c1 * m + c2),
        crossings: Vec::new(),
        coefficients: Some(coefficients),
        bracket: (m_ref, m_ref),
        reason: (!reasons.is_empty()).then(|| reasons.join("; ")),
    })
}

/// Intersection of `[lo, hi]` with the open E3 interval, pulled inward by a
/// relative `1e-9` where it touches an endpoint of that interval.
fn trim_to_coexistence(params: &ModelParams, lo: f64, hi: f64) -> Result<(f64, f64)> {
    let (e_lo, e_hi) = coexistence_interval(params).ok_or(Error::NoCoexistence { lo, hi })?;
    let nudge = 1e-9 * (e_hi - e_lo);
    let lo_t = if lo <= e_lo { e_lo + nudge } else { lo };
    let hi_t = if hi >= e_hi { e_hi - nudge } else { hi };
    if lo_t >= hi_t {
        return Err(Error::NoCoexistence { lo, hi });
    }
    Ok((lo_t, hi_t))
}

fn refine(params: &ModelParams, mut lo: f64, mut hi: f64, mut f_lo: f64) -> Result<(f64, f64)> {
    loop {
        let mid = 0.5 * (lo + hi);
        let f_mid = hurwitz_delta(params, mid)?;
        if f_mid.abs() < DELTA_TOL || mid <= lo || mid >= hi {
            return Ok((mid, f_mid));
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
}

pub fn hopf_scan(params: &ModelParams, m_lo: f64, m_hi: f64, steps: usize) -> Result<HopfResult> {
    if !(m_lo < m_hi && m_lo >= 0.0 && m_hi <= 1.0) || steps == 0 {
        return Err(Error::InvalidArgument(format!(
            "hopf_scan needs 0 <= m_lo < m_hi <= 1 and steps > 0, got ({m_lo}, {m_hi}, {steps})"
        )));
    }
    let (lo, hi) = trim_to_coexistence(params, m_lo, m_hi)?;
    let grid: Vec<f64> = (0..=steps)
        .map(|i| lo + (hi - lo) * i as f64 / steps as f64)
        .collect();
    let delta_values = grid
        .iter()
        .map(|&m| hurwitz_delta(params, m).map(|d| (m, d)))
        .collect::<Result<Vec<_>>>()?;

    let h = 1e-6 * (hi - lo);
    let mut crossings = Vec::new();
    for pair in delta_values.windows(2) {
        let ((m0, d0), (m1, d1)) = (pair[0], pair[1]);
        if d0 == 0.0 || d0.signum() == d1.signum() {
            continue;
        }
        let (m, delta) = refine(params, m0, m1, d0)?;
        let [s11, s12, _] = rh_terms_at(params, m)?;
        let left = (m - h).max(lo);
        let right = (m + h).min(hi);
        let slope =
            (hurwitz_delta(params, right)? - hurwitz_delta(params, left)?) / (right - left);
        crossings.push(Crossing {
            m,
            delta,
            s11,
            s12,
            slope,
            admissible: s11 > 0.0 && s12 > 0.0,
        });
    }
    let chosen = crossings
        .iter()
        .filter(|c| c.admissible && c.slope != 0.0)
        .max_by(|l, r| l.m.total_cmp(&r.m));
    let reason = match chosen {
        Some(_) => None,
        None if crossings.is_empty() => Some("Delta(m) does not change sign".to_owned()),
        None => Some("no crossing with s11 > 0, s12 > 0 and nonzero slope".to_owned()),
    };
    Ok(HopfResult {
        m_star: chosen.map(|c| c.m),
        method: HopfMethod::NumericScan,
        transversality: chosen.map(|c| c.slope),
        delta_values,
        crossings: crossings.clone(),
        coefficients: None,
        bracket: (lo, hi),
        reason,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Region {
    I,
    II,
    III,
    IV,
    V,
    VI,
    #[serde(rename = "none")]
    Unlabelled,
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Region::I => "I",
            Region::II => "II",
            Region::III => "III",
            Region::IV => "IV",
            Region::V => "V",
            Region::VI => "VI",
            Region::Unlabelled => "none",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionLabel {
    pub label: Region,
    pub predicates: BTreeMap<String, bool>,
}

pub fn region_classify(params: &ModelParams, c: f64, d: f64) -> Result<RegionLabel> {
    let p = params.with_cost_and_death(c, d);
    let e0 = classify_origin(&p)?.verdict.is_stable();
    let e1 = classify_e1(&p)?.verdict.is_stable();
    let e2_exists = effort_free(&p).exists;
    let e2 = e2_exists && classify_e2(&p)?.verdict.is_stable();
    let e3 = interior_equilibrium(&p).exists;

    let label = if e1 {
        Region::I
    } else if e0 && !e3 && !e2 {
        Region::II
    } else if e0 && e3 {
        Region::III
    } else if e3 {
        Region::IV
    } else if e0 && e2 {
        Region::V
    } else if e2 {
        Region::VI
    } else {
        Region::Unlabelled
    };
    let predicates = [
        ("E0_stable", e0),
        ("E1_stable", e1),
        ("E2_exists", e2_exists),
        ("E2_stable", e2),
        ("E3_exists", e3),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_owned(), v))
    .collect();
    Ok(RegionLabel { label, predicates })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionGrid {
    pub c_values: Vec<f64>,
    pub d_values: Vec<f64>,
    /// Row-major: `labels[j * c_values.len() + i]` is at `(c_values[i], d_values[j])`.
    pub labels: Vec<RegionLabel>,
}

impl RegionGrid {
    pub fn at(&self, i: usize, j: usize) -> &RegionLabel {
        &self.labels[j * self.c_values.len() + i]
    }

    /// `(c, d, label)` in storage order.
    pub fn cells(&self) -> impl Iterator<Item = (f64, f64, Region)> + '_ {
        let nx = self.c_values.len();
        self.labels
            .iter()
            .enumerate()
            .map(move |(k, l)| (self.c_values[k % nx], self.d_values[k / nx], l.label))
    }
}

fn linspace(range: (f64, f64), n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![range.0];
    }
    (0..n)
        .map(|i| range.0 + (range.1 - range.0) * i as f64 / (n - 1) as f64)
        .collect()
}

pub fn region_grid(
    params: &ModelParams,
    c_range: (f64, f64),
    d_range: (f64, f64),
    nx: usize,
    ny: usize,
) -> Result<RegionGrid> {
    let positive = c_range.0 > 0.0 && d_range.0 > 0.0 && c_range.1 >= c_range.0 && d_range.1 >= d_range.0;
    if !positive || nx == 0 || ny == 0 {
        return Err(Error::InvalidArgument(format!(
            "region grid needs positive ranges and resolutions, got c {c_range:?}, d {d_range:?}, {nx}x{ny}"
        )));
    }
    let c_values = linspace(c_range, nx);
    let d_values = linspace(d_range, ny);
    let labels = (0..nx * ny)
        .into_par_iter()
        .map(|k| region_classify(params, c_values[k % nx], d_values[k / nx]))
        .collect::<Result<Vec<_>>>()?;
    Ok(RegionGrid {
        c_values,
        d_values,
        labels,
    })
}

/// Overlay lines for the (c, d) plane. `L_i: d = rho c + k_i`,
/// `M_i: d = m2/(p m1) c + n_i`, `R_i: d = r_i`, `P1: c = p m q / m2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryLines {
    pub rho: f64,
    pub k: [f64; 4],
    pub m_slope: f64,
    pub n: [f64; 2],
    /// `r2` is `None` when its square root has a negative argument.
    pub r: [Option<f64>; 3],
    pub p1_c: f64,
}

pub fn boundary_lines(params: &ModelParams) -> BoundaryLines {
    let &ModelParams {
        a, e, q, m, m1, m2, p, rho, ..
    } = params;
    let mq = m * q;
    let r2_arg = e * e - 4.0 * e * e * (e + a) * (1.0 - a);
    BoundaryLines {
        rho,
        k: [e - mq / m1, -mq / m1, e - rho * p * mq / m2, -rho * p * mq / m2],
        m_slope: m2 / (p * m1),
        n: [
            (m1 * e - mq) / (p * m1),
            ((a - 1.0) * (rho * p * mq - m2) - p * mq) / (p * m1),
        ],
        r: [
            Some(e),
            (r2_arg >= 0.0).then(|| (e * e + r2_arg.sqrt()) / (2.0 * (e + a))),
            Some(e * (a - 1.0) / a),
        ],
        p1_c: p * mq / m2,
    }
}

impl BoundaryLines {
    /// `(name, description)` pairs in a fixed order.
    pub fn describe(&self) -> Vec<(String, String)> {
        let mut out = Vec::new();
        for (i, k) in self.k.iter().enumerate() {
            out.push((format!("L{}", i + 1), format!("d = {} c + {}", self.rho, k)));
        }
        for (i, n) in self.n.iter().enumerate() {
            out.push((format!("M{}", i + 1), format!("d = {} c + {}", self.m_slope, n)));
        }
        for (i, r) in self.r.iter().enumerate() {
            let text = r.map_or("undefined".to_owned(), |r| format!("d = {r}"));
            out.push((format!("R{}", i + 1), text));
        }
        out.push(("P1".to_owned(), format!("c = {}", self.p1_c)));
        out
    }
}
