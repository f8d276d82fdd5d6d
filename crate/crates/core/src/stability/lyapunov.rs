//! Pointwise check of the Lyapunov region around E3, and the persistence
//! conditions with their lower bounds.

use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use crate::equilibria::{interior_equilibrium, EquilibriumKind};
use crate::error::{Error, Result};
use crate::model::{self, ModelParams, SysState};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LyapunovCheck {
    /// `a y*/(x* + y*) < x + y`
    pub first: bool,
    /// `(m1 E + m2 y)/(x + y) > q m m2 E* (x* + y*) / (e x* (m1 E* + m2 y*))`,
    /// the direction under which the cross-term-free derivative is negative.
    pub second: bool,
    /// Same bound with the inequality reversed.
    pub second_reversed: bool,
    pub in_region: bool,
    pub in_region_reversed: bool,
    pub ratio: f64,
    pub ratio_bound: f64,
    pub dv_dt: f64,
}

/// Weights `(1, a x*/(e y*), a m2 x* / (rho e p m1 E*))` of the
/// log-Lyapunov function.
pub fn lyapunov_weights(params: &ModelParams, star: &SysState) -> [f64; 3] {
    let &ModelParams {
        a, e, m1, m2, p, rho, ..
    } = params;
    [
        1.0,
        a * star.x / (e * star.y),
        a * m2 * star.x / (rho * e * p * m1 * star.effort),
    ]
}

pub fn lyapunov_region_check(params: &ModelParams, s: &SysState) -> Result<LyapunovCheck> {
    let report = interior_equilibrium(params);
    if !report.exists {
        return Err(Error::MissingEquilibrium(EquilibriumKind::E3));
    }
    if !(s.x > 0.0 && s.y > 0.0 && s.effort > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "state must be strictly positive, got ({}, {}, {})",
            s.x, s.y, s.effort
        )));
    }
    let star = report.state();
    let &ModelParams { a, e, q, m, m1, m2, .. } = params;
    let star_sum = star.x + star.y;
    let star_sat = m1 * star.effort + m2 * star.y;

    let first = a * star.y / star_sum < s.x + s.y;
    let ratio = (m1 * s.effort + m2 * s.y) / (s.x + s.y);
    let ratio_bound = q * m * m2 * star.effort * star_sum / (e * star.x * star_sat);
    let second = ratio > ratio_bound;
    let second_reversed = ratio < ratio_bound;

    let weights = lyapunov_weights(params, &star);
    let f = model::vector_field(params, s)?;
    let state = s.to_array();
    let target = star.to_array();
    let dv_dt = (0..3)
        .map(|i| weights[i] * (state[i] - target[i]) / state[i] * f[i])
        .sum();

    Ok(LyapunovCheck {
        first,
        second,
        second_reversed,
        in_region: first && second,
        in_region_reversed: first && second_reversed,
        ratio,
        ratio_bound,
        dv_dt,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PersistenceReport {
    /// `e > d`
    pub predator_viable: bool,
    /// `p/c > m2/(q m)`, decided exactly as `p q m > c m2` on the binary
    /// values of the parameters.
    pub profitable: bool,
    pub threshold_m: f64,
    /// `e/d - 1`
    pub predator_bound: f64,
    /// `(p q m - c m2) ybar / (c m1)`
    pub effort_bound: f64,
    pub persistent: bool,
}

/// The harvesting fraction above which effort is profitable, rounded to the
/// nearest float; [`persistence_check`] does not compare against it.
pub fn persistence_threshold(params: &ModelParams) -> f64 {
    params.c * params.m2 / (params.p * params.q)
}

/// `p q m > c m2` in exact rational arithmetic; rounding in the products
/// would otherwise move the flip a few ulps off the true threshold.
fn profitable_exact(params: &ModelParams) -> bool {
    let exact = |v: f64| BigRational::from_float(v);
    match (exact(params.p), exact(params.q), exact(params.m), exact(params.c), exact(params.m2)) {
        (Some(p), Some(q), Some(m), Some(c), Some(m2)) => p * q * m > c * m2,
        _ => params.m > persistence_threshold(params),
    }
}

pub fn persistence_check(params: &ModelParams) -> PersistenceReport {
    let &ModelParams {
        e, d, m1, c, ..
    } = params;
    let threshold_m = persistence_threshold(params);
    let predator_viable = e > d;
    let profitable = profitable_exact(params);
    let predator_bound = e / d - 1.0;
    PersistenceReport {
        predator_viable,
        profitable,
        threshold_m,
        predator_bound,
        effort_bound: params.rent() * predator_bound / (c * m1),
        persistent: predator_viable && profitable,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets::Figure;

    #[test]
    fn derivative_vanishes_at_interior_state() {
        let p = Figure::Four.params();
        let star = interior_equilibrium(&p).state();
        let check = lyapunov_region_check(&p, &star).unwrap();
        assert!(check.dv_dt.abs() < 1e-15);
    }

    #[test]
    fn sample_point_inside_region_decreases() {
        let p = Figure::Four.params();
        let check = lyapunov_region_check(&p, &SysState::new(0.5, 0.4, 0.2)).unwrap();
        if check.in_region {
            assert!(check.dv_dt < 0.0);
        }
    }

    #[test]
    fn small_total_density_fails_first_inequality() {
        let p = Figure::Four.params();
        let check = lyapunov_region_check(&p, &SysState::new(0.05, 0.05, 0.1)).unwrap();
        assert!(!check.first && !check.in_region && !check.in_region_reversed);
    }

    #[test]
    fn requires_interior_state() {
        assert!(lyapunov_region_check(&Figure::Eight.params(), &SysState::new(0.5, 0.5, 0.5)).is_err());
        assert!(lyapunov_region_check(&Figure::Four.params(), &SysState::new(0.5, 0.0, 0.5)).is_err());
    }

    #[test]
    fn persistence_examples() {
        let r = persistence_check(&Figure::Four.params());
        assert!(r.persistent);
        assert!((r.predator_bound - (0.6 / 0.07 - 1.0)).abs() < 1e-12);
        assert!((r.predator_bound - 7.571).abs() < 1e-3);

        let mut p = Figure::Four.params();
        p.d = p.e;
        assert!(!persistence_check(&p).predator_viable);
        assert!(!persistence_check(&p).persistent);
    }

    #[test]
    fn persistence_flips_at_threshold() {
        // The exact threshold for the binary parameters lies within 1e-16 of
        // 1/3, closer than any float neighbour of 1/3, so the verdict must
        // equal the sign of 3m - 1, which a fused multiply-add gives exactly.
        let p = Figure::Three.params();
        let mut m = 1.0_f64 / 3.0;
        for _ in 0..8 {
            m = m.next_down();
        }
        for _ in 0..16 {
            let above = 3.0_f64.mul_add(m, -1.0) > 0.0;
            assert_eq!(persistence_check(&p.with_m(m)).persistent, above, "m = {m:e}");
            m = m.next_up();
        }
        assert!(!persistence_check(&p.with_m(0.33)).persistent);
        assert!(persistence_check(&p.with_m(0.34)).persistent);
    }
}
