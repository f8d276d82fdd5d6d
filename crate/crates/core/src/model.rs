//! Parameter set, state types, the original vector field, its two blow-up
//! charts and their analytic Jacobians.
//!
//! The stiffness parameter is `rho` everywhere; the harvesting terms use the
//! Michaelis-Menten form `q m E y / (m1 E + m2 y)`.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Denominators below this are treated as singular by [`guard`].
pub const SINGULAR_TOL: f64 = 1e-12;

/// The ten model constants plus the discount rate used by the optimal
/// harvesting computation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    /// Predation-rate coefficient.
    pub a: f64,
    /// Conversion efficiency.
    pub e: f64,
    /// Predator death rate.
    pub d: f64,
    /// Catchability coefficient.
    pub q: f64,
    /// Fraction of predators available for harvesting, in `[0, 1]`.
    pub m: f64,
    /// Effort-saturation constant.
    pub m1: f64,
    /// Stock-saturation constant.
    pub m2: f64,
    /// Unit selling price.
    pub p: f64,
    /// Harvesting cost per unit effort.
    pub c: f64,
    /// Effort stiffness.
    pub rho: f64,
    /// Annual discount rate; only read by [`crate::optimal`].
    #[serde(default)]
    pub delta: f64,
}

impl ModelParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("a", self.a),
            ("e", self.e),
            ("d", self.d),
            ("q", self.q),
            ("m1", self.m1),
            ("m2", self.m2),
            ("p", self.p),
            ("c", self.c),
            ("rho", self.rho),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParam {
                    name,
                    reason: format!("must be finite and > 0, got {v}"),
                });
            }
        }
        if !(0.0..=1.0).contains(&self.m) {
            return Err(Error::InvalidParam {
                name: "m",
                reason: format!("m ∈ [0,1] required, got {}", self.m),
            });
        }
        if !(self.delta.is_finite() && self.delta >= 0.0) {
            return Err(Error::InvalidParam {
                name: "delta",
                reason: format!("must be finite and >= 0, got {}", self.delta),
            });
        }
        Ok(())
    }

    pub fn with_m(mut self, m: f64) -> Self {
        self.m = m;
        self
    }

    pub fn with_cost_and_death(mut self, c: f64, d: f64) -> Self {
        self.c = c;
        self.d = d;
        self
    }

    pub fn with_delta(mut self, delta: f64) -> Self {
        self.delta = delta;
        self
    }

    /// `A = a - d - 1`, the prey-ratio decay constant of the origin chart.
    pub fn coef_a(&self) -> f64 {
        self.a - self.d - 1.0
    }

    /// `B = e - d - 1`.
    pub fn coef_b(&self) -> f64 {
        self.e - self.d - 1.0
    }

    /// Saturated per-capita harvest rate at unbounded effort, `m q / m1`.
    pub fn harvest_cap(&self) -> f64 {
        self.m * self.q / self.m1
    }

    /// `rho p m q / m2`, the effort growth ceiling.
    pub fn effort_cap(&self) -> f64 {
        self.rho * self.p * self.m * self.q / self.m2
    }

    /// `rho c - d`.
    pub fn cost_gap(&self) -> f64 {
        self.rho * self.c - self.d
    }

    /// `p q m - c m2`, positive iff harvesting can turn a profit.
    pub fn rent(&self) -> f64 {
        self.p * self.q * self.m - self.c * self.m2
    }
}

/// A point `(x, y, E)` of prey, predator and effort.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SysState {
    pub x: f64,
    pub y: f64,
    #[serde(rename = "E")]
    pub effort: f64,
}

impl SysState {
    pub const fn new(x: f64, y: f64, effort: f64) -> Self {
        Self { x, y, effort }
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.effort]
    }

    pub fn from_array(v: [f64; 3]) -> Self {
        Self::new(v[0], v[1], v[2])
    }

    pub fn to_vector(self) -> Vector3<f64> {
        Vector3::new(self.x, self.y, self.effort)
    }

    pub fn from_vector(v: &Vector3<f64>) -> Self {
        Self::new(v[0], v[1], v[2])
    }

    /// Max-norm distance.
    pub fn distance(&self, other: &SysState) -> f64 {
        (self.x - other.x)
            .abs()
            .max((self.y - other.y).abs())
            .max((self.effort - other.effort).abs())
    }

    pub fn is_nonnegative(&self) -> bool {
        self.x >= 0.0 && self.y >= 0.0 && self.effort >= 0.0
    }
}

/// Origin chart `(u, y, v) = (x / y, y, y / E)`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct BlowupState {
    pub u: f64,
    pub y: f64,
    pub v: f64,
}

impl BlowupState {
    pub const fn new(u: f64, y: f64, v: f64) -> Self {
        Self { u, y, v }
    }

    /// Chart coordinates of an original state with `y > 0`, `E > 0`.
    pub fn from_state(s: &SysState) -> Result<Self> {
        if s.y <= 0.0 || s.effort <= 0.0 {
            return Err(Error::Singular {
                which: "y*E",
                value: s.y * s.effort,
            });
        }
        Ok(Self::new(s.x / s.y, s.y, s.y / s.effort))
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.u, self.y, self.v]
    }
}

/// Chart near the prey-only axis, `(x, y, w) = (x, y, y / E)`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PartialBlowupState {
    pub x: f64,
    pub y: f64,
    pub w: f64,
}

impl PartialBlowupState {
    pub const fn new(x: f64, y: f64, w: f64) -> Self {
        Self { x, y, w }
    }

    pub fn from_state(s: &SysState) -> Result<Self> {
        if s.effort <= 0.0 {
            return Err(Error::Singular {
                which: "E",
                value: s.effort,
            });
        }
        Ok(Self::new(s.x, s.y, s.y / s.effort))
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.w]
    }
}

/// Which vector field a Jacobian refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum System {
    Original,
    Blowup,
    PartialBlowup,
}

/// Denominators of the original field at a state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Guard {
    /// `x + y`
    pub predation: f64,
    /// `m1 E + m2 y`
    pub harvest: f64,
}

impl Guard {
    pub fn near_singular(&self) -> bool {
        self.predation < SINGULAR_TOL || self.harvest < SINGULAR_TOL
    }
}

pub fn guard(params: &ModelParams, s: &SysState) -> Guard {
    Guard {
        predation: s.x + s.y,
        harvest: params.m1 * s.effort + params.m2 * s.y,
    }
}

/// Original field. On the prey axis (`y = E = 0`) the harvest terms take
/// their limiting value 0.
pub fn vector_field(params: &ModelParams, s: &SysState) -> Result<[f64; 3]> {
    let &ModelParams {
        a, e, d, q, m, m1, m2, p, c, rho, ..
    } = params;
    let SysState { x, y, effort } = *s;
    let sum = x + y;
    if sum == 0.0 {
        return Err(Error::Singular {
            which: "x + y",
            value: sum,
        });
    }
    let denom = m1 * effort + m2 * y;
    // y = E = 0 is the only way to hit denom == 0 on the orthant
    let harvest = if denom == 0.0 {
        0.0
    } else {
        q * m * effort * y / denom
    };
    let predation = x * y / sum;
    Ok([
        x * (1.0 - x) - a * predation,
        e * predation - d * y - harvest,
        rho * (p * harvest - c * effort),
    ])
}

pub fn blowup_field(params: &ModelParams, s: &BlowupState) -> Result<[f64; 3]> {
    let &ModelParams {
        e, d, q, m, m1, m2, p, c, rho, ..
    } = params;
    let BlowupState { u, y, v } = *s;
    let big_a = params.coef_a();
    let big_b = params.coef_b();
    let ratio = 1.0 + u;
    let sat = m1 + m2 * v;
    if ratio <= 0.0 || sat <= 0.0 {
        return Err(Error::Singular {
            which: "1 + u or m1 + m2 v",
            value: ratio.min(sat),
        });
    }
    let growth = -d + e * u / ratio - m * q / sat;
    Ok([
        u * (-big_a - big_b * u) / ratio - u * u * y + m * q * u / sat,
        y * growth,
        v * growth - rho * v * (p * m * q * v / sat - c),
    ])
}

pub fn partial_blowup_field(params: &ModelParams, s: &PartialBlowupState) -> Result<[f64; 3]> {
    let &ModelParams {
        a, e, d, q, m, m1, m2, p, c, rho, ..
    } = params;
    let PartialBlowupState { x, y, w } = *s;
    let sum = x + y;
    if sum == 0.0 {
        return Err(Error::Singular {
            which: "x + y",
            value: sum,
        });
    }
    let sat = m1 + m2 * w;
    if sat <= 0.0 {
        return Err(Error::Singular {
            which: "m1 + m2 w",
            value: sat,
        });
    }
    Ok([
        x * (1.0 - x) - a * x * y / sum,
        -d * y + e * x * y / sum - m * q * y / sat,
        -d * w + e * x * w / sum - m * q * w / sat - rho * w * (p * m * q * w / sat - c),
    ])
}

/// Evaluate the field of `system` at a raw coordinate triple.
pub fn field(params: &ModelParams, system: System, z: [f64; 3]) -> Result<[f64; 3]> {
    match system {
        System::Original => vector_field(params, &SysState::from_array(z)),
        System::Blowup => blowup_field(params, &BlowupState::new(z[0], z[1], z[2])),
        System::PartialBlowup => {
            partial_blowup_field(params, &PartialBlowupState::new(z[0], z[1], z[2]))
        }
    }
}

/// Analytic Jacobian of the selected field at raw coordinates `z`.
pub fn jacobian(params: &ModelParams, z: [f64; 3], system: System) -> Result<Matrix3<f64>> {
    match system {
        System::Original => jacobian_original(params, &SysState::from_array(z)),
        System::Blowup => jacobian_blowup(params, &BlowupState::new(z[0], z[1], z[2])),
        System::PartialBlowup => {
            jacobian_partial(params, &PartialBlowupState::new(z[0], z[1], z[2]))
        }
    }
}

pub fn jacobian_original(params: &ModelParams, s: &SysState) -> Result<Matrix3<f64>> {
    let &ModelParams {
        a, e, d, q, m, m1, m2, p, c, rho, ..
    } = params;
    let SysState { x, y, effort } = *s;
    let g = guard(params, s);
    if g.predation == 0.0 {
        return Err(Error::Singular {
            which: "x + y",
            value: g.predation,
        });
    }
    if g.harvest == 0.0 {
        return Err(Error::Singular {
            which: "m1 E + m2 y",
            value: g.harvest,
        });
    }
    let s2 = g.predation * g.predation;
    let d2 = g.harvest * g.harvest;
    let qm = q * m;
    Ok(Matrix3::new(
        1.0 - 2.0 * x - a * y * y / s2,
        -a * x * x / s2,
        0.0,
        e * y * y / s2,
        -d + e * x * x / s2 - qm * m1 * effort * effort / d2,
        -qm * m2 * y * y / d2,
        0.0,
        rho * p * qm * m1 * effort * effort / d2,
        rho * (p * qm * m2 * y * y / d2 - c),
    ))
}

pub fn jacobian_blowup(params: &ModelParams, s: &BlowupState) -> Result<Matrix3<f64>> {
    let &ModelParams {
        e, d, q, m, m1, m2, p, c, rho, ..
    } = params;
    let BlowupState { u, y, v } = *s;
    let big_a = params.coef_a();
    let big_b = params.coef_b();
    let ratio = 1.0 + u;
    let sat = m1 + m2 * v;
    if ratio <= 0.0 || sat <= 0.0 {
        return Err(Error::Singular {
            which: "1 + u or m1 + m2 v",
            value: ratio.min(sat),
        });
    }
    let r2 = ratio * ratio;
    let q2 = sat * sat;
    let mq = m * q;
    let growth = -d + e * u / ratio - mq / sat;
    Ok(Matrix3::new(
        -(big_a + 2.0 * big_b * u + big_b * u * u) / r2 - 2.0 * u * y + mq / sat,
        -u * u,
        -mq * u * m2 / q2,
        e * y / r2,
        growth,
        mq * y * m2 / q2,
        e * v / r2,
        0.0,
        -d + e * u / ratio - m1 * mq / q2 - rho * p * mq * (2.0 * v * m1 + v * v * m2) / q2
            + rho * c,
    ))
}

pub fn jacobian_partial(params: &ModelParams, s: &PartialBlowupState) -> Result<Matrix3<f64>> {
    let &ModelParams {
        a, e, d, q, m, m1, m2, p, c, rho, ..
    } = params;
    let PartialBlowupState { x, y, w } = *s;
    let sum = x + y;
    let sat = m1 + m2 * w;
    if sum == 0.0 {
        return Err(Error::Singular {
            which: "x + y",
            value: sum,
        });
    }
    if sat <= 0.0 {
        return Err(Error::Singular {
            which: "m1 + m2 w",
            value: sat,
        });
    }
    let s2 = sum * sum;
    let q2 = sat * sat;
    let mq = m * q;
    Ok(Matrix3::new(
        1.0 - 2.0 * x - a * y * y / s2,
        -a * x * x / s2,
        0.0,
        e * y * y / s2,
        -d + e * x * x / s2 - mq / sat,
        mq * m2 * y / q2,
        e * w * y / s2,
        -e * x * w / s2,
        -d + e * x / sum - m1 * mq / q2 - rho * p * mq * (2.0 * m1 * w + m2 * w * w) / q2
            + rho * c,
    ))
}

/// `w = x + (a/e) y + a E / (rho e p)`, the weighted total used for the
/// absorbing-set bound.
pub fn weighted_total(params: &ModelParams, s: &SysState) -> f64 {
    s.x + params.a / params.e * s.y + params.a * s.effort / (params.rho * params.e * params.p)
}

/// Constants `(mu, M)` of the absorbing-set bound `w' + mu w <= M` with
/// `mu = fraction * min(d, c rho)`.
pub fn absorbing_constants(params: &ModelParams, fraction: f64) -> (f64, f64) {
    let mu = fraction * params.d.min(params.c * params.rho);
    (mu, (1.0 + mu).powi(2) / 4.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets::Figure;

    #[test]
    fn validation_rejects_out_of_range_fraction() {
        let p = Figure::Four.params().with_m(1.5);
        let err = p.validate().unwrap_err();
        assert!(err.to_string().contains("m ∈ [0,1]"), "{err}");
        assert!(Figure::Four.params().with_m(0.0).validate().is_ok());
        let mut p = Figure::Four.params();
        p.c = 0.0;
        assert!(matches!(p.validate(), Err(Error::InvalidParam { name: "c", .. })));
    }

    #[test]
    fn prey_axis_uses_limit_convention() {
        for fig in Figure::ALL {
            let f = vector_field(&fig.params(), &SysState::new(1.0, 0.0, 0.0)).unwrap();
            assert_eq!(f, [0.0, 0.0, 0.0]);
        }
    }

    #[test]
    fn origin_is_singular_in_original_chart() {
        let p = Figure::One.params();
        assert!(matches!(
            vector_field(&p, &SysState::default()),
            Err(Error::Singular { .. })
        ));
        assert!(jacobian_original(&p, &SysState::new(1.0, 0.0, 0.0)).is_err());
        assert!(guard(&p, &SysState::new(1e-13, 0.0, 1.0)).near_singular());
        assert!(!guard(&p, &SysState::new(0.5, 0.5, 0.5)).near_singular());
    }

    #[test]
    fn blowup_origin_is_fixed() {
        for fig in Figure::ALL {
            let p = fig.params();
            assert_eq!(blowup_field(&p, &BlowupState::default()).unwrap(), [0.0; 3]);
            assert_eq!(
                partial_blowup_field(&p, &PartialBlowupState::new(1.0, 0.0, 0.0)).unwrap(),
                [0.0; 3]
            );
        }
    }

    #[test]
    fn blowup_jacobian_at_origin_is_diagonal() {
        let p = Figure::One.params();
        let j = jacobian_blowup(&p, &BlowupState::default()).unwrap();
        let cap = p.harvest_cap();
        let expected = Matrix3::from_diagonal(&Vector3::new(
            -p.coef_a() + cap,
            -p.d - cap,
            p.rho * p.c - p.d - cap,
        ));
        assert!((j - expected).abs().max() < 1e-15, "{j}");
    }

    #[test]
    fn partial_jacobian_at_prey_axis_is_upper_triangular() {
        let p = Figure::Two.params();
        let j = jacobian_partial(&p, &PartialBlowupState::new(1.0, 0.0, 0.0)).unwrap();
        let cap = p.harvest_cap();
        assert_eq!(j[(1, 0)], 0.0);
        assert_eq!(j[(2, 0)], 0.0);
        assert_eq!(j[(2, 1)], 0.0);
        assert!((j[(0, 0)] + 1.0).abs() < 1e-15);
        assert!((j[(1, 1)] - (p.e - p.d - cap)).abs() < 1e-15);
        assert!((j[(2, 2)] - (p.e + p.rho * p.c - p.d - cap)).abs() < 1e-15);
    }

    #[test]
    fn derived_constants_track_fields() {
        let mut p = Figure::One.params();
        assert!((p.coef_a() - 0.93).abs() < 1e-12);
        p.d = 0.5;
        assert!((p.coef_a() - 0.5).abs() < 1e-12);
        assert!((p.coef_b() - (-0.9)).abs() < 1e-12);
    }
}
