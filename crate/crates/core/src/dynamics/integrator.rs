//! Dormand-Prince 5(4) with PI step control, plus a fixed-step RK4 mode.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{self, ModelParams, SysState};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Method {
    DormandPrince,
    FixedRk4 { step: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_step: f64,
    pub initial_step: f64,
    pub min_step: f64,
    pub max_steps: usize,
    pub method: Method,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            abs_tol: 1e-10,
            rel_tol: 1e-8,
            max_step: 1.0,
            initial_step: 1e-3,
            min_step: 1e-14,
            max_steps: 5_000_000,
            method: Method::DormandPrince,
        }
    }
}

impl Tolerances {
    pub fn with_tol(mut self, abs_tol: f64, rel_tol: f64) -> Self {
        self.abs_tol = abs_tol;
        self.rel_tol = rel_tol;
        self
    }

    pub fn with_max_step(mut self, max_step: f64) -> Self {
        self.max_step = max_step;
        self
    }

    pub fn fixed(step: f64) -> Self {
        Self {
            method: Method::FixedRk4 { step },
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = self.abs_tol > 0.0
            && self.rel_tol >= 0.0
            && self.max_step > 0.0
            && self.initial_step > 0.0
            && self.min_step > 0.0
            && self.max_steps > 0;
        let fixed_ok = match self.method {
            Method::FixedRk4 { step } => step > 0.0 && step.is_finite(),
            Method::DormandPrince => true,
        };
        if ok && fixed_ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("invalid tolerances {self:?}")))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Halt {
    pub t: f64,
    /// `x + y`
    pub predation: f64,
    /// `m1 E + m2 y`
    pub harvest: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryMeta {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_step: f64,
    pub method: Method,
    pub accepted: usize,
    pub rejected: usize,
    /// Steps whose result had a component in `(-abs_tol, 0)` set to 0.
    pub clamped: usize,
    pub positivity_violation: bool,
    pub bound_violation: bool,
    /// Set when the state came within the singular guard.
    pub halted: Option<Halt>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<SysState>,
    pub meta: TrajectoryMeta,
}

impl Trajectory {
    pub fn final_state(&self) -> SysState {
        *self.states.last().expect("trajectory is never empty")
    }

    pub fn final_time(&self) -> f64 {
        *self.times.last().expect("trajectory is never empty")
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Samples with `t >= t_from`.
    pub fn since(&self, t_from: f64) -> impl Iterator<Item = (f64, SysState)> + '_ {
        let start = self.times.partition_point(|&t| t < t_from);
        self.times[start..]
            .iter()
            .copied()
            .zip(self.states[start..].iter().copied())
    }
}

type Vec3 = [f64; 3];

fn axpy(y: &Vec3, h: f64, terms: &[(f64, &Vec3)]) -> Vec3 {
    let mut out = *y;
    for (coef, k) in terms {
        for i in 0..3 {
            out[i] += h * coef * k[i];
        }
    }
    out
}

fn eval(params: &ModelParams, y: &Vec3) -> Result<Vec3> {
    let f = model::vector_field(params, &SysState::from_array(*y))?;
    if f.iter().all(|v| v.is_finite()) {
        Ok(f)
    } else {
        Err(Error::Singular {
            which: "non-finite derivative",
            value: f64::NAN,
        })
    }
}

/// The prey axis `y = E = 0` is invariant and evaluable by the limit
/// convention, so it does not trigger the guard.
fn guard_halt(params: &ModelParams, t: f64, y: &Vec3) -> Option<Halt> {
    let s = SysState::from_array(*y);
    let g = model::guard(params, &s);
    let on_prey_axis = s.y == 0.0 && s.effort == 0.0 && s.x > 0.0;
    (g.near_singular() && !on_prey_axis).then_some(Halt {
        t,
        predation: g.predation,
        harvest: g.harvest,
    })
}

struct Recorder {
    times: Vec<f64>,
    states: Vec<SysState>,
    w_envelope: f64,
    bound_violation: bool,
    positivity_violation: bool,
    abs_tol: f64,
}

impl Recorder {
    fn new(params: &ModelParams, y0: &Vec3, abs_tol: f64) -> Self {
        let s0 = SysState::from_array(*y0);
        let (mu, big_m) = model::absorbing_constants(params, 0.5);
        Self {
            times: vec![0.0],
            states: vec![s0],
            w_envelope: model::weighted_total(params, &s0).max(big_m / mu) + 1e-6,
            bound_violation: false,
            positivity_violation: false,
            abs_tol,
        }
    }

    fn push(&mut self, params: &ModelParams, t: f64, y: &Vec3) {
        let s = SysState::from_array(*y);
        if model::weighted_total(params, &s) > self.w_envelope {
            self.bound_violation = true;
        }
        if y.iter().any(|&v| v < -self.abs_tol) {
            self.positivity_violation = true;
        }
        self.times.push(t);
        self.states.push(s);
    }
}

/// Components in `(-abs_tol, 0)` are set to 0. Returns `None` if any
/// component lies further below zero.
fn clamp_small_negatives(y: &mut Vec3, abs_tol: f64) -> Option<bool> {
    let mut changed = false;
    for v in y.iter_mut() {
        if *v < 0.0 {
            if *v <= -abs_tol {
                return None;
            }
            *v = 0.0;
            changed = true;
        }
    }
    Some(changed)
}

pub fn integrate(
    params: &ModelParams,
    s0: SysState,
    t_end: f64,
    tol: &Tolerances,
) -> Result<Trajectory> {
    params.validate()?;
    tol.validate()?;
    if !(t_end > 0.0 && t_end.is_finite()) {
        return Err(Error::InvalidArgument(format!("t_end must be positive, got {t_end}")));
    }
    let y0 = s0.to_array();
    if !y0.iter().all(|v| v.is_finite() && *v >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "initial state must be finite and nonnegative, got {y0:?}"
        )));
    }
    let mut rec = Recorder::new(params, &y0, tol.abs_tol);
    let mut meta = TrajectoryMeta {
        abs_tol: tol.abs_tol,
        rel_tol: tol.rel_tol,
        max_step: tol.max_step,
        method: tol.method,
        accepted: 0,
        rejected: 0,
        clamped: 0,
        positivity_violation: false,
        bound_violation: false,
        halted: guard_halt(params, 0.0, &y0),
    };
    if meta.halted.is_none() {
        match tol.method {
            Method::DormandPrince => dormand_prince(params, y0, t_end, tol, &mut rec, &mut meta)?,
            Method::FixedRk4 { step } => rk4(params, y0, t_end, step, tol, &mut rec, &mut meta)?,
        }
    }
    meta.bound_violation = rec.bound_violation;
    meta.positivity_violation = rec.positivity_violation;
    Ok(Trajectory {
        times: rec.times,
        states: rec.states,
        meta,
    })
}

// Butcher tableau; the field is autonomous so the nodes are not needed.
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// fifth-order weights minus the embedded fourth-order ones
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

struct DpStep {
    y: Vec3,
    f_end: Vec3,
    err: f64,
}

fn dp_step(params: &ModelParams, y: &Vec3, k1: &Vec3, h: f64, tol: &Tolerances) -> Result<DpStep> {
    let k2 = eval(params, &axpy(y, h, &[(A21, k1)]))?;
    let k3 = eval(params, &axpy(y, h, &[(A31, k1), (A32, &k2)]))?;
    let k4 = eval(params, &axpy(y, h, &[(A41, k1), (A42, &k2), (A43, &k3)]))?;
    let k5 = eval(
        params,
        &axpy(y, h, &[(A51, k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
    )?;
    let k6 = eval(
        params,
        &axpy(y, h, &[(A61, k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]),
    )?;
    let y_new = axpy(y, h, &[(B1, k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)]);
    let k7 = eval(params, &y_new)?;
    let mut sum = 0.0;
    for i in 0..3 {
        let e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
        let scale = tol.abs_tol + tol.rel_tol * y[i].abs().max(y_new[i].abs());
        sum += (e / scale).powi(2);
    }
    Ok(DpStep {
        y: y_new,
        f_end: k7,
        err: (sum / 3.0).sqrt(),
    })
}

fn dormand_prince(
    params: &ModelParams,
    mut y: Vec3,
    t_end: f64,
    tol: &Tolerances,
    rec: &mut Recorder,
    meta: &mut TrajectoryMeta,
) -> Result<()> {
    const SAFETY: f64 = 0.9;
    const BETA: f64 = 0.04;
    const ALPHA: f64 = 0.2 - 0.75 * BETA;
    const MIN_FACTOR: f64 = 0.2;
    const MAX_FACTOR: f64 = 10.0;

    let mut t = 0.0;
    let mut k1 = eval(params, &y).map_err(|e| Error::Integration {
        t,
        reason: e.to_string(),
    })?;
    let mut h = tol.initial_step.min(tol.max_step).min(t_end);
    let mut err_prev: f64 = 1e-4;
    let mut steps = 0usize;

    while t < t_end {
        steps += 1;
        if steps > tol.max_steps {
            return Err(Error::Integration {
                t,
                reason: format!("exceeded {} steps", tol.max_steps),
            });
        }
        if h < tol.min_step {
            return Err(Error::Integration {
                t,
                reason: format!("step size underflow (h = {h:e})"),
            });
        }
        let last = t + h >= t_end;
        let h_try = if last { t_end - t } else { h };

        let outcome = dp_step(params, &y, &k1, h_try, tol);
        let step = match outcome {
            Ok(step) if step.err.is_finite() && step.err <= 1.0 => step,
            Ok(step) => {
                meta.rejected += 1;
                let factor = if step.err.is_finite() {
                    (SAFETY * step.err.powf(-ALPHA)).max(MIN_FACTOR)
                } else {
                    MIN_FACTOR
                };
                h = h_try * factor.min(1.0);
                continue;
            }
            Err(_) => {
                // a stage left the domain of the field
                meta.rejected += 1;
                h = h_try * 0.5;
                continue;
            }
        };

        let mut y_new = step.y;
        let mut f_new = step.f_end;
        match clamp_small_negatives(&mut y_new, tol.abs_tol) {
            None => {
                meta.rejected += 1;
                h = h_try * 0.5;
                continue;
            }
            Some(true) => {
                meta.clamped += 1;
                f_new = eval(params, &y_new).map_err(|e| Error::Integration {
                    t: t + h_try,
                    reason: e.to_string(),
                })?;
            }
            Some(false) => {}
        }

        t = if last { t_end } else { t + h_try };
        y = y_new;
        k1 = f_new;
        meta.accepted += 1;
        rec.push(params, t, &y);
        if let Some(halt) = guard_halt(params, t, &y) {
            meta.halted = Some(halt);
            return Ok(());
        }

        let err = step.err.max(1e-10);
        let factor = (SAFETY * err.powf(-ALPHA) * err_prev.powf(BETA)).clamp(MIN_FACTOR, MAX_FACTOR);
        err_prev = err;
        h = (h_try * factor).min(tol.max_step);
    }
    Ok(())
}

fn rk4(
    params: &ModelParams,
    mut y: Vec3,
    t_end: f64,
    step: f64,
    tol: &Tolerances,
    rec: &mut Recorder,
    meta: &mut TrajectoryMeta,
) -> Result<()> {
    let n = (t_end / step).ceil() as usize;
    if n > tol.max_steps {
        return Err(Error::Integration {
            t: 0.0,
            reason: format!("{n} fixed steps exceed the limit {}", tol.max_steps),
        });
    }
    let mut t = 0.0;
    for i in 1..=n {
        let t_next = if i == n { t_end } else { i as f64 * step };
        let h = t_next - t;
        let fail = |e: Error| Error::Integration {
            t,
            reason: e.to_string(),
        };
        let k1 = eval(params, &y).map_err(fail)?;
        let k2 = eval(params, &axpy(&y, h, &[(0.5, &k1)])).map_err(fail)?;
        let k3 = eval(params, &axpy(&y, h, &[(0.5, &k2)])).map_err(fail)?;
        let k4 = eval(params, &axpy(&y, h, &[(1.0, &k3)])).map_err(fail)?;
        let mut y_new = axpy(
            &y,
            h,
            &[(1.0 / 6.0, &k1), (1.0 / 3.0, &k2), (1.0 / 3.0, &k3), (1.0 / 6.0, &k4)],
        );
        match clamp_small_negatives(&mut y_new, tol.abs_tol) {
            None => {
                return Err(Error::Integration {
                    t: t_next,
                    reason: format!("state {y_new:?} fell below -abs_tol in fixed-step mode"),
                })
            }
            Some(true) => meta.clamped += 1,
            Some(false) => {}
        }
        t = t_next;
        y = y_new;
        meta.accepted += 1;
        rec.push(params, t, &y);
        if let Some(halt) = guard_halt(params, t, &y) {
            meta.halted = Some(halt);
            return Ok(());
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets::Figure;

    #[test]
    fn rest_point_stays_put() {
        let p = Figure::Four.params();
        let star = crate::equilibria::interior_equilibrium(&p).state();
        let traj = integrate(&p, star, 50.0, &Tolerances::default()).unwrap();
        assert!(traj.final_state().distance(&star) < 1e-9);
        assert!(traj.meta.halted.is_none());
    }

    #[test]
    fn prey_axis_is_logistic() {
        let p = Figure::Two.params();
        let traj = integrate(&p, SysState::new(0.2, 0.0, 0.0), 10.0, &Tolerances::default()).unwrap();
        let exact = 1.0 / (1.0 + 4.0 * (-10.0_f64).exp());
        let end = traj.final_state();
        assert!((end.x - exact).abs() < 1e-7, "{} vs {exact}", end.x);
        assert_eq!((end.y, end.effort), (0.0, 0.0));
    }

    #[test]
    fn times_strictly_increase_and_end_at_t_end() {
        let p = Figure::Four.params();
        let traj = integrate(&p, SysState::new(0.3, 0.2, 0.2), 100.0, &Tolerances::default()).unwrap();
        assert!(traj.times.windows(2).all(|w| w[1] > w[0]));
        assert_eq!(traj.final_time(), 100.0);
        assert!(traj.meta.accepted > 0);
    }

    #[test]
    fn origin_start_halts_immediately() {
        let p = Figure::One.params();
        let traj = integrate(&p, SysState::new(0.0, 0.0, 0.0), 10.0, &Tolerances::default()).unwrap();
        assert_eq!(traj.len(), 1);
        assert!(traj.meta.halted.is_some());
    }

    #[test]
    fn rejects_bad_inputs() {
        let p = Figure::One.params();
        let tol = Tolerances::default();
        assert!(integrate(&p, SysState::new(-0.1, 0.5, 0.5), 1.0, &tol).is_err());
        assert!(integrate(&p, SysState::new(0.5, 0.5, 0.5), 0.0, &tol).is_err());
        assert!(integrate(&p, SysState::new(0.5, 0.5, 0.5), 1.0, &Tolerances::fixed(0.0)).is_err());
    }

    #[test]
    fn fixed_step_matches_adaptive() {
        let p = Figure::Four.params();
        let s0 = SysState::new(0.3, 0.2, 0.2);
        let a = integrate(&p, s0, 20.0, &Tolerances::default().with_tol(1e-12, 1e-12)).unwrap();
        let b = integrate(&p, s0, 20.0, &Tolerances::fixed(0.01)).unwrap();
        assert!(a.final_state().distance(&b.final_state()) < 1e-7);
        assert_eq!(b.len(), 2001);
    }
}
