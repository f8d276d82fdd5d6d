//! Checks of the absorbing-set bound and of persistence along trajectories.

use serde::{Deserialize, Serialize};

use super::integrator::{integrate, Tolerances, Trajectory};
use crate::error::Result;
use crate::model::{self, ModelParams, SysState};
use crate::stability::{persistence_check, PersistenceReport};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundednessReport {
    pub mu: f64,
    pub big_m: f64,
    pub w0: f64,
    pub envelope: f64,
    pub max_w: f64,
    pub final_w: f64,
    pub holds: bool,
    pub first_violation: Option<f64>,
}

/// `w(t) <= max(w(0), M/mu) + 1e-6` with `mu = min(d, c rho)/2`.
pub fn boundedness_monitor(params: &ModelParams, traj: &Trajectory) -> BoundednessReport {
    let (mu, big_m) = model::absorbing_constants(params, 0.5);
    let ws: Vec<f64> = traj
        .states
        .iter()
        .map(|s| model::weighted_total(params, s))
        .collect();
    let w0 = ws[0];
    let envelope = w0.max(big_m / mu);
    let first_violation = ws
        .iter()
        .zip(&traj.times)
        .find(|(w, _)| **w > envelope + 1e-6)
        .map(|(_, t)| *t);
    BoundednessReport {
        mu,
        big_m,
        w0,
        envelope,
        max_w: ws.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        final_w: *ws.last().unwrap_or(&w0),
        holds: first_violation.is_none(),
        first_violation,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PersistenceWitness {
    pub check: PersistenceReport,
    /// False when the persistence conditions fail, so no witness is sought.
    pub applicable: bool,
    pub tail_minima: Option<[f64; 3]>,
    pub succeeded: bool,
    pub note: Option<String>,
}

/// Integrates from `s0` and reports the minimum of each component over the
/// last 20% of `[0, t_end]`. Succeeds when every minimum exceeds `abs_tol`.
pub fn persistence_witness(
    params: &ModelParams,
    s0: SysState,
    t_end: f64,
    tol: &Tolerances,
) -> Result<PersistenceWitness> {
    let check = persistence_check(params);
    if !check.persistent {
        return Ok(PersistenceWitness {
            check,
            applicable: false,
            tail_minima: None,
            succeeded: false,
            note: Some("persistence conditions fail; witness not applicable".to_owned()),
        });
    }
    let traj = integrate(params, s0, t_end, tol)?;
    let mut minima = [f64::INFINITY; 3];
    for (_, s) in traj.since(0.8 * t_end) {
        for (m, v) in minima.iter_mut().zip(s.to_array()) {
            *m = m.min(v);
        }
    }
    let note = if traj.meta.halted.is_some() {
        Some("trajectory reached the singular guard".to_owned())
    } else if !(s0.x > 0.0 && s0.y > 0.0 && s0.effort > 0.0) {
        Some("initial state lies on a boundary face".to_owned())
    } else {
        None
    };
    let succeeded = traj.meta.halted.is_none() && minima.iter().all(|&m| m > tol.abs_tol);
    Ok(PersistenceWitness {
        check,
        applicable: true,
        tail_minima: Some(minima),
        succeeded,
        note,
    })
}
