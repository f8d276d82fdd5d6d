//! Long-run classification of a trajectory.

use serde::{Deserialize, Serialize};

use super::integrator::Trajectory;
use crate::equilibria::{boundary_equilibria, interior_equilibrium, EquilibriumKind};
use crate::model::{ModelParams, SysState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum AttractorKind {
    E0,
    E1,
    E2,
    E3,
    #[serde(rename = "limit_cycle")]
    LimitCycle,
    #[serde(rename = "undecided")]
    Undecided,
}

impl AttractorKind {
    pub fn label(self) -> &'static str {
        match self {
            AttractorKind::E0 => "E0",
            AttractorKind::E1 => "E1",
            AttractorKind::E2 => "E2",
            AttractorKind::E3 => "E3",
            AttractorKind::LimitCycle => "limit_cycle",
            AttractorKind::Undecided => "undecided",
        }
    }

    fn from_equilibrium(kind: EquilibriumKind) -> Self {
        match kind {
            EquilibriumKind::E0 => AttractorKind::E0,
            EquilibriumKind::E1 => AttractorKind::E1,
            EquilibriumKind::E2 => AttractorKind::E2,
            _ => AttractorKind::E3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CycleStats {
    /// Mean spacing of successive maxima of `x` in the tail.
    pub period: f64,
    /// Peak-to-peak range of `(x, y, E)` over the tail.
    pub peak_to_peak: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttractorVerdict {
    pub kind: AttractorKind,
    /// Max-norm distance from the final state to the matched equilibrium.
    pub distance: Option<f64>,
    pub cycle_stats: Option<CycleStats>,
}

impl AttractorVerdict {
    pub fn undecided() -> Self {
        Self {
            kind: AttractorKind::Undecided,
            distance: None,
            cycle_stats: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ClassifyOptions {
    pub match_radius: f64,
    /// Fraction of the time span treated as the tail.
    pub tail_fraction: f64,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        Self {
            match_radius: 1e-3,
            tail_fraction: 0.2,
        }
    }
}

fn candidates(params: &ModelParams) -> Vec<(AttractorKind, SysState)> {
    let mut out: Vec<_> = boundary_equilibria(params)
        .into_iter()
        .chain(std::iter::once(interior_equilibrium(params)))
        .filter(|r| r.exists)
        .map(|r| (AttractorKind::from_equilibrium(r.kind), r.state()))
        .collect();
    out.sort_by_key(|c| c.0);
    out
}

/// Times of strict local maxima of `x` among `samples`.
pub(crate) fn maxima(samples: &[(f64, SysState)]) -> Vec<(f64, f64)> {
    samples
        .windows(3)
        .filter(|w| w[1].1.x > w[0].1.x && w[1].1.x >= w[2].1.x)
        .map(|w| (w[1].0, w[1].1.x))
        .collect()
}

pub fn classify_attractor(
    params: &ModelParams,
    traj: &Trajectory,
    opts: &ClassifyOptions,
) -> AttractorVerdict {
    let equilibria = candidates(params);
    let last = traj.final_state();
    let nearest = equilibria
        .iter()
        .map(|(k, s)| (*k, s.distance(&last)))
        .min_by(|l, r| l.1.total_cmp(&r.1));

    if traj.meta.halted.is_some() {
        return match nearest {
            Some((kind, dist)) if dist <= opts.match_radius => AttractorVerdict {
                kind,
                distance: Some(dist),
                cycle_stats: None,
            },
            _ => AttractorVerdict::undecided(),
        };
    }

    let t_end = traj.final_time();
    let t_from = t_end - opts.tail_fraction * t_end;
    let tail: Vec<(f64, SysState)> = traj.since(t_from).collect();

    for (kind, eq) in &equilibria {
        if tail.iter().all(|(_, s)| s.distance(eq) <= opts.match_radius) {
            return AttractorVerdict {
                kind: *kind,
                distance: Some(last.distance(eq)),
                cycle_stats: None,
            };
        }
    }

    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for (_, s) in &tail {
        for (i, v) in s.to_array().into_iter().enumerate() {
            lo[i] = lo[i].min(v);
            hi[i] = hi[i].max(v);
        }
    }
    let peak_to_peak = [hi[0] - lo[0], hi[1] - lo[1], hi[2] - lo[2]];
    let peaks = maxima(&tail);
    if peak_to_peak[0] > 10.0 * opts.match_radius && peaks.len() >= 2 {
        let period = (peaks[peaks.len() - 1].0 - peaks[0].0) / (peaks.len() - 1) as f64;
        return AttractorVerdict {
            kind: AttractorKind::LimitCycle,
            distance: None,
            cycle_stats: Some(CycleStats {
                period,
                peak_to_peak,
            }),
        };
    }
    AttractorVerdict::undecided()
}

/// Per-cycle amplitude of `x` between consecutive maxima inside `[t_from, t_to]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleAmplitudes {
    pub maxima_times: Vec<f64>,
    /// `max - min` of `x` over each full cycle.
    pub amplitudes: Vec<f64>,
    /// Peak-to-peak of `x` over the whole window.
    pub window_peak_to_peak: f64,
}

impl CycleAmplitudes {
    /// `1 - last/first`; positive when the oscillation shrinks.
    pub fn decay(&self) -> Option<f64> {
        match (self.amplitudes.first(), self.amplitudes.last()) {
            (Some(first), Some(last)) if self.amplitudes.len() >= 2 => Some(1.0 - last / first),
            _ => None,
        }
    }
}

pub fn cycle_amplitudes(traj: &Trajectory, t_from: f64, t_to: f64) -> CycleAmplitudes {
    let window: Vec<(f64, SysState)> = traj.since(t_from).take_while(|(t, _)| *t <= t_to).collect();
    let peaks = maxima(&window);
    let mut amplitudes = Vec::new();
    for pair in peaks.windows(2) {
        let (t0, t1) = (pair[0].0, pair[1].0);
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for (_, s) in window.iter().filter(|(t, _)| *t >= t0 && *t <= t1) {
            lo = lo.min(s.x);
            hi = hi.max(s.x);
        }
        amplitudes.push(hi - lo);
    }
    let (lo, hi) = window.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (_, s)| {
        (lo.min(s.x), hi.max(s.x))
    });
    CycleAmplitudes {
        maxima_times: peaks.iter().map(|p| p.0).collect(),
        amplitudes,
        window_peak_to_peak: if window.is_empty() { 0.0 } else { hi - lo },
    }
}
