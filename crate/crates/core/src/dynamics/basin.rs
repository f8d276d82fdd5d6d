//! Low-discrepancy sampling of initial conditions.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::attractor::{classify_attractor, AttractorVerdict, ClassifyOptions};
use super::integrator::{integrate, Tolerances};
use crate::error::{Error, Result};
use crate::model::{ModelParams, SysState};

/// Radical inverse of `index` in `base`.
pub fn halton(mut index: u64, base: u64) -> f64 {
    let mut result = 0.0;
    let mut f = 1.0 / base as f64;
    while index > 0 {
        result += f * (index % base) as f64;
        index /= base;
        f /= base as f64;
    }
    result
}

const BASES: [u64; 3] = [2, 3, 5];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasinSample {
    /// Halton index used for this point.
    pub index: u64,
    pub initial: SysState,
    pub verdict: AttractorVerdict,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasinReport {
    pub samples: Vec<BasinSample>,
    pub counts: BTreeMap<String, usize>,
}

/// Integrates `n` Halton points of `bounds` (indices `seed + 1 ..= seed + n`)
/// and classifies each. Results are ordered by index.
pub fn basin_sample(
    params: &ModelParams,
    bounds: [(f64, f64); 3],
    n: usize,
    t_end: f64,
    seed: u64,
    tol: &Tolerances,
    opts: &ClassifyOptions,
) -> Result<BasinReport> {
    if bounds.iter().any(|&(lo, hi)| !(lo >= 0.0 && hi >= lo && hi.is_finite())) {
        return Err(Error::InvalidArgument(format!(
            "basin box must lie in the nonnegative orthant, got {bounds:?}"
        )));
    }
    let samples: Vec<BasinSample> = (0..n as u64)
        .into_par_iter()
        .map(|i| {
            let index = seed + i + 1;
            let coords: [f64; 3] = std::array::from_fn(|k| {
                let (lo, hi) = bounds[k];
                lo + (hi - lo) * halton(index, BASES[k])
            });
            let initial = SysState::from_array(coords);
            match integrate(params, initial, t_end, tol) {
                Ok(traj) => BasinSample {
                    index,
                    initial,
                    verdict: classify_attractor(params, &traj, opts),
                    error: None,
                },
                Err(e) => BasinSample {
                    index,
                    initial,
                    verdict: AttractorVerdict::undecided(),
                    error: Some(e.to_string()),
                },
            }
        })
        .collect();
    let mut counts = BTreeMap::new();
    for s in &samples {
        *counts.entry(s.verdict.kind.label().to_owned()).or_insert(0) += 1;
    }
    Ok(BasinReport { samples, counts })
}
