//! Steady-state adjoints of the discounted-rent problem and the singular
//! control condition for the harvesting fraction `m`.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::equilibria::{coexistence_interval, interior_equilibrium, EquilibriumKind};
use crate::error::{Error, Result};
use crate::model::{self, ModelParams, SysState};

/// Root tolerance on the singular-control residual.
pub const RESIDUAL_TOL: f64 = 1e-10;
/// Linear systems with a larger condition estimate are treated as singular.
pub const MAX_CONDITION: f64 = 1e13;

/// Constants of the linear adjoint system
/// `l1' = a1 l1 + a2 l2`,
/// `l2' = b1 + b2 l1 + b3 l2 + b4 l3`,
/// `l3' = c1 + c2 l2 + c3 l3`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoefficientSet {
    pub a1: f64,
    pub a2: f64,
    pub b1: f64,
    pub b2: f64,
    pub b3: f64,
    pub b4: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
}

impl CoefficientSet {
    pub fn matrix(&self) -> Matrix3<f64> {
        Matrix3::new(
            self.a1, self.a2, 0.0, self.b2, self.b3, self.b4, 0.0, self.c2, self.c3,
        )
    }

    pub fn forcing(&self) -> Vector3<f64> {
        Vector3::new(0.0, self.b1, self.c1)
    }

    /// Right-hand sides of the adjoint equations at `lambda`.
    pub fn rates(&self, lambda: [f64; 3]) -> [f64; 3] {
        let r = self.matrix() * Vector3::from(lambda) + self.forcing();
        [r[0], r[1], r[2]]
    }
}

pub fn adjoint_coefficients(params: &ModelParams, s: &SysState) -> Result<CoefficientSet> {
    let &ModelParams {
        a, e, d, q, m, m1, m2, p, c, rho, delta,
    } = params;
    let g = model::guard(params, s);
    if g.predation == 0.0 || g.harvest == 0.0 {
        return Err(Error::Singular {
            which: "x + y or m1 E + m2 y",
            value: g.predation.min(g.harvest),
        });
    }
    let SysState { x, y, effort } = *s;
    let s2 = g.predation.powi(2);
    let d2 = g.harvest.powi(2);
    let qm = q * m;
    let effort_share = m1 * effort * effort / d2;
    let stock_share = m2 * y * y / d2;
    Ok(CoefficientSet {
        a1: delta - (1.0 - 2.0 * x - a * y * y / s2),
        a2: -e * y * y / s2,
        b1: -p * qm * effort_share,
        b2: a * x * x / s2,
        b3: delta + d - e * x * x / s2 + qm * effort_share,
        b4: -rho * p * qm * effort_share,
        c1: -p * qm * stock_share + c,
        c2: qm * stock_share,
        c3: delta - rho * (p * qm * stock_share - c),
    })
}

/// Current-value Hamiltonian.
pub fn hamiltonian(params: &ModelParams, s: &SysState, lambda: [f64; 3]) -> Result<f64> {
    let f = model::vector_field(params, s)?;
    let g = model::guard(params, s);
    let harvest = if g.harvest == 0.0 {
        0.0
    } else {
        params.q * params.m * s.y / g.harvest
    };
    let rent = (params.p * harvest - params.c) * s.effort;
    Ok(rent + lambda[0] * f[0] + lambda[1] * f[1] + lambda[2] * f[2])
}

/// The printed closed forms for the adjoints, kept for comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClosedFormAdjoints {
    pub lambda1: f64,
    pub lambda2: f64,
    /// `-(c1 + c2 l2)/c3`
    pub lambda3: f64,
    /// `-(c1 + c2)/c3 * l2` as printed.
    pub lambda3_printed: f64,
}

pub fn closed_form_adjoints(k: &CoefficientSet) -> ClosedFormAdjoints {
    let lambda2 = k.a1 * (-k.b1 * k.c3 + k.b4 * k.c1)
        / (k.a1 * k.b3 * k.c3 - k.b2 * k.a2 * k.c3 - k.b4 * k.c2 * k.a1);
    ClosedFormAdjoints {
        lambda1: -k.a2 * lambda2 / k.a1,
        lambda2,
        lambda3: -(k.c1 + k.c2 * lambda2) / k.c3,
        lambda3_printed: -(k.c1 + k.c2) / k.c3 * lambda2,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdjointSolution {
    pub lambda1: f64,
    pub lambda2: f64,
    pub lambda3: f64,
    pub coefficients: CoefficientSet,
    /// Max-norm of the adjoint rates at the solution.
    pub residual: f64,
    /// 2-norm condition estimate of the adjoint matrix.
    pub condition: f64,
    pub closed_form: ClosedFormAdjoints,
}

impl AdjointSolution {
    pub fn lambda(&self) -> [f64; 3] {
        [self.lambda1, self.lambda2, self.lambda3]
    }
}

pub fn solve_adjoints(coefficients: CoefficientSet) -> Result<AdjointSolution> {
    let matrix = coefficients.matrix();
    let sv = matrix.singular_values();
    let condition = sv.max() / sv.min();
    if !(condition.is_finite() && condition < MAX_CONDITION) {
        return Err(Error::SingularSystem { condition });
    }
    let rhs = -coefficients.forcing();
    let lambda = matrix
        .lu()
        .solve(&rhs)
        .ok_or(Error::SingularSystem { condition })?;
    let lambda = [lambda[0], lambda[1], lambda[2]];
    let residual = coefficients
        .rates(lambda)
        .iter()
        .fold(0.0_f64, |acc, r| acc.max(r.abs()));
    Ok(AdjointSolution {
        lambda1: lambda[0],
        lambda2: lambda[1],
        lambda3: lambda[2],
        coefficients,
        residual,
        condition,
        closed_form: closed_form_adjoints(&coefficients),
    })
}

pub fn steady_adjoints(params: &ModelParams, s: &SysState) -> Result<AdjointSolution> {
    solve_adjoints(adjoint_coefficients(params, s)?)
}

/// `p - l2 + rho p l3`, i.e. `dH/dm` divided by `q y E / (m1 E + m2 y)`.
pub fn control_residual(params: &ModelParams, adjoints: &AdjointSolution) -> f64 {
    params.p - adjoints.lambda2 + params.rho * params.p * adjoints.lambda3
}

/// Singular-control residual at the interior equilibrium for fraction `m`.
pub fn singular_control_residual(params: &ModelParams, m: f64) -> Result<f64> {
    let p = params.with_m(m);
    let report = interior_equilibrium(&p);
    if !report.exists {
        return Err(Error::MissingEquilibrium(EquilibriumKind::E3));
    }
    let adjoints = steady_adjoints(&p, &report.state())?;
    Ok(control_residual(&p, &adjoints))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimalHarvest {
    pub m_opt: f64,
    pub equilibrium: SysState,
    pub adjoints: AdjointSolution,
    pub residual: f64,
    /// The part of the requested bracket on which E3 exists.
    pub bracket: (f64, f64),
}

/// Grid points used to look for sign changes before bisecting.
const SCAN_POINTS: usize = 400;

fn bisect_residual(params: &ModelParams, mut lo: f64, mut hi: f64, mut f_lo: f64) -> Result<(f64, f64)> {
    loop {
        let mid = 0.5 * (lo + hi);
        let f_mid = singular_control_residual(params, mid)?;
        if f_mid.abs() < RESIDUAL_TOL || mid <= lo || mid >= hi {
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

/// Root of the singular-control residual in `bracket`, trimmed to where the
/// interior equilibrium exists. Sign changes across poles are rejected.
pub fn optimal_m(params: &ModelParams, bracket: (f64, f64)) -> Result<OptimalHarvest> {
    let (m_lo, m_hi) = bracket;
    if !(m_lo < m_hi) {
        return Err(Error::InvalidArgument(format!("empty bracket {bracket:?}")));
    }
    let (e_lo, e_hi) =
        coexistence_interval(params).ok_or(Error::NoCoexistence { lo: m_lo, hi: m_hi })?;
    let nudge = 1e-9 * (e_hi - e_lo);
    let lo = if m_lo <= e_lo { e_lo + nudge } else { m_lo };
    let hi = if m_hi >= e_hi { e_hi - nudge } else { m_hi };
    if lo >= hi {
        return Err(Error::NoCoexistence { lo: m_lo, hi: m_hi });
    }

    let samples: Vec<(f64, f64)> = (0..=SCAN_POINTS)
        .map(|i| lo + (hi - lo) * i as f64 / SCAN_POINTS as f64)
        .filter_map(|m| singular_control_residual(params, m).ok().map(|r| (m, r)))
        .collect();
    if samples.len() < 2 {
        return Err(Error::SingularSystem { condition: f64::INFINITY });
    }
    let max_abs = samples.iter().fold(0.0_f64, |acc, s| acc.max(s.1.abs()));
    if max_abs < RESIDUAL_TOL * params.p.max(1.0) {
        return Err(Error::Degenerate { lo, hi, max_abs });
    }

    let mut roots = Vec::new();
    for pair in samples.windows(2) {
        let ((m0, r0), (m1, r1)) = (pair[0], pair[1]);
        if r0 == 0.0 {
            roots.push(m0);
            continue;
        }
        if r0.signum() == r1.signum() {
            continue;
        }
        // a sign change across a pole either breaks the adjoint solve or
        // leaves a large residual after bisection
        let (m, r) = match bisect_residual(params, m0, m1, r0) {
            Ok(found) => found,
            Err(Error::SingularSystem { .. }) => continue,
            Err(e) => return Err(e),
        };
        if r.abs() < RESIDUAL_TOL.max(1e-8 * r0.abs().min(r1.abs())) {
            roots.push(m);
        }
    }
    match roots.as_slice() {
        [] => {
            let (first, last) = (samples[0], samples[samples.len() - 1]);
            Err(Error::NoSignChange {
                lo: first.0,
                hi: last.0,
                f_lo: first.1,
                f_hi: last.1,
            })
        }
        [m_opt] => {
            let p = params.with_m(*m_opt);
            let equilibrium = interior_equilibrium(&p).state();
            let adjoints = steady_adjoints(&p, &equilibrium)?;
            Ok(OptimalHarvest {
                m_opt: *m_opt,
                residual: control_residual(&p, &adjoints),
                equilibrium,
                adjoints,
                bracket: (lo, hi),
            })
        }
        _ => Err(Error::MultipleRoots(roots)),
    }
}
