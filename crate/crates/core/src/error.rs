use thiserror::Error;

use crate::equilibria::EquilibriumKind;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A denominator of the field vanished; the caller has to switch to a
    /// blow-up chart near this set.
    #[error("singular state: {which} = {value:e}")]
    Singular { which: &'static str, value: f64 },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParam { name: &'static str, reason: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("equilibrium {0} does not exist for these parameters")]
    MissingEquilibrium(EquilibriumKind),

    #[error("E3 does not exist anywhere in m ∈ [{lo}, {hi}]")]
    NoCoexistence { lo: f64, hi: f64 },

    #[error("integration aborted at t = {t}: {reason}")]
    Integration { t: f64, reason: String },

    #[error("singular linear system (condition estimate {condition:e})")]
    SingularSystem { condition: f64 },

    #[error("no sign change in [{lo}, {hi}]: f(lo) = {f_lo:e}, f(hi) = {f_hi:e}")]
    NoSignChange { lo: f64, hi: f64, f_lo: f64, f_hi: f64 },

    #[error("residual vanishes identically on [{lo}, {hi}] (max |r| = {max_abs:e}); no isolated root")]
    Degenerate { lo: f64, hi: f64, max_abs: f64 },

    #[error("several roots in bracket: {0:?}")]
    MultipleRoots(Vec<f64>),
}
