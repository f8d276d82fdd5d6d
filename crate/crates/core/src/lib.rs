//! Ratio-dependent predator-prey dynamics with an effort variable and
//! Michaelis-Menten predator harvesting.
//!
//! The crate covers the vector field and its blow-up charts ([`model`]),
//! closed-form equilibria ([`equilibria`]), local stability
//! ([`stability`]), Hopf detection and region maps ([`bifurcation`]),
//! simulation ([`dynamics`]) and steady-state optimal harvesting
//! ([`optimal`]). Every function is pure.

pub mod bifurcation;
pub mod dynamics;
pub mod equilibria;
pub mod error;
pub mod model;
pub mod optimal;
pub mod presets;
pub mod stability;

pub use bifurcation::{HopfResult, Region, RegionGrid, RegionLabel};
pub use dynamics::{AttractorKind, AttractorVerdict, Tolerances, Trajectory};
pub use equilibria::{EquilibriumKind, EquilibriumReport};
pub use error::{Error, Result};
pub use model::{BlowupState, ModelParams, PartialBlowupState, SysState, System};
pub use optimal::{AdjointSolution, OptimalHarvest};
pub use presets::Figure;
pub use stability::{StabilityVerdict, Verdict};
