//! Time integration and long-run behaviour of trajectories.

mod attractor;
mod basin;
mod integrator;
mod monitor;

pub use attractor::{
    classify_attractor, cycle_amplitudes, AttractorKind, AttractorVerdict, ClassifyOptions,
    CycleAmplitudes, CycleStats,
};
pub use basin::{basin_sample, halton, BasinReport, BasinSample};
pub use integrator::{integrate, Halt, Method, Tolerances, Trajectory, TrajectoryMeta};
pub use monitor::{
    boundedness_monitor, persistence_witness, BoundednessReport, PersistenceWitness,
};
