//! Time integration in an LOD or fine P1 space.

pub mod nonlinearity;
pub mod run;
pub mod space;
pub mod step;

pub use nonlinearity::Nonlinearity;
pub use run::{
    read_snapshots, run, steps_for, IterationStats, RunOptions, RunSummary, SnapshotManifest, SnapshotWriter,
    StepHook, StepView,
};
pub use space::{integrate_potential, DiscreteSpace, SpaceKind, SpaceSolver};
pub use step::{cn_step, starting_step, SimulationState, SolverOptions, StepStats, Stepper};
