//! The benchmark examples, reference solutions and convergence studies.

pub mod config;
pub mod convergence;
pub mod problems;
pub mod reference;
pub mod runs;

pub use config::{
    default_reference_fine, ErrorMeasure, ExperimentConfig, LayerSpec, SpaceChoice, TauRule, CONFIG_VERSION,
};
pub use convergence::{convergence_study, write_manifest, ConvergenceReport, ConvergenceRow, Rates, CSV_HEADER};
pub use problems::{configure_example, configure_example_with, ExampleOptions};
pub use reference::{cached_reference, reference_key, reference_solution, sample_steps, ReferenceTrajectory};
pub use runs::{
    build_space, decay_study, energy_study, run_single, with_threads, BuiltSpace, EnergyStudyRow, ErrorNorms,
    ErrorTarget, SingleRun,
};
