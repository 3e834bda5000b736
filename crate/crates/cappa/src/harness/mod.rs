//! Benchmark harness: configuration, run manifests, CSV/SVG emission, and the
//! experiment drivers behind the command-line tool.

pub mod config;
pub mod csvout;
pub mod experiments;
pub mod manifest;
pub mod svg;

pub use config::{ExperimentConfig, InitCondition, InitDirection, SolverKind};
pub use csvout::CsvTable;
pub use experiments::{
    compute_constants, report_constants, run_dt_sweep, run_error_decay, run_signal_recovery,
    run_size_sweep, run_wallclock_trials,
};
pub use manifest::RunManifest;
