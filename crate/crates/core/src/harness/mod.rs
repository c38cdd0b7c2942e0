//! Trial execution, sweeps, metrics and file output.

pub mod config;
pub mod emit;
pub mod gradcheck;
pub mod metrics;
pub mod sweep;
pub mod trial;

pub use config::{PlantConfig, Preset, PresetConfig, TrialConfig, DEFAULT_STEPS};
pub use emit::emit;
pub use gradcheck::{gradcheck, GradcheckReport};
pub use sweep::{run_grid, sweep_eta, sweep_seed, Execution, SweepGrid, SweepSummary};
pub use trial::{run, run_with_reflex_baseline, TrialLog, TrialStatus};
