//! Scenario layer on top of `storm-core`: configuration files, frequency and
//! duration sweeps, coupling calibration, the quadrupolar-partner comparison
//! and deterministic CSV/JSON output.

pub mod calibrate;
pub mod config;
pub mod output;
pub mod quad;
pub mod sweep;

pub use calibrate::{calibrate_couplings, CalibrationOutcome};
pub use config::{ScenarioConfig, SweepAxis};
pub use quad::run_quadrupolar_scenario;
pub use sweep::{run_duration_sweep, run_frequency_sweep, SweepOutcome, SweepRecord};
