//! Config-driven experiments: scenario files, seeded sweeps and CSV output.

pub mod config;
pub mod report;
pub mod run;

pub use config::{BayesianConfig, CompleteConfig, Mechanism, ScenarioConfig};
pub use report::emit_csv;
pub use run::{run_scenario, run_scenario_with, SweepResult, SweepRow};
