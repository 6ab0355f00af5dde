//! Experiment orchestration for the lattice Schrödinger toolbox: spacing
//! sweeps with log-log rate fits, growth studies, functional-inequality
//! checks, and deterministic CSV/JSON report emission.

pub mod config;
pub mod error;
pub mod experiments;
pub mod fit;
pub mod report;

pub use config::{ExperimentConfig, Kind};
pub use error::{HarnessError, Result};
pub use report::{ExperimentReport, ReportFormat};
