//! Configured experiments, the verification suite and run reports.

pub mod config;
pub mod criteria;
pub mod diagnostics;
pub mod report;

pub use config::{band_limits, BandSpec, ExperimentConfig, GridSpec, SpectrumSpec};
pub use criteria::{run_criterion, CriterionResult, CRITERIA};
pub use report::{aggregate, merge_tables, stamp_csv, theory_header, RunRecord, TheoryHeader, VerifyReport};
