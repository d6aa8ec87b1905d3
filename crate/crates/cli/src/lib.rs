//! Experiment harness: named test cases, refinement and sigma sweeps,
//! conditioning studies, CSV output.

pub mod cases;
pub mod config;
pub mod error;
pub mod runner;

pub use cases::TestCase;
pub use config::{BoxConfig, CaseId, RunConfig, Task};
pub use error::CliError;
pub use runner::{conditioning_study, csv_string, run_case, sigma_sweep, write_csv, Row, CSV_HEADER};
