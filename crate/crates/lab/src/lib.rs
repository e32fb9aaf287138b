//! Experiment runner for `piggyback-core`.
//!
//! Reads flat `key = value` experiment documents ([`config`]), runs analytic
//! evaluations, simulations, parameter sweeps and the figure reproductions
//! ([`figures`]), and writes each result as a CSV table with a JSON report
//! beside it ([`report`]). The `piggyback` binary is a thin CLI over
//! [`runner::run`].

pub mod config;
pub mod error;
pub mod figures;
pub mod report;
pub mod runner;
pub mod table;

pub use config::{parse_config, Document, ExperimentKind, ExperimentSpec, FigureName, FigureOptions, Task};
pub use error::{ConfigError, LabError};
pub use figures::reproduce_figure;
pub use report::{Outcome, RunDigest};
pub use runner::{execute, run, RunSummary};
pub use table::{format_real, ResultTable};
