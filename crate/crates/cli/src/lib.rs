//! File formats, artifact headers and the experiment driver behind the
//! `adi-bench` command line tool.
//!
//! Every artifact starts with `#` comment lines recording the tool version, the
//! resolved configuration as JSON, the derived seeds and the SHA-256 of the
//! input netlist, so a run can be repeated bit for bit.

pub mod artifact;
pub mod config;
pub mod error;
pub mod formats;
pub mod pipeline;

pub use config::{ExperimentConfig, FillPolicy, RtMeasure};
pub use error::CliError;
pub use pipeline::{cmd_adi, cmd_atpg, cmd_compare, cmd_order, cmd_simulate, CompareReport, SimMode};
