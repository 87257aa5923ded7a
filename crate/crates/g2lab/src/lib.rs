//! Command-line driver for `g2lab-core`: scenario files, CSV/JSON artifacts
//! and pass/fail reports.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod io;
pub mod report;
pub mod run;
pub mod scenario;

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("invalid scenario: {0}")]
    Schema(String),
    #[error("i/o: {0}")]
    Io(String),
    #[error(transparent)]
    Core(#[from] g2lab_core::Error),
}
