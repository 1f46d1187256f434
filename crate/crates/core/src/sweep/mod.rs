//! Parameter sweeps of the critical transmittance over state parameters,
//! fluctuation strengths and thermal occupancies.

mod config;
mod output;
mod run;
mod verify;

use thiserror::Error;

use crate::moments::MomentsError;

pub use config::{parse_grid, Family, GridSpec, ResolvedSweep, StateAxis, SweepConfig};
pub use output::{emit_csv, format_number, write_csv, CSV_HEADER};
pub use run::{run_sweep, run_sweep_with, CurvePoint};
pub use verify::{verify_mode, PointCheck, VerificationReport};

#[derive(Debug, Error)]
pub enum SweepError {
    #[error("config error at `{field}`: {message}")]
    Config { field: String, message: String },
    #[error("grid point {index} ({description}): {source}")]
    Point {
        index: usize,
        description: String,
        #[source]
        source: MomentsError,
    },
    #[error("no points to write")]
    Empty,
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl SweepError {
    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        SweepError::Config {
            field: field.into(),
            message: message.into(),
        }
    }

    /// Field path of a configuration error.
    pub fn field(&self) -> Option<&str> {
        match self {
            SweepError::Config { field, .. } => Some(field),
            _ => None,
        }
    }

    /// Process exit code for the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            SweepError::Config { .. } => 2,
            SweepError::Io(_) | SweepError::Csv(_) => 3,
            SweepError::Point { .. } | SweepError::Empty => 1,
        }
    }
}
