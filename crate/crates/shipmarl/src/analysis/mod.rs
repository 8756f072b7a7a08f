//! Metrics, statistics and the result analyses behind the CLI.

pub mod comm;
pub mod curve;
pub mod metrics;
pub mod stats;
pub mod sweep;

use thiserror::Error;

pub use comm::{analyze_comm, write_comm_csvs, CommAnalysis, NormGrid, NormRow};
pub use curve::{read_curve_csv, write_curve_csv};
pub use metrics::{CommStats, EncounterBreakdown, MetricsRecord, RateWithCount};
pub use stats::{
    linear_regression, path_length, two_proportion_test, welch_t_test, Regression, StatsError,
    TTestResult, TwoProportionResult,
};
pub use sweep::{read_sweep_csv, sweep_noise, write_sweep_csv, SweepKind, SweepOutcome, SweepRow};

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("episode logs carry no message fields")]
    MissingMessages,
    #[error("statistics error: {0}")]
    Stats(#[from] StatsError),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("could not parse field {0}")]
    BadField(&'static str),
    #[error("marl error: {0}")]
    Marl(#[from] Box<crate::marl::MarlError>),
}

impl From<crate::marl::MarlError> for AnalysisError {
    fn from(e: crate::marl::MarlError) -> Self {
        AnalysisError::Marl(Box::new(e))
    }
}
