//! Scripted, seed-reproducible experiments over the toolkit: desk-scale
//! reconstruction sweeps, exhaustive failure decodings, error-amplification
//! grids, overhead timings, and latency-tail comparisons. Each produces an
//! [`ExperimentReport`] that serializes to JSON and an aligned text table.

use thiserror::Error;

mod amplification;
mod latency;
mod multi_failure;
mod overhead;
mod report;
mod synth;

pub use amplification::{AmplificationConfig, amplification_sweep};
pub use latency::{LatencyConfig, latency_comparison};
pub use multi_failure::multi_failure_check;
pub use overhead::{OverheadConfig, overhead_scaling};
pub use report::{ExperimentReport, Metric, ReportCell};
pub use synth::{SynthConfig, synth_reconstruction};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid experiment configuration: {0}")]
    Invalid(String),
    #[error(transparent)]
    Matrix(#[from] crate::code_matrix::CodeMatrixError),
    #[error(transparent)]
    Function(#[from] crate::invertible::InvertibleError),
    #[error(transparent)]
    Codec(#[from] crate::codec::CodecError),
    #[error(transparent)]
    Serving(#[from] crate::serving::ServingError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
