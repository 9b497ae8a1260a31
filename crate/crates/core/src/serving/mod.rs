//! Serving-side machinery: straggler models, a deterministic virtual-time
//! simulator, latency statistics, classification heads, and a TCP
//! worker/front-end pair speaking a small binary frame protocol.
//!
//! Both execution paths (simulated and TCP) share the same decode gating:
//! a query completes as soon as any decodable set of `k` worker results is
//! in, parity results counting as much as systematic ones.

mod accuracy;
mod gate;
mod head;
mod sim;
mod stats;
mod straggler;
mod tcp;
pub mod wire;

pub use accuracy::{AccuracyOutcome, degraded_accuracy};
pub use head::{ClassMixture, DownstreamHead};
pub use sim::{PhaseBreakdown, QueryRecord, VIRTUAL_SECONDS_PER_FLOP, VirtualClock, run_query_sim};
pub use stats::{LatencyStats, percentile, summarize, summarize_latencies};
pub use straggler::{StragglerModel, VictimPolicy};
pub use tcp::{TcpFrontEnd, WorkerServer, serve_on};

use thiserror::Error;

use crate::codec::CodecError;
use crate::invertible::InvertibleError;

#[derive(Debug, Error)]
pub enum ServingError {
    #[error("query undecodable: {0}")]
    Undecodable(String),
    #[error("protocol violation: {0}")]
    Protocol(String),
    #[error("empty input: {0}")]
    EmptyInput(&'static str),
    #[error("invalid head: {0}")]
    InvalidHead(String),
    #[error("invalid straggler model: {0}")]
    InvalidModel(String),
    #[error(transparent)]
    Codec(#[from] CodecError),
    #[error(transparent)]
    Function(#[from] InvertibleError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
