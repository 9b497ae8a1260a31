//! Latency summaries using nearest-rank percentiles.

use serde::{Deserialize, Serialize};

use super::ServingError;
use super::sim::QueryRecord;
use crate::linalg;

/// Summary of a latency sample, seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatencyStats {
    pub count: usize,
    pub mean: f64,
    pub p50: f64,
    pub p99: f64,
    pub p999: f64,
}

/// Nearest-rank percentile: the value at rank `⌈p/100 · N⌉` (1-based) of
/// the sorted sample. No interpolation, so the result is always an observed
/// value.
pub fn percentile(values: &[f64], pct: f64) -> Result<f64, ServingError> {
    if values.is_empty() {
        return Err(ServingError::EmptyInput("percentile of empty sample"));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(sorted[nearest_rank_index(sorted.len(), pct)])
}

/// 0-based index of the nearest-rank percentile. Ranks that are integral in
/// exact arithmetic (like 99% of 1000) get snapped before the ceiling so
/// float dust cannot push them up a slot.
fn nearest_rank_index(n: usize, pct: f64) -> usize {
    let r = pct / 100.0 * n as f64;
    let rank = if (r - r.round()).abs() < 1e-9 { r.round() } else { r.ceil() };
    (rank as usize).clamp(1, n) - 1
}

pub fn summarize_latencies(latencies: &[f64]) -> Result<LatencyStats, ServingError> {
    if latencies.is_empty() {
        return Err(ServingError::EmptyInput("summary of empty sample"));
    }
    let mut sorted = latencies.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mean = linalg::neumaier_sum(sorted.iter().copied()) / sorted.len() as f64;
    Ok(LatencyStats {
        count: sorted.len(),
        mean,
        p50: sorted[nearest_rank_index(sorted.len(), 50.0)],
        p99: sorted[nearest_rank_index(sorted.len(), 99.0)],
        p999: sorted[nearest_rank_index(sorted.len(), 99.9)],
    })
}

/// Summary over the end-to-end latencies of `records`.
pub fn summarize(records: &[QueryRecord]) -> Result<LatencyStats, ServingError> {
    let latencies: Vec<f64> = records.iter().map(|r| r.end_to_end_latency).collect();
    summarize_latencies(&latencies)
}
