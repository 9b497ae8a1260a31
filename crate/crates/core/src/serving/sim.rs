//! Deterministic discrete-event simulation of one coded query.
//!
//! Time is virtual: the clock starts at 0 for each query and advances only
//! through sampled service times and deterministic flop charges. Nothing
//! reads a wall clock, so a `(configuration, seed)` pair maps to
//! bit-identical records on every run.

use serde::Serialize;

use super::ServingError;
use super::gate::DecodeGate;
use super::head::DownstreamHead;
use super::straggler::StragglerModel;
use crate::codec::EncodedBatch;
use crate::invertible::InvertibleFunction;

/// Virtual cost of one floating-point operation, seconds. Decode and head
/// phases are charged as `flops × this`, which keeps simulated latency
/// deterministic while still scaling with the real arithmetic volume.
pub const VIRTUAL_SECONDS_PER_FLOP: f64 = 1e-9;

/// Monotone virtual clock, seconds since the query started.
#[derive(Debug, Clone, Copy, Default)]
pub struct VirtualClock {
    now: f64,
}

impl VirtualClock {
    pub fn new() -> Self {
        VirtualClock { now: 0.0 }
    }

    pub fn now(&self) -> f64 {
        self.now
    }

    pub fn reset(&mut self) {
        self.now = 0.0;
    }

    /// Jumps forward to absolute time `t`.
    pub fn advance_to(&mut self, t: f64) {
        assert!(t >= self.now, "clock moved backwards: {} -> {t}", self.now);
        self.now = t;
    }

    pub fn advance_by(&mut self, dt: f64) {
        assert!(dt >= 0.0, "negative time step {dt}");
        self.now += dt;
    }
}

/// Virtual seconds spent in each phase of a query.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhaseBreakdown {
    /// Start until the k-th usable completion.
    pub wait: f64,
    pub decode: f64,
    pub head: f64,
}

/// Everything observed about one query.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QueryRecord {
    pub query_id: u64,
    /// Completion time per task (1-based order); `None` for tasks that
    /// never finished.
    pub completion_times: Vec<Option<f64>>,
    /// The subset that decoded, ascending.
    pub decode_subset: Vec<usize>,
    /// True when any parity task participated in the decode.
    pub degraded: bool,
    pub end_to_end_latency: f64,
    /// Predicted labels, one row per head, one entry per input.
    pub labels: Vec<Vec<usize>>,
    pub phases: PhaseBreakdown,
}

/// Simulates one query end to end: sample service times, apply `f` at each
/// worker, decode at the earliest gate, classify.
///
/// The clock is reset to 0 first; afterwards it reads the query's
/// end-to-end latency.
pub fn run_query_sim(
    batch: &EncodedBatch,
    f: &InvertibleFunction,
    heads: &[DownstreamHead],
    model: &StragglerModel,
    clock: &mut VirtualClock,
    query_id: u64,
) -> Result<QueryRecord, ServingError> {
    let (n, k) = (batch.n(), batch.k());
    let dim = batch.dim();
    for head in heads {
        if head.dim() != dim {
            return Err(ServingError::InvalidHead(format!(
                "head expects dim {}, batch carries {dim}",
                head.dim()
            )));
        }
    }
    clock.reset();
    let times = model.sample_service_times(n, k, query_id)?;
    let live = times.iter().flatten().count();
    if live < k {
        return Err(ServingError::Undecodable(format!(
            "query {query_id}: only {live} of {n} workers can complete, need {k}"
        )));
    }

    // Completion events in (time, task) order; the task index breaks ties
    // deterministically.
    let mut events: Vec<(f64, usize)> = times
        .iter()
        .enumerate()
        .filter_map(|(i, t)| t.map(|t| (t, i + 1)))
        .collect();
    events.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

    let mut gate = DecodeGate::new(&batch.generator, dim);
    let mut outcome = None;
    for &(at, task) in &events {
        let value = f.forward(batch.task_input(task))?;
        if let Some(done) = gate.offer(task, value)? {
            clock.advance_to(at);
            outcome = Some(done);
            break;
        }
    }
    let outcome = outcome.ok_or_else(|| {
        ServingError::Undecodable(format!("query {query_id}: no decodable subset among completions"))
    })?;

    let wait = clock.now();
    let decode_time = outcome.decode_flops as f64 * VIRTUAL_SECONDS_PER_FLOP;
    clock.advance_by(decode_time);

    let mut head_flops = 0u64;
    let labels: Vec<Vec<usize>> = heads
        .iter()
        .map(|head| {
            head_flops += head.prediction_flops() * k as u64;
            outcome.estimates.iter().map(|e| head.predict(e)).collect()
        })
        .collect();
    let head_time = head_flops as f64 * VIRTUAL_SECONDS_PER_FLOP;
    clock.advance_by(head_time);

    let degraded = outcome.subset.iter().any(|&t| t > k);
    Ok(QueryRecord {
        query_id,
        completion_times: times,
        decode_subset: outcome.subset,
        degraded,
        end_to_end_latency: clock.now(),
        labels,
        phases: PhaseBreakdown { wait, decode: decode_time, head: head_time },
    })
}
