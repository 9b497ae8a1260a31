//! Wall-clock cost of encoding and decoding as k grows. The interesting
//! claim is about the online decoder: consuming the parity result costs
//! one scalar-vector multiply no matter how wide the batch, so its
//! per-event time should be flat in k. Encoder and batch-decoder scaling
//! are recorded for context, not asserted.
//!
//! Unlike the simulation experiments, the values here are measurements;
//! only the report's shape is reproducible, not its numbers.

use std::hint::black_box;
use std::time::Instant;

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::ExperimentError;
use super::report::{ExperimentReport, ReportCell};
use crate::code_matrix::{GeneratorMatrix, Scheme};
use crate::codec::{OnlineDecoder, TaskResults, decode_batch, ideal_encode};
use crate::invertible::InvertibleFunction;
use crate::rng::substream;
use crate::serving::percentile;

fn default_k_values() -> Vec<usize> {
    vec![2, 4, 10, 20, 40]
}

fn default_repeats() -> usize {
    7
}

fn default_inner() -> usize {
    256
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OverheadConfig {
    #[serde(default = "default_k_values")]
    pub k_values: Vec<usize>,
    /// Median is taken over this many timed repetitions.
    #[serde(default = "default_repeats")]
    pub repeats: usize,
    /// Iterations per repetition for the cheap per-event timings; the
    /// heavier whole-batch operations run `inner / 16` iterations.
    #[serde(default = "default_inner")]
    pub inner: usize,
    #[serde(default)]
    pub seed: u64,
}

impl Default for OverheadConfig {
    fn default() -> Self {
        OverheadConfig {
            k_values: default_k_values(),
            repeats: default_repeats(),
            inner: default_inner(),
            seed: 0,
        }
    }
}

/// Times `op` (already iterated `iters` times internally) `repeats` times
/// and returns the median per-iteration seconds.
fn median_seconds(repeats: usize, iters: usize, mut op: impl FnMut()) -> f64 {
    let mut times = Vec::with_capacity(repeats);
    for _ in 0..repeats {
        let start = Instant::now();
        op();
        times.push(start.elapsed().as_secs_f64() / iters as f64);
    }
    percentile(&times, 50.0).expect("repeats >= 1")
}

/// Measures, for each k over the `(k + 1, k)` uniform code:
/// `encode_seconds`, `decode_batch_seconds` (parity subset, so a real
/// solve), `online_stream_seconds_per_event` (k results consumed end to
/// end), and `online_parity_event_seconds` (the single parity update).
/// All medians over `repeats`.
pub fn overhead_scaling(
    f: &InvertibleFunction,
    cfg: &OverheadConfig,
) -> Result<ExperimentReport, ExperimentError> {
    if cfg.repeats < 3 {
        return Err(ExperimentError::Invalid("repeats must be >= 3 for a stable median".to_string()));
    }
    if cfg.inner < 16 {
        return Err(ExperimentError::Invalid("inner must be >= 16".to_string()));
    }
    if cfg.k_values.is_empty() || cfg.k_values.iter().any(|&k| k == 0) {
        return Err(ExperimentError::Invalid("k_values must be nonempty positives".to_string()));
    }
    let dim = f.dim();
    let heavy = cfg.inner / 16;

    let mut report = ExperimentReport::new("overhead");
    report.set_param("dim", dim as u64);
    report.set_param("repeats", cfg.repeats as u64);
    report.set_param("inner", cfg.inner as u64);
    report.set_param("function", f.kind_name());

    for &k in &cfg.k_values {
        let generator = GeneratorMatrix::build(k + 1, k, Scheme::Uniform)?;
        let mut rng = substream(cfg.seed, k as u64);
        let inputs: Vec<Vec<f64>> = (0..k)
            .map(|_| (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect())
            .collect();
        let batch = ideal_encode(f, &inputs, &generator)?;
        let outputs: Vec<Vec<f64>> =
            (1..=k + 1).map(|t| f.forward(batch.task_input(t))).collect::<Result<_, _>>()?;

        let encode = median_seconds(cfg.repeats, heavy, || {
            for _ in 0..heavy {
                black_box(ideal_encode(f, black_box(&inputs), &generator).unwrap());
            }
        });

        let subset: Vec<usize> = (2..=k + 1).collect();
        let results: TaskResults =
            subset.iter().map(|&t| (t, outputs[t - 1].clone())).collect();
        let decode = median_seconds(cfg.repeats, heavy, || {
            for _ in 0..heavy {
                black_box(decode_batch(black_box(&results), &generator, &subset).unwrap());
            }
        });

        let stream = median_seconds(cfg.repeats, cfg.inner * k, || {
            for _ in 0..cfg.inner {
                let mut decoder = OnlineDecoder::new(&generator, dim).unwrap();
                for &t in &subset {
                    decoder.update(t, &outputs[t - 1]).unwrap();
                }
                black_box(decoder.estimates().unwrap());
            }
        });

        // The parity event in isolation: pre-build decoders that have seen
        // every systematic result except slot 1, then time only the parity
        // update that completes them.
        let mut template = OnlineDecoder::new(&generator, dim)?;
        for t in 2..=k {
            template.update(t, &outputs[t - 1])?;
        }
        let parity = &outputs[k];
        let mut event_times = Vec::with_capacity(cfg.repeats);
        for _ in 0..cfg.repeats {
            // Clones happen outside the timed window: copying decoder
            // state is O(k·dim) and would mask the flat update cost.
            let mut decoders = vec![template.clone(); cfg.inner];
            let start = Instant::now();
            for d in &mut decoders {
                d.update(k + 1, black_box(parity)).unwrap();
            }
            event_times.push(start.elapsed().as_secs_f64() / cfg.inner as f64);
            black_box(&decoders);
        }
        let event = percentile(&event_times, 50.0).expect("repeats >= 1");

        let mut cell = ReportCell::new(format!("k={k}"));
        cell.set_param("k", k as u64);
        let reps = cfg.repeats as u64;
        cell.add_metric("encode_seconds", encode, reps);
        cell.add_metric("decode_batch_seconds", decode, reps);
        cell.add_metric("online_stream_seconds_per_event", stream, reps);
        cell.add_metric("online_parity_event_seconds", event, reps);
        report.push(cell);
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn report_carries_all_four_timings_per_k() {
        let f = InvertibleFunction::rotation(2, 0.3).unwrap();
        let cfg = OverheadConfig { k_values: vec![2, 4], repeats: 3, inner: 32, seed: 1 };
        let report = overhead_scaling(&f, &cfg).unwrap();
        assert_eq!(report.cells.len(), 2);
        for cell in &report.cells {
            for name in [
                "encode_seconds",
                "decode_batch_seconds",
                "online_stream_seconds_per_event",
                "online_parity_event_seconds",
            ] {
                let m = &cell.metrics[name];
                assert!(m.value > 0.0, "{}/{name}", cell.label);
                assert_eq!(m.samples, 3);
            }
        }
    }

    #[test]
    fn small_batch_encode_is_well_under_a_millisecond() {
        let f = InvertibleFunction::rotation(2, 0.3).unwrap();
        let cfg = OverheadConfig { k_values: vec![10], repeats: 5, inner: 64, seed: 0 };
        let report = overhead_scaling(&f, &cfg).unwrap();
        let encode = report.cells[0].metric("encode_seconds").unwrap();
        assert!(encode < 1e-3, "encode took {encode}s");
    }

    #[test]
    fn parity_event_cost_is_flat_in_k() {
        // One scalar-vector multiply either way; allow 2x for cache and
        // bookkeeping noise. A decoder that recomputed a k x k solve per
        // event would blow far past this.
        let f = InvertibleFunction::rotation(64, 0.3).unwrap();
        let cfg = OverheadConfig { k_values: vec![4, 40], repeats: 9, inner: 512, seed: 2 };
        let report = overhead_scaling(&f, &cfg).unwrap();
        let at = |label: &str| {
            report.cell(label).unwrap().metric("online_parity_event_seconds").unwrap()
        };
        let ratio = at("k=40") / at("k=4");
        assert!(ratio <= 2.0, "parity event cost scaled with k: ratio {ratio}");
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let f = InvertibleFunction::rotation(2, 0.3).unwrap();
        let bad = OverheadConfig { repeats: 2, ..OverheadConfig::default() };
        assert!(overhead_scaling(&f, &bad).is_err());
        let bad = OverheadConfig { inner: 8, ..OverheadConfig::default() };
        assert!(overhead_scaling(&f, &bad).is_err());
        let bad = OverheadConfig { k_values: vec![], ..OverheadConfig::default() };
        assert!(overhead_scaling(&f, &bad).is_err());
    }
}
