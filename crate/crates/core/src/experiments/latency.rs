//! Tail-latency comparison under injected stragglers. Three simulated
//! arms: an uncoded baseline on quiet workers, the coded system with
//! stragglers, and an uncoded system facing the very same stragglers.
//! First-k gating should keep the coded arm's p99 near the quiet
//! baseline while the uncoded arm inherits the full straggle delay.

use serde::{Deserialize, Serialize};

use super::ExperimentError;
use super::report::{ExperimentReport, ReportCell};
use crate::code_matrix::{GeneratorMatrix, Scheme};
use crate::codec::ideal_encode;
use crate::invertible::InvertibleFunction;
use crate::rng::{derive_seed, substream};
use crate::serving::{
    ClassMixture, QueryRecord, StragglerModel, VictimPolicy, VirtualClock, percentile,
    run_query_sim, summarize,
};

fn default_k() -> usize {
    10
}

fn default_queries() -> usize {
    5000
}

fn default_classes() -> usize {
    4
}

fn default_base_latency() -> f64 {
    0.01
}

fn default_straggle_delay() -> f64 {
    0.1
}

fn default_straggle_prob() -> f64 {
    0.1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatencyConfig {
    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(default = "default_queries")]
    pub queries: usize,
    #[serde(default = "default_classes")]
    pub classes: usize,
    #[serde(default = "default_base_latency")]
    pub base_latency: f64,
    #[serde(default = "default_straggle_delay")]
    pub straggle_delay: f64,
    #[serde(default = "default_straggle_prob")]
    pub straggle_prob: f64,
    /// Optional extra per-worker exponential jitter rate.
    #[serde(default)]
    pub jitter_rate: Option<f64>,
    #[serde(default)]
    pub seed: u64,
}

impl Default for LatencyConfig {
    fn default() -> Self {
        LatencyConfig {
            k: default_k(),
            queries: default_queries(),
            classes: default_classes(),
            base_latency: default_base_latency(),
            straggle_delay: default_straggle_delay(),
            straggle_prob: default_straggle_prob(),
            jitter_rate: None,
            seed: 0,
        }
    }
}

struct Arm {
    label: &'static str,
    generator: GeneratorMatrix,
    model: StragglerModel,
}

/// Runs the three arms over `cfg.queries` queries each. Every arm sees the
/// same per-query inputs, and both straggling arms share one straggler
/// stream, so the comparison isolates the redundancy itself. Entirely
/// virtual-time: reports are bit-reproducible from `(config, seed)`.
///
/// Per arm: `p50`, `p99`, `p999`, `mean` end-to-end latency,
/// `decode_p99`, and `degraded_fraction`.
pub fn latency_comparison(
    f: &InvertibleFunction,
    cfg: &LatencyConfig,
) -> Result<ExperimentReport, ExperimentError> {
    if cfg.k == 0 {
        return Err(ExperimentError::Invalid("k must be >= 1".to_string()));
    }
    if cfg.queries == 0 {
        return Err(ExperimentError::Invalid("queries must be >= 1".to_string()));
    }
    let straggle_seed = derive_seed(cfg.seed, 777);
    let straggler = StragglerModel {
        base_latency: cfg.base_latency,
        straggle_delay: cfg.straggle_delay,
        straggle_prob: cfg.straggle_prob,
        victim_policy: VictimPolicy::UniformOneOfK,
        fail_tasks: Default::default(),
        jitter_rate: cfg.jitter_rate,
        seed: straggle_seed,
    };
    let arms = [
        Arm {
            label: "uncoded_no_straggler",
            generator: GeneratorMatrix::build(cfg.k, cfg.k, Scheme::Vandermonde)?,
            model: StragglerModel {
                jitter_rate: cfg.jitter_rate,
                ..StragglerModel::quiet(cfg.base_latency, straggle_seed)
            },
        },
        Arm {
            label: "coded_straggler",
            generator: GeneratorMatrix::build(cfg.k + 1, cfg.k, Scheme::Uniform)?,
            model: straggler.clone(),
        },
        Arm {
            label: "uncoded_straggler",
            generator: GeneratorMatrix::build(cfg.k, cfg.k, Scheme::Vandermonde)?,
            model: straggler,
        },
    ];
    arms[1].model.validate(cfg.k + 1, cfg.k).map_err(|e| ExperimentError::Invalid(e.to_string()))?;

    let mixture = ClassMixture::circle(cfg.classes, f.dim())?;
    let heads = [mixture.head_through(f)?];

    let mut report = ExperimentReport::new("latency");
    report.set_param("k", cfg.k as u64);
    report.set_param("queries", cfg.queries as u64);
    report.set_param("base_latency", cfg.base_latency);
    report.set_param("straggle_delay", cfg.straggle_delay);
    report.set_param("straggle_prob", cfg.straggle_prob);
    report.set_param("seed", cfg.seed);
    report.set_param("function", f.kind_name());

    for arm in &arms {
        let mut clock = VirtualClock::new();
        let mut records: Vec<QueryRecord> = Vec::with_capacity(cfg.queries);
        for q in 0..cfg.queries {
            // Shared input stream: arms differ only in code and stragglers.
            let mut input_rng = substream(derive_seed(cfg.seed, 4242), q as u64);
            let inputs: Vec<Vec<f64>> =
                (0..cfg.k).map(|_| mixture.sample(&mut input_rng).1).collect();
            let batch = ideal_encode(f, &inputs, &arm.generator)?;
            records.push(run_query_sim(&batch, f, &heads, &arm.model, &mut clock, q as u64)?);
        }
        let stats = summarize(&records)?;
        let decodes: Vec<f64> = records.iter().map(|r| r.phases.decode).collect();
        let degraded = records.iter().filter(|r| r.degraded).count();

        let mut cell = ReportCell::new(arm.label);
        cell.set_param("n", arm.generator.n() as u64);
        cell.set_param("k", arm.generator.k() as u64);
        let q = cfg.queries as u64;
        cell.add_metric("p50", stats.p50, q);
        cell.add_metric("p99", stats.p99, q);
        cell.add_metric("p999", stats.p999, q);
        cell.add_metric("mean", stats.mean, q);
        cell.add_metric("decode_p99", percentile(&decodes, 99.0)?, q);
        cell.add_metric("degraded_fraction", degraded as f64 / cfg.queries as f64, q);
        report.push(cell);
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rotation() -> InvertibleFunction {
        InvertibleFunction::rotation(2, 0.6).unwrap()
    }

    #[test]
    fn coded_arm_dodges_guaranteed_stragglers() {
        let cfg = LatencyConfig {
            k: 4,
            queries: 400,
            straggle_prob: 1.0,
            seed: 13,
            ..LatencyConfig::default()
        };
        let report = latency_comparison(&rotation(), &cfg).unwrap();
        let p99 = |label: &str| report.cell(label).unwrap().metric("p99").unwrap();
        assert!(p99("coded_straggler") <= 0.02, "coded p99 {}", p99("coded_straggler"));
        assert!(p99("uncoded_straggler") >= 0.11, "uncoded p99 {}", p99("uncoded_straggler"));
        assert!(p99("uncoded_no_straggler") < 0.011);
        // Every query had a systematic victim, so every coded decode went
        // through the parity task.
        assert_eq!(
            report.cell("coded_straggler").unwrap().metric("degraded_fraction"),
            Some(1.0)
        );
        assert_eq!(
            report.cell("uncoded_straggler").unwrap().metric("degraded_fraction"),
            Some(0.0)
        );
    }

    #[test]
    fn without_stragglers_all_arms_agree_up_to_decode_overhead() {
        let cfg = LatencyConfig {
            k: 4,
            queries: 200,
            straggle_prob: 0.0,
            seed: 5,
            ..LatencyConfig::default()
        };
        let report = latency_comparison(&rotation(), &cfg).unwrap();
        let p99s: Vec<f64> = report.cells.iter().map(|c| c.metric("p99").unwrap()).collect();
        let spread = p99s.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
            - p99s.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(spread <= 1e-3, "arms diverged by {spread} with no stragglers");
    }

    #[test]
    fn report_is_bit_reproducible() {
        let cfg = LatencyConfig { k: 3, queries: 150, seed: 99, ..LatencyConfig::default() };
        let a = latency_comparison(&rotation(), &cfg).unwrap();
        let b = latency_comparison(&rotation(), &cfg).unwrap();
        assert_eq!(a.to_json(), b.to_json());
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let f = rotation();
        assert!(latency_comparison(&f, &LatencyConfig { k: 0, ..LatencyConfig::default() }).is_err());
        assert!(
            latency_comparison(&f, &LatencyConfig { queries: 0, ..LatencyConfig::default() })
                .is_err()
        );
        assert!(
            latency_comparison(
                &f,
                &LatencyConfig { straggle_prob: 1.5, ..LatencyConfig::default() }
            )
            .is_err()
        );
    }
}
