//! How encoder noise shows up after recovery. Decoding the first slot from
//! the remaining k tasks of a single-parity uniform code turns a parity
//! error ε into exactly k·ε, so the measured ratio pins the linear-algebra
//! path, while the accuracy columns show what that amplification costs a
//! classifier.

use serde::{Deserialize, Serialize};

use super::ExperimentError;
use super::report::{ExperimentReport, ReportCell};
use crate::code_matrix::{GeneratorMatrix, Scheme};
use crate::codec::{PerturbationModel, TaskResults, decode_batch, perturbed_encode};
use crate::invertible::InvertibleFunction;
use crate::linalg;
use crate::rng::{derive_seed, substream};
use crate::serving::ClassMixture;

fn default_k_values() -> Vec<usize> {
    vec![2, 4, 10]
}

fn default_sigma_values() -> Vec<f64> {
    vec![0.0, 0.05, 0.2]
}

fn default_trials() -> usize {
    100
}

fn default_classes() -> usize {
    4
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AmplificationConfig {
    #[serde(default = "default_k_values")]
    pub k_values: Vec<usize>,
    #[serde(default = "default_sigma_values")]
    pub sigma_values: Vec<f64>,
    /// Independently seeded trials per (k, sigma) cell.
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default = "default_classes")]
    pub classes: usize,
    #[serde(default)]
    pub seed: u64,
}

impl Default for AmplificationConfig {
    fn default() -> Self {
        AmplificationConfig {
            k_values: default_k_values(),
            sigma_values: default_sigma_values(),
            trials: default_trials(),
            classes: default_classes(),
            seed: 0,
        }
    }
}

impl AmplificationConfig {
    fn validate(&self) -> Result<(), ExperimentError> {
        if self.k_values.is_empty() || self.k_values.iter().any(|&k| k == 0) {
            return Err(ExperimentError::Invalid("k_values must be nonempty positives".to_string()));
        }
        if self.sigma_values.is_empty()
            || self.sigma_values.iter().any(|s| !(s.is_finite() && *s >= 0.0))
        {
            return Err(ExperimentError::Invalid(
                "sigma_values must be nonempty, finite, and >= 0".to_string(),
            ));
        }
        if self.trials == 0 {
            return Err(ExperimentError::Invalid("trials must be >= 1".to_string()));
        }
        if self.classes < 2 {
            return Err(ExperimentError::Invalid("classes must be >= 2".to_string()));
        }
        Ok(())
    }
}

/// Sweeps the (k, sigma) grid. Per cell with sigma > 0:
/// `amplification_mean/min/max` and `amplification_max_abs_dev_from_k`
/// over `‖f̂(x₁) − f(x₁)‖₂ / ‖ε‖₂`; every cell reports `normal_accuracy`
/// and `degraded_accuracy` on slot 1.
///
/// Cell streams derive from `(seed, k, sigma bits)`, so a cell's numbers
/// do not depend on which other cells are in the grid.
pub fn amplification_sweep(
    f: &InvertibleFunction,
    cfg: &AmplificationConfig,
) -> Result<ExperimentReport, ExperimentError> {
    cfg.validate()?;
    let mixture = ClassMixture::circle(cfg.classes, f.dim())?;
    let head = mixture.head_through(f)?;

    let mut report = ExperimentReport::new("amplification");
    report.set_param("trials", cfg.trials as u64);
    report.set_param("classes", cfg.classes as u64);
    report.set_param("seed", cfg.seed);
    report.set_param("function", f.kind_name());

    for &k in &cfg.k_values {
        let generator = GeneratorMatrix::build(k + 1, k, Scheme::Uniform)?;
        let subset: Vec<usize> = (2..=k + 1).collect();
        for &sigma in &cfg.sigma_values {
            let cell_seed = derive_seed(derive_seed(cfg.seed, k as u64), sigma.to_bits());
            let mut ratio_sum = 0.0;
            let mut ratio_min = f64::INFINITY;
            let mut ratio_max = f64::NEG_INFINITY;
            let mut ratio_dev: f64 = 0.0;
            let mut normal_hits = 0usize;
            let mut degraded_hits = 0usize;
            for t in 0..cfg.trials {
                let master = derive_seed(cell_seed, t as u64);
                let mut input_rng = substream(master, 0);
                let (labels, inputs): (Vec<usize>, Vec<Vec<f64>>) =
                    (0..k).map(|_| mixture.sample(&mut input_rng)).unzip();
                let model = PerturbationModel::new(sigma, derive_seed(master, 1))?;
                let batch = perturbed_encode(f, &inputs, &generator, &model)?;

                let mut results = TaskResults::new();
                for &task in &subset {
                    results.insert(task, f.forward(batch.task_input(task))?);
                }
                let estimates = decode_batch(&results, &generator, &subset)?;
                let truth = f.forward(&inputs[0])?;

                if sigma > 0.0 {
                    let eps = &model.noise_vectors(1, f.dim())[0];
                    let ratio = linalg::l2_dist(&estimates[0], &truth) / linalg::l2_norm(eps);
                    ratio_sum += ratio;
                    ratio_min = ratio_min.min(ratio);
                    ratio_max = ratio_max.max(ratio);
                    ratio_dev = ratio_dev.max((ratio - k as f64).abs());
                }
                normal_hits += (head.predict(&truth) == labels[0]) as usize;
                degraded_hits += (head.predict(&estimates[0]) == labels[0]) as usize;
            }

            let mut cell = ReportCell::new(format!("k={k},sigma={sigma}"));
            cell.set_param("k", k as u64);
            cell.set_param("sigma", sigma);
            let trials = cfg.trials as u64;
            if sigma > 0.0 {
                cell.add_metric("amplification_mean", ratio_sum / cfg.trials as f64, trials);
                cell.add_metric("amplification_min", ratio_min, trials);
                cell.add_metric("amplification_max", ratio_max, trials);
                cell.add_metric("amplification_max_abs_dev_from_k", ratio_dev, trials);
            }
            cell.add_metric("normal_accuracy", normal_hits as f64 / cfg.trials as f64, trials);
            cell.add_metric("degraded_accuracy", degraded_hits as f64 / cfg.trials as f64, trials);
            report.push(cell);
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rotation() -> InvertibleFunction {
        InvertibleFunction::rotation(2, std::f64::consts::FRAC_PI_6).unwrap()
    }

    #[test]
    fn linear_function_amplifies_by_exactly_k() {
        let cfg = AmplificationConfig {
            k_values: vec![2, 4, 10],
            sigma_values: vec![0.05, 0.2],
            trials: 30,
            seed: 17,
            ..AmplificationConfig::default()
        };
        let report = amplification_sweep(&rotation(), &cfg).unwrap();
        for cell in &report.cells {
            let dev = cell.metric("amplification_max_abs_dev_from_k").unwrap();
            assert!(dev <= 1e-6, "{}: dev {dev}", cell.label);
        }
    }

    #[test]
    fn zero_sigma_cells_match_normal_accuracy_and_omit_ratios() {
        let cfg = AmplificationConfig {
            k_values: vec![2, 4],
            sigma_values: vec![0.0],
            trials: 200,
            seed: 3,
            ..AmplificationConfig::default()
        };
        let report = amplification_sweep(&rotation(), &cfg).unwrap();
        for cell in &report.cells {
            assert_eq!(
                cell.metric("normal_accuracy"),
                cell.metric("degraded_accuracy"),
                "{}",
                cell.label
            );
            assert!(cell.metric("amplification_mean").is_none());
        }
    }

    #[test]
    fn degraded_accuracy_decays_with_k_at_fixed_sigma() {
        let cfg = AmplificationConfig {
            k_values: vec![2, 4, 10],
            sigma_values: vec![0.5],
            trials: 1000,
            seed: 11,
            ..AmplificationConfig::default()
        };
        let report = amplification_sweep(&rotation(), &cfg).unwrap();
        let acc: Vec<f64> =
            report.cells.iter().map(|c| c.metric("degraded_accuracy").unwrap()).collect();
        assert!(acc[0] >= acc[1] && acc[1] >= acc[2], "not monotone: {acc:?}");
        assert!(acc[0] > acc[2], "k=10 should hurt visibly: {acc:?}");
    }

    #[test]
    fn cells_do_not_depend_on_grid_composition() {
        let full = AmplificationConfig {
            k_values: vec![2, 4],
            sigma_values: vec![0.0, 0.2],
            trials: 50,
            seed: 9,
            ..AmplificationConfig::default()
        };
        let narrow = AmplificationConfig {
            k_values: vec![4],
            sigma_values: vec![0.2],
            ..full.clone()
        };
        let a = amplification_sweep(&rotation(), &full).unwrap();
        let b = amplification_sweep(&rotation(), &narrow).unwrap();
        assert_eq!(a.cell("k=4,sigma=0.2").unwrap(), b.cell("k=4,sigma=0.2").unwrap());
    }

    #[test]
    fn invalid_grids_are_rejected() {
        let f = rotation();
        let bad = AmplificationConfig { k_values: vec![], ..AmplificationConfig::default() };
        assert!(amplification_sweep(&f, &bad).is_err());
        let bad = AmplificationConfig { sigma_values: vec![-0.1], ..AmplificationConfig::default() };
        assert!(amplification_sweep(&f, &bad).is_err());
        let bad = AmplificationConfig { trials: 0, ..AmplificationConfig::default() };
        assert!(amplification_sweep(&f, &bad).is_err());
    }
}
