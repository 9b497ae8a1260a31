//! Exhaustive decodability audit: for a given code shape, decode from
//! every k-subset of tasks and record the embedding reconstruction error.
//! A subset whose submatrix is singular shows up as a failed cell rather
//! than aborting the sweep.

use rand_distr::{Distribution, StandardNormal};

use super::ExperimentError;
use super::report::{ExperimentReport, ReportCell};
use crate::code_matrix::{GeneratorMatrix, Scheme, next_combination};
use crate::codec::{TaskResults, decode_batch, ideal_encode};
use crate::invertible::InvertibleFunction;
use crate::linalg;
use crate::rng::substream;

/// Picks the code for the audit: the two-parity hand construction for
/// `(4, 2)`, the node-based construction otherwise.
fn scheme_for(n: usize, k: usize) -> Scheme {
    if (n, k) == (4, 2) { Scheme::Multi42 } else { Scheme::Vandermonde }
}

/// Runs `trials` batches of standard-normal inputs through every size-k
/// subset of the `(n, k)` code. Per cell: `decodable` (1 or 0),
/// `mean_error` and `max_error` (worst slot, sup norm, embedding space).
pub fn multi_failure_check(
    n: usize,
    k: usize,
    f: &InvertibleFunction,
    trials: usize,
    seed: u64,
) -> Result<ExperimentReport, ExperimentError> {
    if k == 0 || n < k {
        return Err(ExperimentError::Invalid(format!("need n >= k >= 1, got n = {n}, k = {k}")));
    }
    if n - k > 8 {
        return Err(ExperimentError::Invalid(format!(
            "{} parity rows make the subset sweep explode; keep n - k <= 8",
            n - k
        )));
    }
    if trials == 0 {
        return Err(ExperimentError::Invalid("trials must be >= 1".to_string()));
    }
    let scheme = scheme_for(n, k);
    let generator = GeneratorMatrix::build(n, k, scheme)?;
    let dim = f.dim();

    let mut report = ExperimentReport::new("multi_failure");
    report.set_param("n", n as u64);
    report.set_param("k", k as u64);
    report.set_param("scheme", generator.scheme().name());
    report.set_param("function", f.kind_name());
    report.set_param("trials", trials as u64);
    report.set_param("seed", seed);

    let mut idx: Vec<usize> = (0..k).collect();
    let mut cell_index = 0u64;
    loop {
        let subset: Vec<usize> = idx.iter().map(|i| i + 1).collect();
        let mut rng = substream(seed, cell_index);
        let label = subset.iter().map(ToString::to_string).collect::<Vec<_>>().join("+");
        let mut cell = ReportCell::new(format!("subset={label}"));
        cell.set_param("subset", &subset);

        match generator.subset_inverse(&subset) {
            Err(_) => {
                cell.add_metric("decodable", 0.0, 1);
            }
            Ok(_) => {
                let mut sum = 0.0;
                let mut max: f64 = 0.0;
                for _ in 0..trials {
                    let inputs: Vec<Vec<f64>> = (0..k)
                        .map(|_| (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect())
                        .collect();
                    let batch = ideal_encode(f, &inputs, &generator)?;
                    let mut results = TaskResults::new();
                    for &task in &subset {
                        results.insert(task, f.forward(batch.task_input(task))?);
                    }
                    let estimates = decode_batch(&results, &generator, &subset)?;
                    for (est, x) in estimates.iter().zip(&inputs) {
                        let err = linalg::linf_dist(est, &f.forward(x)?);
                        sum += err;
                        max = max.max(err);
                    }
                }
                let samples = (trials * k) as u64;
                cell.add_metric("decodable", 1.0, 1);
                cell.add_metric("mean_error", sum / samples as f64, samples);
                cell.add_metric("max_error", max, samples);
            }
        }
        report.push(cell);
        cell_index += 1;
        if !next_combination(&mut idx, n) {
            break;
        }
    }
    Ok(report)
}
