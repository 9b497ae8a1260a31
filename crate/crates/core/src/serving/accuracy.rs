//! End-to-end accuracy of degraded inference: how often the label computed
//! from a parity-path reconstruction matches the label computed from the
//! worker's own output.

use rand::Rng;

use super::ServingError;
use super::head::ClassMixture;
use crate::code_matrix::{GeneratorMatrix, Scheme};
use crate::codec::{PerturbationModel, TaskResults, decode_batch, perturbed_encode};
use crate::invertible::InvertibleFunction;
use crate::rng::{derive_seed, substream};

/// Accuracy measured on the victim slot across trials. Both rates count
/// the same slots, so with exact recovery they are equal by construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AccuracyOutcome {
    pub trials: usize,
    /// Label from the victim's true output vs the mixture label.
    pub normal_accuracy: f64,
    /// Label from the victim's reconstruction vs the mixture label.
    pub degraded_accuracy: f64,
}

/// Runs `trials` single-straggler recoveries over a `(k + 1, k)` uniform
/// code. Each trial draws `k` fresh labeled inputs, encodes with noise
/// level `sigma`, removes one uniformly chosen systematic task, decodes
/// from the rest, and classifies the missing slot both ways.
///
/// Seeding is per trial: trial `t` derives its own input, noise, and
/// victim streams from `derive_seed(seed, t)`, so results do not depend
/// on trial order or count.
pub fn degraded_accuracy(
    f: &InvertibleFunction,
    k: usize,
    sigma: f64,
    classes: usize,
    trials: usize,
    seed: u64,
) -> Result<AccuracyOutcome, ServingError> {
    if trials == 0 {
        return Err(ServingError::EmptyInput("trials must be positive"));
    }
    let generator = GeneratorMatrix::build(k + 1, k, Scheme::Uniform)
        .map_err(crate::codec::CodecError::from)?;
    let mixture = ClassMixture::circle(classes, f.dim())?;
    // Classification happens on embeddings, so the head's means live in
    // embedding space too.
    let head = mixture.head_through(f)?;

    let mut normal_hits = 0usize;
    let mut degraded_hits = 0usize;
    for t in 0..trials {
        let master = derive_seed(seed, t as u64);
        let mut input_rng = substream(master, 0);
        let (labels, inputs): (Vec<usize>, Vec<Vec<f64>>) =
            (0..k).map(|_| mixture.sample(&mut input_rng)).unzip();
        let model = PerturbationModel::new(sigma, derive_seed(master, 1))?;
        let batch = perturbed_encode(f, &inputs, &generator, &model)?;
        let victim = substream(master, 2).random_range(1..=k);

        let mut results = TaskResults::new();
        for task in (1..=k + 1).filter(|&t| t != victim) {
            results.insert(task, f.forward(batch.task_input(task))?);
        }
        let subset: Vec<usize> = results.keys().copied().collect();
        let estimates = decode_batch(&results, &generator, &subset)?;

        let truth = labels[victim - 1];
        let normal = head.predict(&f.forward(&inputs[victim - 1])?);
        let degraded = head.predict(&estimates[victim - 1]);
        normal_hits += (normal == truth) as usize;
        degraded_hits += (degraded == truth) as usize;
    }
    Ok(AccuracyOutcome {
        trials,
        normal_accuracy: normal_hits as f64 / trials as f64,
        degraded_accuracy: degraded_hits as f64 / trials as f64,
    })
}
