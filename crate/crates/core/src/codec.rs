//! Encoding parity inputs and decoding worker results.
//!
//! Encoding happens in embedding space: the parity task `k + i` gets input
//! `f⁻¹(Σⱼ c_{i,j} · f(xⱼ))`, so a worker that simply applies `f` to it
//! produces the coded combination `Σⱼ c_{i,j} · f(xⱼ)` without knowing it
//! participates in a code. Decoding inverts the generator submatrix of
//! whichever `k` tasks answered first.

use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;
use thiserror::Error;

use crate::code_matrix::{CodeMatrixError, GeneratorMatrix};
use crate::invertible::{InvertibleError, InvertibleFunction};
use crate::linalg;
use crate::rng;
use crate::serving::DownstreamHead;

/// Worker results keyed by 1-based task index.
pub type TaskResults = BTreeMap<usize, Vec<f64>>;

#[derive(Debug, Error)]
pub enum CodecError {
    #[error(transparent)]
    Function(#[from] InvertibleError),
    #[error(transparent)]
    Matrix(#[from] CodeMatrixError),
    #[error("task {0} was already received")]
    DuplicateTask(usize),
    #[error("task index {task} out of range 1..={n}")]
    TaskOutOfRange { task: usize, n: usize },
    #[error("need {expected} inputs, got {got}")]
    WrongInputCount { expected: usize, got: usize },
    #[error("input {index} has dimension {got}, function expects {expected}")]
    InputDimension { index: usize, got: usize, expected: usize },
    #[error("no result for task {0}")]
    MissingResult(usize),
    #[error("result for task {task} has dimension {got}, expected {expected}")]
    ResultDimension { task: usize, got: usize, expected: usize },
    #[error("decoder is not complete: {got} of {need} results")]
    NotEnoughResults { got: usize, need: usize },
    #[error("online decoding needs the single-parity uniform code (n = k + 1), got n = {n}, k = {k}")]
    UnsupportedCode { n: usize, k: usize },
    #[error("noise sigma must be finite and >= 0, got {0}")]
    InvalidSigma(f64),
}

/// Isotropic Gaussian noise injected into parity embeddings, modeling an
/// imperfect (learned) encoder. `sigma = 0` reproduces the ideal encoder
/// bit for bit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerturbationModel {
    pub sigma: f64,
    pub seed: u64,
}

impl PerturbationModel {
    pub fn new(sigma: f64, seed: u64) -> Result<Self, CodecError> {
        if !(sigma.is_finite() && sigma >= 0.0) {
            return Err(CodecError::InvalidSigma(sigma));
        }
        Ok(PerturbationModel { sigma, seed })
    }

    /// The noise vectors `ε₁, ..., ε_count` this model injects, in parity
    /// order. Exposed so tests and experiments can compare recovered noise
    /// against the exact draw. Draw order: vector by vector, coordinate by
    /// coordinate.
    pub fn noise_vectors(&self, count: usize, dim: usize) -> Vec<Vec<f64>> {
        let mut rng = rng::from_seed(self.seed);
        (0..count)
            .map(|_| (0..dim).map(|_| self.sigma * rng.sample::<f64, _>(StandardNormal)).collect())
            .collect()
    }
}

/// A query's worth of worker inputs: the `k` originals plus `n − k`
/// synthesized parity inputs.
#[derive(Debug, Clone)]
pub struct EncodedBatch {
    pub generator: GeneratorMatrix,
    /// The original inputs `x₁, ..., x_k`.
    pub inputs: Vec<Vec<f64>>,
    /// Parity inputs `x_{k+1}, ..., x_n`.
    pub parity_inputs: Vec<Vec<f64>>,
}

impl EncodedBatch {
    pub fn n(&self) -> usize {
        self.generator.n()
    }

    pub fn k(&self) -> usize {
        self.generator.k()
    }

    pub fn dim(&self) -> usize {
        self.inputs[0].len()
    }

    /// Input for task `task` (1-based; parity tasks come after the `k`
    /// originals).
    pub fn task_input(&self, task: usize) -> &[f64] {
        let k = self.k();
        assert!((1..=self.n()).contains(&task), "task {task} out of 1..={}", self.n());
        if task <= k { &self.inputs[task - 1] } else { &self.parity_inputs[task - 1 - k] }
    }

    /// Largest `‖f(x_{k+i}) − Σⱼ c_{i,j} f(xⱼ)‖∞` over parity tasks: how far
    /// the batch strays from the coding identity (0 for an ideal encode up
    /// to inversion error).
    pub fn embedding_defect(&self, f: &InvertibleFunction) -> Result<f64, CodecError> {
        let embeddings: Vec<Vec<f64>> =
            self.inputs.iter().map(|x| f.forward(x)).collect::<Result<_, _>>()?;
        let mut worst = 0.0f64;
        for (parity_input, row) in self.parity_inputs.iter().zip(self.generator.parity_rows()) {
            let actual = f.forward(parity_input)?;
            let target = combine(row, &embeddings);
            worst = worst.max(linalg::linf_dist(&actual, &target));
        }
        Ok(worst)
    }
}

/// `Σⱼ coeffs[j] · vectors[j]`.
fn combine(coeffs: &[f64], vectors: &[Vec<f64>]) -> Vec<f64> {
    let dim = vectors[0].len();
    let mut out = vec![0.0; dim];
    for (&c, v) in coeffs.iter().zip(vectors) {
        for (o, &x) in out.iter_mut().zip(v) {
            *o += c * x;
        }
    }
    out
}

fn check_inputs(
    f: &InvertibleFunction,
    inputs: &[Vec<f64>],
    generator: &GeneratorMatrix,
) -> Result<(), CodecError> {
    if inputs.len() != generator.k() {
        return Err(CodecError::WrongInputCount { expected: generator.k(), got: inputs.len() });
    }
    for (i, x) in inputs.iter().enumerate() {
        if x.len() != f.dim() {
            return Err(CodecError::InputDimension { index: i + 1, got: x.len(), expected: f.dim() });
        }
    }
    Ok(())
}

/// Encodes parity inputs exactly: `x_{k+i} = f⁻¹(Σⱼ c_{i,j} f(xⱼ))`.
pub fn ideal_encode(
    f: &InvertibleFunction,
    inputs: &[Vec<f64>],
    generator: &GeneratorMatrix,
) -> Result<EncodedBatch, CodecError> {
    check_inputs(f, inputs, generator)?;
    let embeddings: Vec<Vec<f64>> = inputs.iter().map(|x| f.forward(x)).collect::<Result<_, _>>()?;
    let parity_inputs = generator
        .parity_rows()
        .iter()
        .map(|row| Ok(f.inverse(&combine(row, &embeddings))?.x))
        .collect::<Result<Vec<_>, CodecError>>()?;
    Ok(EncodedBatch { generator: generator.clone(), inputs: inputs.to_vec(), parity_inputs })
}

/// Like [`ideal_encode`] but adds `ε ~ N(0, σ²I)` to each parity embedding
/// before pulling it back through `f⁻¹`. With `sigma = 0` the noise branch
/// is skipped entirely, so the result is bitwise identical to the ideal
/// encoder's.
pub fn perturbed_encode(
    f: &InvertibleFunction,
    inputs: &[Vec<f64>],
    generator: &GeneratorMatrix,
    model: &PerturbationModel,
) -> Result<EncodedBatch, CodecError> {
    if model.sigma == 0.0 {
        return ideal_encode(f, inputs, generator);
    }
    if !(model.sigma.is_finite() && model.sigma > 0.0) {
        return Err(CodecError::InvalidSigma(model.sigma));
    }
    check_inputs(f, inputs, generator)?;
    let embeddings: Vec<Vec<f64>> = inputs.iter().map(|x| f.forward(x)).collect::<Result<_, _>>()?;
    let noise = model.noise_vectors(generator.n() - generator.k(), f.dim());
    let parity_inputs = generator
        .parity_rows()
        .iter()
        .zip(&noise)
        .map(|(row, eps)| {
            let target = linalg::vec_add(&combine(row, &embeddings), eps);
            Ok(f.inverse(&target)?.x)
        })
        .collect::<Result<Vec<_>, CodecError>>()?;
    Ok(EncodedBatch { generator: generator.clone(), inputs: inputs.to_vec(), parity_inputs })
}

/// Recovers estimates of `f(x₁), ..., f(x_k)` from the results of the tasks
/// in `subset`. The all-systematic subset `{1, ..., k}` returns the received
/// results verbatim (no arithmetic, hence bitwise).
pub fn decode_batch(
    results: &TaskResults,
    generator: &GeneratorMatrix,
    subset: &[usize],
) -> Result<Vec<Vec<f64>>, CodecError> {
    let k = generator.k();
    let dim = results
        .values()
        .next()
        .map(Vec::len)
        .ok_or(CodecError::NotEnoughResults { got: 0, need: k })?;
    let mut stacked = Vec::with_capacity(subset.len());
    let mut sorted = subset.to_vec();
    sorted.sort_unstable();
    for &task in &sorted {
        let value = results.get(&task).ok_or(CodecError::MissingResult(task))?;
        if value.len() != dim {
            return Err(CodecError::ResultDimension { task, got: value.len(), expected: dim });
        }
        stacked.push(value.clone());
    }
    if sorted.iter().copied().eq(1..=k) {
        return Ok(stacked);
    }
    let inverse = generator.subset_inverse(&sorted)?;
    Ok(inverse.apply(&stacked))
}

/// Classifies a single recovered embedding. "Degraded" because the estimate
/// came through the parity path rather than straight from a worker.
pub fn degraded_inference(head: &DownstreamHead, estimate: &[f64]) -> usize {
    head.predict(estimate)
}

/// Arithmetic performed on decoder state, counted in whole-vector units.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct OpCounts {
    pub scalar_vector_mults: u64,
    pub vector_subtractions: u64,
}

/// Event-driven decoder for the single-parity uniform code (`n = k + 1`).
///
/// Rather than waiting for `k` results and solving a system, it keeps one
/// shared accumulator for all not-yet-finalized estimates. A systematic
/// result finalizes its own slot verbatim and costs one vector subtraction
/// from the accumulator; the parity result costs the single scalar-vector
/// multiplication `acc += k · v`. Whichever order events arrive in, a query
/// resolved through the parity row costs exactly 1 multiplication and
/// `k − 1` subtractions.
///
/// Finalized estimates never change on later events.
#[derive(Debug, Clone)]
pub struct OnlineDecoder {
    k: usize,
    dim: usize,
    estimates: Vec<Vec<f64>>,
    finalized: Vec<bool>,
    received: Vec<bool>,
    received_count: usize,
    parity_received: bool,
    complete: bool,
    acc: Vec<f64>,
    ops: OpCounts,
}

impl OnlineDecoder {
    pub fn new(generator: &GeneratorMatrix, dim: usize) -> Result<Self, CodecError> {
        let (n, k) = (generator.n(), generator.k());
        let uniform_parity = n == k + 1
            && generator.parity_rows()[0].iter().all(|&c| c == 1.0 / k as f64);
        if !uniform_parity {
            return Err(CodecError::UnsupportedCode { n, k });
        }
        Ok(OnlineDecoder {
            k,
            dim,
            estimates: vec![Vec::new(); k],
            finalized: vec![false; k],
            received: vec![false; n],
            received_count: 0,
            parity_received: false,
            complete: false,
            acc: vec![0.0; dim],
            ops: OpCounts::default(),
        })
    }

    /// Feeds one completion event `(task, f(task input))`.
    pub fn update(&mut self, task: usize, value: &[f64]) -> Result<(), CodecError> {
        let n = self.k + 1;
        if !(1..=n).contains(&task) {
            return Err(CodecError::TaskOutOfRange { task, n });
        }
        if value.len() != self.dim {
            return Err(CodecError::ResultDimension { task, got: value.len(), expected: self.dim });
        }
        if self.received[task - 1] {
            return Err(CodecError::DuplicateTask(task));
        }
        self.received[task - 1] = true;
        self.received_count += 1;
        if task <= self.k {
            self.estimates[task - 1] = value.to_vec();
            self.finalized[task - 1] = true;
            // The accumulator only matters while someone still needs it.
            if self.finalized.iter().any(|&f| !f) {
                for (a, &v) in self.acc.iter_mut().zip(value) {
                    *a -= v;
                }
                self.ops.vector_subtractions += 1;
            }
        } else {
            self.parity_received = true;
            if self.finalized.iter().any(|&f| !f) {
                let kf = self.k as f64;
                for (a, &v) in self.acc.iter_mut().zip(value) {
                    *a += kf * v;
                }
                self.ops.scalar_vector_mults += 1;
            }
        }
        if self.received_count >= self.k && !self.complete {
            // At most one slot is still open (n = k + 1): it takes the
            // accumulator value k·parity − Σ received systematic.
            for i in 0..self.k {
                if !self.finalized[i] {
                    self.estimates[i] = self.acc.clone();
                    self.finalized[i] = true;
                }
            }
        }
        self.complete = self.finalized.iter().all(|&f| f);
        Ok(())
    }

    pub fn is_complete(&self) -> bool {
        self.complete
    }

    pub fn received_count(&self) -> usize {
        self.received_count
    }

    pub fn is_finalized(&self, index: usize) -> bool {
        assert!((1..=self.k).contains(&index));
        self.finalized[index - 1]
    }

    /// Current estimate of `f(x_index)`: the finalized value, or the shared
    /// running estimate once the parity result is in. `None` before any
    /// information about this slot exists.
    pub fn estimate(&self, index: usize) -> Option<&[f64]> {
        assert!((1..=self.k).contains(&index));
        if self.finalized[index - 1] {
            Some(&self.estimates[index - 1])
        } else if self.parity_received {
            Some(&self.acc)
        } else {
            None
        }
    }

    /// All `k` estimates; errors until [`Self::is_complete`].
    pub fn estimates(&self) -> Result<Vec<Vec<f64>>, CodecError> {
        if !self.complete {
            return Err(CodecError::NotEnoughResults { got: self.received_count, need: self.k });
        }
        Ok(self.estimates.clone())
    }

    pub fn ops(&self) -> OpCounts {
        self.ops
    }
}
