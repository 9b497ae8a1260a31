//! Classification heads applied to recovered embeddings, plus the synthetic
//! labeled mixture the experiments classify.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::ServingError;
use crate::linalg;

/// Spread of each class cloud in [`ClassMixture::circle`].
pub const MIXTURE_SIGMA: f64 = 0.5;

/// Radius of the circle the class means sit on.
pub const MIXTURE_RADIUS: f64 = 3.0;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum HeadKind {
    NearestMean { means: Vec<Vec<f64>> },
    LinearSoftmax { weights: Vec<Vec<f64>>, bias: Vec<f64> },
}

/// Maps an embedding to a class label. Ties break toward the lowest class
/// index, so predictions are deterministic down to the bit.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DownstreamHead {
    kind: HeadKind,
}

impl DownstreamHead {
    /// Classifies to the nearest of the given class means.
    pub fn nearest_mean(means: Vec<Vec<f64>>) -> Result<Self, ServingError> {
        if means.is_empty() {
            return Err(ServingError::InvalidHead("need at least one class mean".into()));
        }
        let dim = means[0].len();
        if dim == 0 || means.iter().any(|m| m.len() != dim) {
            return Err(ServingError::InvalidHead("class means must share one nonzero dimension".into()));
        }
        Ok(DownstreamHead { kind: HeadKind::NearestMean { means } })
    }

    /// Classifies by `argmax(W·x + b)`. Softmax itself is monotone, so the
    /// exponentials never need computing.
    pub fn linear_softmax(weights: Vec<Vec<f64>>, bias: Vec<f64>) -> Result<Self, ServingError> {
        if weights.is_empty() {
            return Err(ServingError::InvalidHead("need at least one class row".into()));
        }
        let dim = weights[0].len();
        if dim == 0 || weights.iter().any(|w| w.len() != dim) || bias.len() != weights.len() {
            return Err(ServingError::InvalidHead("weight rows and bias must agree".into()));
        }
        Ok(DownstreamHead { kind: HeadKind::LinearSoftmax { weights, bias } })
    }

    pub fn classes(&self) -> usize {
        match &self.kind {
            HeadKind::NearestMean { means } => means.len(),
            HeadKind::LinearSoftmax { weights, .. } => weights.len(),
        }
    }

    pub fn dim(&self) -> usize {
        match &self.kind {
            HeadKind::NearestMean { means } => means[0].len(),
            HeadKind::LinearSoftmax { weights, .. } => weights[0].len(),
        }
    }

    /// Predicted class for `x`. Panics on dimension mismatch; validate
    /// once at configuration time, not per query.
    pub fn predict(&self, x: &[f64]) -> usize {
        assert_eq!(x.len(), self.dim(), "embedding dimension mismatch");
        match &self.kind {
            HeadKind::NearestMean { means } => {
                let mut best = 0;
                let mut best_d = sq_dist(x, &means[0]);
                for (c, m) in means.iter().enumerate().skip(1) {
                    let d = sq_dist(x, m);
                    if d < best_d {
                        best = c;
                        best_d = d;
                    }
                }
                best
            }
            HeadKind::LinearSoftmax { weights, bias } => {
                let mut best = 0;
                let mut best_s = linalg::dot(&weights[0], x) + bias[0];
                for c in 1..weights.len() {
                    let s = linalg::dot(&weights[c], x) + bias[c];
                    if s > best_s {
                        best = c;
                        best_s = s;
                    }
                }
                best
            }
        }
    }

    /// Flop accounting for one prediction, used to charge deterministic
    /// virtual time in the simulator.
    pub fn prediction_flops(&self) -> u64 {
        let (c, d) = (self.classes() as u64, self.dim() as u64);
        match &self.kind {
            HeadKind::NearestMean { .. } => c * (3 * d + 1),
            HeadKind::LinearSoftmax { .. } => c * (2 * d + 1),
        }
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Equal-prior Gaussian class clouds with isotropic spread around fixed
/// means. The matching nearest-mean head is Bayes-optimal for this data,
/// which makes accuracy numbers interpretable.
#[derive(Debug, Clone)]
pub struct ClassMixture {
    means: Vec<Vec<f64>>,
    sigma: f64,
}

impl ClassMixture {
    /// `classes` means spaced evenly on a radius-[`MIXTURE_RADIUS`] circle
    /// in the first two coordinates (zero elsewhere), spread
    /// [`MIXTURE_SIGMA`].
    pub fn circle(classes: usize, dim: usize) -> Result<Self, ServingError> {
        if classes < 2 || dim < 2 {
            return Err(ServingError::InvalidHead("mixture needs >= 2 classes and dim >= 2".into()));
        }
        let means = (0..classes)
            .map(|c| {
                let angle = 2.0 * std::f64::consts::PI * c as f64 / classes as f64;
                let mut m = vec![0.0; dim];
                m[0] = MIXTURE_RADIUS * angle.cos();
                m[1] = MIXTURE_RADIUS * angle.sin();
                m
            })
            .collect();
        Ok(ClassMixture { means, sigma: MIXTURE_SIGMA })
    }

    pub fn classes(&self) -> usize {
        self.means.len()
    }

    pub fn dim(&self) -> usize {
        self.means[0].len()
    }

    pub fn means(&self) -> &[Vec<f64>] {
        &self.means
    }

    /// One labeled draw: uniform class, then mean + σ·z.
    pub fn sample(&self, rng: &mut impl Rng) -> (usize, Vec<f64>) {
        let label = rng.random_range(0..self.means.len());
        let x = self.means[label]
            .iter()
            .map(|&m| m + self.sigma * rng.sample::<f64, _>(StandardNormal))
            .collect();
        (label, x)
    }

    /// The matched nearest-mean head.
    pub fn head(&self) -> DownstreamHead {
        DownstreamHead::nearest_mean(self.means.clone()).expect("mixture means are valid")
    }

    /// The matched head transported to embedding space: class means pushed
    /// through `f`. For a rotation this is again Bayes-optimal, since
    /// distances are preserved.
    pub fn head_through(
        &self,
        f: &crate::invertible::InvertibleFunction,
    ) -> Result<DownstreamHead, ServingError> {
        let means: Vec<Vec<f64>> =
            self.means.iter().map(|m| f.forward(m)).collect::<Result<_, _>>()?;
        DownstreamHead::nearest_mean(means)
    }

    /// An equivalent linear head: for equal-prior isotropic Gaussians the
    /// Bayes rule is linear with `w_c = m_c/σ²`, `b_c = −‖m_c‖²/(2σ²)`.
    pub fn linear_head(&self) -> DownstreamHead {
        let s2 = self.sigma * self.sigma;
        let weights: Vec<Vec<f64>> =
            self.means.iter().map(|m| m.iter().map(|x| x / s2).collect()).collect();
        let bias: Vec<f64> = self.means.iter().map(|m| -linalg::dot(m, m) / (2.0 * s2)).collect();
        DownstreamHead::linear_softmax(weights, bias).expect("mixture means are valid")
    }
}
