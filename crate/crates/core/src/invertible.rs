//! Invertible function families used as the computation being served.
//!
//! Four families, increasing in nonlinearity:
//!
//! - rotations (linear, orthogonal, exact closed-form inverse),
//! - affine maps (linear, exact inverse via a precomputed matrix inverse),
//! - additive coupling stacks (nonlinear, exact one-pass inverse),
//! - contractive residual chains (nonlinear, inverted by fixed-point
//!   iteration).
//!
//! Parameterized families are generated from a `u64` seed, and their
//! serialized form stores only the recipe `{kind, dim, seed, ...}`; loading
//! regenerates the weights bit-for-bit.

use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg;
use crate::rng;

/// Fixed-point iteration stops once the step shrinks below this.
pub const STEP_TOL: f64 = 1e-12;

/// Iteration cap per residual block.
pub const MAX_FIXED_POINT_ITERS: usize = 200;

/// An inverse is accepted only if `‖f(x) − y‖∞` ends up below this.
pub const RESIDUAL_TOL: f64 = 1e-8;

#[derive(Debug, Error)]
pub enum InvertibleError {
    #[error("dimension mismatch: function has dim {expected}, input has {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("fixed-point inversion stopped after {iterations} iterations with residual {residual:.3e}")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("matrix is singular (|det| = {det:.3e})")]
    SingularMatrix { det: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

/// Pointwise activations for shift nets and residual blocks. Both variants
/// are 1-Lipschitz, which is what keeps the residual-block contraction
/// bound honest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    /// `ln(1 + eˣ)`, evaluated in its overflow-free form.
    Softplus,
    /// Pass-through, for exactly linear blocks.
    Identity,
}

impl Activation {
    pub fn apply(self, x: f64) -> f64 {
        match self {
            // x + ln(1 + e⁻ˣ) for positive x avoids eˣ overflow; the mirror
            // form covers the negative side.
            Activation::Softplus => {
                if x > 0.0 {
                    x + (-x).exp().ln_1p()
                } else {
                    x.exp().ln_1p()
                }
            }
            Activation::Identity => x,
        }
    }

    pub fn lipschitz(self) -> f64 {
        1.0
    }
}

/// One additive coupling layer. The input splits into halves `(a, b)`
/// (first half gets the extra coordinate on odd dims); the layer shifts one
/// half by a small network of the other:
///
/// - `swap = false`: `(a, b) → (a, b + t(a))`
/// - `swap = true`:  `(a, b) → (a + t(b), b)`
///
/// Either way the inverse just subtracts the same shift, so inversion is
/// exact in one pass.
#[derive(Debug, Clone)]
pub struct CouplingLayer {
    w1: Vec<Vec<f64>>,
    b1: Vec<f64>,
    w2: Vec<Vec<f64>>,
    b2: Vec<f64>,
    activation: Activation,
    swap: bool,
}

impl CouplingLayer {
    /// `w1`: hidden × source-half, `w2`: target-half × hidden.
    pub fn new(
        w1: Vec<Vec<f64>>,
        b1: Vec<f64>,
        w2: Vec<Vec<f64>>,
        b2: Vec<f64>,
        activation: Activation,
        swap: bool,
    ) -> Result<Self, InvertibleError> {
        let hidden = w1.len();
        if hidden == 0 || w1.iter().any(|r| r.len() != w1[0].len()) || b1.len() != hidden {
            return Err(InvertibleError::InvalidParameter("shift net w1/b1 shapes disagree".into()));
        }
        if w2.iter().any(|r| r.len() != hidden) || b2.len() != w2.len() {
            return Err(InvertibleError::InvalidParameter("shift net w2/b2 shapes disagree".into()));
        }
        Ok(CouplingLayer { w1, b1, w2, b2, activation, swap })
    }

    fn shift(&self, source: &[f64]) -> Vec<f64> {
        let hidden: Vec<f64> = self
            .w1
            .iter()
            .zip(&self.b1)
            .map(|(row, &b)| self.activation.apply(linalg::dot(row, source) + b))
            .collect();
        self.w2
            .iter()
            .zip(&self.b2)
            .map(|(row, &b)| linalg::dot(row, &hidden) + b)
            .collect()
    }

    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        let split = x.len() - x.len() / 2;
        let (a, b) = x.split_at(split);
        if self.swap {
            let t = self.shift(b);
            let mut out: Vec<f64> = a.iter().zip(&t).map(|(x, s)| x + s).collect();
            out.extend_from_slice(b);
            out
        } else {
            let t = self.shift(a);
            let mut out = a.to_vec();
            out.extend(b.iter().zip(&t).map(|(x, s)| x + s));
            out
        }
    }

    pub fn inverse(&self, y: &[f64]) -> Vec<f64> {
        let split = y.len() - y.len() / 2;
        let (a, b) = y.split_at(split);
        if self.swap {
            let t = self.shift(b);
            let mut out: Vec<f64> = a.iter().zip(&t).map(|(y, s)| y - s).collect();
            out.extend_from_slice(b);
            out
        } else {
            let t = self.shift(a);
            let mut out = a.to_vec();
            out.extend(b.iter().zip(&t).map(|(y, s)| y - s));
            out
        }
    }
}

/// One contractive residual block `x → x + g(x)` with
/// `g(x) = scale · W2 · act(W1 · x)`.
///
/// `W1` and `W2` are divided by their power-iteration spectral norms at
/// construction, so `g` is `scale`-Lipschitz (activation is 1-Lipschitz)
/// and `scale < 1` makes `x → y − g(x)` a contraction.
#[derive(Debug, Clone)]
pub struct ResidualBlock {
    w1: Vec<Vec<f64>>,
    w2: Vec<Vec<f64>>,
    scale: f64,
    activation: Activation,
}

/// Iterations spent inverting one block, alongside the result.
#[derive(Debug, Clone)]
pub struct BlockInversion {
    pub x: Vec<f64>,
    pub iterations: usize,
}

impl ResidualBlock {
    /// `w1`: hidden × dim, `w2`: dim × hidden; both get normalized here.
    pub fn new(
        w1: Vec<Vec<f64>>,
        w2: Vec<Vec<f64>>,
        scale: f64,
        activation: Activation,
    ) -> Result<Self, InvertibleError> {
        if !(scale > 0.0 && scale < 1.0) {
            return Err(InvertibleError::InvalidParameter(format!(
                "contraction scale must lie in (0, 1), got {scale}"
            )));
        }
        let dim = w2.len();
        let hidden = w1.len();
        if hidden == 0
            || dim == 0
            || w1.iter().any(|r| r.len() != dim)
            || w2.iter().any(|r| r.len() != hidden)
        {
            return Err(InvertibleError::InvalidParameter("residual block w1/w2 shapes disagree".into()));
        }
        let normalize = |m: Vec<Vec<f64>>| {
            let norm = linalg::spectral_norm(&m, 100);
            if norm == 0.0 {
                m
            } else {
                m.into_iter().map(|r| r.into_iter().map(|x| x / norm).collect()).collect()
            }
        };
        Ok(ResidualBlock { w1: normalize(w1), w2: normalize(w2), scale, activation })
    }

    pub fn dim(&self) -> usize {
        self.w2.len()
    }

    /// The advertised Lipschitz bound of `g` (the contraction scale).
    pub fn lipschitz_bound(&self) -> f64 {
        self.scale
    }

    /// `g(x) = scale · W2 · act(W1 · x)`.
    pub fn residual(&self, x: &[f64]) -> Vec<f64> {
        let hidden: Vec<f64> = self.w1.iter().map(|row| self.activation.apply(linalg::dot(row, x))).collect();
        self.w2.iter().map(|row| self.scale * linalg::dot(row, &hidden)).collect()
    }

    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        linalg::vec_add(x, &self.residual(x))
    }

    /// Solves `x + g(x) = y` by iterating `x ← y − g(x)` from `x₀ = y`.
    /// Stops when the step drops below [`STEP_TOL`] or after
    /// [`MAX_FIXED_POINT_ITERS`]; the caller judges the final residual.
    pub fn invert(&self, y: &[f64]) -> BlockInversion {
        let mut x = y.to_vec();
        for iteration in 1..=MAX_FIXED_POINT_ITERS {
            let next = linalg::vec_sub(y, &self.residual(&x));
            let step = linalg::linf_dist(&next, &x);
            x = next;
            if step <= STEP_TOL {
                return BlockInversion { x, iterations: iteration };
            }
        }
        BlockInversion { x, iterations: MAX_FIXED_POINT_ITERS }
    }

    /// Power-iteration estimate of the block's Lipschitz constant:
    /// `scale · Lip(act) · ‖W2 · W1‖₂`. Nondecreasing in `iters`.
    pub fn estimate_lipschitz(&self, iters: usize) -> f64 {
        let composed = linalg::mat_mul(&self.w2, &self.w1);
        self.scale * self.activation.lipschitz() * linalg::spectral_norm(&composed, iters)
    }
}

/// Serialized form, tagged by `kind`. Parameterized families store only
/// their generation recipe.
#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum FunctionJson {
    Rotation { dim: usize, theta: f64 },
    Affine { dim: usize, matrix: Vec<Vec<f64>>, bias: Vec<f64> },
    Coupling { dim: usize, seed: u64, layers: usize, hidden: usize },
    ContractiveResidual { dim: usize, seed: u64, blocks: usize, hidden: usize, scale: f64 },
}

#[derive(Debug, Clone)]
enum FunctionKind {
    Rotation { theta: f64 },
    Affine { matrix: Vec<Vec<f64>>, bias: Vec<f64>, inverse: Vec<Vec<f64>> },
    Coupling { seed: u64, hidden: usize, layers: Vec<CouplingLayer> },
    ContractiveResidual { seed: u64, hidden: usize, scale: f64, blocks: Vec<ResidualBlock> },
}

/// A bijection on `R^dim` with a forward map and an inverse.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "FunctionJson", into = "FunctionJson")]
pub struct InvertibleFunction {
    dim: usize,
    kind: FunctionKind,
}

/// Result of an inverse evaluation. `iterations` counts fixed-point steps
/// (0 for closed-form inverses).
#[derive(Debug, Clone)]
pub struct Inversion {
    pub x: Vec<f64>,
    pub iterations: usize,
}

impl InvertibleFunction {
    /// Planar rotation by `theta` applied to coordinate pairs `(0,1)`,
    /// `(2,3)`, ...; a trailing odd coordinate passes through.
    pub fn rotation(dim: usize, theta: f64) -> Result<Self, InvertibleError> {
        if dim == 0 {
            return Err(InvertibleError::InvalidParameter("dim must be at least 1".into()));
        }
        if !theta.is_finite() {
            return Err(InvertibleError::InvalidParameter("theta must be finite".into()));
        }
        Ok(InvertibleFunction { dim, kind: FunctionKind::Rotation { theta } })
    }

    /// `x → A·x + b` with `A` invertible (`|det A| > 1e-9`).
    pub fn affine(matrix: Vec<Vec<f64>>, bias: Vec<f64>) -> Result<Self, InvertibleError> {
        let dim = matrix.len();
        if dim == 0 || matrix.iter().any(|r| r.len() != dim) || bias.len() != dim {
            return Err(InvertibleError::InvalidParameter("affine matrix must be square with matching bias".into()));
        }
        let det = linalg::determinant(&matrix);
        if det.abs() <= 1e-9 {
            return Err(InvertibleError::SingularMatrix { det });
        }
        let inverse = linalg::invert(&matrix).ok_or(InvertibleError::SingularMatrix { det })?;
        Ok(InvertibleFunction { dim, kind: FunctionKind::Affine { matrix, bias, inverse } })
    }

    /// A stack of `layers` additive coupling layers with softplus shift
    /// nets, weights drawn from `seed`. Layers alternate which half they
    /// shift so both halves get mixed.
    pub fn coupling(dim: usize, layers: usize, hidden: usize, seed: u64) -> Result<Self, InvertibleError> {
        if dim < 2 {
            return Err(InvertibleError::InvalidParameter("coupling needs dim >= 2".into()));
        }
        if layers == 0 || hidden == 0 {
            return Err(InvertibleError::InvalidParameter("coupling needs layers >= 1 and hidden >= 1".into()));
        }
        let mut rng = rng::from_seed(seed);
        let split = dim - dim / 2;
        let built = (0..layers)
            .map(|i| {
                let swap = i % 2 == 1;
                let (src, dst) = if swap { (dim - split, split) } else { (split, dim - split) };
                // Draw order is part of the format: w1 rows, b1, w2 rows, b2.
                let w1 = gaussian_matrix(hidden, src, (1.0 / src as f64).sqrt(), &mut rng);
                let b1 = gaussian_vec(hidden, 0.1, &mut rng);
                let w2 = gaussian_matrix(dst, hidden, (1.0 / hidden as f64).sqrt(), &mut rng);
                let b2 = gaussian_vec(dst, 0.1, &mut rng);
                CouplingLayer::new(w1, b1, w2, b2, Activation::Softplus, swap)
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(InvertibleFunction { dim, kind: FunctionKind::Coupling { seed, hidden, layers: built } })
    }

    /// A chain of `blocks` contractive residual blocks with softplus
    /// activations and contraction scale `scale`, weights drawn from `seed`
    /// and spectrally normalized.
    pub fn contractive_residual(
        dim: usize,
        blocks: usize,
        hidden: usize,
        scale: f64,
        seed: u64,
    ) -> Result<Self, InvertibleError> {
        if dim == 0 || blocks == 0 || hidden == 0 {
            return Err(InvertibleError::InvalidParameter(
                "contractive residual needs dim, blocks, hidden >= 1".into(),
            ));
        }
        let mut rng = rng::from_seed(seed);
        let built = (0..blocks)
            .map(|_| {
                let w1 = gaussian_matrix(hidden, dim, 1.0, &mut rng);
                let w2 = gaussian_matrix(dim, hidden, 1.0, &mut rng);
                ResidualBlock::new(w1, w2, scale, Activation::Softplus)
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(InvertibleFunction {
            dim,
            kind: FunctionKind::ContractiveResidual { seed, hidden, scale, blocks: built },
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind_name(&self) -> &'static str {
        match self.kind {
            FunctionKind::Rotation { .. } => "rotation",
            FunctionKind::Affine { .. } => "affine",
            FunctionKind::Coupling { .. } => "coupling",
            FunctionKind::ContractiveResidual { .. } => "contractive_residual",
        }
    }

    /// Whether forward and inverse are exactly linear (rotation) or affine.
    pub fn is_linear(&self) -> bool {
        matches!(self.kind, FunctionKind::Rotation { .. } | FunctionKind::Affine { .. })
    }

    /// The residual blocks, when this is a contractive residual chain.
    pub fn residual_blocks(&self) -> Option<&[ResidualBlock]> {
        match &self.kind {
            FunctionKind::ContractiveResidual { blocks, .. } => Some(blocks),
            _ => None,
        }
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>, InvertibleError> {
        self.check_dim(x)?;
        Ok(match &self.kind {
            FunctionKind::Rotation { theta } => rotate(x, *theta),
            FunctionKind::Affine { matrix, bias, .. } => linalg::vec_add(&linalg::mat_vec(matrix, x), bias),
            FunctionKind::Coupling { layers, .. } => {
                layers.iter().fold(x.to_vec(), |v, layer| layer.forward(&v))
            }
            FunctionKind::ContractiveResidual { blocks, .. } => {
                blocks.iter().fold(x.to_vec(), |v, block| block.forward(&v))
            }
        })
    }

    pub fn inverse(&self, y: &[f64]) -> Result<Inversion, InvertibleError> {
        self.check_dim(y)?;
        match &self.kind {
            FunctionKind::Rotation { theta } => Ok(Inversion { x: rotate(y, -theta), iterations: 0 }),
            FunctionKind::Affine { bias, inverse, .. } => {
                Ok(Inversion { x: linalg::mat_vec(inverse, &linalg::vec_sub(y, bias)), iterations: 0 })
            }
            FunctionKind::Coupling { layers, .. } => {
                let x = layers.iter().rev().fold(y.to_vec(), |v, layer| layer.inverse(&v));
                Ok(Inversion { x, iterations: 0 })
            }
            FunctionKind::ContractiveResidual { blocks, .. } => {
                let mut iterations = 0;
                let mut v = y.to_vec();
                for block in blocks.iter().rev() {
                    let inv = block.invert(&v);
                    iterations += inv.iterations;
                    v = inv.x;
                }
                let residual = linalg::linf_dist(&self.forward(&v)?, y);
                if residual > RESIDUAL_TOL {
                    return Err(InvertibleError::NoConvergence { iterations, residual });
                }
                Ok(Inversion { x: v, iterations })
            }
        }
    }

    fn check_dim(&self, x: &[f64]) -> Result<(), InvertibleError> {
        if x.len() != self.dim {
            return Err(InvertibleError::DimensionMismatch { expected: self.dim, got: x.len() });
        }
        Ok(())
    }
}

fn rotate(x: &[f64], theta: f64) -> Vec<f64> {
    let (sin, cos) = theta.sin_cos();
    let mut out = x.to_vec();
    for pair in out.chunks_exact_mut(2) {
        let (a, b) = (pair[0], pair[1]);
        pair[0] = cos * a - sin * b;
        pair[1] = sin * a + cos * b;
    }
    out
}

fn gaussian_matrix(rows: usize, cols: usize, std: f64, rng: &mut impl rand::Rng) -> Vec<Vec<f64>> {
    (0..rows)
        .map(|_| (0..cols).map(|_| std * rng.sample::<f64, _>(StandardNormal)).collect())
        .collect()
}

fn gaussian_vec(len: usize, std: f64, rng: &mut impl rand::Rng) -> Vec<f64> {
    (0..len).map(|_| std * rng.sample::<f64, _>(StandardNormal)).collect()
}

impl TryFrom<FunctionJson> for InvertibleFunction {
    type Error = InvertibleError;

    fn try_from(j: FunctionJson) -> Result<Self, Self::Error> {
        match j {
            FunctionJson::Rotation { dim, theta } => InvertibleFunction::rotation(dim, theta),
            FunctionJson::Affine { dim, matrix, bias } => {
                if matrix.len() != dim {
                    return Err(InvertibleError::DimensionMismatch { expected: dim, got: matrix.len() });
                }
                InvertibleFunction::affine(matrix, bias)
            }
            FunctionJson::Coupling { dim, seed, layers, hidden } => {
                InvertibleFunction::coupling(dim, layers, hidden, seed)
            }
            FunctionJson::ContractiveResidual { dim, seed, blocks, hidden, scale } => {
                InvertibleFunction::contractive_residual(dim, blocks, hidden, scale, seed)
            }
        }
    }
}

impl From<InvertibleFunction> for FunctionJson {
    fn from(f: InvertibleFunction) -> FunctionJson {
        let dim = f.dim;
        match f.kind {
            FunctionKind::Rotation { theta } => FunctionJson::Rotation { dim, theta },
            FunctionKind::Affine { matrix, bias, .. } => FunctionJson::Affine { dim, matrix, bias },
            FunctionKind::Coupling { seed, hidden, layers } => {
                FunctionJson::Coupling { dim, seed, layers: layers.len(), hidden }
            }
            FunctionKind::ContractiveResidual { seed, hidden, scale, blocks } => {
                FunctionJson::ContractiveResidual { dim, seed, blocks: blocks.len(), hidden, scale }
            }
        }
    }
}
