//! Systematic generator matrices with the any-`k`-rows invertibility
//! property.
//!
//! A code is an `n × k` real matrix whose first `k` rows are the identity
//! (so tasks `1..=k` carry the original inputs verbatim) and whose remaining
//! `n − k` rows describe parity tasks as linear combinations of the inputs.
//! Decoding from a surviving row subset works iff the corresponding `k × k`
//! submatrix is invertible, so construction validates exactly that, for
//! every subset.
//!
//! Task and row indices are 1-based everywhere in the public API; task `i`
//! corresponds to row `i` of the matrix.

use std::fmt;

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg;
use crate::rng;

/// A `k × k` submatrix counts as invertible when the absolute determinant of
/// its row-normalized form exceeds this. Normalizing rows to unit L2 norm
/// first makes the test scale-invariant: a parity row times 10⁻⁶ is still a
/// perfectly good equation.
pub const SINGULARITY_TOL: f64 = 1e-9;

/// Subset verification enumerates exhaustively up to this many subsets.
pub const ENUMERATION_CUTOFF: u64 = 1_000_000;

/// Past the cutoff, verification checks this many uniformly sampled subsets.
pub const VERIFY_SAMPLES: u64 = 1_000_000;

/// Random parity schemes get this many redraws before giving up.
pub const MAX_RANDOM_ATTEMPTS: u32 = 16;

/// Internal seed for sampled verification, mixed with `(n, k)`. Fixed so
/// that verification of a given matrix shape is reproducible.
const VERIFY_SAMPLE_SEED: u64 = 0x6d61_7472_6978_3f21;

#[derive(Debug, Error)]
pub enum CodeMatrixError {
    #[error("invalid shape: {0}")]
    InvalidShape(String),
    #[error("construction failed after {attempts} attempt(s): {reason}")]
    ValidationFailed { attempts: u32, reason: String },
    #[error(
        "row subset {subset:?} is numerically singular: scaled |det| = {margin:.3e}, tolerance {tolerance:.1e}"
    )]
    SingularSubset { subset: Vec<usize>, margin: f64, tolerance: f64 },
    #[error("unknown scheme {0:?} (expected uniform, multi42, vandermonde, or gaussian)")]
    UnknownScheme(String),
    #[error("scheme {0:?} requires a seed")]
    MissingSeed(&'static str),
}

/// Parity construction recipes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    /// Single parity row `[1/k, ..., 1/k]`; requires `n = k + 1`.
    Uniform,
    /// The fixed `(4, 2)` code with parity rows `[1/2, 1/2]` and `[1/3, 2/3]`.
    Multi42,
    /// Parity row `i` is the geometric progression of node `αᵢ = 1 + i/(n−k+1)`,
    /// normalized to sum 1. Distinct nodes in `(1, 2)` keep every subset
    /// invertible. `n = k` degenerates to a plain identity (no parity).
    Vandermonde,
    /// Parity entries drawn i.i.d. standard normal from the given seed,
    /// redrawn (up to [`MAX_RANDOM_ATTEMPTS`]) until verification passes.
    GaussianRandom(u64),
}

impl Scheme {
    pub fn name(self) -> &'static str {
        match self {
            Scheme::Uniform => "uniform",
            Scheme::Multi42 => "multi42",
            Scheme::Vandermonde => "vandermonde",
            Scheme::GaussianRandom(_) => "gaussian",
        }
    }

    fn seed(self) -> Option<u64> {
        match self {
            Scheme::GaussianRandom(seed) => Some(seed),
            _ => None,
        }
    }

    /// Reassembles a scheme from its serialized `(name, seed)` pair.
    pub fn from_parts(name: &str, seed: Option<u64>) -> Result<Self, CodeMatrixError> {
        match name {
            "uniform" => Ok(Scheme::Uniform),
            "multi42" => Ok(Scheme::Multi42),
            "vandermonde" => Ok(Scheme::Vandermonde),
            "gaussian" => seed.map(Scheme::GaussianRandom).ok_or(CodeMatrixError::MissingSeed("gaussian")),
            other => Err(CodeMatrixError::UnknownScheme(other.to_string())),
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scheme::GaussianRandom(seed) => write!(f, "gaussian(seed={seed})"),
            other => f.write_str(other.name()),
        }
    }
}

/// Serialized form: `{"n", "k", "scheme", "seed"?, "rows"}`.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MatrixJson {
    n: usize,
    k: usize,
    scheme: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    rows: Vec<Vec<f64>>,
}

/// Systematic `n × k` generator matrix.
///
/// Deserialization checks shape and the systematic identity prefix but not
/// the any-`k`-rows property; run [`GeneratorMatrix::verify_any_k_rows`] on
/// matrices from untrusted sources. [`GeneratorMatrix::build`] always
/// verifies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MatrixJson", into = "MatrixJson")]
pub struct GeneratorMatrix {
    n: usize,
    k: usize,
    scheme: Scheme,
    rows: Vec<Vec<f64>>,
}

/// Outcome of checking every (or, past the cutoff, a seeded sample of)
/// `k`-row subset for invertibility.
#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub ok: bool,
    /// Subset attaining the smallest margin, 1-based, ascending.
    pub worst_subset: Vec<usize>,
    /// Smallest scaled |det| seen across checked subsets.
    pub worst_margin: f64,
    pub tolerance: f64,
    /// True when `C(n, k)` exceeded the enumeration cutoff and subsets were
    /// sampled instead.
    pub sampled: bool,
    pub subsets_checked: u64,
}

/// Precomputed decoder for one surviving row subset: apply [`Self::apply`]
/// to the stacked worker outputs (ordered by ascending task index) to
/// recover the `k` systematic outputs.
#[derive(Debug, Clone)]
pub struct SubsetInverse {
    /// 1-based task indices, ascending.
    pub subset: Vec<usize>,
    /// Inverse of the corresponding `k × k` submatrix.
    pub inverse: Vec<Vec<f64>>,
    /// `‖A‖₁ · ‖A⁻¹‖₁`, a cheap conditioning indicator for the subset.
    pub condition_estimate: f64,
}

impl SubsetInverse {
    /// Recovers the systematic outputs from results stacked in subset order.
    /// `results[i]` is the output of task `self.subset[i]`; all rows share
    /// one dimension.
    pub fn apply(&self, results: &[Vec<f64>]) -> Vec<Vec<f64>> {
        assert_eq!(results.len(), self.subset.len(), "need one result per subset row");
        let dim = results[0].len();
        self.inverse
            .iter()
            .map(|coeffs| {
                let mut out = vec![0.0; dim];
                for (&c, r) in coeffs.iter().zip(results) {
                    debug_assert_eq!(r.len(), dim);
                    for (o, &v) in out.iter_mut().zip(r) {
                        *o += c * v;
                    }
                }
                out
            })
            .collect()
    }
}

impl GeneratorMatrix {
    /// Builds and verifies a generator matrix. The first `k` rows are always
    /// the identity; `scheme` dictates the parity rows.
    pub fn build(n: usize, k: usize, scheme: Scheme) -> Result<Self, CodeMatrixError> {
        if k == 0 {
            return Err(CodeMatrixError::InvalidShape("k must be at least 1".into()));
        }
        if n < k {
            return Err(CodeMatrixError::InvalidShape(format!("n = {n} < k = {k}")));
        }
        match scheme {
            Scheme::Uniform => {
                if n != k + 1 {
                    return Err(CodeMatrixError::InvalidShape(format!(
                        "uniform scheme needs n = k + 1, got n = {n}, k = {k}"
                    )));
                }
                let parity = vec![vec![1.0 / k as f64; k]];
                Self::assemble_verified(n, k, scheme, parity, 1)
            }
            Scheme::Multi42 => {
                if (n, k) != (4, 2) {
                    return Err(CodeMatrixError::InvalidShape(format!(
                        "multi42 is a fixed (4, 2) code, got ({n}, {k})"
                    )));
                }
                let parity = vec![vec![0.5, 0.5], vec![1.0 / 3.0, 2.0 / 3.0]];
                Self::assemble_verified(n, k, scheme, parity, 1)
            }
            Scheme::Vandermonde => {
                let r = n - k;
                let parity = (1..=r)
                    .map(|i| {
                        let alpha = 1.0 + i as f64 / (r + 1) as f64;
                        let mut row = Vec::with_capacity(k);
                        let mut p = 1.0;
                        for _ in 0..k {
                            row.push(p);
                            p *= alpha;
                        }
                        let sum: f64 = row.iter().sum();
                        row.iter().map(|x| x / sum).collect()
                    })
                    .collect();
                Self::assemble_verified(n, k, scheme, parity, 1)
            }
            Scheme::GaussianRandom(seed) => {
                let mut rng = rng::from_seed(seed);
                let mut last_margin = 0.0;
                for attempt in 1..=MAX_RANDOM_ATTEMPTS {
                    let parity: Vec<Vec<f64>> = (0..n - k)
                        .map(|_| (0..k).map(|_| StandardNormal.sample(&mut rng)).collect())
                        .collect();
                    match Self::assemble_verified(n, k, scheme, parity, attempt) {
                        Ok(m) => return Ok(m),
                        Err(CodeMatrixError::ValidationFailed { reason, .. }) => {
                            last_margin = reason.parse().unwrap_or(last_margin);
                        }
                        Err(other) => return Err(other),
                    }
                }
                Err(CodeMatrixError::ValidationFailed {
                    attempts: MAX_RANDOM_ATTEMPTS,
                    reason: format!(
                        "no draw from seed {seed} passed verification (last margin {last_margin:.3e})"
                    ),
                })
            }
        }
    }

    fn assemble_verified(
        n: usize,
        k: usize,
        scheme: Scheme,
        parity: Vec<Vec<f64>>,
        attempt: u32,
    ) -> Result<Self, CodeMatrixError> {
        let mut rows = linalg::identity(k);
        rows.extend(parity);
        debug_assert_eq!(rows.len(), n);
        let m = GeneratorMatrix { n, k, scheme, rows };
        let report = m.verify_any_k_rows();
        if report.ok {
            Ok(m)
        } else {
            Err(CodeMatrixError::ValidationFailed {
                attempts: attempt,
                reason: format!("{:.3e}", report.worst_margin),
            })
        }
    }

    /// Wraps externally supplied rows (e.g. hand-written JSON). Validates
    /// shape and the identity prefix only; callers wanting the decodability
    /// guarantee should run [`Self::verify_any_k_rows`].
    pub fn from_rows(scheme: Scheme, rows: Vec<Vec<f64>>) -> Result<Self, CodeMatrixError> {
        let n = rows.len();
        let k = rows.first().map_or(0, Vec::len);
        if k == 0 || n < k {
            return Err(CodeMatrixError::InvalidShape(format!(
                "need at least k ≥ 1 rows of width k, got {n} × {k}"
            )));
        }
        if let Some(bad) = rows.iter().position(|r| r.len() != k) {
            return Err(CodeMatrixError::InvalidShape(format!(
                "row {} has length {}, expected {k}",
                bad + 1,
                rows[bad].len()
            )));
        }
        for i in 0..k {
            for j in 0..k {
                let want = if i == j { 1.0 } else { 0.0 };
                if rows[i][j] != want {
                    return Err(CodeMatrixError::InvalidShape(format!(
                        "rows 1..={k} must form the identity; row {} differs at column {}",
                        i + 1,
                        j + 1
                    )));
                }
            }
        }
        Ok(GeneratorMatrix { n, k, scheme, rows })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    /// Row for task `task` (1-based).
    pub fn row(&self, task: usize) -> &[f64] {
        assert!((1..=self.n).contains(&task), "task {task} out of 1..={}", self.n);
        &self.rows[task - 1]
    }

    /// The `n − k` parity rows.
    pub fn parity_rows(&self) -> &[Vec<f64>] {
        &self.rows[self.k..]
    }

    /// Checks invertibility of the submatrix for every `k`-subset of rows.
    /// Exhaustive up to [`ENUMERATION_CUTOFF`] subsets; beyond that, checks
    /// [`VERIFY_SAMPLES`] subsets drawn from a fixed internal seed, so the
    /// verdict stays reproducible (but is then only sampling evidence).
    pub fn verify_any_k_rows(&self) -> VerifyReport {
        let total = binomial_capped(self.n, self.k, ENUMERATION_CUTOFF);
        let mut worst_margin = f64::INFINITY;
        let mut worst: Vec<usize> = Vec::new();
        let mut checked = 0u64;
        let sampled = total > ENUMERATION_CUTOFF;
        if !sampled {
            let mut idx: Vec<usize> = (0..self.k).collect();
            loop {
                let margin = self.subset_margin0(&idx);
                if margin < worst_margin {
                    worst_margin = margin;
                    worst = idx.clone();
                }
                checked += 1;
                if !next_combination(&mut idx, self.n) {
                    break;
                }
            }
        } else {
            let mut rng = rng::substream(VERIFY_SAMPLE_SEED, ((self.n as u64) << 32) ^ self.k as u64);
            for _ in 0..VERIFY_SAMPLES {
                let mut idx = rand::seq::index::sample(&mut rng, self.n, self.k).into_vec();
                idx.sort_unstable();
                let margin = self.subset_margin0(&idx);
                if margin < worst_margin {
                    worst_margin = margin;
                    worst = idx.clone();
                }
                checked += 1;
            }
        }
        VerifyReport {
            ok: worst_margin > SINGULARITY_TOL,
            worst_subset: worst.iter().map(|i| i + 1).collect(),
            worst_margin,
            tolerance: SINGULARITY_TOL,
            sampled,
            subsets_checked: checked,
        }
    }

    /// Inverse of the submatrix for `subset` (k distinct 1-based tasks, any
    /// order). Fails with [`CodeMatrixError::SingularSubset`] when the
    /// scaled determinant is at or below [`SINGULARITY_TOL`].
    pub fn subset_inverse(&self, subset: &[usize]) -> Result<SubsetInverse, CodeMatrixError> {
        let idx0 = self.normalize_subset(subset)?;
        let margin = self.subset_margin0(&idx0);
        let tasks: Vec<usize> = idx0.iter().map(|i| i + 1).collect();
        if margin <= SINGULARITY_TOL {
            return Err(CodeMatrixError::SingularSubset {
                subset: tasks,
                margin,
                tolerance: SINGULARITY_TOL,
            });
        }
        let sub: Vec<Vec<f64>> = idx0.iter().map(|&i| self.rows[i].clone()).collect();
        let inverse = linalg::invert(&sub).ok_or_else(|| CodeMatrixError::SingularSubset {
            subset: tasks.clone(),
            margin,
            tolerance: SINGULARITY_TOL,
        })?;
        let condition_estimate = linalg::one_norm(&sub) * linalg::one_norm(&inverse);
        Ok(SubsetInverse { subset: tasks, inverse, condition_estimate })
    }

    /// The `k × k` submatrix for `subset` (1-based tasks), rows in ascending
    /// task order.
    pub fn submatrix(&self, subset: &[usize]) -> Result<Vec<Vec<f64>>, CodeMatrixError> {
        let idx0 = self.normalize_subset(subset)?;
        Ok(idx0.iter().map(|&i| self.rows[i].clone()).collect())
    }

    fn normalize_subset(&self, subset: &[usize]) -> Result<Vec<usize>, CodeMatrixError> {
        if subset.len() != self.k {
            return Err(CodeMatrixError::InvalidShape(format!(
                "subset has {} tasks, need exactly k = {}",
                subset.len(),
                self.k
            )));
        }
        let mut idx0 = Vec::with_capacity(self.k);
        for &t in subset {
            if !(1..=self.n).contains(&t) {
                return Err(CodeMatrixError::InvalidShape(format!(
                    "task {t} out of range 1..={}",
                    self.n
                )));
            }
            idx0.push(t - 1);
        }
        idx0.sort_unstable();
        if idx0.windows(2).any(|w| w[0] == w[1]) {
            return Err(CodeMatrixError::InvalidShape("subset contains a duplicate task".into()));
        }
        Ok(idx0)
    }

    /// Scaled |det| of the submatrix for 0-based, sorted `idx0`.
    ///
    /// Systematic rows are standard basis vectors, so the determinant
    /// reduces to a small minor: take the parity rows of the subset,
    /// restricted to the input columns not covered by its systematic rows.
    /// That keeps verification O(p³ + pk) per subset with p = parity rows
    /// used, instead of O(k³).
    fn subset_margin0(&self, idx0: &[usize]) -> f64 {
        let mut covered = vec![false; self.k];
        let mut parity: Vec<usize> = Vec::new();
        for &i in idx0 {
            if i < self.k {
                covered[i] = true;
            } else {
                parity.push(i);
            }
        }
        if parity.is_empty() {
            return 1.0;
        }
        let free: Vec<usize> = (0..self.k).filter(|&c| !covered[c]).collect();
        debug_assert_eq!(free.len(), parity.len());
        let minor: Vec<Vec<f64>> = parity
            .iter()
            .map(|&r| free.iter().map(|&c| self.rows[r][c]).collect())
            .collect();
        let det = linalg::determinant(&minor).abs();
        let scale: f64 = parity.iter().map(|&r| linalg::l2_norm(&self.rows[r])).product();
        if scale == 0.0 { 0.0 } else { det / scale }
    }
}

impl TryFrom<MatrixJson> for GeneratorMatrix {
    type Error = CodeMatrixError;

    fn try_from(j: MatrixJson) -> Result<Self, Self::Error> {
        let scheme = Scheme::from_parts(&j.scheme, j.seed)?;
        let m = GeneratorMatrix::from_rows(scheme, j.rows)?;
        if (m.n, m.k) != (j.n, j.k) {
            return Err(CodeMatrixError::InvalidShape(format!(
                "declared shape ({}, {}) does not match rows ({}, {})",
                j.n, j.k, m.n, m.k
            )));
        }
        Ok(m)
    }
}

impl From<GeneratorMatrix> for MatrixJson {
    fn from(m: GeneratorMatrix) -> MatrixJson {
        MatrixJson {
            n: m.n,
            k: m.k,
            scheme: m.scheme.name().to_string(),
            seed: m.scheme.seed(),
            rows: m.rows,
        }
    }
}

/// `min(C(n, k), cap + 1)`: saturates just above `cap` so callers can test
/// `> cap` without overflow.
fn binomial_capped(n: usize, k: usize, cap: u64) -> u64 {
    let k = k.min(n - k);
    let mut c: u128 = 1;
    for i in 0..k {
        // Exact at each step: C(n, i)·(n − i) is divisible by i + 1.
        c = c * (n - i) as u128 / (i + 1) as u128;
        if c > cap as u128 {
            return cap + 1;
        }
    }
    c as u64
}

/// Advances `idx` to the next k-combination of `{0, ..., n − 1}` in
/// lexicographic order. Returns false after the last one.
pub(crate) fn next_combination(idx: &mut [usize], n: usize) -> bool {
    let k = idx.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if idx[i] != i + n - k {
            idx[i] += 1;
            for j in i + 1..k {
                idx[j] = idx[j - 1] + 1;
            }
            return true;
        }
    }
    false
}
