//! Straggler-resilient prediction serving via erasure-coded computation
//! over invertible functions.
//!
//! The core trick: to survive slow or failed workers when computing `f(x_1),
//! ..., f(x_k)` in parallel, synthesize extra "parity" inputs `x_{k+1}, ...,
//! x_n` such that `f(parity)` is a known linear combination of the wanted
//! outputs. Any `k` of the `n` worker results then suffice to recover all `k`
//! outputs by solving a small linear system. Exact when `f` is linear;
//! approximate (with a quantifiable noise amplification) otherwise.
//!
//! Module map:
//!
//! - [`code_matrix`]: systematic generator matrices with the any-`k`-rows
//!   invertibility property, plus subset inverses for decoding.
//! - [`invertible`]: forward/inverse function families (rotations, affine
//!   maps, coupling stacks, contractive residual blocks with fixed-point
//!   inversion).
//! - [`codec`]: encoding parity inputs through `f⁻¹`, batch and online
//!   decoding of worker results.
//! - [`serving`]: straggler models, a deterministic virtual-time simulator,
//!   a TCP worker/front-end pair speaking a small binary protocol, latency
//!   statistics, classification heads.
//! - [`experiments`]: reproducible experiment drivers (reconstruction error,
//!   multi-failure recovery, noise amplification, overhead scaling, latency
//!   comparison) emitting JSON + text reports.
//! - [`config`]: on-disk run configuration for the CLI.

pub mod code_matrix;
pub mod codec;
pub mod config;
pub mod experiments;
pub mod invertible;
pub mod linalg;
pub mod rng;
pub mod serving;

pub use code_matrix::{GeneratorMatrix, Scheme, SubsetInverse, VerifyReport};
pub use codec::{EncodedBatch, OnlineDecoder, PerturbationModel, decode_batch, ideal_encode, perturbed_encode};
pub use invertible::InvertibleFunction;
pub use serving::{DownstreamHead, LatencyStats, QueryRecord, StragglerModel, VictimPolicy};
