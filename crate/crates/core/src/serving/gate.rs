//! Shared decode gating for the simulator and the TCP front-end.
//!
//! Completion events stream in; the gate decides the earliest moment a
//! decodable subset exists, decodes, and reports which subset won plus the
//! arithmetic charged for it (in flops, so virtual-time costs stay
//! deterministic).

use std::collections::BTreeMap;

use super::ServingError;
use crate::code_matrix::{CodeMatrixError, GeneratorMatrix, next_combination};
use crate::codec::{CodecError, OnlineDecoder};

pub(crate) struct GateOutcome {
    /// Estimates of `f(x₁), ..., f(x_k)`.
    pub estimates: Vec<Vec<f64>>,
    /// The subset that decoded, ascending.
    pub subset: Vec<usize>,
    /// Arithmetic charged for the decode.
    pub decode_flops: u64,
}

pub(crate) enum DecodeGate<'a> {
    /// Single-parity uniform code: event-driven decoding.
    Online { decoder: OnlineDecoder, fed: Vec<usize>, dim: usize },
    /// General code: wait for k results, then invert the first decodable
    /// subset in arrival-preference order.
    Batch { generator: &'a GeneratorMatrix, received: Vec<(usize, Vec<f64>)>, dim: usize },
}

impl<'a> DecodeGate<'a> {
    pub fn new(generator: &'a GeneratorMatrix, dim: usize) -> Self {
        match OnlineDecoder::new(generator, dim) {
            Ok(decoder) => DecodeGate::Online { decoder, fed: Vec::new(), dim },
            Err(_) => DecodeGate::Batch { generator, received: Vec::new(), dim },
        }
    }

    /// Feeds one completion. Returns the decode outcome the moment a
    /// decodable subset exists.
    pub fn offer(&mut self, task: usize, value: Vec<f64>) -> Result<Option<GateOutcome>, ServingError> {
        match self {
            DecodeGate::Online { decoder, fed, dim } => {
                // Work done on earlier arrivals overlaps waiting for later
                // ones; only the gating event's arithmetic delays the reply.
                let before = decoder.ops();
                decoder.update(task, &value)?;
                fed.push(task);
                if !decoder.is_complete() {
                    return Ok(None);
                }
                let estimates = decoder.estimates()?;
                let mut subset = fed.clone();
                subset.sort_unstable();
                let after = decoder.ops();
                let mults = after.scalar_vector_mults - before.scalar_vector_mults;
                let subs = after.vector_subtractions - before.vector_subtractions;
                let decode_flops = (2 * mults + subs) * *dim as u64;
                Ok(Some(GateOutcome { estimates, subset, decode_flops }))
            }
            DecodeGate::Batch { generator, received, dim } => {
                let k = generator.k();
                if value.len() != *dim {
                    return Err(ServingError::Codec(CodecError::ResultDimension {
                        task,
                        got: value.len(),
                        expected: *dim,
                    }));
                }
                if received.iter().any(|(t, _)| *t == task) {
                    return Err(ServingError::Codec(CodecError::DuplicateTask(task)));
                }
                received.push((task, value));
                if received.len() < k {
                    return Ok(None);
                }
                // Combinations over arrival positions in lexicographic order
                // prefer the earliest completions.
                let mut pick: Vec<usize> = (0..k).collect();
                loop {
                    let mut chosen: BTreeMap<usize, &[f64]> =
                        pick.iter().map(|&i| (received[i].0, received[i].1.as_slice())).collect();
                    let subset: Vec<usize> = chosen.keys().copied().collect();
                    if subset.iter().copied().eq(1..=k) {
                        // Systematic subset: results are the answers, no
                        // arithmetic.
                        let estimates = chosen.values_mut().map(|v| v.to_vec()).collect();
                        return Ok(Some(GateOutcome { estimates, subset, decode_flops: 0 }));
                    }
                    match generator.subset_inverse(&subset) {
                        Ok(inv) => {
                            let stacked: Vec<Vec<f64>> =
                                chosen.values().map(|v| v.to_vec()).collect();
                            let estimates = inv.apply(&stacked);
                            // Accounting model: one k×k inversion plus the
                            // k×k · k×dim application.
                            let kf = k as u64;
                            let decode_flops = kf * kf * kf + kf * kf * *dim as u64;
                            return Ok(Some(GateOutcome { estimates, subset, decode_flops }));
                        }
                        Err(CodeMatrixError::SingularSubset { .. }) => {
                            if !next_combination(&mut pick, received.len()) {
                                return Ok(None);
                            }
                        }
                        Err(other) => return Err(ServingError::Codec(other.into())),
                    }
                }
            }
        }
    }
}
