//! Seeded worker service-time models.

use std::collections::BTreeSet;

use rand::Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use super::ServingError;
use crate::rng;

/// Which worker eats the straggle delay when a query straggles at all.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VictimPolicy {
    /// One victim drawn uniformly from the first `k` workers per query.
    #[default]
    UniformOneOfK,
    /// Always the given worker (1-based; may point at a parity worker).
    Fixed(usize),
    /// Straggling disabled regardless of the probability.
    None,
}

/// Per-query service-time distribution for `n` workers. Fully determined by
/// `(model, query_id)`: the per-query RNG is a derived substream, so query
/// 17 has the same fate no matter how many queries ran before it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StragglerModel {
    /// Baseline service time, seconds.
    pub base_latency: f64,
    /// Extra delay the victim suffers, seconds.
    #[serde(default = "default_straggle_delay")]
    pub straggle_delay: f64,
    /// Probability that a query has a straggler at all.
    pub straggle_prob: f64,
    #[serde(default)]
    pub victim_policy: VictimPolicy,
    /// Tasks (1-based) that never complete.
    #[serde(default)]
    pub fail_tasks: BTreeSet<usize>,
    /// Rate of an additional Exp(rate) jitter term per worker; `None` for
    /// deterministic service.
    #[serde(default)]
    pub jitter_rate: Option<f64>,
    pub seed: u64,
}

fn default_straggle_delay() -> f64 {
    0.1
}

impl StragglerModel {
    /// A deterministic-latency model with no straggler and no failures.
    pub fn quiet(base_latency: f64, seed: u64) -> Self {
        StragglerModel {
            base_latency,
            straggle_delay: default_straggle_delay(),
            straggle_prob: 0.0,
            victim_policy: VictimPolicy::UniformOneOfK,
            fail_tasks: BTreeSet::new(),
            jitter_rate: None,
            seed,
        }
    }

    pub fn validate(&self, n: usize, k: usize) -> Result<(), ServingError> {
        let bad = |msg: String| Err(ServingError::InvalidModel(msg));
        if !(self.base_latency.is_finite() && self.base_latency >= 0.0) {
            return bad(format!("base_latency {} must be finite and >= 0", self.base_latency));
        }
        if !(self.straggle_delay.is_finite() && self.straggle_delay >= 0.0) {
            return bad(format!("straggle_delay {} must be finite and >= 0", self.straggle_delay));
        }
        if !(0.0..=1.0).contains(&self.straggle_prob) {
            return bad(format!("straggle_prob {} must lie in [0, 1]", self.straggle_prob));
        }
        if let VictimPolicy::Fixed(id) = self.victim_policy {
            if !(1..=n).contains(&id) {
                return bad(format!("fixed victim {id} out of 1..={n}"));
            }
        }
        if let Some(rate) = self.jitter_rate {
            if !(rate.is_finite() && rate > 0.0) {
                return bad(format!("jitter_rate {rate} must be finite and > 0"));
            }
        }
        if let Some(&t) = self.fail_tasks.iter().find(|&&t| t == 0 || t > n) {
            return bad(format!("fail task {t} out of 1..={n}"));
        }
        if self.fail_tasks.len() > n - k {
            return bad(format!(
                "{} failed tasks exceed the code's tolerance n - k = {}",
                self.fail_tasks.len(),
                n - k
            ));
        }
        Ok(())
    }

    /// Service time per task (1-based order), `None` for failed tasks.
    ///
    /// Draw order is part of the determinism contract: straggle coin, then
    /// the victim when the policy is uniform, then one jitter draw per
    /// worker in task order. Draws happen regardless of whether their
    /// outcome matters, so seeds stay aligned across configurations.
    pub fn sample_service_times(
        &self,
        n: usize,
        k: usize,
        query_id: u64,
    ) -> Result<Vec<Option<f64>>, ServingError> {
        self.validate(n, k)?;
        let mut rng = rng::substream(self.seed, query_id);
        let coin: f64 = rng.random();
        let straggles = coin < self.straggle_prob;
        let victim = match self.victim_policy {
            VictimPolicy::UniformOneOfK => {
                let v = rng.random_range(1..=k);
                straggles.then_some(v)
            }
            VictimPolicy::Fixed(id) => straggles.then_some(id),
            VictimPolicy::None => None,
        };
        let jitter = self.jitter_rate.map(|rate| Exp::new(rate).expect("validated rate"));
        let times = (1..=n)
            .map(|task| {
                let j = jitter.as_ref().map_or(0.0, |d| d.sample(&mut rng));
                if self.fail_tasks.contains(&task) {
                    return None;
                }
                let straggle = if victim == Some(task) { self.straggle_delay } else { 0.0 };
                Some(self.base_latency + j + straggle)
            })
            .collect();
        Ok(times)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model(prob: f64, policy: VictimPolicy) -> StragglerModel {
        StragglerModel {
            base_latency: 0.01,
            straggle_delay: 0.1,
            straggle_prob: prob,
            victim_policy: policy,
            fail_tasks: BTreeSet::new(),
            jitter_rate: None,
            seed: 5,
        }
    }

    #[test]
    fn sampling_is_deterministic_per_query_id() {
        let m = model(0.7, VictimPolicy::UniformOneOfK);
        let a = m.sample_service_times(5, 4, 42).unwrap();
        let b = m.sample_service_times(5, 4, 42).unwrap();
        assert_eq!(a, b);
        // Neighboring ids may collide on (straggle, victim); a run of 50
        // distinct queries may not.
        let varied = (0..50).any(|q| m.sample_service_times(5, 4, q).unwrap() != a);
        assert!(varied);
    }

    #[test]
    fn at_most_one_straggler_among_the_first_k() {
        let m = model(1.0, VictimPolicy::UniformOneOfK);
        for query in 0..200 {
            let times = m.sample_service_times(6, 5, query).unwrap();
            let slow: Vec<usize> = (1..=6).filter(|&t| times[t - 1].unwrap() > 0.05).collect();
            assert_eq!(slow.len(), 1, "query {query}: {slow:?}");
            assert!(slow[0] <= 5, "victim must be systematic under this policy");
        }
    }

    #[test]
    fn straggle_probability_zero_means_flat_times() {
        let m = model(0.0, VictimPolicy::UniformOneOfK);
        for query in 0..50 {
            let times = m.sample_service_times(4, 3, query).unwrap();
            assert!(times.iter().all(|t| *t == Some(0.01)));
        }
    }

    #[test]
    fn fixed_policy_always_hits_the_same_worker() {
        let m = model(1.0, VictimPolicy::Fixed(3));
        for query in 0..50 {
            let times = m.sample_service_times(4, 3, query).unwrap();
            assert_eq!(times[2], Some(0.11));
            assert_eq!(times[0], Some(0.01));
        }
    }

    #[test]
    fn policy_none_disables_straggling() {
        let m = model(1.0, VictimPolicy::None);
        let times = m.sample_service_times(4, 3, 7).unwrap();
        assert!(times.iter().all(|t| *t == Some(0.01)));
    }

    #[test]
    fn failed_tasks_never_complete() {
        let mut m = model(0.0, VictimPolicy::UniformOneOfK);
        m.fail_tasks.insert(2);
        let times = m.sample_service_times(4, 3, 0).unwrap();
        assert_eq!(times[1], None);
        assert_eq!(times.iter().filter(|t| t.is_none()).count(), 1);
    }

    #[test]
    fn jitter_is_nonnegative_and_seeded() {
        let mut m = model(0.0, VictimPolicy::UniformOneOfK);
        m.jitter_rate = Some(20.0);
        let a = m.sample_service_times(8, 7, 9).unwrap();
        let b = m.sample_service_times(8, 7, 9).unwrap();
        assert_eq!(a, b);
        assert!(a.iter().all(|t| t.unwrap() >= 0.01));
        // With rate 20 the mean jitter is 50 ms; times should not all be flat.
        assert!(a.iter().any(|t| t.unwrap() > 0.011));
    }

    #[test]
    fn validation_catches_bad_parameters() {
        let mut m = model(1.5, VictimPolicy::UniformOneOfK);
        assert!(m.validate(4, 3).is_err());
        m.straggle_prob = 0.5;
        m.victim_policy = VictimPolicy::Fixed(9);
        assert!(m.validate(4, 3).is_err());
        m.victim_policy = VictimPolicy::UniformOneOfK;
        m.fail_tasks.extend([1, 2]);
        assert!(m.validate(4, 3).is_err(), "two failures exceed n - k = 1");
    }

    #[test]
    fn json_round_trip() {
        let mut m = model(0.25, VictimPolicy::Fixed(2));
        m.jitter_rate = Some(10.0);
        m.fail_tasks.insert(4);
        let json = serde_json::to_string(&m).unwrap();
        let back: StragglerModel = serde_json::from_str(&json).unwrap();
        assert_eq!(m, back);
        // Unknown fields must be rejected.
        let bad = r#"{"base_latency":0.01,"straggle_prob":0.0,"seed":1,"bogus":2}"#;
        assert!(serde_json::from_str::<StragglerModel>(bad).is_err());
    }
}
