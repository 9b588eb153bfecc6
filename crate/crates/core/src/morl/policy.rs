use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::context::ContextSpec;
use crate::env::{Action, Observation};
use crate::error::{Error, Result};

use super::EnvFactory;

/// Where a policy came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PolicyOrigin {
    Random,
    Init {
        omega: Vec<f64>,
        iteration: usize,
    },
    Extension {
        objective: usize,
        parent: u64,
        iteration: usize,
    },
}

/// Deterministic affine state feedback `a = clip(W·x + b, −1, 1)` on the
/// normalized observation `x`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Policy {
    pub id: u64,
    pub num_zones: usize,
    pub obs_dim: usize,
    /// `W` row-major (`num_zones × obs_dim`) followed by `b` (`num_zones`).
    pub params: Vec<f64>,
    pub origin: PolicyOrigin,
}

pub fn param_count(num_zones: usize, obs_dim: usize) -> usize {
    num_zones * obs_dim + num_zones
}

impl Policy {
    pub fn new(id: u64, num_zones: usize, obs_dim: usize, params: Vec<f64>, origin: PolicyOrigin) -> Result<Self> {
        if params.len() != param_count(num_zones, obs_dim) {
            return Err(Error::Config(format!(
                "policy expects {} parameters, got {}",
                param_count(num_zones, obs_dim),
                params.len()
            )));
        }
        Ok(Self {
            id,
            num_zones,
            obs_dim,
            params,
            origin,
        })
    }

    /// The constant zero-command policy.
    pub fn zero(id: u64, num_zones: usize, obs_dim: usize) -> Self {
        Self {
            id,
            num_zones,
            obs_dim,
            params: vec![0.0; param_count(num_zones, obs_dim)],
            origin: PolicyOrigin::Random,
        }
    }

    pub fn act(&self, x: &[f64]) -> Action {
        let d = self.obs_dim;
        let bias = &self.params[self.num_zones * d..];
        Action(
            (0..self.num_zones)
                .map(|i| {
                    let w = &self.params[i * d..(i + 1) * d];
                    let z: f64 = w.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + bias[i];
                    z.clamp(-1.0, 1.0)
                })
                .collect(),
        )
    }
}

/// Per-component affine map of observations onto roughly `[−1, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObsNormalizer {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

/// Normalized values are clamped to this magnitude.
const NORMALIZED_LIMIT: f64 = 3.0;

impl ObsNormalizer {
    /// Observed min/max over seeded uniform-random-action rollouts.
    pub fn fit(factory: &EnvFactory, contexts: &[ContextSpec], episodes: usize, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut env = factory.make()?;
        let mut lo: Vec<f64> = Vec::new();
        let mut hi: Vec<f64> = Vec::new();
        let mut record = |o: &Observation| {
            let v = o.to_vec();
            if lo.is_empty() {
                lo = v.clone();
                hi = v;
            } else {
                for (k, x) in v.into_iter().enumerate() {
                    lo[k] = lo[k].min(x);
                    hi[k] = hi[k].max(x);
                }
            }
        };
        for ctx in contexts {
            for _ in 0..episodes.max(1) {
                let reset_seed = rng.random();
                let first = env.reset(ctx, reset_seed)?;
                record(&first);
                let m = first.zone_temps.len();
                loop {
                    let a = Action((0..m).map(|_| rng.random_range(-1.0..=1.0)).collect());
                    let out = env.step(&a)?;
                    record(&out.observation);
                    if out.done {
                        break;
                    }
                }
            }
        }
        if lo.is_empty() {
            return Err(Error::Config("normalizer needs at least one context".into()));
        }
        Ok(Self { lo, hi })
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn apply(&self, obs: &Observation) -> Vec<f64> {
        obs.to_vec()
            .into_iter()
            .zip(self.lo.iter().zip(&self.hi))
            .map(|(x, (&l, &h))| {
                if h > l {
                    (2.0 * (x - l) / (h - l) - 1.0).clamp(-NORMALIZED_LIMIT, NORMALIZED_LIMIT)
                } else {
                    0.0
                }
            })
            .collect()
    }
}
