//! Multi-policy constrained MORL trainer.
//!
//! Pareto initialization trains one policy per preference vector with the
//! cross-entropy method and keeps every intermediate policy in an
//! append-only buffer. Pareto extension then warm-starts from selected
//! buffer policies and maximizes one objective `l` subject to
//! `G_i ≥ β·G_i^parent` for every `i ≠ l`, enforced by a quadratic penalty
//! whose weight doubles whenever a penalty round ends infeasible.

mod policy;

use std::fs;
use std::path::Path;
use std::sync::Arc;

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

pub use policy::{param_count, ObsNormalizer, Policy, PolicyOrigin};

use crate::context::{AssetLibrary, ContextSampler, ContextSpec, TrainMode};
use crate::env::{observation_dim, scalarize, BuildingEnv, EnvConfig, PreferenceVector};
use crate::error::{Error, Result};
use crate::metrics::{crowding_distance, pareto_filter, ParetoFront};

/// Builds independent environment instances sharing one asset library.
#[derive(Debug, Clone)]
pub struct EnvFactory {
    pub library: Arc<AssetLibrary>,
    pub config: EnvConfig,
}

impl EnvFactory {
    pub fn new(library: Arc<AssetLibrary>, config: EnvConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self { library, config })
    }

    pub fn make(&self) -> Result<BuildingEnv> {
        BuildingEnv::new(Arc::clone(&self.library), self.config.clone())
    }

    pub fn num_objectives(&self) -> usize {
        self.config.num_objectives()
    }
}

/// SplitMix64 finalizer, used to derive independent seeds from a master seed.
pub fn mix_seed(master: u64, stream: u64, index: u64) -> u64 {
    let mut z = master
        .wrapping_add(stream.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(index.wrapping_mul(0xD1B5_4A32_D192_ED03));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

const STREAM_TRAIN_CONTEXTS: u64 = 1;
const STREAM_CANONICAL_CONTEXTS: u64 = 2;
const STREAM_EVAL_SEEDS: u64 = 3;
const STREAM_NORMALIZER: u64 = 4;
const STREAM_INIT: u64 = 5;
const STREAM_EXTENSION: u64 = 6;

/// Fixed contexts × seeds × episodes over which returns are averaged.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalProtocol {
    pub contexts: Vec<ContextSpec>,
    pub seeds: Vec<u64>,
    pub episodes: usize,
}

/// Mean discounted return vector of `policy` under `protocol`.
pub fn evaluate_policy(
    factory: &EnvFactory,
    normalizer: &ObsNormalizer,
    policy: &Policy,
    protocol: &EvalProtocol,
) -> Result<Vec<f64>> {
    let mut env = factory.make()?;
    let gamma = factory.config.gamma;
    let mut total = vec![0.0; factory.num_objectives()];
    let mut count = 0usize;
    for ctx in &protocol.contexts {
        for &seed in &protocol.seeds {
            for _ in 0..protocol.episodes.max(1) {
                let traj = env.rollout(ctx, seed, |o| policy.act(&normalizer.apply(o)))?;
                for (t, g) in total.iter_mut().zip(traj.discounted_return(gamma)) {
                    *t += g;
                }
                count += 1;
            }
        }
    }
    if count == 0 {
        return Err(Error::Config("evaluation protocol is empty".into()));
    }
    Ok(total.into_iter().map(|t| t / count as f64).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainerConfig {
    /// One initialization run per preference vector; empty means corners plus centre.
    pub init_preferences: Vec<PreferenceVector>,
    pub population: usize,
    pub elite_fraction: f64,
    pub iterations: usize,
    /// Initial per-parameter standard deviation.
    pub init_sigma: f64,
    /// Added to the refit standard deviation every iteration.
    pub min_sigma: f64,
    /// Return retention fraction in the extension constraints. The bound
    /// `β·G^parent` tightens toward the parent only for nonnegative returns.
    pub beta: f64,
    pub extension_rounds: usize,
    pub extension_iterations: usize,
    pub extension_sigma: f64,
    /// Policies selected for extension per round.
    pub extension_select: usize,
    pub penalty_init: f64,
    /// Times the penalty weight may be doubled during one extension run.
    pub penalty_rounds: usize,
    /// Contexts per return estimate (training and canonical evaluation).
    pub contexts_per_estimate: usize,
    pub eval_seeds: usize,
    pub eval_episodes: usize,
    pub normalizer_episodes: usize,
    pub seed: u64,
}

impl Default for TrainerConfig {
    fn default() -> Self {
        Self {
            init_preferences: Vec::new(),
            population: 16,
            elite_fraction: 0.25,
            iterations: 30,
            init_sigma: 0.5,
            min_sigma: 0.02,
            beta: 0.9,
            extension_rounds: 1,
            extension_iterations: 12,
            extension_sigma: 0.2,
            extension_select: 5,
            penalty_init: 1.0,
            penalty_rounds: 3,
            contexts_per_estimate: 2,
            eval_seeds: 1,
            eval_episodes: 1,
            normalizer_episodes: 2,
            seed: 0,
        }
    }
}

/// Corners of the simplex plus its centre; for two objectives
/// `(1,0), (0.5,0.5), (0,1)`.
pub fn default_preferences(n: usize) -> Vec<PreferenceVector> {
    let mut out = Vec::new();
    for i in 0..n {
        let mut w = vec![0.0; n];
        w[i] = 1.0;
        out.push(w);
        if i == 0 && n >= 2 {
            out.push(vec![1.0 / n as f64; n]);
        }
    }
    out.into_iter()
        .map(|w| PreferenceVector::new(w).expect("simplex vertex or centre"))
        .collect()
}

impl TrainerConfig {
    pub fn validate(&self, num_objectives: usize) -> Result<()> {
        let bad = |m: String| Err(Error::Validation(m));
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return bad(format!("beta must lie in (0, 1), got {}", self.beta));
        }
        if self.population < 4 {
            return bad(format!("population must be >= 4, got {}", self.population));
        }
        if !(self.elite_fraction > 0.0 && self.elite_fraction < 1.0) {
            return bad(format!("elite_fraction must lie in (0, 1), got {}", self.elite_fraction));
        }
        if self.iterations == 0 {
            return bad("iterations must be >= 1".into());
        }
        if !(self.init_sigma > 0.0 && self.extension_sigma > 0.0 && self.min_sigma >= 0.0) {
            return bad("sigmas must be positive".into());
        }
        if self.penalty_init.is_nan() || self.penalty_init <= 0.0 {
            return bad("penalty_init must be > 0".into());
        }
        if self.contexts_per_estimate == 0 || self.eval_seeds == 0 {
            return bad("contexts_per_estimate and eval_seeds must be >= 1".into());
        }
        if let Some(p) = self.init_preferences.iter().find(|p| p.len() != num_objectives) {
            return bad(format!(
                "preference {:?} does not match {num_objectives} objectives",
                p.as_slice()
            ));
        }
        Ok(())
    }

    pub fn preferences(&self, num_objectives: usize) -> Vec<PreferenceVector> {
        if self.init_preferences.is_empty() {
            default_preferences(num_objectives)
        } else {
            self.init_preferences.clone()
        }
    }

    fn elite_count(&self) -> usize {
        ((self.population as f64 * self.elite_fraction).round() as usize).clamp(1, self.population)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BufferEntry {
    pub policy: Policy,
    /// Return vector under the buffer's canonical protocol.
    pub returns: Vec<f64>,
}

/// Append-only store of evaluated policies. Every `returns` was produced by
/// `protocol` with `normalizer`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyBuffer {
    pub normalizer: ObsNormalizer,
    pub protocol: EvalProtocol,
    entries: Vec<BufferEntry>,
}

impl PolicyBuffer {
    pub fn new(normalizer: ObsNormalizer, protocol: EvalProtocol) -> Self {
        Self {
            normalizer,
            protocol,
            entries: Vec::new(),
        }
    }

    pub fn entries(&self) -> &[BufferEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn push(&mut self, entry: BufferEntry) {
        self.entries.push(entry);
    }

    pub fn get(&self, id: u64) -> Option<&BufferEntry> {
        self.entries.iter().find(|e| e.policy.id == id)
    }

    pub fn next_id(&self) -> u64 {
        self.entries.iter().map(|e| e.policy.id + 1).max().unwrap_or(0)
    }

    /// Non-dominated subset of the entries matching `keep`.
    pub fn front_where<F: Fn(&BufferEntry) -> bool>(&self, keep: F) -> Result<ParetoFront> {
        let (points, ids): (Vec<_>, Vec<_>) = self
            .entries
            .iter()
            .filter(|e| keep(e))
            .map(|e| (e.returns.clone(), e.policy.id))
            .unzip();
        pareto_filter(&points, &ids)
    }

    pub fn front(&self) -> Result<ParetoFront> {
        self.front_where(|_| true)
    }
}

/// Non-dominated buffer policies, truncated to the `k` with the largest
/// crowding distance (ties broken by lower id). Returned in id order.
pub fn select_policies(buffer: &PolicyBuffer, k: usize) -> Result<Vec<Policy>> {
    let front = buffer.front()?;
    let mut idx: Vec<usize> = (0..front.len()).collect();
    if front.len() > k {
        let cd = crowding_distance(&front.points);
        idx.sort_by(|&a, &b| {
            cd[b]
                .total_cmp(&cd[a])
                .then(front.policy_ids[a].cmp(&front.policy_ids[b]))
        });
        idx.truncate(k);
    }
    let mut ids: Vec<u64> = idx.into_iter().map(|i| front.policy_ids[i]).collect();
    ids.sort_unstable();
    Ok(ids
        .into_iter()
        .map(|id| buffer.get(id).expect("front ids come from the buffer").policy.clone())
        .collect())
}

/// `G_l − λ·Σ_{i≠l} max(0, β·G_i^parent − G_i)²`.
pub fn penalized_objective(returns: &[f64], parent: &[f64], objective: usize, beta: f64, lambda: f64) -> f64 {
    let violation: f64 = returns
        .iter()
        .zip(parent)
        .enumerate()
        .filter(|(i, _)| *i != objective)
        .map(|(_, (g, p))| (beta * p - g).max(0.0).powi(2))
        .sum();
    returns[objective] - lambda * violation
}

/// `G_i ≥ β·G_i^parent − 1e-6·|G_i^parent|` for every `i ≠ l`.
pub fn satisfies_constraints(returns: &[f64], parent: &[f64], objective: usize, beta: f64) -> bool {
    returns
        .iter()
        .zip(parent)
        .enumerate()
        .filter(|(i, _)| *i != objective)
        .all(|(_, (g, p))| *g >= beta * p - 1e-6 * p.abs())
}

#[cfg(feature = "parallel")]
pub(crate) fn par_map<T: Sync, R: Send>(items: &[T], f: impl Fn(&T) -> R + Sync + Send) -> Vec<R> {
    use rayon::prelude::*;
    items.par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn par_map<T: Sync, R: Send>(items: &[T], f: impl Fn(&T) -> R + Sync + Send) -> Vec<R> {
    items.iter().map(f).collect()
}

/// Diagonal-Gaussian cross-entropy search state.
struct Cem {
    mean: Vec<f64>,
    std: Vec<f64>,
    rng: ChaCha8Rng,
}

impl Cem {
    fn new(mean: Vec<f64>, sigma: f64, seed: u64) -> Self {
        let d = mean.len();
        Self {
            mean,
            std: vec![sigma; d],
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Candidate 0 is the current mean.
    fn sample(&mut self, population: usize) -> Vec<Vec<f64>> {
        let mut pop = vec![self.mean.clone()];
        while pop.len() < population {
            pop.push(
                self.mean
                    .iter()
                    .zip(&self.std)
                    .map(|(m, s)| {
                        let z: f64 = StandardNormal.sample(&mut self.rng);
                        m + s * z
                    })
                    .collect(),
            );
        }
        pop
    }

    /// Refits to the elites and returns candidate indices ranked best first.
    fn update(&mut self, pop: &[Vec<f64>], fitness: &[f64], n_elite: usize, min_sigma: f64) -> Vec<usize> {
        let mut order: Vec<usize> = (0..pop.len()).collect();
        order.sort_by(|&a, &b| fitness[b].total_cmp(&fitness[a]).then(a.cmp(&b)));
        let elites = &order[..n_elite];
        for (k, (mean, std)) in self.mean.iter_mut().zip(&mut self.std).enumerate() {
            let m = elites.iter().map(|&i| pop[i][k]).sum::<f64>() / n_elite as f64;
            let v = elites.iter().map(|&i| (pop[i][k] - m).powi(2)).sum::<f64>() / n_elite as f64;
            *mean = m;
            *std = v.sqrt() + min_sigma;
        }
        order
    }
}

/// Why an initialization or extension run produced no usable policy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunIssue {
    pub stage: String,
    pub message: String,
}

/// Stateful trainer owning the buffer. The buffer is only mutated here.
pub struct Trainer {
    factory: EnvFactory,
    config: TrainerConfig,
    sampler: ContextSampler,
    buffer: PolicyBuffer,
    num_zones: usize,
    next_id: u64,
    issues: Vec<RunIssue>,
}

impl Trainer {
    /// Fixes the canonical protocol (the first `contexts_per_estimate` draws of
    /// an independent copy of `sampler`) and fits the observation normalizer.
    pub fn new(factory: EnvFactory, config: TrainerConfig, sampler: ContextSampler) -> Result<Self> {
        config.validate(factory.num_objectives())?;
        let canonical_sampler = sampler.clone_with_seed(mix_seed(config.seed, STREAM_CANONICAL_CONTEXTS, 0));
        let contexts: Vec<ContextSpec> = canonical_sampler.take(config.contexts_per_estimate).collect();
        let protocol = EvalProtocol {
            contexts,
            seeds: (0..config.eval_seeds as u64)
                .map(|i| mix_seed(config.seed, STREAM_EVAL_SEEDS, i))
                .collect(),
            episodes: config.eval_episodes,
        };
        let normalizer = ObsNormalizer::fit(
            &factory,
            &protocol.contexts,
            config.normalizer_episodes,
            mix_seed(config.seed, STREAM_NORMALIZER, 0),
        )?;
        let layout = factory.library.layout(&sampler.base().layout_id)?;
        let num_zones = layout.num_zones();
        let sampler = sampler.clone_with_seed(mix_seed(config.seed, STREAM_TRAIN_CONTEXTS, 0));
        Ok(Self {
            factory,
            config,
            sampler,
            buffer: PolicyBuffer::new(normalizer, protocol),
            num_zones,
            next_id: 0,
            issues: Vec::new(),
        })
    }

    /// Continues from a saved buffer.
    pub fn resume(factory: EnvFactory, checkpoint: Checkpoint) -> Result<Self> {
        checkpoint.config.validate(factory.num_objectives())?;
        let base = checkpoint
            .buffer
            .protocol
            .contexts
            .first()
            .cloned()
            .ok_or_else(|| Error::Config("checkpoint protocol has no contexts".into()))?;
        let num_zones = factory.library.layout(&base.layout_id)?.num_zones();
        let base = checkpoint.base_context.unwrap_or(base);
        let sampler = ContextSampler::new(
            checkpoint.mode,
            base,
            mix_seed(checkpoint.config.seed, STREAM_TRAIN_CONTEXTS, checkpoint.buffer.next_id()),
        );
        Ok(Self {
            factory,
            next_id: checkpoint.buffer.next_id(),
            config: checkpoint.config,
            sampler,
            buffer: checkpoint.buffer,
            num_zones,
            issues: Vec::new(),
        })
    }

    pub fn buffer(&self) -> &PolicyBuffer {
        &self.buffer
    }

    pub fn into_buffer(self) -> PolicyBuffer {
        self.buffer
    }

    pub fn config(&self) -> &TrainerConfig {
        &self.config
    }

    pub fn issues(&self) -> &[RunIssue] {
        &self.issues
    }

    pub fn checkpoint(&self) -> Checkpoint {
        Checkpoint {
            format: CHECKPOINT_FORMAT.to_string(),
            mode: self.sampler.mode(),
            base_context: Some(self.sampler.base().clone()),
            config: self.config.clone(),
            buffer: self.buffer.clone(),
        }
    }

    fn obs_dim(&self) -> usize {
        observation_dim(self.num_zones)
    }

    fn make_policy(&mut self, params: Vec<f64>, origin: PolicyOrigin) -> Policy {
        let id = self.next_id;
        self.next_id += 1;
        Policy {
            id,
            num_zones: self.num_zones,
            obs_dim: self.obs_dim(),
            params,
            origin,
        }
    }

    fn canonical(&self, policy: &Policy) -> Result<Vec<f64>> {
        evaluate_policy(&self.factory, &self.buffer.normalizer, policy, &self.buffer.protocol)
    }

    /// Protocol used for fitness within one optimizer iteration. In static
    /// mode it coincides with the canonical protocol.
    fn training_protocol(&mut self) -> EvalProtocol {
        EvalProtocol {
            contexts: self
                .sampler
                .by_ref()
                .take(self.config.contexts_per_estimate)
                .collect(),
            seeds: self.buffer.protocol.seeds.clone(),
            episodes: self.buffer.protocol.episodes,
        }
    }

    fn population_returns(&self, pop: &[Vec<f64>], protocol: &EvalProtocol) -> Vec<Result<Vec<f64>>> {
        let template = Policy::zero(0, self.num_zones, self.obs_dim());
        par_map(pop, |params| {
            let p = Policy {
                params: params.clone(),
                ..template.clone()
            };
            evaluate_policy(&self.factory, &self.buffer.normalizer, &p, protocol)
        })
    }

    /// Random policy with parameters drawn from `N(0, init_sigma²)`.
    pub fn random_params(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        (0..param_count(self.num_zones, self.obs_dim()))
            .map(|_| {
                let z: f64 = StandardNormal.sample(rng);
                z * self.config.init_sigma
            })
            .collect()
    }

    /// Trains one policy per preference vector, appending the starting
    /// policy and the best candidate of every iteration to the buffer.
    pub fn pareto_initialization(&mut self) -> Result<()> {
        let n_obj = self.factory.num_objectives();
        let prefs = self.config.preferences(n_obj);
        for (w_idx, omega) in prefs.iter().enumerate() {
            if let Err(e) = self.initialize_one(w_idx as u64, omega) {
                if matches!(e, Error::Optimizer(_)) {
                    self.issues.push(RunIssue {
                        stage: format!("init omega={:?}", omega.as_slice()),
                        message: e.to_string(),
                    });
                } else {
                    return Err(e);
                }
            }
        }
        if self.buffer.is_empty() {
            return Err(Error::Optimizer("every initialization run diverged".into()));
        }
        Ok(())
    }

    fn initialize_one(&mut self, w_idx: u64, omega: &PreferenceVector) -> Result<()> {
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(self.config.seed, STREAM_INIT, w_idx));
        let start = self.random_params(&mut rng);
        let origin = |iteration| PolicyOrigin::Init {
            omega: omega.as_slice().to_vec(),
            iteration,
        };
        let p0 = self.make_policy(start.clone(), origin(0));
        let g0 = self.canonical(&p0)?;
        self.buffer.push(BufferEntry {
            policy: p0,
            returns: g0,
        });

        let mut cem = Cem::new(start, self.config.init_sigma, rng.next_seed());
        let n_elite = self.config.elite_count();
        for it in 1..=self.config.iterations {
            let protocol = self.training_protocol();
            let pop = cem.sample(self.config.population);
            let fitness = self
                .population_returns(&pop, &protocol)
                .into_iter()
                .map(|r| r.and_then(|g| scalarize(omega, &g)))
                .map(|r| r.map(|f| if f.is_finite() { f } else { f64::NEG_INFINITY }))
                .collect::<Result<Vec<f64>>>()?;
            if fitness.iter().all(|f| *f == f64::NEG_INFINITY) {
                return Err(Error::Optimizer(format!(
                    "all returns non-finite at iteration {it}"
                )));
            }
            let order = cem.update(&pop, &fitness, n_elite, self.config.min_sigma);
            let best = pop[order[0]].clone();
            let policy = self.make_policy(best, origin(it));
            let returns = self.canonical(&policy)?;
            if returns.iter().all(|g| g.is_finite()) {
                self.buffer.push(BufferEntry { policy, returns });
            }
        }
        Ok(())
    }

    /// Policy with the best scalarized canonical return among the
    /// initialization entries trained for `omega`.
    pub fn best_for(&self, omega: &PreferenceVector) -> Option<&BufferEntry> {
        self.buffer
            .entries()
            .iter()
            .filter(|e| matches!(&e.policy.origin, PolicyOrigin::Init { omega: w, .. } if w.as_slice() == omega.as_slice()))
            .max_by(|a, b| {
                let fa = scalarize(omega, &a.returns).unwrap_or(f64::NEG_INFINITY);
                let fb = scalarize(omega, &b.returns).unwrap_or(f64::NEG_INFINITY);
                fa.total_cmp(&fb).then(b.policy.id.cmp(&a.policy.id))
            })
    }

    /// One extension round over `selected`: for every parent and objective,
    /// a warm-started constrained search. Feasible iterates are appended
    /// with origin `Extension`; runs that never become feasible are reported.
    pub fn pareto_extension(&mut self, selected: &[Policy], round: usize) -> Result<usize> {
        let n_obj = self.factory.num_objectives();
        let mut accepted = 0;
        for parent in selected {
            let parent_returns = self
                .buffer
                .get(parent.id)
                .ok_or_else(|| Error::Config(format!("policy {} is not in the buffer", parent.id)))?
                .returns
                .clone();
            for l in 0..n_obj {
                let tag = ((round as u64) << 40) ^ (parent.id << 8) ^ l as u64;
                accepted += self.extend_one(parent, &parent_returns, l, tag)?;
            }
        }
        Ok(accepted)
    }

    fn extend_one(&mut self, parent: &Policy, parent_returns: &[f64], l: usize, tag: u64) -> Result<usize> {
        let cfg = self.config.clone();
        let mut cem = Cem::new(
            parent.params.clone(),
            cfg.extension_sigma,
            mix_seed(cfg.seed, STREAM_EXTENSION, tag),
        );
        let n_elite = cfg.elite_count();
        let chunk = (cfg.extension_iterations / (cfg.penalty_rounds + 1)).max(1);
        let mut lambda = cfg.penalty_init;
        let mut accepted = 0;
        let mut last_feasible = true;
        for it in 1..=cfg.extension_iterations {
            let protocol = self.training_protocol();
            let pop = cem.sample(cfg.population);
            let fitness: Vec<f64> = self
                .population_returns(&pop, &protocol)
                .into_iter()
                .map(|r| {
                    r.map(|g| penalized_objective(&g, parent_returns, l, cfg.beta, lambda))
                        .map(|f| if f.is_finite() { f } else { f64::NEG_INFINITY })
                })
                .collect::<Result<_>>()?;
            let order = cem.update(&pop, &fitness, n_elite, cfg.min_sigma);
            let best = pop[order[0]].clone();
            if best != parent.params {
                let origin = PolicyOrigin::Extension {
                    objective: l,
                    parent: parent.id,
                    iteration: it,
                };
                let candidate = self.make_policy(best, origin);
                let returns = self.canonical(&candidate)?;
                last_feasible = returns.iter().all(|g| g.is_finite())
                    && satisfies_constraints(&returns, parent_returns, l, cfg.beta);
                if last_feasible {
                    self.buffer.push(BufferEntry {
                        policy: candidate,
                        returns,
                    });
                    accepted += 1;
                }
            }
            if it % chunk == 0 && !last_feasible {
                lambda *= 2.0;
            }
        }
        if accepted == 0 {
            self.issues.push(RunIssue {
                stage: format!("extension parent={} objective={l}", parent.id),
                message: "no feasible policy within the iteration budget; discarded".into(),
            });
        }
        Ok(accepted)
    }

    /// Runs the configured extension rounds, reselecting before each.
    pub fn extend(&mut self, rounds: usize) -> Result<()> {
        let start = self
            .buffer
            .entries()
            .iter()
            .filter(|e| matches!(e.policy.origin, PolicyOrigin::Extension { .. }))
            .count();
        for r in 0..rounds {
            let selected = select_policies(&self.buffer, self.config.extension_select)?;
            self.pareto_extension(&selected, start + r)?;
        }
        Ok(())
    }
}

pub const CHECKPOINT_FORMAT: &str = "building-morl-checkpoint/1";

/// Serialized trainer state: config, canonical protocol, normalizer and
/// every buffer entry. JSON with round-trip-exact floats.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub mode: TrainMode,
    #[serde(default)]
    pub base_context: Option<ContextSpec>,
    pub config: TrainerConfig,
    pub buffer: PolicyBuffer,
}

impl Checkpoint {
    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).map_err(|e| Error::json(path, e))?;
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let c: Self = serde_json::from_str(&text).map_err(|e| Error::json(path, e))?;
        if c.format != CHECKPOINT_FORMAT {
            return Err(Error::Validation(format!(
                "unsupported checkpoint format '{}'",
                c.format
            )));
        }
        Ok(c)
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub buffer: PolicyBuffer,
    /// Front over the whole buffer.
    pub front: ParetoFront,
    /// Front over the buffer as it stood after initialization.
    pub init_front: ParetoFront,
    pub issues: Vec<RunIssue>,
}

/// Initialization, selection, extension rounds and the final front.
pub fn train(factory: &EnvFactory, config: &TrainerConfig, mode: TrainMode, base: &ContextSpec) -> Result<TrainOutcome> {
    let sampler = ContextSampler::new(mode, base.clone(), config.seed);
    train_with_sampler(factory, config, sampler)
}

pub fn train_with_sampler(factory: &EnvFactory, config: &TrainerConfig, sampler: ContextSampler) -> Result<TrainOutcome> {
    let mut trainer = Trainer::new(factory.clone(), config.clone(), sampler)?;
    trainer.pareto_initialization()?;
    let init_front = trainer.buffer().front()?;
    trainer.extend(config.extension_rounds)?;
    let front = trainer.buffer().front()?;
    let issues = trainer.issues().to_vec();
    Ok(TrainOutcome {
        buffer: trainer.into_buffer(),
        front,
        init_front,
        issues,
    })
}

trait NextSeed {
    fn next_seed(&mut self) -> u64;
}

impl NextSeed for ChaCha8Rng {
    fn next_seed(&mut self) -> u64 {
        rand::Rng::random(self)
    }
}
