//! Tabular softmax policy over program fragments. Each toy task is a fixed
//! sequence of positions, each offering a few candidate fragments; a sampled
//! sequence is concatenated into a completion and scored by the genuine
//! classify-then-reward path.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{clipped_surrogate, group_advantages, surrogate_unclipped};
use crate::engine::Limits;
use crate::extraction::{classify_text, BlockPolicy};
use crate::scoring::{compute_reward, GroundTruth, RewardConfig};

pub const MAX_POSITIONS: usize = 8;
pub const MAX_VOCABULARY: usize = 64;

/// Upper bound on the sequences enumerated per task when rewards are cached.
const MAX_SEQUENCES: usize = 1 << 16;

#[derive(Clone, Debug, PartialEq, Error)]
pub enum ToyTaskError {
    #[error("task `{0}` has no positions")]
    NoPositions(String),
    #[error("task `{task}` has {count} positions, more than {MAX_POSITIONS}")]
    TooManyPositions { task: String, count: usize },
    #[error("task `{task}` position {position} has no candidates")]
    EmptyPosition { task: String, position: usize },
    #[error("task set uses {0} distinct fragments, more than {MAX_VOCABULARY}")]
    VocabularyTooLarge(usize),
    #[error("task `{task}` spans {count} sequences, more than {MAX_SEQUENCES}")]
    TooManySequences { task: String, count: usize },
}

/// One synthesis problem: pick a fragment at every position.
#[derive(Clone, Debug, PartialEq)]
pub struct ToyTask {
    pub name: String,
    pub truth: GroundTruth,
    pub positions: Vec<Vec<String>>,
}

impl ToyTask {
    pub fn new(name: impl Into<String>, truth: GroundTruth, positions: Vec<Vec<String>>) -> Result<Self, ToyTaskError> {
        let name = name.into();
        if positions.is_empty() {
            return Err(ToyTaskError::NoPositions(name));
        }
        if positions.len() > MAX_POSITIONS {
            return Err(ToyTaskError::TooManyPositions { task: name, count: positions.len() });
        }
        if let Some(p) = positions.iter().position(Vec::is_empty) {
            return Err(ToyTaskError::EmptyPosition { task: name, position: p });
        }
        let count = positions.iter().try_fold(1usize, |acc, c| acc.checked_mul(c.len()));
        match count {
            Some(n) if n <= MAX_SEQUENCES => Ok(Self { name, truth, positions }),
            _ => Err(ToyTaskError::TooManySequences { task: name, count: count.unwrap_or(usize::MAX) }),
        }
    }

    pub fn sequence_count(&self) -> usize {
        self.positions.iter().map(Vec::len).product()
    }

    /// Mixed-radix decoding of a sequence index into one action per position.
    fn decode(&self, mut index: usize) -> Vec<usize> {
        let mut actions = vec![0; self.positions.len()];
        for (p, candidates) in self.positions.iter().enumerate().rev() {
            actions[p] = index % candidates.len();
            index /= candidates.len();
        }
        actions
    }

    fn encode(&self, actions: &[usize]) -> usize {
        self.positions.iter().zip(actions).fold(0, |acc, (candidates, a)| acc * candidates.len() + a)
    }

    pub fn render(&self, actions: &[usize]) -> String {
        self.positions.iter().zip(actions).map(|(c, a)| c[*a].as_str()).collect()
    }
}

fn fragments(items: &[&str]) -> Vec<String> {
    items.iter().map(|s| s.to_string()).collect()
}

/// Five list-statistics tasks sharing one fragment vocabulary. Only one
/// opener, one closer and one closing tag yield runnable code; the head and
/// list together decide correctness.
pub fn default_toy_tasks() -> Vec<ToyTask> {
    let positions = || {
        vec![
            fragments(&["<neurosymtag>", "Answer: ", "<neurosym>"]),
            fragments(&["Length[", "Total[", "Max[", "Min["]),
            fragments(&["{3, 1, 2}", "{5, 5}", "{2, 7, 1, 4}"]),
            fragments(&["]", ")"]),
            fragments(&["</neurosymtag>", " </neurosym>"]),
        ]
    };
    let exact = |n: i64| GroundTruth::ExactNumber(num_bigint::BigInt::from(n).into());
    [("count-three", 3), ("sum-pair", 10), ("largest", 7), ("smallest", 1), ("count-four", 4)]
        .into_iter()
        .map(|(name, answer)| ToyTask::new(name, exact(answer), positions()).expect("default tasks are well formed"))
        .collect()
}

fn vocabulary_size(tasks: &[ToyTask]) -> usize {
    tasks.iter().flat_map(|t| t.positions.iter().flatten()).collect::<BTreeSet<_>>().len()
}

#[derive(Debug, Error)]
pub enum TrainConfigError {
    #[error("cannot read training config: {0}")]
    Io(#[from] std::io::Error),
    #[error("invalid training config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("`{0}` must be positive")]
    NotPositive(&'static str),
    #[error("kl_coefficient must be finite and non-negative")]
    NegativeKl,
    #[error("group_size must be at least 2")]
    GroupTooSmall,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub group_size: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub clip_epsilon: f64,
    pub kl_coefficient: f64,
    pub advantage_epsilon: f64,
    /// Gradient steps taken on each sampled group before resampling.
    pub updates_per_group: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            group_size: 10,
            epochs: 10,
            learning_rate: 4.0,
            clip_epsilon: 0.2,
            kl_coefficient: 0.0,
            advantage_epsilon: 1e-8,
            updates_per_group: 2,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainConfigError> {
        if self.group_size < 2 {
            return Err(TrainConfigError::GroupTooSmall);
        }
        if self.epochs == 0 {
            return Err(TrainConfigError::NotPositive("epochs"));
        }
        if self.updates_per_group == 0 {
            return Err(TrainConfigError::NotPositive("updates_per_group"));
        }
        // A zero learning rate is accepted: it freezes the policy.
        if !(self.learning_rate.is_finite() && self.learning_rate >= 0.0) {
            return Err(TrainConfigError::NotPositive("learning_rate"));
        }
        if !(self.clip_epsilon.is_finite() && self.clip_epsilon > 0.0) {
            return Err(TrainConfigError::NotPositive("clip_epsilon"));
        }
        if !(self.advantage_epsilon.is_finite() && self.advantage_epsilon > 0.0) {
            return Err(TrainConfigError::NotPositive("advantage_epsilon"));
        }
        if !(self.kl_coefficient.is_finite() && self.kl_coefficient >= 0.0) {
            return Err(TrainConfigError::NegativeKl);
        }
        Ok(())
    }

    /// Reads a TOML table; a `[train]` section is used when present.
    pub fn from_toml_str(text: &str) -> Result<Self, TrainConfigError> {
        #[derive(Deserialize)]
        struct Wrapped {
            train: TrainConfig,
        }
        let config = match toml::from_str::<Wrapped>(text) {
            Ok(w) => w.train,
            Err(_) => toml::from_str::<TrainConfig>(text)?,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, TrainConfigError> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }
}

/// Logits indexed by task, position, and candidate.
#[derive(Clone, Debug, PartialEq)]
pub struct PolicyParams {
    pub logits: Vec<Vec<Vec<f64>>>,
}

fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

impl PolicyParams {
    /// All-zero logits: uniform over candidates at every position.
    pub fn uniform(tasks: &[ToyTask]) -> Self {
        Self { logits: tasks.iter().map(|t| t.positions.iter().map(|c| vec![0.0; c.len()]).collect()).collect() }
    }

    pub fn probs(&self, task: usize, position: usize) -> Vec<f64> {
        softmax(&self.logits[task][position])
    }

    pub fn log_prob(&self, task: usize, position: usize, action: usize) -> f64 {
        self.probs(task, position)[action].ln()
    }

    pub fn sequence_prob(&self, task: usize, actions: &[usize]) -> f64 {
        actions.iter().enumerate().map(|(p, a)| self.probs(task, p)[*a]).product()
    }

    pub fn len(&self) -> usize {
        self.logits.iter().flatten().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn flatten(&self) -> Vec<f64> {
        self.logits.iter().flatten().flatten().copied().collect()
    }

    pub fn from_flat(shape: &PolicyParams, flat: &[f64]) -> PolicyParams {
        let mut it = flat.iter().copied();
        PolicyParams {
            logits: shape
                .logits
                .iter()
                .map(|t| {
                    t.iter().map(|p| p.iter().map(|_| it.next().expect("flat vector too short")).collect()).collect()
                })
                .collect(),
        }
    }

    fn zeros_like(&self) -> PolicyParams {
        PolicyParams { logits: self.logits.iter().map(|t| t.iter().map(|p| vec![0.0; p.len()]).collect()).collect() }
    }

    fn add_scaled(&mut self, other: &PolicyParams, scale: f64) {
        for (a, b) in self.logits.iter_mut().flatten().flatten().zip(other.logits.iter().flatten().flatten()) {
            *a += scale * b;
        }
    }
}

/// The sampled group for one task with its normalized advantages.
#[derive(Clone, Debug, PartialEq)]
pub struct Batch {
    pub task: usize,
    pub actions: Vec<Vec<usize>>,
    pub advantages: Vec<f64>,
}

struct TokenTerm {
    position: usize,
    action: usize,
    /// Weight on `grad log pi(action)` for this token.
    weight: f64,
    value: f64,
}

/// Per-token surrogate minus the `k3` KL estimate against `reference`.
fn token_terms(
    params: &PolicyParams,
    batch: &Batch,
    old: &PolicyParams,
    reference: &PolicyParams,
    config: &TrainConfig,
) -> Vec<TokenTerm> {
    let mut terms = Vec::new();
    for (actions, &adv) in batch.actions.iter().zip(&batch.advantages) {
        for (position, &action) in actions.iter().enumerate() {
            let logp = params.log_prob(batch.task, position, action);
            let ratio = (logp - old.log_prob(batch.task, position, action)).exp();
            let rho = (reference.log_prob(batch.task, position, action) - logp).exp();
            let surrogate = clipped_surrogate(ratio, adv, config.clip_epsilon);
            let kl = rho - rho.ln() - 1.0;
            let d_surrogate = if surrogate_unclipped(ratio, adv, config.clip_epsilon) { adv * ratio } else { 0.0 };
            let d_kl = 1.0 - rho;
            terms.push(TokenTerm {
                position,
                action,
                weight: d_surrogate - config.kl_coefficient * d_kl,
                value: surrogate - config.kl_coefficient * kl,
            });
        }
    }
    terms
}

fn normalizer(batch: &Batch) -> f64 {
    let tokens: usize = batch.actions.iter().map(Vec::len).sum();
    tokens.max(1) as f64
}

/// Mean over the batch's tokens of the clipped surrogate minus the weighted
/// KL penalty. This is the quantity the update ascends.
pub fn objective(
    params: &PolicyParams,
    batch: &Batch,
    old: &PolicyParams,
    reference: &PolicyParams,
    config: &TrainConfig,
) -> f64 {
    token_terms(params, batch, old, reference, config).iter().map(|t| t.value).sum::<f64>() / normalizer(batch)
}

/// Analytic gradient of [`objective`] with respect to every logit.
pub fn objective_gradient(
    params: &PolicyParams,
    batch: &Batch,
    old: &PolicyParams,
    reference: &PolicyParams,
    config: &TrainConfig,
) -> PolicyParams {
    let mut grad = params.zeros_like();
    let n = normalizer(batch);
    for term in token_terms(params, batch, old, reference, config) {
        let probs = params.probs(batch.task, term.position);
        let slot = &mut grad.logits[batch.task][term.position];
        for (k, p) in probs.iter().enumerate() {
            let indicator = if k == term.action { 1.0 } else { 0.0 };
            slot[k] += term.weight * (indicator - p) / n;
        }
    }
    grad
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Expected reward under the policy after this epoch, averaged over tasks.
    pub mean_reward: f64,
    /// Standard deviation of the reward under the same distribution.
    pub std_reward: f64,
    /// Mean of the rewards actually sampled during this epoch.
    pub sampled_mean_reward: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainingHistory {
    pub initial_mean_reward: f64,
    /// Average over tasks of the best reward any sequence can earn.
    pub max_mean_reward: f64,
    pub epochs: Vec<EpochRecord>,
    pub initial_params: PolicyParams,
    pub final_params: PolicyParams,
}

impl TrainingHistory {
    pub fn final_mean_reward(&self) -> f64 {
        self.epochs.last().map_or(self.initial_mean_reward, |e| e.mean_reward)
    }

    /// One JSON object per epoch.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for e in &self.epochs {
            let _ = writeln!(out, "{}", serde_json::to_string(e).expect("epoch record serializes"));
        }
        out
    }
}

#[derive(Debug, Error)]
pub enum TrainError {
    #[error(transparent)]
    Config(#[from] TrainConfigError),
    #[error(transparent)]
    Task(#[from] ToyTaskError),
    #[error("no toy tasks given")]
    NoTasks,
    #[error(
        "non-finite gradient at epoch {epoch}, task `{task}`, position {position}, candidate {candidate}: {value}"
    )]
    NonFinite { epoch: usize, task: String, position: usize, candidate: usize, value: f64 },
}

/// Rewards of every sequence of every task, by sequence index.
fn reward_tables(tasks: &[ToyTask], reward: &RewardConfig) -> Vec<Vec<f64>> {
    let limits = Limits::default();
    tasks
        .iter()
        .map(|task| {
            (0..task.sequence_count())
                .map(|i| {
                    let outcome = classify_text(&task.render(&task.decode(i)), &limits, BlockPolicy::Last);
                    compute_reward(&outcome, &task.truth, reward)
                })
                .collect()
        })
        .collect()
}

/// Exact mean and standard deviation of the reward when a task is drawn
/// uniformly and a sequence is drawn from the policy.
fn expected_reward(params: &PolicyParams, tasks: &[ToyTask], tables: &[Vec<f64>]) -> (f64, f64) {
    let (mut m1, mut m2) = (0.0, 0.0);
    for (t, (task, table)) in tasks.iter().zip(tables).enumerate() {
        let probs: Vec<Vec<f64>> = (0..task.positions.len()).map(|p| params.probs(t, p)).collect();
        for (i, r) in table.iter().enumerate() {
            let p: f64 = task.decode(i).iter().enumerate().map(|(pos, a)| probs[pos][*a]).product();
            m1 += p * r;
            m2 += p * r * r;
        }
    }
    let n = tasks.len() as f64;
    let (mean, second) = (m1 / n, m2 / n);
    (mean, (second - mean * mean).max(0.0).sqrt())
}

fn sample(params: &PolicyParams, task: usize, positions: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    (0..positions)
        .map(|p| {
            let probs = params.probs(task, p);
            let u: f64 = rng.random();
            let mut acc = 0.0;
            for (k, q) in probs.iter().enumerate() {
                acc += q;
                if u < acc {
                    return k;
                }
            }
            probs.len() - 1
        })
        .collect()
}

/// Runs GRPO on the toy tasks from a uniform policy.
pub fn train_toy(
    tasks: &[ToyTask],
    config: &TrainConfig,
    reward: &RewardConfig,
) -> Result<TrainingHistory, TrainError> {
    config.validate()?;
    if tasks.is_empty() {
        return Err(TrainError::NoTasks);
    }
    let vocab = vocabulary_size(tasks);
    if vocab > MAX_VOCABULARY {
        return Err(ToyTaskError::VocabularyTooLarge(vocab).into());
    }
    let tables = reward_tables(tasks, reward);
    let max_mean_reward =
        tables.iter().map(|t| t.iter().copied().fold(0.0, f64::max)).sum::<f64>() / tasks.len() as f64;
    let reference = PolicyParams::uniform(tasks);
    let mut params = reference.clone();
    let (initial_mean_reward, _) = expected_reward(&params, tasks, &tables);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut epochs = Vec::with_capacity(config.epochs);

    for epoch in 1..=config.epochs {
        let mut sampled = Vec::with_capacity(tasks.len() * config.group_size);
        for (t, task) in tasks.iter().enumerate() {
            let old = params.clone();
            let actions: Vec<Vec<usize>> =
                (0..config.group_size).map(|_| sample(&old, t, task.positions.len(), &mut rng)).collect();
            let rewards: Vec<f64> = actions.iter().map(|a| tables[t][task.encode(a)]).collect();
            sampled.extend_from_slice(&rewards);
            let batch = Batch { task: t, advantages: group_advantages(&rewards, config.advantage_epsilon), actions };
            for _ in 0..config.updates_per_group {
                let grad = objective_gradient(&params, &batch, &old, &reference, config);
                check_finite(&grad, epoch, tasks)?;
                params.add_scaled(&grad, config.learning_rate);
            }
        }
        let (mean_reward, std_reward) = expected_reward(&params, tasks, &tables);
        epochs.push(EpochRecord {
            epoch,
            mean_reward,
            std_reward,
            sampled_mean_reward: sampled.iter().sum::<f64>() / sampled.len() as f64,
        });
    }

    Ok(TrainingHistory {
        initial_mean_reward,
        max_mean_reward,
        epochs,
        initial_params: reference,
        final_params: params,
    })
}

fn check_finite(grad: &PolicyParams, epoch: usize, tasks: &[ToyTask]) -> Result<(), TrainError> {
    for (t, positions) in grad.logits.iter().enumerate() {
        for (position, row) in positions.iter().enumerate() {
            if let Some((candidate, value)) = row.iter().enumerate().find(|(_, g)| !g.is_finite()) {
                return Err(TrainError::NonFinite {
                    epoch,
                    task: tasks[t].name.clone(),
                    position,
                    candidate,
                    value: *value,
                });
            }
        }
    }
    Ok(())
}
