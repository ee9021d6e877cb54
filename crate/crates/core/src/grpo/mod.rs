//! Group-relative policy optimization. The advantage and surrogate math here
//! drives a tabular toy policy that is rewarded through the real extraction
//! and scoring path; adapter sizing for the full model sits alongside.

mod lora;
mod toy;

pub use lora::{lora_fraction_pct, lora_param_count, qwen3_vl_2b_text, LoraShape, QWEN3_VL_2B_TOTAL_PARAMS};
pub use toy::{
    default_toy_tasks, objective, objective_gradient, train_toy, Batch, EpochRecord, PolicyParams, ToyTask,
    ToyTaskError, TrainConfig, TrainConfigError, TrainError, TrainingHistory,
};

/// G sampled completions for one prompt with their scalar rewards.
#[derive(Clone, Debug, PartialEq)]
pub struct RewardGroup {
    pub prompt_id: String,
    pub rewards: Vec<f64>,
    pub advantages: Vec<f64>,
}

impl RewardGroup {
    /// # Panics
    /// If fewer than two rewards are given.
    pub fn new(prompt_id: impl Into<String>, rewards: Vec<f64>, advantage_epsilon: f64) -> Self {
        let advantages = group_advantages(&rewards, advantage_epsilon);
        Self { prompt_id: prompt_id.into(), rewards, advantages }
    }

    pub fn group_size(&self) -> usize {
        self.rewards.len()
    }
}

/// `(r - mean) / (population std + eps)`; exactly zero when all rewards are
/// bitwise equal.
///
/// # Panics
/// If fewer than two rewards are given.
pub fn group_advantages(rewards: &[f64], eps: f64) -> Vec<f64> {
    assert!(rewards.len() >= 2, "a group needs at least two rewards, got {}", rewards.len());
    if rewards.iter().all(|r| r.to_bits() == rewards[0].to_bits()) {
        return vec![0.0; rewards.len()];
    }
    let n = rewards.len() as f64;
    let mean = rewards.iter().sum::<f64>() / n;
    let var = rewards.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / n;
    let denom = var.sqrt() + eps;
    rewards.iter().map(|r| (r - mean) / denom).collect()
}

/// `min(ratio * A, clip(ratio, 1 - eps, 1 + eps) * A)`.
pub fn clipped_surrogate(ratio: f64, advantage: f64, eps: f64) -> f64 {
    let clipped = ratio.clamp(1.0 - eps, 1.0 + eps);
    (ratio * advantage).min(clipped * advantage)
}

/// Whether the unclipped branch of [`clipped_surrogate`] is the active one,
/// i.e. the one the gradient flows through.
pub(crate) fn surrogate_unclipped(ratio: f64, advantage: f64, eps: f64) -> bool {
    let clipped = ratio.clamp(1.0 - eps, 1.0 + eps);
    ratio * advantage <= clipped * advantage
}
