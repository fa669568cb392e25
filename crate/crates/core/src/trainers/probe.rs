//! Single-step bandit probe for the policy-gradient trainer: vocabulary
//! {PAD, 1, 2}, one-token context, horizon 1, reward 1 for token 2.

use super::config::{Preset, Schedule, TrainerConfig};
use super::run::Trainer;
use crate::error::Result;
use crate::policy::{softmax, ModelShape, Policy, PolicyParams, State, TokenId};
use crate::tasks::{Example, TaskKind};

pub const BANDIT_REWARD_TOKEN: TokenId = 2;

/// Learning rate of the probe. The trainer default is tuned for the
/// sequence tasks; PAD is never sampled, so its mass only decays through
/// the shared softmax and a larger step is needed within 300 updates.
pub const BANDIT_LR: f64 = 1e-2;

#[derive(Debug, Clone, PartialEq)]
pub struct BanditProbe {
    /// π(reward token) after each step.
    pub reward_prob: Vec<f64>,
    pub mean_rewards: Vec<f64>,
}

impl BanditProbe {
    pub fn final_prob(&self) -> f64 {
        self.reward_prob.last().copied().unwrap_or(f64::NAN)
    }

    /// First step (1-based) at which π(reward token) exceeds `threshold`.
    pub fn first_above(&self, threshold: f64) -> Option<usize> {
        self.reward_prob.iter().position(|&p| p > threshold).map(|i| i + 1)
    }
}

pub fn bandit_probe(lr: f64, steps: usize, seed: u64) -> Result<BanditProbe> {
    let shape = ModelShape {
        vocab: 3,
        context: 1,
        embed_dim: 4,
        hidden: 8,
    };
    let data = vec![Example {
        kind: TaskKind::Copy,
        prompt: vec![1],
        gold: vec![BANDIT_REWARD_TOKEN],
    }];
    let mut c = TrainerConfig::preset(Preset::RlGrpo);
    c.max_gen_len = 1;
    c.optimizer.lr = lr;
    c.schedule = Schedule::Steps(steps);
    c.seed = seed;
    let mut trainer = Trainer::new(c, PolicyParams::init(shape, seed), None, &data)?
        .with_reward(|_, t| f64::from(u8::from(t.actions.first() == Some(&BANDIT_REWARD_TOKEN))));
    let state = State::from_prompt(vec![1])?;
    let mut reward_prob = Vec::with_capacity(steps);
    for _ in 0..steps {
        trainer.step()?;
        reward_prob.push(softmax(&trainer.params().logits(&state)?)[BANDIT_REWARD_TOKEN]);
    }
    let mean_rewards = trainer.log().mean_rewards();
    Ok(BanditProbe { reward_prob, mean_rewards })
}
