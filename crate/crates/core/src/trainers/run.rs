//! Training loops for the presets and the per-step training log.

use std::fs;
use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::{Preset, SignalSource, TrainerConfig};
use super::sources::{make_signal, sample_states, StateOrigin};
use super::step::{apply_step, compute_group_advantages, expand_signals};
use crate::error::{Error, Result};
use crate::policy::{
    pg_loss_and_grad, rollout, Decode, LossBatch, OptimizerState, Policy, PolicyParams, Trajectory,
};
use crate::tasks::{mix_seed, verify_answer, Example};

/// One line of the training log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepRecord {
    pub step: usize,
    pub preset: Preset,
    pub state_source: String,
    pub signal_source: String,
    pub loss: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean_reward: Option<f64>,
    pub seed: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainLog {
    pub records: Vec<StepRecord>,
}

impl TrainLog {
    pub fn losses(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.loss).collect()
    }

    pub fn mean_rewards(&self) -> Vec<f64> {
        self.records.iter().filter_map(|r| r.mean_reward).collect()
    }

    /// The per-step quantity the preset minimizes: the loss itself, or the
    /// negated mean reward for the policy-gradient trainer.
    pub fn objective(&self) -> Vec<f64> {
        self.records
            .iter()
            .map(|r| r.mean_reward.map_or(r.loss, |m| -m))
            .collect()
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&serde_json::to_string(r).expect("record serializes"));
            out.push('\n');
        }
        out
    }

    pub fn from_jsonl(text: &str) -> Result<Self> {
        let records = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(i, l)| {
                serde_json::from_str(l).map_err(|e| Error::json(format!("log line {}", i + 1), e))
            })
            .collect::<Result<_>>()?;
        Ok(TrainLog { records })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        f.write_all(self.to_jsonl().as_bytes())
            .map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_jsonl(&text)
    }
}

/// Means of consecutive non-overlapping windows; a trailing partial window
/// is dropped unless it is the only one.
pub fn window_means(values: &[f64], window: usize) -> Vec<f64> {
    let window = window.max(1);
    let mean = |c: &[f64]| c.iter().sum::<f64>() / c.len() as f64;
    if values.len() < window {
        return if values.is_empty() { vec![] } else { vec![mean(values)] };
    }
    values.chunks_exact(window).map(mean).collect()
}

/// Scores one trajectory against its example.
pub type RewardFn<'a> = dyn Fn(&Example, &Trajectory) -> f64 + 'a;

/// The exact-answer task reward.
pub fn exact_answer_reward(ex: &Example, traj: &Trajectory) -> f64 {
    verify_answer(&ex.prompt, &traj.actions)
}

/// Result of a training run.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub params: PolicyParams,
    pub optimizer: OptimizerState,
    pub log: TrainLog,
}

/// Cycles through a dataset in per-epoch shuffled order.
struct EpochSampler {
    order: Vec<usize>,
    pos: usize,
}

impl EpochSampler {
    fn new(n: usize) -> Self {
        Self {
            order: (0..n).collect(),
            pos: n,
        }
    }

    fn next_batch<R: Rng + ?Sized>(&mut self, data: &[Example], n: usize, rng: &mut R) -> Vec<Example> {
        let mut out = Vec::with_capacity(n);
        while out.len() < n.min(data.len()) {
            if self.pos == self.order.len() {
                self.order.shuffle(rng);
                self.pos = 0;
            }
            out.push(data[self.order[self.pos]].clone());
            self.pos += 1;
        }
        out
    }
}

/// A training run in progress. The student starts from `params`/`optimizer`
/// (a fresh optimizer is built from the config when none is given).
pub struct Trainer<'a> {
    config: TrainerConfig,
    params: PolicyParams,
    optimizer: OptimizerState,
    teacher: Option<&'a dyn Policy>,
    data: &'a [Example],
    reward: Box<RewardFn<'a>>,
    sampler: EpochSampler,
    rng: ChaCha8Rng,
    log: TrainLog,
}

impl<'a> Trainer<'a> {
    pub fn new(
        config: TrainerConfig,
        params: PolicyParams,
        teacher: Option<&'a dyn Policy>,
        data: &'a [Example],
    ) -> Result<Self> {
        config.validate()?;
        params.check_consistent()?;
        if data.is_empty() {
            return Err(Error::Misconfiguration("training needs a non-empty dataset".into()));
        }
        let needs_teacher = config.signal_source.needs_teacher()
            || config.state_source.kind == super::config::StateSourceKind::TeacherRolloutStates;
        if needs_teacher && teacher.is_none() {
            return Err(Error::Misconfiguration(format!(
                "preset `{}` needs a teacher policy",
                config.preset
            )));
        }
        if let Some(t) = teacher {
            if t.vocab_size() != params.shape.vocab {
                return Err(Error::Misconfiguration(format!(
                    "teacher vocabulary {} differs from student vocabulary {}",
                    t.vocab_size(),
                    params.shape.vocab
                )));
            }
        }
        let optimizer = OptimizerState::new(&params, config.optimizer);
        let rng = ChaCha8Rng::seed_from_u64(mix_seed(config.seed, 0x7472_6169_6e00));
        Ok(Self {
            sampler: EpochSampler::new(data.len()),
            config,
            params,
            optimizer,
            teacher,
            data,
            reward: Box::new(exact_answer_reward),
            rng,
            log: TrainLog::default(),
        })
    }

    /// Continues from a saved optimizer state (its moments and step count).
    pub fn with_optimizer(mut self, mut optimizer: OptimizerState) -> Self {
        optimizer.config = self.config.optimizer;
        self.optimizer = optimizer;
        self
    }

    pub fn with_reward(mut self, reward: impl Fn(&Example, &Trajectory) -> f64 + 'a) -> Self {
        self.reward = Box::new(reward);
        self
    }

    pub fn config(&self) -> &TrainerConfig {
        &self.config
    }

    pub fn params(&self) -> &PolicyParams {
        &self.params
    }

    pub fn log(&self) -> &TrainLog {
        &self.log
    }

    /// Number of steps the configured schedule asks for.
    pub fn total_steps(&self) -> usize {
        self.config
            .schedule
            .steps_for(self.data.len(), self.config.state_source.prompts_per_step)
    }

    /// Runs one step and returns its log record.
    pub fn step(&mut self) -> Result<&StepRecord> {
        let batch = self.sampler.next_batch(
            self.data,
            self.config.state_source.prompts_per_step,
            &mut self.rng,
        );
        let (loss, origin, mean_reward) = match self.config.signal_source {
            SignalSource::Reward { group } => {
                let (loss, mean) = self.grpo_step(&batch, group)?;
                (loss, StateOrigin::StudentRollout, Some(mean))
            }
            _ => {
                let (loss, origin) = self.signal_step(&batch)?;
                (loss, origin, None)
            }
        };
        self.log.records.push(StepRecord {
            step: self.log.records.len(),
            preset: self.config.preset,
            state_source: origin.source_name().to_string(),
            signal_source: self.config.signal_source.name().to_string(),
            loss,
            mean_reward,
            seed: self.config.seed,
        });
        Ok(self.log.records.last().expect("just pushed"))
    }

    fn signal_step(&mut self, batch: &[Example]) -> Result<(f64, StateOrigin)> {
        let cfg = &self.config;
        let sampled = sample_states(
            &cfg.state_source,
            &self.params,
            self.teacher,
            batch,
            cfg.max_gen_len,
            &mut self.rng,
        )?;
        let origin = match sampled.first() {
            Some(s) => s.origin,
            None => return Err(Error::NumericFault("state source produced no states".into())),
        };
        let signals = sampled
            .iter()
            .map(|s| make_signal(&cfg.signal_source, s, self.teacher, batch))
            .collect::<Result<Vec<_>>>()?;
        let states: Vec<_> = sampled.into_iter().map(|s| s.state).collect();
        let loss_batch = expand_signals(cfg.loss, &states, &signals)?;
        let loss = apply_step(&mut self.params, &mut self.optimizer, &loss_batch)?;
        Ok((loss, origin))
    }

    fn grpo_step(&mut self, batch: &[Example], group: usize) -> Result<(f64, f64)> {
        let mode = Decode::from_temperature(self.config.state_source.temperature);
        let mut trajectories = Vec::with_capacity(batch.len() * group);
        let mut advantages = Vec::with_capacity(batch.len() * group);
        let mut reward_sum = 0.0;
        for ex in batch {
            let mut rewards = Vec::with_capacity(group);
            for _ in 0..group {
                let traj = rollout(
                    &self.params,
                    &ex.prompt,
                    self.config.max_gen_len,
                    mode,
                    &mut self.rng,
                )?;
                let r = (self.reward)(ex, &traj);
                if !r.is_finite() {
                    return Err(Error::NumericFault(format!("non-finite reward {r}")));
                }
                rewards.push(r);
                trajectories.push(traj);
            }
            reward_sum += rewards.iter().sum::<f64>();
            advantages.extend(compute_group_advantages(&rewards)?);
        }
        let grads = pg_loss_and_grad(&self.params, &trajectories, &advantages)?;
        self.optimizer.apply(&mut self.params, &grads)?;
        Ok((grads.loss, reward_sum / trajectories.len() as f64))
    }

    /// Runs the configured schedule to completion.
    pub fn run(mut self) -> Result<TrainOutcome> {
        for _ in 0..self.total_steps() {
            self.step()?;
        }
        Ok(self.finish())
    }

    pub fn finish(self) -> TrainOutcome {
        TrainOutcome {
            params: self.params,
            optimizer: self.optimizer,
            log: self.log,
        }
    }
}

/// Runs `config` from `params`, checking that the config is the expected
/// preset.
fn train_as(
    expected: Preset,
    config: &TrainerConfig,
    params: PolicyParams,
    teacher: Option<&dyn Policy>,
    data: &[Example],
) -> Result<TrainOutcome> {
    if config.preset != expected {
        return Err(Error::Misconfiguration(format!(
            "expected a `{expected}` config, got `{}`",
            config.preset
        )));
    }
    Trainer::new(config.clone(), params, teacher, data)?.run()
}

/// Dataset states, gold tokens, cross-entropy.
pub fn train_sft(config: &TrainerConfig, params: PolicyParams, data: &[Example]) -> Result<TrainOutcome> {
    train_as(Preset::Sft, config, params, None, data)
}

/// Teacher rollout states, teacher distributions, KL.
pub fn train_offline_kd(
    config: &TrainerConfig,
    params: PolicyParams,
    teacher: &dyn Policy,
    data: &[Example],
) -> Result<TrainOutcome> {
    train_as(Preset::OfflineKd, config, params, Some(teacher), data)
}

/// Student rollout states, teacher distributions, KL.
pub fn train_opd_onestep(
    config: &TrainerConfig,
    params: PolicyParams,
    teacher: &dyn Policy,
    data: &[Example],
) -> Result<TrainOutcome> {
    train_as(Preset::OpdOnestep, config, params, Some(teacher), data)
}

/// Student rollout states, greedy teacher continuations, cross-entropy.
pub fn train_opd_continuation(
    config: &TrainerConfig,
    params: PolicyParams,
    teacher: &dyn Policy,
    data: &[Example],
) -> Result<TrainOutcome> {
    train_as(Preset::OpdContinuation, config, params, Some(teacher), data)
}

/// Student rollout states, expert recovery continuations, cross-entropy.
pub fn train_dagger(config: &TrainerConfig, params: PolicyParams, data: &[Example]) -> Result<TrainOutcome> {
    train_as(Preset::Dagger, config, params, None, data)
}

/// Group-relative policy gradient with the exact-answer reward.
pub fn train_rl_grpo(config: &TrainerConfig, params: PolicyParams, data: &[Example]) -> Result<TrainOutcome> {
    train_as(Preset::RlGrpo, config, params, None, data)
}

/// The preset dispatcher used by the harness.
pub fn train_preset(
    config: &TrainerConfig,
    params: PolicyParams,
    teacher: Option<&dyn Policy>,
    data: &[Example],
) -> Result<TrainOutcome> {
    Trainer::new(config.clone(), params, teacher, data)?.run()
}

/// Re-evaluates a batch under `params` without updating (used by tests and
/// diagnostics).
pub fn batch_loss(params: &PolicyParams, batch: &LossBatch) -> Result<f64> {
    Ok(batch.evaluate(params)?.loss)
}
