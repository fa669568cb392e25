//! The run configuration: everything a pipeline needs, as one JSON document.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::drift::DEFAULT_DIM;
use crate::error::{Error, Result};
use crate::policy::{AdamConfig, ModelShape};
use crate::tasks::{default_mixture, Difficulty, MixtureWeights, MAX_GEN_LEN};
use crate::trainers::{Preset, Schedule, TrainerConfig};

/// SFT on the pretraining mixture until the copy score reaches a threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PretrainConfig {
    pub mixture: MixtureWeights,
    pub n_examples: usize,
    pub optimizer: AdamConfig,
    pub batch_size: usize,
    /// Evaluate the stopping rule every this many steps.
    pub eval_every: usize,
    /// The stopping rule is not consulted before this step.
    pub min_steps: usize,
    pub max_steps: usize,
    pub copy_threshold: f64,
    pub eval_n: usize,
}

impl Default for PretrainConfig {
    fn default() -> Self {
        Self {
            mixture: default_mixture(),
            n_examples: 40_000,
            optimizer: AdamConfig::with_lr(3e-3),
            batch_size: 32,
            eval_every: 500,
            min_steps: 4000,
            max_steps: 12_000,
            copy_threshold: 0.8,
            eval_n: 200,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalConfig {
    /// Held-out prompts per task.
    pub n: usize,
    pub seed: u64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self { n: 500, seed: 1 }
    }
}

/// How rollout states are collected and compared.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriftSampling {
    pub n_prompts: usize,
    pub n_states: usize,
    pub temperature: f64,
    pub feature_dim: usize,
    pub hash_seed: u64,
    pub projections: usize,
    pub projection_seed: u64,
    /// Seed of the fixed prompt set.
    pub prompt_seed: u64,
}

impl Default for DriftSampling {
    fn default() -> Self {
        Self {
            n_prompts: 200,
            n_states: 2000,
            temperature: 1.0,
            feature_dim: DEFAULT_DIM,
            hash_seed: 0,
            projections: 64,
            projection_seed: 0,
            prompt_seed: 17,
        }
    }
}

/// One post-training run of the pipeline. Students start from the base
/// model; `trainer.teacher` names an earlier stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StageSpec {
    pub name: String,
    pub trainer: TrainerConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub model: ModelShape,
    pub difficulty: Difficulty,
    pub pretrain: PretrainConfig,
    /// Size of the target-task training set (SFT data and rollout prompts).
    pub target_train_size: usize,
    pub stages: Vec<StageSpec>,
    pub eval: EvalConfig,
    pub drift: DriftSampling,
}

pub const BASE: &str = "base";

fn stage(name: &str, trainer: TrainerConfig) -> StageSpec {
    StageSpec {
        name: name.to_string(),
        trainer,
    }
}

fn with_teacher(mut c: TrainerConfig, teacher: &str) -> TrainerConfig {
    c.teacher = Some(teacher.to_string());
    c
}

impl Default for RunConfig {
    fn default() -> Self {
        let on_policy = |preset: Preset, steps: usize, lr: f64| {
            let mut c = TrainerConfig::preset(preset);
            c.schedule = Schedule::Steps(steps);
            c.optimizer.lr = lr;
            c
        };
        let opd = |preset: Preset, teacher: &str| with_teacher(on_policy(preset, 600, 3e-3), teacher);
        let mut sft_mild = TrainerConfig::sft_mild();
        let mut sft_stress = TrainerConfig::sft_stress();
        sft_mild.state_source.prompts_per_step = 8;
        sft_stress.state_source.prompts_per_step = 4;
        Self {
            seed: 0,
            model: ModelShape::default(),
            difficulty: Difficulty {
                max_operands: 4,
                max_digit: 5,
                ..Difficulty::default()
            },
            pretrain: PretrainConfig::default(),
            target_train_size: 1000,
            stages: vec![
                stage("sft_mild", sft_mild),
                stage("sft_stress", sft_stress),
                stage("opd_cont_mild", opd(Preset::OpdContinuation, "sft_mild")),
                stage("opd_cont_stress", opd(Preset::OpdContinuation, "sft_stress")),
                stage("opd_onestep_stress", opd(Preset::OpdOnestep, "sft_stress")),
                stage("rl_grpo", on_policy(Preset::RlGrpo, 300, 1e-3)),
                stage("dagger", on_policy(Preset::Dagger, 600, 1e-3)),
            ],
            eval: EvalConfig::default(),
            drift: DriftSampling::default(),
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let c: RunConfig = serde_json::from_str(text).map_err(|e| Error::json("run config", e))?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Json { source, .. } => Error::json(format!("{}", path.display()), source),
            other => other,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn stage(&self, name: &str) -> Option<&StageSpec> {
        self.stages.iter().find(|s| s.name == name)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Misconfiguration(m));
        self.model.validate()?;
        self.difficulty.validate()?;
        if self.pretrain.mixture.values().any(|&w| !(w >= 0.0))
            || !(self.pretrain.mixture.values().sum::<f64>() > 0.0)
        {
            return bad("pretraining mixture weights must be ≥ 0 with a positive sum".into());
        }
        let p = &self.pretrain;
        if p.n_examples == 0 || p.batch_size == 0 || p.eval_every == 0 || p.max_steps == 0 || p.eval_n == 0 {
            return bad("pretraining sizes must be ≥ 1".into());
        }
        if !(p.optimizer.lr > 0.0) {
            return bad("pretraining learning rate must be positive".into());
        }
        if self.target_train_size == 0 || self.eval.n == 0 {
            return bad("target_train_size and eval.n must be ≥ 1".into());
        }
        let d = &self.drift;
        if d.n_prompts == 0 || d.n_states < 2 || d.feature_dim < 2 || d.projections == 0 {
            return bad("drift sampling needs ≥ 1 prompt, ≥ 2 states, dim ≥ 2, ≥ 1 projection".into());
        }
        if !(d.temperature >= 0.0) {
            return bad("drift temperature must be ≥ 0".into());
        }
        let mut seen = BTreeSet::new();
        for s in &self.stages {
            if s.name == BASE || s.name.is_empty() || !s.name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-') {
                return bad(format!("invalid stage name `{}`", s.name));
            }
            s.trainer.validate()?;
            if s.trainer.max_gen_len > MAX_GEN_LEN {
                return bad(format!("stage `{}`: max_gen_len above {MAX_GEN_LEN}", s.name));
            }
            if let Some(t) = &s.trainer.teacher {
                if !seen.contains(t.as_str()) {
                    return bad(format!("stage `{}`: teacher `{t}` is not an earlier stage", s.name));
                }
            }
            if !seen.insert(s.name.as_str()) {
                return bad(format!("duplicate stage `{}`", s.name));
            }
        }
        Ok(())
    }
}
