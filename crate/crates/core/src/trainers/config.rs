//! Trainer configuration and the preset consistency rules.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::policy::{AdamConfig, LossKind};
use crate::tasks::MAX_GEN_LEN;

/// Where training states come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StateSourceKind {
    /// Every (prompt, gold-prefix) position of the sampled examples.
    DatasetStates,
    /// Prefix states visited by the current student.
    StudentRolloutStates,
    /// Prefix states visited by a fixed teacher.
    TeacherRolloutStates,
}

impl StateSourceKind {
    pub fn name(self) -> &'static str {
        match self {
            StateSourceKind::DatasetStates => "dataset_states",
            StateSourceKind::StudentRolloutStates => "student_rollout_states",
            StateSourceKind::TeacherRolloutStates => "teacher_rollout_states",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PrefixSampling {
    /// Uniform without replacement over all positions of all rollouts in the
    /// step's batch.
    #[default]
    Uniform,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateSource {
    pub kind: StateSourceKind,
    /// Examples (dataset) or prompts (rollouts) drawn per step.
    #[serde(default = "default_prompts")]
    pub prompts_per_step: usize,
    /// Rollout states are subsampled to at most this many per step.
    #[serde(default = "default_states")]
    pub states_per_step: usize,
    #[serde(default = "default_temperature")]
    pub temperature: f64,
    #[serde(default)]
    pub prefix_sampling: PrefixSampling,
}

fn default_prompts() -> usize {
    8
}
fn default_states() -> usize {
    32
}
fn default_temperature() -> f64 {
    1.0
}

impl StateSource {
    pub fn new(kind: StateSourceKind) -> Self {
        Self {
            kind,
            prompts_per_step: default_prompts(),
            states_per_step: default_states(),
            temperature: default_temperature(),
            prefix_sampling: PrefixSampling::Uniform,
        }
    }
}

/// What supervision is provided at a state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SignalSource {
    GoldTokens,
    TeacherLogits,
    /// Greedy teacher rollout of at most `len` tokens from the state.
    TeacherContinuation { len: usize },
    ExpertContinuation,
    /// Exact-answer reward over a group of `group` rollouts per prompt.
    Reward { group: usize },
}

impl SignalSource {
    pub fn name(&self) -> &'static str {
        match self {
            SignalSource::GoldTokens => "gold_tokens",
            SignalSource::TeacherLogits => "teacher_logits",
            SignalSource::TeacherContinuation { .. } => "teacher_continuation",
            SignalSource::ExpertContinuation => "expert_continuation",
            SignalSource::Reward { .. } => "reward",
        }
    }

    pub fn needs_teacher(&self) -> bool {
        matches!(
            self,
            SignalSource::TeacherLogits | SignalSource::TeacherContinuation { .. }
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    Sft,
    OfflineKd,
    OpdOnestep,
    OpdContinuation,
    RlGrpo,
    Dagger,
}

impl Preset {
    pub const ALL: [Preset; 6] = [
        Preset::Sft,
        Preset::OfflineKd,
        Preset::OpdOnestep,
        Preset::OpdContinuation,
        Preset::RlGrpo,
        Preset::Dagger,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Sft => "sft",
            Preset::OfflineKd => "offline_kd",
            Preset::OpdOnestep => "opd_onestep",
            Preset::OpdContinuation => "opd_continuation",
            Preset::RlGrpo => "rl_grpo",
            Preset::Dagger => "dagger",
        }
    }

    /// The (state source, signal source, loss) row this preset stands for.
    pub fn pairing(self) -> (StateSourceKind, &'static str, LossKind) {
        use StateSourceKind::*;
        match self {
            Preset::Sft => (DatasetStates, "gold_tokens", LossKind::Ce),
            Preset::OfflineKd => (TeacherRolloutStates, "teacher_logits", LossKind::Kl),
            Preset::OpdOnestep => (StudentRolloutStates, "teacher_logits", LossKind::Kl),
            Preset::OpdContinuation => {
                (StudentRolloutStates, "teacher_continuation", LossKind::Ce)
            }
            Preset::RlGrpo => (StudentRolloutStates, "reward", LossKind::Pg),
            Preset::Dagger => (StudentRolloutStates, "expert_continuation", LossKind::Ce),
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.replace('-', "_");
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == norm)
            .ok_or_else(|| Error::Misconfiguration(format!("unknown preset `{s}`")))
    }
}

/// How many optimizer steps to take.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Schedule {
    Steps(usize),
    /// Full passes over the training examples (`prompts_per_step` per step).
    Passes(usize),
}

impl Schedule {
    pub fn steps_for(&self, n_examples: usize, per_step: usize) -> usize {
        match *self {
            Schedule::Steps(n) => n,
            Schedule::Passes(p) => p * n_examples.div_ceil(per_step.max(1)),
        }
    }
}

/// A validated trainer configuration. Deserialization runs the preset
/// consistency rules, so a bad pairing fails at load time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawTrainerConfig", into = "RawTrainerConfig")]
pub struct TrainerConfig {
    pub preset: Preset,
    pub state_source: StateSource,
    pub signal_source: SignalSource,
    pub loss: LossKind,
    pub optimizer: AdamConfig,
    pub schedule: Schedule,
    pub seed: u64,
    /// Name of the teacher checkpoint (resolved by the caller).
    pub teacher: Option<String>,
    pub max_gen_len: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTrainerConfig {
    preset: Preset,
    state_source: StateSource,
    signal_source: SignalSource,
    loss: LossKind,
    optimizer: AdamConfig,
    schedule: Schedule,
    #[serde(default)]
    seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    teacher: Option<String>,
    #[serde(default = "default_max_gen")]
    max_gen_len: usize,
}

fn default_max_gen() -> usize {
    MAX_GEN_LEN
}

impl TryFrom<RawTrainerConfig> for TrainerConfig {
    type Error = Error;

    fn try_from(r: RawTrainerConfig) -> Result<Self> {
        let c = TrainerConfig {
            preset: r.preset,
            state_source: r.state_source,
            signal_source: r.signal_source,
            loss: r.loss,
            optimizer: r.optimizer,
            schedule: r.schedule,
            seed: r.seed,
            teacher: r.teacher,
            max_gen_len: r.max_gen_len,
        };
        c.validate()?;
        Ok(c)
    }
}

impl From<TrainerConfig> for RawTrainerConfig {
    fn from(c: TrainerConfig) -> Self {
        RawTrainerConfig {
            preset: c.preset,
            state_source: c.state_source,
            signal_source: c.signal_source,
            loss: c.loss,
            optimizer: c.optimizer,
            schedule: c.schedule,
            seed: c.seed,
            teacher: c.teacher,
            max_gen_len: c.max_gen_len,
        }
    }
}

impl TrainerConfig {
    /// Default configuration for a preset. SFT defaults to the mild recipe.
    pub fn preset(preset: Preset) -> Self {
        use StateSourceKind::*;
        let (kind, signal, loss, lr, schedule) = match preset {
            Preset::Sft => (
                DatasetStates,
                SignalSource::GoldTokens,
                LossKind::Ce,
                1e-3,
                Schedule::Passes(1),
            ),
            Preset::OfflineKd => (
                TeacherRolloutStates,
                SignalSource::TeacherLogits,
                LossKind::Kl,
                1e-3,
                Schedule::Steps(150),
            ),
            Preset::OpdOnestep => (
                StudentRolloutStates,
                SignalSource::TeacherLogits,
                LossKind::Kl,
                1e-3,
                Schedule::Steps(150),
            ),
            Preset::OpdContinuation => (
                StudentRolloutStates,
                SignalSource::TeacherContinuation { len: 8 },
                LossKind::Ce,
                1e-3,
                Schedule::Steps(150),
            ),
            Preset::RlGrpo => (
                StudentRolloutStates,
                SignalSource::Reward { group: 4 },
                LossKind::Pg,
                1e-3,
                Schedule::Steps(150),
            ),
            Preset::Dagger => (
                StudentRolloutStates,
                SignalSource::ExpertContinuation,
                LossKind::Ce,
                1e-3,
                Schedule::Steps(150),
            ),
        };
        let mut state_source = StateSource::new(kind);
        if preset == Preset::Sft {
            state_source.prompts_per_step = 16;
        }
        TrainerConfig {
            preset,
            state_source,
            signal_source: signal,
            loss,
            optimizer: AdamConfig::with_lr(lr),
            schedule,
            seed: 0,
            teacher: signal.needs_teacher().then(|| "sft_mild".to_string()),
            max_gen_len: MAX_GEN_LEN,
        }
    }

    /// Mild SFT: η = 1e−3, one pass.
    pub fn sft_mild() -> Self {
        Self::preset(Preset::Sft)
    }

    /// Stress SFT: 10× the learning rate and 5× the passes of mild SFT.
    pub fn sft_stress() -> Self {
        let mut c = Self::preset(Preset::Sft);
        c.optimizer.lr = 1e-2;
        c.schedule = Schedule::Passes(5);
        c
    }

    pub fn validate(&self) -> Result<()> {
        let (state, signal, loss) = self.preset.pairing();
        let mismatch = |what: &str, want: &str, got: &str| {
            Err(Error::Misconfiguration(format!(
                "preset `{}` requires {what} `{want}`, got `{got}`",
                self.preset
            )))
        };
        if self.state_source.kind != state {
            return mismatch("state source", state.name(), self.state_source.kind.name());
        }
        if self.signal_source.name() != signal {
            return mismatch("signal source", signal, self.signal_source.name());
        }
        if self.loss != loss {
            return mismatch("loss", &loss.to_string(), &self.loss.to_string());
        }
        let needs_teacher = self.signal_source.needs_teacher()
            || self.state_source.kind == StateSourceKind::TeacherRolloutStates;
        if needs_teacher && self.teacher.is_none() {
            return Err(Error::Misconfiguration(format!(
                "preset `{}` needs a teacher checkpoint",
                self.preset
            )));
        }
        match self.signal_source {
            SignalSource::TeacherContinuation { len: 0 } => {
                return Err(Error::Misconfiguration("continuation length must be ≥ 1".into()))
            }
            SignalSource::Reward { group } if group < 2 => {
                return Err(Error::Misconfiguration("reward group size must be ≥ 2".into()))
            }
            _ => {}
        }
        if !(self.optimizer.lr > 0.0) {
            return Err(Error::Misconfiguration("learning rate must be positive".into()));
        }
        let t = self.state_source.temperature;
        if !(t >= 0.0) || !t.is_finite() {
            return Err(Error::Misconfiguration("temperature must be ≥ 0".into()));
        }
        if self.state_source.prompts_per_step == 0 || self.state_source.states_per_step == 0 {
            return Err(Error::Misconfiguration("per-step sizes must be ≥ 1".into()));
        }
        if self.max_gen_len == 0 {
            return Err(Error::Misconfiguration("max_gen_len must be ≥ 1".into()));
        }
        if matches!(self.schedule, Schedule::Steps(0) | Schedule::Passes(0)) {
            return Err(Error::Misconfiguration("schedule must be non-empty".into()));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| {
            // surface the preset rule violation as a misconfiguration
            Error::Misconfiguration(format!("trainer config: {e}"))
        })
    }
}
