//! The unified post-training step and the method presets built on it.
//!
//! Every trainer is the same loop: draw states from a state source, query a
//! signal source at those states, take one gradient step on the matching
//! loss. Presets differ only in which sources and loss they pair.

mod config;
mod probe;
mod run;
mod sources;
mod step;

pub use config::{
    Preset, PrefixSampling, Schedule, SignalSource, StateSource, StateSourceKind, TrainerConfig,
};
pub use probe::{bandit_probe, BanditProbe, BANDIT_LR, BANDIT_REWARD_TOKEN};
pub use run::{
    batch_loss, exact_answer_reward, train_dagger, train_offline_kd, train_opd_continuation,
    train_opd_onestep, train_preset, train_rl_grpo, train_sft, window_means, RewardFn, StepRecord,
    TrainLog, TrainOutcome, Trainer,
};
pub use sources::{
    dataset_states, make_signal, rollout_states, sample_states, subsample, SampledState,
    StateOrigin, SupervisionObject,
};
pub use step::{apply_step, compute_group_advantages, expand_signals, unified_step};
