//! A small post-training laboratory.
//!
//! Every trainer here is the same three-operation loop: draw training states
//! from a *state source*, ask a *signal source* for supervision at those
//! states, and take one gradient step. Supervised fine-tuning, offline
//! distillation, on-policy distillation, group-relative RL and DAgger differ
//! only in which sources they plug in.
//!
//! - [`policy`]: the fixed-window neural language model, losses with exact
//!   gradients, Adam, checkpoints.
//! - [`tasks`]: synthetic target/retention tasks, the exact-answer reward and
//!   the recovery expert.
//! - [`trainers`]: state/signal sources, the unified step and the presets.
//! - [`drift`]: lexical state featurization, MMD, sliced Wasserstein,
//!   centroid and Jaccard distances, forgetting/retention statistics.
//! - [`harness`]: the end-to-end pipeline, reports and the CLI.

pub mod drift;
pub mod error;
pub mod harness;
pub mod policy;
pub mod tasks;
pub mod trainers;

pub use error::{Error, Result};
