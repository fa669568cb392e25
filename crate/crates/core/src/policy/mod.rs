//! The toy autoregressive policy: vocabulary, states, model, sampling,
//! losses with analytic gradients, Adam, and checkpoints.

pub mod checkpoint;
pub mod gradcheck;
pub mod loss;
pub mod model;
pub mod optim;
pub mod sampling;
pub mod state;
pub mod vocab;

pub use checkpoint::{load_checkpoint, save_checkpoint};
pub use gradcheck::{grad_check, LossBatch};
pub use loss::{ce_loss_and_grad, kl_loss_and_grad, pg_loss_and_grad, GradBundle, LossKind};
pub use model::{forward_logits, log_prob, softmax, ModelShape, Policy, PolicyParams};
pub use optim::{adam_step, AdamConfig, OptimizerState};
pub use sampling::{rollout, rollout_from, sample_token, score_sequence, Decode, Trajectory};
pub use state::State;
pub use vocab::{TokenId, Vocab, BOS, EOS, PAD, RESET, SEP};
