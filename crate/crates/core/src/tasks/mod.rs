//! Synthetic tasks with verifiable answers.
//!
//! `chain_arith` is the target task; `copy`, `reverse` and `count` measure
//! retention. Every prompt starts with a task-tag token, so the verifier and
//! the recovery expert can tell the tasks apart from the prompt alone.

mod eval;
mod generate;
pub mod io;
mod spec;
mod verify;

pub use eval::{score_exact_match, EvalScore, ExpertPolicy};
pub use generate::{
    default_mixture, gen_examples, gen_pretrain_mixture, mix_seed, split_of, MixtureWeights,
};
pub use spec::{vocab, Difficulty, Example, Split, TaskKind, TaskSpec, MAX_GEN_LEN};
pub use verify::{effective_completion, expert_continuation, solve, verify_answer, Solution};
