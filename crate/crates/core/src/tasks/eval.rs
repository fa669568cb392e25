use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::generate::gen_examples;
use super::spec::{Split, TaskKind, TaskSpec, MAX_GEN_LEN};
use super::verify::{expert_continuation, verify_answer};
use crate::error::Result;
use crate::policy::{rollout, Decode, Policy, State};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalScore {
    pub task: TaskKind,
    pub score: f64,
    pub n: usize,
}

/// Greedy exact-match accuracy on `n` held-out prompts.
pub fn score_exact_match<P: Policy + ?Sized>(
    policy: &P,
    spec: &TaskSpec,
    n: usize,
    seed: u64,
) -> Result<EvalScore> {
    let examples = gen_examples(spec, Split::Eval, n, seed)?;
    // greedy decoding never touches the rng
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut hits = 0usize;
    for ex in &examples {
        let traj = rollout(policy, &ex.prompt, MAX_GEN_LEN, Decode::Greedy, &mut rng)?;
        if verify_answer(&ex.prompt, &traj.actions) == 1.0 {
            hits += 1;
        }
    }
    Ok(EvalScore {
        task: spec.kind,
        score: hits as f64 / n as f64,
        n,
    })
}

/// The recovery expert as a policy: puts all its logit mass on the first
/// token of `expert_continuation`.
#[derive(Debug, Clone, Copy, Default)]
pub struct ExpertPolicy;

impl Policy for ExpertPolicy {
    fn vocab_size(&self) -> usize {
        super::spec::vocab().len()
    }

    fn logits(&self, state: &State) -> Result<Vec<f64>> {
        let next = expert_continuation(state.prompt(), state.prefix())[0];
        let mut logits = vec![0.0; self.vocab_size()];
        logits[next] = 50.0;
        Ok(logits)
    }
}
