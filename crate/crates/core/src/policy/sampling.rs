//! Token sampling and rollouts.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::model::{log_softmax, Policy};
use super::state::State;
use super::vocab::{TokenId, EOS, PAD};
use crate::error::{Error, Result};

/// Decoding rule for rollouts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum Decode {
    Greedy,
    Sample { temperature: f64 },
}

impl Decode {
    /// Temperature 0 means greedy.
    pub fn from_temperature(temperature: f64) -> Self {
        if temperature == 0.0 {
            Decode::Greedy
        } else {
            Decode::Sample { temperature }
        }
    }
}

/// Argmax over non-PAD tokens; ties go to the lowest id.
pub fn greedy_token(logits: &[f64]) -> TokenId {
    let mut best = usize::MAX;
    let mut best_logit = f64::NEG_INFINITY;
    for (t, &l) in logits.iter().enumerate() {
        if t == PAD {
            continue;
        }
        if best == usize::MAX || l > best_logit {
            best = t;
            best_logit = l;
        }
    }
    best
}

/// Draws from the temperature-scaled softmax with PAD masked out.
/// `temperature == 0` is greedy.
pub fn sample_from_logits<R: Rng + ?Sized>(
    logits: &[f64],
    temperature: f64,
    rng: &mut R,
) -> Result<TokenId> {
    if !(temperature >= 0.0) || !temperature.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "temperature must be a finite non-negative number, got {temperature}"
        )));
    }
    if logits.iter().any(|l| !l.is_finite()) {
        return Err(Error::NumericFault("non-finite logits".into()));
    }
    if temperature == 0.0 {
        return Ok(greedy_token(logits));
    }
    let max = logits
        .iter()
        .enumerate()
        .filter(|&(t, _)| t != PAD)
        .map(|(_, &l)| l / temperature)
        .fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = logits
        .iter()
        .enumerate()
        .map(|(t, &l)| {
            if t == PAD {
                0.0
            } else {
                (l / temperature - max).exp()
            }
        })
        .collect();
    let total: f64 = weights.iter().sum();
    let mut u = rng.random::<f64>() * total;
    let mut last = PAD;
    for (t, &w) in weights.iter().enumerate() {
        if w <= 0.0 {
            continue;
        }
        last = t;
        if u < w {
            return Ok(t);
        }
        u -= w;
    }
    Ok(last)
}

pub fn sample_token<P: Policy + ?Sized, R: Rng + ?Sized>(
    policy: &P,
    state: &State,
    temperature: f64,
    rng: &mut R,
) -> Result<TokenId> {
    let logits = policy.logits(state)?;
    sample_from_logits(&logits, temperature, rng)
}

/// One generated answer: the actions taken from `prompt` and their
/// log-probabilities under the generating policy (untempered).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub prompt: Vec<TokenId>,
    /// Tokens already present before generation started (empty for rollouts
    /// from a bare prompt).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub start_prefix: Vec<TokenId>,
    pub actions: Vec<TokenId>,
    pub log_probs: Vec<f64>,
    /// EOS reached (as opposed to the length cap).
    pub terminated: bool,
}

impl Trajectory {
    pub fn horizon(&self) -> usize {
        self.actions.len()
    }

    pub fn total_log_prob(&self) -> f64 {
        self.log_probs.iter().sum()
    }

    /// The state in which each action was taken, in order.
    pub fn states(&self) -> Result<Vec<State>> {
        let mut state = State::new(self.prompt.clone(), self.start_prefix.clone())?;
        let mut out = Vec::with_capacity(self.actions.len());
        for &a in &self.actions {
            out.push(state.clone());
            state.push(a);
        }
        Ok(out)
    }

    /// Generated tokens without the trailing EOS.
    pub fn answer(&self) -> &[TokenId] {
        match self.actions.split_last() {
            Some((&EOS, rest)) if self.terminated => rest,
            _ => &self.actions,
        }
    }
}

/// Generates from a bare prompt until EOS or `max_len` actions.
pub fn rollout<P: Policy + ?Sized, R: Rng + ?Sized>(
    policy: &P,
    prompt: &[TokenId],
    max_len: usize,
    mode: Decode,
    rng: &mut R,
) -> Result<Trajectory> {
    let start = State::from_prompt(prompt.to_vec())?;
    rollout_from(policy, &start, max_len, mode, rng)
}

/// Generates from an arbitrary state. The returned trajectory's actions
/// exclude the state's existing prefix.
pub fn rollout_from<P: Policy + ?Sized, R: Rng + ?Sized>(
    policy: &P,
    start: &State,
    max_len: usize,
    mode: Decode,
    rng: &mut R,
) -> Result<Trajectory> {
    if max_len == 0 {
        return Err(Error::InvalidArgument("rollout max_len must be ≥ 1".into()));
    }
    let temperature = match mode {
        Decode::Greedy => 0.0,
        Decode::Sample { temperature } => temperature,
    };
    let mut state = start.clone();
    let mut actions = Vec::new();
    let mut log_probs = Vec::new();
    let mut terminated = false;
    while actions.len() < max_len && state.len() < super::state::MAX_SEQ_LEN {
        let logits = policy.logits(&state)?;
        let token = sample_from_logits(&logits, temperature, rng)?;
        log_probs.push(log_softmax(&logits)[token]);
        actions.push(token);
        if token == EOS {
            terminated = true;
            break;
        }
        state.push(token);
    }
    Ok(Trajectory {
        prompt: start.prompt().to_vec(),
        start_prefix: start.prefix().to_vec(),
        actions,
        log_probs,
        terminated,
    })
}

/// Sum of `log π(action | state)` along a fixed action sequence.
pub fn score_sequence<P: Policy + ?Sized>(
    policy: &P,
    prompt: &[TokenId],
    actions: &[TokenId],
) -> Result<f64> {
    let mut state = State::from_prompt(prompt.to_vec())?;
    let mut total = 0.0;
    for &a in actions {
        total += super::model::log_prob(policy, &state, a)?;
        state.push(a);
    }
    Ok(total)
}
