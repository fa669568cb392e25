//! State sources and signal sources.

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::{SignalSource, StateSource, StateSourceKind};
use crate::error::{Error, Result};
use crate::policy::{rollout, rollout_from, softmax, Decode, Policy, State, TokenId};
use crate::tasks::{expert_continuation, Example};

/// Which distribution produced a training state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StateOrigin {
    Dataset,
    StudentRollout,
    TeacherRollout,
}

impl StateOrigin {
    pub fn source_name(self) -> &'static str {
        match self {
            StateOrigin::Dataset => StateSourceKind::DatasetStates.name(),
            StateOrigin::StudentRollout => StateSourceKind::StudentRolloutStates.name(),
            StateOrigin::TeacherRollout => StateSourceKind::TeacherRolloutStates.name(),
        }
    }
}

/// A training state with its provenance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SampledState {
    pub state: State,
    pub origin: StateOrigin,
    /// Index of the example (in the step's batch) whose prompt it came from.
    pub example: usize,
}

/// All prefix states `(prompt, gold[..t])` for `t < |gold|`.
pub fn dataset_states(batch: &[Example]) -> Result<Vec<SampledState>> {
    let mut out = Vec::new();
    for (i, ex) in batch.iter().enumerate() {
        for t in 0..ex.gold.len() {
            out.push(SampledState {
                state: State::new(ex.prompt.clone(), ex.gold[..t].to_vec())?,
                origin: StateOrigin::Dataset,
                example: i,
            });
        }
    }
    Ok(out)
}

/// Every state visited by `policy` when rolling out once on each prompt of
/// the batch, in prompt order then position order.
pub fn rollout_states<P: Policy + ?Sized, R: Rng + ?Sized>(
    policy: &P,
    batch: &[Example],
    origin: StateOrigin,
    temperature: f64,
    max_len: usize,
    rng: &mut R,
) -> Result<Vec<SampledState>> {
    let mode = Decode::from_temperature(temperature);
    let mut out = Vec::new();
    for (i, ex) in batch.iter().enumerate() {
        let traj = rollout(policy, &ex.prompt, max_len, mode, rng)?;
        for state in traj.states()? {
            out.push(SampledState {
                state,
                origin,
                example: i,
            });
        }
    }
    Ok(out)
}

/// Uniform subsample of `n` items without replacement, original order kept.
/// Consumes the rng only when subsampling is needed.
pub fn subsample<T, R: Rng + ?Sized>(items: Vec<T>, n: usize, rng: &mut R) -> Vec<T> {
    if items.len() <= n {
        return items;
    }
    let mut keep = index::sample(rng, items.len(), n).into_vec();
    keep.sort_unstable();
    let mut slots: Vec<Option<T>> = items.into_iter().map(Some).collect();
    keep.into_iter()
        .map(|i| slots[i].take().expect("indices are distinct"))
        .collect()
}

/// Draws the training states for one step.
///
/// Dataset states are dense (every gold position of every example in the
/// batch). Rollout states come from one rollout per prompt by the student or
/// teacher, pooled and subsampled uniformly to `states_per_step`.
pub fn sample_states<R: Rng + ?Sized>(
    source: &StateSource,
    student: &dyn Policy,
    teacher: Option<&dyn Policy>,
    batch: &[Example],
    max_len: usize,
    rng: &mut R,
) -> Result<Vec<SampledState>> {
    if batch.is_empty() {
        return Err(Error::Misconfiguration("state source needs a dataset".into()));
    }
    match source.kind {
        StateSourceKind::DatasetStates => dataset_states(batch),
        StateSourceKind::StudentRolloutStates | StateSourceKind::TeacherRolloutStates => {
            let (policy, origin) = if source.kind == StateSourceKind::StudentRolloutStates {
                (student, StateOrigin::StudentRollout)
            } else {
                let t = teacher.ok_or_else(|| {
                    Error::Misconfiguration("teacher rollout states need a teacher".into())
                })?;
                (t, StateOrigin::TeacherRollout)
            };
            let all = rollout_states(policy, batch, origin, source.temperature, max_len, rng)?;
            Ok(subsample(all, source.states_per_step, rng))
        }
    }
}

/// The supervision object `z` produced by a signal source.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SupervisionObject {
    Token(TokenId),
    Distribution(Vec<f64>),
    Continuation(Vec<TokenId>),
    Reward(f64),
}

/// Queries a signal source at one state.
pub fn make_signal(
    source: &SignalSource,
    sampled: &SampledState,
    teacher: Option<&dyn Policy>,
    batch: &[Example],
) -> Result<SupervisionObject> {
    let need_teacher = || {
        teacher.ok_or_else(|| {
            Error::Misconfiguration(format!("signal source `{}` needs a teacher", source.name()))
        })
    };
    match *source {
        SignalSource::GoldTokens => {
            if sampled.origin != StateOrigin::Dataset {
                return Err(Error::InvalidPairing(format!(
                    "gold tokens requested at a {} state",
                    sampled.origin.source_name()
                )));
            }
            let ex = batch.get(sampled.example).ok_or_else(|| {
                Error::InvalidPairing("state refers to an example outside the batch".into())
            })?;
            let t = sampled.state.prefix().len();
            if ex.prompt != sampled.state.prompt()
                || t >= ex.gold.len()
                || ex.gold[..t] != *sampled.state.prefix()
            {
                return Err(Error::InvalidPairing(
                    "state is not a gold prefix of its example".into(),
                ));
            }
            Ok(SupervisionObject::Token(ex.gold[t]))
        }
        SignalSource::TeacherLogits => {
            let logits = need_teacher()?.logits(&sampled.state)?;
            Ok(SupervisionObject::Distribution(softmax(&logits)))
        }
        SignalSource::TeacherContinuation { len } => {
            // greedy decoding never touches the rng
            let mut unused = ChaCha8Rng::seed_from_u64(0);
            let traj = rollout_from(need_teacher()?, &sampled.state, len, Decode::Greedy, &mut unused)?;
            Ok(SupervisionObject::Continuation(traj.actions))
        }
        SignalSource::ExpertContinuation => Ok(SupervisionObject::Continuation(
            expert_continuation(sampled.state.prompt(), sampled.state.prefix()),
        )),
        SignalSource::Reward { .. } => Err(Error::Misconfiguration(
            "reward signals are group-level; use the GRPO trainer".into(),
        )),
    }
}
