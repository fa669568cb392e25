//! The unified update: expand supervision into a loss batch, take one
//! gradient, apply one Adam step.

use super::sources::SupervisionObject;
use crate::error::{Error, Result};
use crate::policy::{LossBatch, LossKind, OptimizerState, PolicyParams, State};

/// Turns aligned (state, supervision) pairs into the loss batch for `loss`.
///
/// A continuation `c₁…cₘ` sampled at state `s` becomes `m` CE items
/// `(s, c₁), (s·c₁, c₂), …` by replaying it from `s`.
pub fn expand_signals(
    loss: LossKind,
    states: &[State],
    signals: &[SupervisionObject],
) -> Result<LossBatch> {
    if states.len() != signals.len() {
        return Err(Error::InvalidArgument(format!(
            "{} states but {} signals",
            states.len(),
            signals.len()
        )));
    }
    let mismatch = |z: &SupervisionObject| {
        Err(Error::Misconfiguration(format!(
            "loss `{loss}` cannot consume a {} signal",
            match z {
                SupervisionObject::Token(_) => "token",
                SupervisionObject::Distribution(_) => "distribution",
                SupervisionObject::Continuation(_) => "continuation",
                SupervisionObject::Reward(_) => "reward",
            }
        )))
    };
    match loss {
        LossKind::Ce => {
            let mut items = Vec::new();
            for (s, z) in states.iter().zip(signals) {
                match z {
                    SupervisionObject::Token(t) => items.push((s.clone(), *t)),
                    SupervisionObject::Continuation(c) => {
                        let mut cur = s.clone();
                        for (i, &t) in c.iter().enumerate() {
                            if i > 0 {
                                cur = cur.advance(c[i - 1])?;
                            }
                            items.push((cur.clone(), t));
                        }
                    }
                    other => return mismatch(other),
                }
            }
            Ok(LossBatch::Ce(items))
        }
        LossKind::Kl => {
            let mut items = Vec::with_capacity(states.len());
            for (s, z) in states.iter().zip(signals) {
                match z {
                    SupervisionObject::Distribution(p) => items.push((s.clone(), p.clone())),
                    other => return mismatch(other),
                }
            }
            Ok(LossBatch::Kl(items))
        }
        LossKind::Pg => Err(Error::Misconfiguration(
            "policy-gradient batches are built from grouped trajectories, not per-state signals"
                .into(),
        )),
    }
}

/// One gradient + Adam step on a prepared loss batch. Returns the loss.
pub fn apply_step(
    params: &mut PolicyParams,
    opt: &mut OptimizerState,
    batch: &LossBatch,
) -> Result<f64> {
    let grads = batch.evaluate(params)?;
    if !grads.loss.is_finite() {
        return Err(Error::NumericFault(format!("non-finite loss {}", grads.loss)));
    }
    opt.apply(params, &grads)?;
    Ok(grads.loss)
}

/// `θ ← θ − η ∇ℓ(π_θ(·|s), z)` for the given states and signals.
pub fn unified_step(
    params: &mut PolicyParams,
    opt: &mut OptimizerState,
    states: &[State],
    signals: &[SupervisionObject],
    loss: LossKind,
) -> Result<f64> {
    let batch = expand_signals(loss, states, signals)?;
    match &batch {
        LossBatch::Ce(v) if v.is_empty() => {
            return Err(Error::InvalidArgument("no supervised tokens in step".into()))
        }
        _ => {}
    }
    apply_step(params, opt, &batch)
}

/// Group-relative advantages `(r − mean) / (std + 1e−4)` with population
/// std; an all-equal group gets all zeros.
pub fn compute_group_advantages(rewards: &[f64]) -> Result<Vec<f64>> {
    const EPS_A: f64 = 1e-4;
    if rewards.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "group size must be ≥ 2, got {}",
            rewards.len()
        )));
    }
    let n = rewards.len() as f64;
    let mean = rewards.iter().sum::<f64>() / n;
    let var = rewards.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / n;
    let std = var.sqrt();
    if std == 0.0 {
        return Ok(vec![0.0; rewards.len()]);
    }
    Ok(rewards.iter().map(|r| (r - mean) / (std + EPS_A)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn advantages_hand_example() {
        let a = compute_group_advantages(&[1.0, 0.0, 0.0, 1.0]).unwrap();
        let unit = 0.5 / (0.5 + 1e-4);
        assert_eq!(a.len(), 4);
        for (got, want) in a.iter().zip([unit, -unit, -unit, unit]) {
            assert!((got - want).abs() < 1e-12);
        }
        assert!((a[0] - 1.0).abs() < 1e-3);
    }

    #[test]
    fn degenerate_groups() {
        assert_eq!(compute_group_advantages(&[1.0; 5]).unwrap(), vec![0.0; 5]);
        assert!(compute_group_advantages(&[1.0]).is_err());
    }

    #[test]
    fn continuation_expansion_chains_states() {
        let s = State::new(vec![5, 6], vec![7]).unwrap();
        let batch = expand_signals(
            LossKind::Ce,
            std::slice::from_ref(&s),
            &[SupervisionObject::Continuation(vec![8, 9, 10])],
        )
        .unwrap();
        let LossBatch::Ce(items) = batch else { panic!() };
        assert_eq!(items.len(), 3);
        assert_eq!(items[0], (s.clone(), 8));
        assert_eq!(items[1].0.prefix(), &[7, 8]);
        assert_eq!(items[2].0.prefix(), &[7, 8, 9]);
        assert_eq!(items[2].1, 10);
    }

    #[test]
    fn loss_signal_mismatch_is_misconfiguration() {
        let s = State::new(vec![5], vec![]).unwrap();
        let r = expand_signals(LossKind::Kl, std::slice::from_ref(&s), &[SupervisionObject::Token(6)]);
        assert!(matches!(r, Err(Error::Misconfiguration(_))));
        let r = expand_signals(LossKind::Ce, std::slice::from_ref(&s), &[SupervisionObject::Reward(1.0)]);
        assert!(matches!(r, Err(Error::Misconfiguration(_))));
        let r = expand_signals(LossKind::Pg, &[s], &[SupervisionObject::Reward(1.0)]);
        assert!(matches!(r, Err(Error::Misconfiguration(_))));
    }
}
