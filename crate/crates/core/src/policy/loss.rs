//! Losses and their exact analytic gradients.
//!
//! All three losses reduce to the same per-state backward pass: the gradient
//! w.r.t. the logits is `weight · (softmax − target)` for some target
//! distribution (one-hot for CE and PG, the teacher's distribution for KL).

use serde::{Deserialize, Serialize};

use super::model::{log_softmax, PolicyParams};
use super::sampling::Trajectory;
use super::state::State;
use super::vocab::{TokenId, PAD};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LossKind {
    Ce,
    Kl,
    Pg,
}

impl std::fmt::Display for LossKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            LossKind::Ce => "ce",
            LossKind::Kl => "kl",
            LossKind::Pg => "pg",
        })
    }
}

/// Gradient for every parameter array plus the scalar loss.
#[derive(Debug, Clone, PartialEq)]
pub struct GradBundle {
    pub loss: f64,
    pub grad: PolicyParams,
}

impl GradBundle {
    pub fn max_abs(&self) -> f64 {
        self.grad.iter().fold(0.0, |m, g| m.max(g.abs()))
    }
}

enum Target<'a> {
    OneHot(TokenId),
    Soft(&'a [f64]),
}

/// Adds `weight · (−log-likelihood or cross-entropy term)` for one state and
/// returns that (unweighted) term.
fn accumulate(
    params: &PolicyParams,
    state: &State,
    target: Target<'_>,
    weight: f64,
    grad: &mut PolicyParams,
) -> Result<f64> {
    let act = params.forward(state)?;
    let logp = log_softmax(&act.logits);
    let mut dlogits: Vec<f64> = logp.iter().map(|&l| weight * l.exp()).collect();
    let term = match target {
        Target::OneHot(t) => {
            dlogits[t] -= weight;
            -logp[t]
        }
        Target::Soft(p) => {
            let mut kl = 0.0;
            for (v, &pv) in p.iter().enumerate() {
                dlogits[v] -= weight * pv;
                if pv > 0.0 {
                    kl += pv * (pv.ln() - logp[v]);
                }
            }
            kl
        }
    };
    params.backward(&act, &dlogits, grad);
    Ok(term)
}

fn check_target(params: &PolicyParams, token: TokenId) -> Result<()> {
    if token == PAD {
        return Err(Error::InvalidToken {
            token,
            reason: "PAD is not a valid target".into(),
        });
    }
    if token >= params.shape.vocab {
        return Err(Error::InvalidToken {
            token,
            reason: format!("outside vocabulary of size {}", params.shape.vocab),
        });
    }
    Ok(())
}

/// Validates that `p` is a distribution over the vocabulary.
pub fn check_distribution(p: &[f64], vocab: usize) -> Result<()> {
    if p.len() != vocab {
        return Err(Error::InvalidSignal(format!(
            "teacher vector has length {}, expected {vocab}",
            p.len()
        )));
    }
    if p.iter().any(|&x| !(x >= 0.0) || !x.is_finite()) {
        return Err(Error::InvalidSignal(
            "teacher vector has negative or non-finite mass".into(),
        ));
    }
    let total: f64 = p.iter().sum();
    if (total - 1.0).abs() > 1e-6 {
        return Err(Error::InvalidSignal(format!(
            "teacher vector sums to {total}, not 1"
        )));
    }
    Ok(())
}

/// Mean token cross-entropy `−log π(target | state)` over the batch.
pub fn ce_loss_and_grad(params: &PolicyParams, batch: &[(State, TokenId)]) -> Result<GradBundle> {
    if batch.is_empty() {
        return Err(Error::InvalidArgument("empty CE batch".into()));
    }
    let weight = 1.0 / batch.len() as f64;
    let mut grad = params.zeros_like();
    let mut loss = 0.0;
    for (state, target) in batch {
        check_target(params, *target)?;
        loss += accumulate(params, state, Target::OneHot(*target), weight, &mut grad)?;
    }
    Ok(GradBundle {
        loss: loss * weight,
        grad,
    })
}

/// Mean forward KL `D(teacher ‖ student)` over the items. Only the student
/// side carries gradient; the teacher vector is taken as normalized, so the
/// logit gradient is `softmax − teacher`.
pub fn kl_loss_and_grad(params: &PolicyParams, items: &[(State, Vec<f64>)]) -> Result<GradBundle> {
    if items.is_empty() {
        return Err(Error::InvalidArgument("empty KL batch".into()));
    }
    for (_, p) in items {
        check_distribution(p, params.shape.vocab)?;
    }
    let weight = 1.0 / items.len() as f64;
    let mut grad = params.zeros_like();
    let mut loss = 0.0;
    for (state, p) in items {
        loss += accumulate(params, state, Target::Soft(p), weight, &mut grad)?;
    }
    Ok(GradBundle {
        loss: loss * weight,
        grad,
    })
}

/// REINFORCE surrogate `−(1/N) Σᵢ Aᵢ Σₜ log π(yᵢₜ | sᵢₜ)`, re-scored under
/// `params`.
pub fn pg_loss_and_grad(
    params: &PolicyParams,
    trajectories: &[Trajectory],
    advantages: &[f64],
) -> Result<GradBundle> {
    if trajectories.len() != advantages.len() {
        return Err(Error::InvalidArgument(format!(
            "{} trajectories but {} advantages",
            trajectories.len(),
            advantages.len()
        )));
    }
    if trajectories.is_empty() {
        return Err(Error::InvalidArgument("empty PG batch".into()));
    }
    if let Some(a) = advantages.iter().find(|a| !a.is_finite()) {
        return Err(Error::NumericFault(format!("non-finite advantage {a}")));
    }
    let n = trajectories.len() as f64;
    let mut grad = params.zeros_like();
    let mut loss = 0.0;
    for (traj, &adv) in trajectories.iter().zip(advantages) {
        if adv == 0.0 {
            continue;
        }
        let weight = adv / n;
        for (state, &action) in traj.states()?.iter().zip(&traj.actions) {
            check_target(params, action)?;
            // accumulate returns −log π; the surrogate term is A·(−log π)/N
            loss += weight * accumulate(params, state, Target::OneHot(action), weight, &mut grad)?;
        }
    }
    Ok(GradBundle { loss, grad })
}

#[cfg(test)]
mod tests {
    use super::super::model::{softmax, ModelShape};
    use super::*;

    fn batch() -> Vec<(State, TokenId)> {
        vec![
            (State::new(vec![5, 6], vec![]).unwrap(), 7),
            (State::new(vec![5, 6], vec![7]).unwrap(), 2),
            (State::new(vec![9], vec![]).unwrap(), 10),
        ]
    }

    #[test]
    fn zero_params_ce_is_ln_v() {
        let p = PolicyParams::zeros(ModelShape::small());
        let g = ce_loss_and_grad(&p, &batch()).unwrap();
        assert!((g.loss - (12f64).ln()).abs() < 1e-12);
    }

    #[test]
    fn ce_mean_is_invariant_to_duplication() {
        let p = PolicyParams::init(ModelShape::small(), 4);
        let once = ce_loss_and_grad(&p, &batch()).unwrap();
        let doubled: Vec<_> = batch().into_iter().chain(batch()).collect();
        let twice = ce_loss_and_grad(&p, &doubled).unwrap();
        assert!((once.loss - twice.loss).abs() < 1e-12);
        for (a, b) in once.grad.iter().zip(twice.grad.iter()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn empty_and_pad_batches_fail() {
        let p = PolicyParams::zeros(ModelShape::small());
        assert!(matches!(
            ce_loss_and_grad(&p, &[]),
            Err(Error::InvalidArgument(_))
        ));
        let bad = vec![(State::new(vec![5], vec![]).unwrap(), PAD)];
        assert!(matches!(
            ce_loss_and_grad(&p, &bad),
            Err(Error::InvalidToken { .. })
        ));
    }

    #[test]
    fn kl_against_self_is_exactly_zero() {
        let p = PolicyParams::init(ModelShape::small(), 9);
        let items: Vec<_> = batch()
            .into_iter()
            .map(|(s, _)| {
                let q = softmax(&p.forward(&s).unwrap().logits);
                (s, q)
            })
            .collect();
        let g = kl_loss_and_grad(&p, &items).unwrap();
        assert!(g.loss.abs() < 1e-9);
        assert!(g.max_abs() < 1e-9);
    }

    #[test]
    fn kl_rejects_non_distributions() {
        let p = PolicyParams::zeros(ModelShape::small());
        let s = State::new(vec![5], vec![]).unwrap();
        let mut v = vec![0.0; 12];
        v[3] = 0.5;
        assert!(matches!(
            kl_loss_and_grad(&p, &[(s.clone(), v.clone())]),
            Err(Error::InvalidSignal(_))
        ));
        v[4] = 0.6;
        v[5] = -0.1;
        assert!(matches!(
            kl_loss_and_grad(&p, &[(s, v)]),
            Err(Error::InvalidSignal(_))
        ));
    }

    #[test]
    fn pg_length_mismatch_fails() {
        let p = PolicyParams::zeros(ModelShape::small());
        let t = Trajectory {
            prompt: vec![5],
            start_prefix: vec![],
            actions: vec![6],
            log_probs: vec![-1.0],
            terminated: false,
        };
        assert!(matches!(
            pg_loss_and_grad(&p, &[t], &[1.0, 2.0]),
            Err(Error::InvalidArgument(_))
        ));
    }
}
