//! Fixed-window neural language model.
//!
//! The next-token distribution is computed from the last `k` tokens of the
//! state: their embeddings are concatenated, passed through one tanh hidden
//! layer, and projected to vocabulary logits.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::state::State;
use super::vocab::{TokenId, PAD};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelShape {
    pub vocab: usize,
    pub context: usize,
    pub embed_dim: usize,
    pub hidden: usize,
}

impl Default for ModelShape {
    fn default() -> Self {
        Self {
            vocab: 40,
            context: 16,
            embed_dim: 16,
            hidden: 64,
        }
    }
}

impl ModelShape {
    /// Reduced shape used for finite-difference gradient checks.
    pub fn small() -> Self {
        Self {
            vocab: 12,
            context: 4,
            embed_dim: 4,
            hidden: 8,
        }
    }

    pub fn input_dim(&self) -> usize {
        self.context * self.embed_dim
    }

    pub fn param_count(&self) -> usize {
        self.vocab * self.embed_dim
            + self.hidden * self.input_dim()
            + self.hidden
            + self.vocab * self.hidden
            + self.vocab
    }

    pub fn validate(&self) -> Result<()> {
        // PAD, BOS and EOS must exist; the remaining reserved ids only matter
        // to the task vocabulary
        if self.vocab <= super::vocab::EOS
            || self.context == 0
            || self.embed_dim == 0
            || self.hidden == 0
        {
            return Err(Error::InvalidArgument(format!("degenerate model shape {self:?}")));
        }
        Ok(())
    }
}

/// Anything that maps a state to next-token logits.
///
/// `PolicyParams` is the trainable implementation; tests and examples plug in
/// scripted policies through the same interface.
pub trait Policy {
    fn vocab_size(&self) -> usize;

    fn logits(&self, state: &State) -> Result<Vec<f64>>;
}

/// All learnable parameters. Matrices are row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyParams {
    pub shape: ModelShape,
    /// `vocab × embed_dim`
    pub embed: Vec<f64>,
    /// `hidden × (context · embed_dim)`
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    /// `vocab × hidden`
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
}

impl PolicyParams {
    pub fn zeros(shape: ModelShape) -> Self {
        Self {
            shape,
            embed: vec![0.0; shape.vocab * shape.embed_dim],
            w1: vec![0.0; shape.hidden * shape.input_dim()],
            b1: vec![0.0; shape.hidden],
            w2: vec![0.0; shape.vocab * shape.hidden],
            b2: vec![0.0; shape.vocab],
        }
    }

    /// Gaussian initialization, deterministic in `seed`.
    pub fn init(shape: ModelShape, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut p = Self::zeros(shape);
        let mut fill = |buf: &mut [f64], std: f64| {
            let normal = Normal::new(0.0, std).expect("positive std");
            buf.iter_mut().for_each(|x| *x = normal.sample(&mut rng));
        };
        fill(&mut p.embed, 0.5);
        fill(&mut p.w1, 1.0 / (shape.input_dim() as f64).sqrt());
        fill(&mut p.w2, 0.5 / (shape.hidden as f64).sqrt());
        p
    }

    pub fn zeros_like(&self) -> Self {
        Self::zeros(self.shape)
    }

    pub fn param_count(&self) -> usize {
        self.shape.param_count()
    }

    /// Parameter arrays in canonical order: embed, w1, b1, w2, b2.
    pub fn tensors(&self) -> [&[f64]; 5] {
        [&self.embed, &self.w1, &self.b1, &self.w2, &self.b2]
    }

    pub fn tensors_mut(&mut self) -> [&mut Vec<f64>; 5] {
        [
            &mut self.embed,
            &mut self.w1,
            &mut self.b1,
            &mut self.w2,
            &mut self.b2,
        ]
    }

    pub fn iter(&self) -> impl Iterator<Item = f64> + '_ {
        self.tensors().into_iter().flat_map(|t| t.iter().copied())
    }

    /// Flat coordinate access across all tensors, canonical order.
    pub fn get(&self, mut idx: usize) -> f64 {
        for t in self.tensors() {
            if idx < t.len() {
                return t[idx];
            }
            idx -= t.len();
        }
        panic!("parameter index out of range")
    }

    pub fn set(&mut self, mut idx: usize, value: f64) {
        for t in self.tensors_mut() {
            if idx < t.len() {
                t[idx] = value;
                return;
            }
            idx -= t.len();
        }
        panic!("parameter index out of range")
    }

    pub fn check_consistent(&self) -> Result<()> {
        self.shape.validate()?;
        let s = self.shape;
        let ok = self.embed.len() == s.vocab * s.embed_dim
            && self.w1.len() == s.hidden * s.input_dim()
            && self.b1.len() == s.hidden
            && self.w2.len() == s.vocab * s.hidden
            && self.b2.len() == s.vocab;
        if !ok {
            return Err(Error::InvalidArgument(format!(
                "parameter arrays inconsistent with shape {s:?}"
            )));
        }
        Ok(())
    }

    pub fn check_finite(&self) -> Result<()> {
        if self.iter().all(f64::is_finite) {
            Ok(())
        } else {
            Err(Error::NumericFault("non-finite parameter".into()))
        }
    }

    /// Forward pass that keeps the activations needed for backprop.
    pub(crate) fn forward(&self, state: &State) -> Result<Activations> {
        let s = self.shape;
        let window = state.window(s.context);
        if let Some(&t) = window.iter().find(|&&t| t >= s.vocab) {
            return Err(Error::InvalidToken {
                token: t,
                reason: format!("outside vocabulary of size {}", s.vocab),
            });
        }
        let mut input = Vec::with_capacity(s.input_dim());
        for &t in &window {
            input.extend_from_slice(&self.embed[t * s.embed_dim..(t + 1) * s.embed_dim]);
        }
        let mut hidden = self.b1.clone();
        for (j, h) in hidden.iter_mut().enumerate() {
            let row = &self.w1[j * s.input_dim()..(j + 1) * s.input_dim()];
            *h = (*h + dot(row, &input)).tanh();
        }
        let mut logits = self.b2.clone();
        for (v, l) in logits.iter_mut().enumerate() {
            *l += dot(&self.w2[v * s.hidden..(v + 1) * s.hidden], &hidden);
        }
        if !logits.iter().all(|l| l.is_finite()) {
            return Err(Error::NumericFault(
                "non-finite logits (non-finite parameter in the active path)".into(),
            ));
        }
        Ok(Activations {
            window,
            input,
            hidden,
            logits,
        })
    }

    /// Accumulates `dlogits` (gradient of the loss w.r.t. this state's
    /// logits) back into `grad`.
    pub(crate) fn backward(&self, act: &Activations, dlogits: &[f64], grad: &mut PolicyParams) {
        let s = self.shape;
        let mut dhidden = vec![0.0; s.hidden];
        for (v, &dl) in dlogits.iter().enumerate() {
            if dl == 0.0 {
                continue;
            }
            grad.b2[v] += dl;
            let w2row = &self.w2[v * s.hidden..(v + 1) * s.hidden];
            let g2row = &mut grad.w2[v * s.hidden..(v + 1) * s.hidden];
            for j in 0..s.hidden {
                g2row[j] += dl * act.hidden[j];
                dhidden[j] += dl * w2row[j];
            }
        }
        let mut dinput = vec![0.0; s.input_dim()];
        for j in 0..s.hidden {
            let dpre = dhidden[j] * (1.0 - act.hidden[j] * act.hidden[j]);
            if dpre == 0.0 {
                continue;
            }
            grad.b1[j] += dpre;
            let w1row = &self.w1[j * s.input_dim()..(j + 1) * s.input_dim()];
            let g1row = &mut grad.w1[j * s.input_dim()..(j + 1) * s.input_dim()];
            for i in 0..s.input_dim() {
                g1row[i] += dpre * act.input[i];
                dinput[i] += dpre * w1row[i];
            }
        }
        for (pos, &t) in act.window.iter().enumerate() {
            let g = &mut grad.embed[t * s.embed_dim..(t + 1) * s.embed_dim];
            for (gd, &d) in g.iter_mut().zip(&dinput[pos * s.embed_dim..(pos + 1) * s.embed_dim]) {
                *gd += d;
            }
        }
    }
}

impl Policy for PolicyParams {
    fn vocab_size(&self) -> usize {
        self.shape.vocab
    }

    fn logits(&self, state: &State) -> Result<Vec<f64>> {
        forward_logits(self, state)
    }
}

pub(crate) struct Activations {
    pub window: Vec<TokenId>,
    pub input: Vec<f64>,
    pub hidden: Vec<f64>,
    pub logits: Vec<f64>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Unnormalized next-token logits for `state`.
pub fn forward_logits(params: &PolicyParams, state: &State) -> Result<Vec<f64>> {
    Ok(params.forward(state)?.logits)
}

/// Log-sum-exp stabilized log-softmax.
pub fn log_softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + logits.iter().map(|&l| (l - max).exp()).sum::<f64>().ln();
    logits.iter().map(|&l| l - lse).collect()
}

/// Computed as `exp(log_softmax)` so that a teacher distribution taken from
/// the student's own logits matches the loss path bit for bit.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    log_softmax(logits).into_iter().map(f64::exp).collect()
}

/// `log π(token | state)`.
pub fn log_prob<P: Policy + ?Sized>(policy: &P, state: &State, token: TokenId) -> Result<f64> {
    if token == PAD {
        return Err(Error::InvalidToken {
            token,
            reason: "PAD has no probability".into(),
        });
    }
    if token >= policy.vocab_size() {
        return Err(Error::InvalidToken {
            token,
            reason: format!("outside vocabulary of size {}", policy.vocab_size()),
        });
    }
    let logits = policy.logits(state)?;
    Ok(log_softmax(&logits)[token])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn state() -> State {
        State::new(vec![5, 7, 9], vec![11]).unwrap()
    }

    #[test]
    fn zero_params_give_uniform() {
        let p = PolicyParams::zeros(ModelShape::default());
        let logits = forward_logits(&p, &state()).unwrap();
        assert!(logits.iter().all(|&l| l == 0.0));
        for t in 1..40 {
            assert!((log_prob(&p, &state(), t).unwrap() + (40f64).ln()).abs() < 1e-12);
        }
        assert!((log_prob(&p, &state(), 3).unwrap() - (-3.68888)).abs() < 1e-5);
    }

    #[test]
    fn pad_log_prob_is_rejected() {
        let p = PolicyParams::zeros(ModelShape::default());
        assert!(matches!(
            log_prob(&p, &state(), PAD),
            Err(Error::InvalidToken { .. })
        ));
    }

    #[test]
    fn non_finite_params_fault() {
        let mut p = PolicyParams::init(ModelShape::default(), 1);
        p.b1[3] = f64::NAN;
        assert!(matches!(
            forward_logits(&p, &state()),
            Err(Error::NumericFault(_))
        ));
    }

    #[test]
    fn log_softmax_handles_huge_logits() {
        // Exact values on a 3-token toy: log(1/(1 + 2e^-1000)) rounds to 0.
        let ls = log_softmax(&[1000.0, 0.0, 0.0]);
        assert!(ls[0].abs() < 1e-300 || ls[0] == 0.0);
        assert!((ls[1] + 1000.0).abs() < 1e-9);
        assert!(ls.iter().all(|x| x.is_finite()));
    }

    #[test]
    fn flat_get_set_round_trip() {
        let mut p = PolicyParams::init(ModelShape::small(), 2);
        let n = p.param_count();
        assert_eq!(p.iter().count(), n);
        p.set(n - 1, 4.5);
        assert_eq!(p.b2[p.b2.len() - 1], 4.5);
        assert_eq!(p.get(0), p.embed[0]);
    }
}
