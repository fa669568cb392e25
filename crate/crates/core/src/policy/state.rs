use serde::{Deserialize, Serialize};

use super::vocab::{TokenId, PAD};
use crate::error::{Error, Result};

/// Longest prompt-plus-prefix a state may hold.
pub const MAX_SEQ_LEN: usize = 96;

/// Conditioning context of the policy: a prompt and the prefix generated so
/// far.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct State {
    prompt: Vec<TokenId>,
    prefix: Vec<TokenId>,
}

impl State {
    pub fn new(prompt: Vec<TokenId>, prefix: Vec<TokenId>) -> Result<Self> {
        if prompt.is_empty() {
            return Err(Error::InvalidArgument("state prompt is empty".into()));
        }
        if let Some(pos) = prompt.iter().chain(&prefix).position(|&t| t == PAD) {
            return Err(Error::InvalidToken {
                token: PAD,
                reason: format!("PAD at position {pos} of a state"),
            });
        }
        if prompt.len() + prefix.len() > MAX_SEQ_LEN {
            return Err(Error::InvalidArgument(format!(
                "state length {} exceeds {MAX_SEQ_LEN}",
                prompt.len() + prefix.len()
            )));
        }
        Ok(Self { prompt, prefix })
    }

    pub fn from_prompt(prompt: Vec<TokenId>) -> Result<Self> {
        Self::new(prompt, Vec::new())
    }

    pub fn prompt(&self) -> &[TokenId] {
        &self.prompt
    }

    pub fn prefix(&self) -> &[TokenId] {
        &self.prefix
    }

    pub fn len(&self) -> usize {
        self.prompt.len() + self.prefix.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn tokens(&self) -> impl Iterator<Item = TokenId> + '_ {
        self.prompt.iter().chain(&self.prefix).copied()
    }

    /// State after emitting `token`.
    pub fn advance(&self, token: TokenId) -> Result<Self> {
        let mut prefix = self.prefix.clone();
        prefix.push(token);
        Self::new(self.prompt.clone(), prefix)
    }

    pub(crate) fn push(&mut self, token: TokenId) {
        self.prefix.push(token);
    }

    /// Writes the last `k` tokens of prompt ∥ prefix into `out`, left-padded
    /// with PAD.
    pub fn window_into(&self, out: &mut [TokenId]) {
        let k = out.len();
        let n = self.len();
        let pad = k.saturating_sub(n);
        out[..pad].fill(PAD);
        let skip = n.saturating_sub(k);
        for (slot, tok) in out[pad..].iter_mut().zip(self.tokens().skip(skip)) {
            *slot = tok;
        }
    }

    pub fn window(&self, k: usize) -> Vec<TokenId> {
        let mut out = vec![PAD; k];
        self.window_into(&mut out);
        out
    }
}
