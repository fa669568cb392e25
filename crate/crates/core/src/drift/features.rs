//! Hashed lexical features of states.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::policy::{State, TokenId};

pub const DEFAULT_DIM: usize = 256;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// FNV-1a 64 over a byte string.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    bytes.iter().fold(FNV_OFFSET, |h, &b| (h ^ b as u64).wrapping_mul(FNV_PRIME))
}

/// A unigram or bigram of token ids.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Ngram {
    Uni(TokenId),
    Bi(TokenId, TokenId),
}

impl Ngram {
    /// Token ids as little-endian u64 bytes, concatenated.
    pub fn bytes(&self) -> Vec<u8> {
        match *self {
            Ngram::Uni(a) => (a as u64).to_le_bytes().to_vec(),
            Ngram::Bi(a, b) => {
                let mut v = (a as u64).to_le_bytes().to_vec();
                v.extend_from_slice(&(b as u64).to_le_bytes());
                v
            }
        }
    }

    pub fn bucket(&self, dim: usize, hash_seed: u64) -> usize {
        ((fnv1a64(&self.bytes()) ^ hash_seed) % dim as u64) as usize
    }
}

/// Unigrams then bigrams of a token sequence, in order of occurrence.
pub fn ngrams(tokens: &[TokenId]) -> Vec<Ngram> {
    let mut out: Vec<Ngram> = tokens.iter().map(|&t| Ngram::Uni(t)).collect();
    out.extend(tokens.windows(2).map(|w| Ngram::Bi(w[0], w[1])));
    out
}

/// L2-normalized hashed n-gram counts of `prompt ∥ prefix`.
pub fn featurize_tokens(tokens: &[TokenId], dim: usize, hash_seed: u64) -> Result<Vec<f64>> {
    if dim < 2 {
        return Err(Error::InvalidArgument(format!("feature dimension must be ≥ 2, got {dim}")));
    }
    let mut v = vec![0.0; dim];
    for g in ngrams(tokens) {
        v[g.bucket(dim, hash_seed)] += 1.0;
    }
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
    Ok(v)
}

pub fn featurize_state(state: &State, dim: usize, hash_seed: u64) -> Result<Vec<f64>> {
    let tokens: Vec<TokenId> = state.tokens().collect();
    featurize_tokens(&tokens, dim, hash_seed)
}

/// Where a sample came from.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub prompt_set: String,
    pub rollout_seed: u64,
    pub count: usize,
}

/// A featurized multiset of states from one model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateSample {
    pub model_id: String,
    pub vectors: Vec<Vec<f64>>,
    pub ngram_types: BTreeSet<Ngram>,
    pub provenance: Provenance,
}

impl StateSample {
    /// Featurizes raw token sequences.
    pub fn from_tokens<'a, I>(
        model_id: impl Into<String>,
        states: I,
        dim: usize,
        hash_seed: u64,
        provenance: Provenance,
    ) -> Result<Self>
    where
        I: IntoIterator<Item = &'a [TokenId]>,
    {
        let mut vectors = Vec::new();
        let mut ngram_types = BTreeSet::new();
        for toks in states {
            vectors.push(featurize_tokens(toks, dim, hash_seed)?);
            ngram_types.extend(ngrams(toks));
        }
        let provenance = Provenance {
            count: vectors.len(),
            ..provenance
        };
        Ok(Self {
            model_id: model_id.into(),
            vectors,
            ngram_types,
            provenance,
        })
    }

    /// A sample of raw vectors with no n-gram information (Jaccard sees empty
    /// type sets).
    pub fn from_vectors(model_id: impl Into<String>, vectors: Vec<Vec<f64>>) -> Self {
        let count = vectors.len();
        Self {
            model_id: model_id.into(),
            vectors,
            ngram_types: BTreeSet::new(),
            provenance: Provenance {
                count,
                ..Provenance::default()
            },
        }
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn dim(&self) -> Option<usize> {
        self.vectors.first().map(Vec::len)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fnv_reference_values() {
        assert_eq!(fnv1a64(b""), 0xcbf2_9ce4_8422_2325);
        assert_eq!(fnv1a64(b"a"), 0xaf63_dc4c_8601_ec8c);
    }

    #[test]
    fn single_token_is_one_bucket() {
        let v = featurize_tokens(&[5], 256, 0).unwrap();
        assert_eq!(v.iter().filter(|&&x| x != 0.0).count(), 1);
        assert!((v.iter().map(|x| x * x).sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_tiny_dim() {
        assert!(featurize_tokens(&[1], 1, 0).is_err());
    }
}
