//! State-sample files: one `{model_id, prompt_id, step, state_tokens}` JSON
//! object per line, where `state_tokens` is `prompt ∥ prefix` and `step` is
//! the prefix length.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::features::{Provenance, StateSample};
use crate::error::{Error, Result};
use crate::policy::TokenId;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateRecord {
    pub model_id: String,
    pub prompt_id: usize,
    pub step: usize,
    pub state_tokens: Vec<TokenId>,
}

pub fn records_to_jsonl(records: &[StateRecord]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("record serializes"));
        out.push('\n');
    }
    out
}

pub fn records_from_jsonl(text: &str) -> Result<Vec<StateRecord>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| Error::json(format!("state line {}", i + 1), e)))
        .collect()
}

pub fn write_states(path: &Path, records: &[StateRecord]) -> Result<()> {
    fs::write(path, records_to_jsonl(records)).map_err(|e| Error::io(path, e))
}

pub fn read_states(path: &Path) -> Result<Vec<StateRecord>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    records_from_jsonl(&text)
}

/// Featurizes records into a sample. The model id is taken from the first
/// record (or `"empty"`).
pub fn sample_from_records(
    records: &[StateRecord],
    dim: usize,
    hash_seed: u64,
    prompt_set: &str,
    rollout_seed: u64,
) -> Result<StateSample> {
    let id = records.first().map_or("empty".to_string(), |r| r.model_id.clone());
    StateSample::from_tokens(
        id,
        records.iter().map(|r| r.state_tokens.as_slice()),
        dim,
        hash_seed,
        Provenance {
            prompt_set: prompt_set.to_string(),
            rollout_seed,
            count: records.len(),
        },
    )
}
