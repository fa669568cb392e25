//! JSON-lines dataset files: one `{task, prompt, gold}` object per line,
//! prompts and golds written as space-free symbol strings.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::spec::{vocab, Example, TaskKind};
use crate::error::{Error, Result};

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Record {
    task: TaskKind,
    prompt: String,
    gold: String,
}

pub fn to_jsonl(examples: &[Example]) -> String {
    let mut out = String::new();
    for ex in examples {
        let rec = Record {
            task: ex.kind,
            prompt: vocab().decode(&ex.prompt),
            gold: vocab().decode(&ex.gold),
        };
        out.push_str(&serde_json::to_string(&rec).expect("record serializes"));
        out.push('\n');
    }
    out
}

pub fn from_jsonl(text: &str) -> Result<Vec<Example>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, line)| {
            let rec: Record = serde_json::from_str(line)
                .map_err(|e| Error::json(format!("dataset line {}", i + 1), e))?;
            Ok(Example {
                kind: rec.task,
                prompt: vocab().encode(&rec.prompt)?,
                gold: vocab().encode(&rec.gold)?,
            })
        })
        .collect()
}

pub fn write_dataset(path: &Path, examples: &[Example]) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(to_jsonl(examples).as_bytes())
        .map_err(|e| Error::io(path, e))
}

pub fn read_dataset(path: &Path) -> Result<Vec<Example>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    from_jsonl(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tasks::{gen_examples, Split, TaskSpec};

    #[test]
    fn jsonl_round_trip() {
        let exs = gen_examples(&TaskSpec::new(TaskKind::ChainArith), Split::Train, 5, 1).unwrap();
        let text = to_jsonl(&exs);
        assert!(text.lines().next().unwrap().contains("\"task\":\"chain_arith\""));
        assert!(text.contains("<eos>"));
        assert_eq!(from_jsonl(&text).unwrap(), exs);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(from_jsonl(r#"{"task":"copy","prompt":"Cab→","gold":"ab<eos>","x":1}"#).is_err());
    }
}
