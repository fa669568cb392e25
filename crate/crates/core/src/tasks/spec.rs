use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::policy::vocab::{TokenId, Vocab};

/// The shared task vocabulary.
pub fn vocab() -> &'static Vocab {
    static VOCAB: OnceLock<Vocab> = OnceLock::new();
    VOCAB.get_or_init(Vocab::standard)
}

// Fixed ids in `Vocab::standard()`; checked by a unit test below.
pub(crate) const DIGIT0: TokenId = 5;
pub(crate) const PLUS: TokenId = 15;
pub(crate) const EQUALS: TokenId = 16;
pub(crate) const STEP_END: TokenId = 17;
pub(crate) const MARKER: TokenId = 18;
pub(crate) const ARROW: TokenId = 19;
pub(crate) const TAG_ARITH: TokenId = 20;
pub(crate) const TAG_COPY: TokenId = 21;
pub(crate) const TAG_REVERSE: TokenId = 22;
pub(crate) const TAG_COUNT: TokenId = 23;
pub(crate) const LETTER0: TokenId = 24;
pub(crate) const LETTERS: usize = 16;

/// Longest completion any task needs, EOS included.
pub const MAX_GEN_LEN: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    /// Target task: running-sum arithmetic with shown steps.
    ChainArith,
    Copy,
    Reverse,
    /// Answer is the length of the letter string.
    Count,
}

impl TaskKind {
    pub const ALL: [TaskKind; 4] = [
        TaskKind::ChainArith,
        TaskKind::Copy,
        TaskKind::Reverse,
        TaskKind::Count,
    ];
    pub const RETENTION: [TaskKind; 3] = [TaskKind::Copy, TaskKind::Reverse, TaskKind::Count];

    pub fn tag(self) -> TokenId {
        match self {
            TaskKind::ChainArith => TAG_ARITH,
            TaskKind::Copy => TAG_COPY,
            TaskKind::Reverse => TAG_REVERSE,
            TaskKind::Count => TAG_COUNT,
        }
    }

    pub fn from_tag(tag: TokenId) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.tag() == tag)
    }

    pub fn name(self) -> &'static str {
        match self {
            TaskKind::ChainArith => "chain_arith",
            TaskKind::Copy => "copy",
            TaskKind::Reverse => "reverse",
            TaskKind::Count => "count",
        }
    }
}

impl fmt::Display for TaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TaskKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown task kind `{s}`")))
    }
}

/// Size knobs shared by all task kinds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Difficulty {
    pub min_operands: usize,
    pub max_operands: usize,
    /// Operands are drawn from `0..=max_digit`.
    pub max_digit: usize,
    pub min_len: usize,
    pub max_len: usize,
}

impl Default for Difficulty {
    fn default() -> Self {
        Self {
            min_operands: 2,
            max_operands: 3,
            max_digit: 9,
            min_len: 3,
            max_len: 6,
        }
    }
}

impl Difficulty {
    pub fn validate(&self) -> Result<()> {
        let ok = (2..=4).contains(&self.min_operands)
            && (self.min_operands..=4).contains(&self.max_operands)
            && (1..=9).contains(&self.max_digit)
            && (3..=8).contains(&self.min_len)
            && (self.min_len..=8).contains(&self.max_len);
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!(
                "difficulty out of range (operands 2–4, digits ≤ 9, lengths 3–8): {self:?}"
            )))
        }
    }
}

/// One prompt distribution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskSpec {
    pub kind: TaskKind,
    #[serde(default)]
    pub difficulty: Difficulty,
    /// Seed of the prompt distribution.
    #[serde(default)]
    pub seed: u64,
}

impl TaskSpec {
    pub fn new(kind: TaskKind) -> Self {
        Self {
            kind,
            difficulty: Difficulty::default(),
            seed: 0,
        }
    }

    pub fn with_difficulty(mut self, difficulty: Difficulty) -> Self {
        self.difficulty = difficulty;
        self
    }
}

/// A prompt with its single gold completion (EOS-terminated).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Example {
    pub kind: TaskKind,
    pub prompt: Vec<TokenId>,
    pub gold: Vec<TokenId>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Eval,
}
