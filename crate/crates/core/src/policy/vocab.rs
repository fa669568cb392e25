//! Fixed token alphabet.
//!
//! Ids `0..5` are reserved (`PAD`, `BOS`, `EOS`, `SEP`, `RESET`) in every
//! vocabulary, including the reduced ones used for gradient checks, so model
//! code can refer to them without carrying a `Vocab` around.

use std::collections::HashMap;

use crate::error::{Error, Result};

pub type TokenId = usize;

pub const PAD: TokenId = 0;
pub const BOS: TokenId = 1;
pub const EOS: TokenId = 2;
pub const SEP: TokenId = 3;
pub const RESET: TokenId = 4;

pub const RESERVED: [&str; 5] = ["<pad>", "<bos>", "<eos>", "<sep>", "<reset>"];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocab {
    symbols: Vec<String>,
    index: HashMap<String, TokenId>,
}

impl Vocab {
    /// Builds a vocabulary from an ordered symbol list. The first five
    /// symbols must be the reserved ones in `RESERVED` order.
    pub fn new(symbols: Vec<String>) -> Result<Self> {
        if symbols.len() <= RESERVED.len() {
            return Err(Error::InvalidArgument(format!(
                "vocabulary needs more than {} symbols, got {}",
                RESERVED.len(),
                symbols.len()
            )));
        }
        for (id, name) in RESERVED.iter().enumerate() {
            if symbols[id] != *name {
                return Err(Error::InvalidArgument(format!(
                    "reserved id {id} must be `{name}`, found `{}`",
                    symbols[id]
                )));
            }
        }
        let mut index = HashMap::with_capacity(symbols.len());
        for (id, sym) in symbols.iter().enumerate() {
            if sym.is_empty() || sym.chars().any(char::is_whitespace) {
                return Err(Error::InvalidArgument(format!(
                    "symbol {id} is empty or contains whitespace"
                )));
            }
            if sym.starts_with('<') != sym.ends_with('>') || (sym.starts_with('<') && sym.len() < 3)
            {
                return Err(Error::InvalidArgument(format!(
                    "symbol `{sym}` has unbalanced angle brackets"
                )));
            }
            if !sym.starts_with('<') && sym.chars().count() != 1 {
                return Err(Error::InvalidArgument(format!(
                    "plain symbol `{sym}` must be a single character"
                )));
            }
            if index.insert(sym.clone(), id).is_some() {
                return Err(Error::InvalidArgument(format!("duplicate symbol `{sym}`")));
            }
        }
        Ok(Self { symbols, index })
    }

    /// The 40-symbol alphabet used by the synthetic tasks.
    pub fn standard() -> Self {
        let mut symbols: Vec<String> = RESERVED.iter().map(|s| s.to_string()).collect();
        symbols.extend(('0'..='9').map(String::from));
        symbols.extend(["+", "=", ";", "#", "→"].map(String::from));
        symbols.extend(["A", "C", "R", "N"].map(String::from));
        symbols.extend(('a'..='p').map(String::from));
        Self::new(symbols).expect("standard vocabulary is well formed")
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn symbol(&self, id: TokenId) -> Option<&str> {
        self.symbols.get(id).map(String::as_str)
    }

    pub fn id(&self, symbol: &str) -> Option<TokenId> {
        self.index.get(symbol).copied()
    }

    /// Id of a symbol known to exist. Panics otherwise.
    pub fn expect_id(&self, symbol: &str) -> TokenId {
        self.id(symbol)
            .unwrap_or_else(|| panic!("symbol `{symbol}` is not in the vocabulary"))
    }

    /// Parses a space-free symbol string. Reserved symbols are written in
    /// angle brackets (`<eos>`), everything else is one character.
    pub fn encode(&self, text: &str) -> Result<Vec<TokenId>> {
        let mut out = Vec::new();
        let mut rest = text;
        while let Some(c) = rest.chars().next() {
            let len = if c == '<' {
                rest.find('>').map(|i| i + 1).ok_or_else(|| {
                    Error::InvalidArgument(format!("unterminated `<` in `{text}`"))
                })?
            } else {
                c.len_utf8()
            };
            let sym = &rest[..len];
            let id = self
                .id(sym)
                .ok_or_else(|| Error::InvalidArgument(format!("unknown symbol `{sym}` in `{text}`")))?;
            out.push(id);
            rest = &rest[len..];
        }
        Ok(out)
    }

    pub fn decode(&self, tokens: &[TokenId]) -> String {
        tokens
            .iter()
            .map(|&t| self.symbol(t).unwrap_or("<?>"))
            .collect()
    }
}
