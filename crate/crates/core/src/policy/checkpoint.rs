//! Binary checkpoint format.
//!
//! ```text
//! "SSL1"
//! u64 LE × 5: vocab, context, embed_dim, hidden, optimizer step t
//! f64 LE ×  : embed, w1, b1, w2, b2          (parameters)
//!             m.embed … m.b2, v.embed … v.b2 (Adam moments)
//! ```
//!
//! Optimizer hyperparameters are not stored; a loaded optimizer carries
//! `AdamConfig::default()` and callers override the learning rate.

use std::fs;
use std::path::Path;

use super::model::{ModelShape, PolicyParams};
use super::optim::{AdamConfig, OptimizerState};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"SSL1";

pub fn encode_checkpoint(params: &PolicyParams, opt: &OptimizerState) -> Vec<u8> {
    let s = params.shape;
    let mut out = Vec::with_capacity(4 + 5 * 8 + 3 * s.param_count() * 8);
    out.extend_from_slice(MAGIC);
    for x in [s.vocab, s.context, s.embed_dim, s.hidden] {
        out.extend_from_slice(&(x as u64).to_le_bytes());
    }
    out.extend_from_slice(&opt.t.to_le_bytes());
    for block in [params, &opt.m, &opt.v] {
        for x in block.iter() {
            out.extend_from_slice(&x.to_le_bytes());
        }
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take(&mut self, n: usize, what: &str) -> Result<&[u8]> {
        if self.bytes.len() - self.pos < n {
            return Err(Error::CorruptCheckpoint {
                offset: self.pos,
                reason: format!("truncated while reading {what}"),
            });
        }
        let out = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    fn u64(&mut self, what: &str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }

    fn fill(&mut self, params: &mut PolicyParams, what: &str) -> Result<()> {
        for t in params.tensors_mut() {
            for x in t.iter_mut() {
                *x = f64::from_le_bytes(self.take(8, what)?.try_into().unwrap());
            }
        }
        Ok(())
    }
}

pub fn decode_checkpoint(bytes: &[u8]) -> Result<(PolicyParams, OptimizerState)> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(4, "magic")? != MAGIC {
        return Err(Error::CorruptCheckpoint {
            offset: 0,
            reason: "bad magic".into(),
        });
    }
    let mut dims = [0usize; 4];
    for (d, name) in dims.iter_mut().zip(["vocab", "context", "embed_dim", "hidden"]) {
        let at = r.pos;
        let x = r.u64(name)?;
        if x == 0 || x > 1 << 20 {
            return Err(Error::CorruptCheckpoint {
                offset: at,
                reason: format!("implausible {name} = {x}"),
            });
        }
        *d = x as usize;
    }
    let shape = ModelShape {
        vocab: dims[0],
        context: dims[1],
        embed_dim: dims[2],
        hidden: dims[3],
    };
    if shape.validate().is_err() {
        return Err(Error::CorruptCheckpoint {
            offset: 4,
            reason: format!("degenerate shape {shape:?}"),
        });
    }
    let t = r.u64("optimizer step")?;
    let expected = r.pos + 3 * shape.param_count() * 8;
    if bytes.len() > expected {
        return Err(Error::CorruptCheckpoint {
            offset: expected,
            reason: format!("{} trailing bytes", bytes.len() - expected),
        });
    }
    let mut params = PolicyParams::zeros(shape);
    r.fill(&mut params, "parameters")?;
    let mut opt = OptimizerState::new(&params, AdamConfig::default());
    opt.t = t;
    r.fill(&mut opt.m, "first moments")?;
    r.fill(&mut opt.v, "second moments")?;
    Ok((params, opt))
}

pub fn save_checkpoint(params: &PolicyParams, opt: &OptimizerState, path: &Path) -> Result<()> {
    params.check_consistent()?;
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    // a checkpoint file exists only once it is complete
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, encode_checkpoint(params, opt)).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: &Path) -> Result<(PolicyParams, OptimizerState)> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_checkpoint(&bytes)
}
