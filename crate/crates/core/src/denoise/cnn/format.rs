//! Binary model container.
//!
//! Layout, all integers and floats little-endian:
//!
//! ```text
//! magic        8 bytes  "SISRCNN\0"
//! version      u32      = 1
//! num_blocks   u32
//! kernel_size  u32
//! channels     u32 x num_blocks
//! bn_momentum  f64
//! blocks       encoders 0..n, then decoders 0..n, each:
//!                weight f64 x (low_ch·high_ch·k²), gamma, beta,
//!                running_mean, running_var  (f64 x channels each)
//! head         weight f64 x ((channels[0] + 1)·k²), bias f64
//! ```
//!
//! The file must end exactly after the head bias.

use std::path::Path;

use super::model::{Architecture, CnnModel};
use crate::error::{Error, Result};
use crate::io::write_atomic;

pub const MAGIC: &[u8; 8] = b"SISRCNN\0";
pub const VERSION: u32 = 1;

pub fn encode_model(model: &CnnModel) -> Vec<u8> {
    let arch = model.architecture();
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend(VERSION.to_le_bytes());
    out.extend((arch.num_blocks() as u32).to_le_bytes());
    out.extend((arch.kernel_size as u32).to_le_bytes());
    for &c in &arch.channels {
        out.extend((c as u32).to_le_bytes());
    }
    out.extend(arch.bn_momentum.to_le_bytes());
    let mut put = |vals: &[f64]| {
        for v in vals {
            out.extend(v.to_le_bytes());
        }
    };
    for blk in model.encoders.iter().chain(&model.decoders) {
        put(&blk.weight);
        put(&blk.bn.gamma);
        put(&blk.bn.beta);
        put(&blk.bn.running_mean);
        put(&blk.bn.running_var);
    }
    put(&model.head.weight);
    put(&model.head.bias);
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8]> {
        if self.bytes.len() - self.pos < n {
            return Err(Error::Model("model file is truncated".into()));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn fill(&mut self, dst: &mut [f64]) -> Result<()> {
        for v in dst.iter_mut() {
            *v = self.f64()?;
            if !v.is_finite() {
                return Err(Error::Model("model file contains non-finite values".into()));
            }
        }
        Ok(())
    }
}

pub fn decode_model(bytes: &[u8]) -> Result<CnnModel> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(MAGIC.len()).ok() != Some(MAGIC.as_slice()) {
        return Err(Error::Model("not a model file (bad magic)".into()));
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(Error::Model(format!(
            "unsupported model version {version} (expected {VERSION})"
        )));
    }
    let blocks = r.u32()? as usize;
    let kernel_size = r.u32()? as usize;
    if blocks == 0 || blocks > 16 {
        return Err(Error::Model(format!("implausible block count {blocks}")));
    }
    let channels = (0..blocks).map(|_| r.u32().map(|c| c as usize)).collect::<Result<Vec<_>>>()?;
    let bn_momentum = r.f64()?;
    let arch = Architecture {
        channels,
        kernel_size,
        bn_momentum,
    };
    let mut model = CnnModel::zeroed(arch)?;
    for blk in model.encoders.iter_mut().chain(model.decoders.iter_mut()) {
        r.fill(&mut blk.weight)?;
        r.fill(&mut blk.bn.gamma)?;
        r.fill(&mut blk.bn.beta)?;
        r.fill(&mut blk.bn.running_mean)?;
        r.fill(&mut blk.bn.running_var)?;
    }
    r.fill(&mut model.head.weight)?;
    r.fill(&mut model.head.bias)?;
    if r.pos != bytes.len() {
        return Err(Error::Model(format!(
            "{} trailing bytes after model data",
            bytes.len() - r.pos
        )));
    }
    Ok(model)
}

pub fn save_model(model: &CnnModel, path: impl AsRef<Path>) -> Result<()> {
    write_atomic(path.as_ref(), &encode_model(model))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<CnnModel> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_model(&bytes)
}
