//! Binary encodings of models ("BLFM") and precomputed vectors ("BLFV").
//!
//! All integers and floats are little-endian.
//!
//! Model: `"BLFM"`, version `u32`, backend tag `u8` (0 precomputed, 1 trained),
//! `d: u32`, `m: u32` (0 for precomputed), hash seed `u64`; then for a trained
//! model `m * d` row-major `f64` weights, for a precomputed model a BLFV body.
//!
//! Vectors: `"BLFV"`, version `u32`, `d: u32`, `count: u64`; then `count`
//! texts (`u32` byte length + UTF-8), then `count * d` row-major `f64`.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use super::{EncoderModel, FeatureSpec, LinearEncoder, PrecomputedStore};
use crate::error::{Error, Result};

pub const MODEL_MAGIC: &[u8; 4] = b"BLFM";
pub const VECTORS_MAGIC: &[u8; 4] = b"BLFV";
pub const VERSION: u32 = 1;

const TAG_PRECOMPUTED: u8 = 0;
const TAG_TRAINED: u8 = 1;

pub fn model_to_bytes(model: &EncoderModel) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MODEL_MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    match model {
        EncoderModel::Trained(m) => {
            out.push(TAG_TRAINED);
            out.extend_from_slice(&(m.dim() as u32).to_le_bytes());
            out.extend_from_slice(&m.spec().buckets.to_le_bytes());
            out.extend_from_slice(&m.spec().hash_seed.to_le_bytes());
            out.reserve(m.weights().len() * 8);
            for w in m.weights() {
                out.extend_from_slice(&w.to_le_bytes());
            }
        }
        EncoderModel::Precomputed(s) => {
            out.push(TAG_PRECOMPUTED);
            out.extend_from_slice(&(s.dim() as u32).to_le_bytes());
            out.extend_from_slice(&0u32.to_le_bytes());
            out.extend_from_slice(&0u64.to_le_bytes());
            out.extend_from_slice(&vectors_to_bytes(s));
        }
    }
    out
}

pub fn model_from_bytes(bytes: &[u8]) -> Result<EncoderModel> {
    let mut r = Reader::new(bytes);
    r.magic(MODEL_MAGIC)?;
    r.version()?;
    let tag = r.u8()?;
    let dim = r.u32()? as usize;
    let buckets = r.u32()?;
    let hash_seed = r.u64()?;
    let model = match tag {
        TAG_TRAINED => {
            let n = (buckets as usize)
                .checked_mul(dim)
                .ok_or_else(|| Error::ModelFormat("weight count overflows".into()))?;
            if r.remaining() != n * 8 {
                return Err(Error::ModelFormat(format!(
                    "expected {} weight bytes, found {}",
                    n * 8,
                    r.remaining()
                )));
            }
            let weights = (0..n).map(|_| r.f64()).collect::<Result<Vec<f64>>>()?;
            EncoderModel::Trained(LinearEncoder::from_parts(
                FeatureSpec::new(buckets, hash_seed),
                dim,
                weights,
            )?)
        }
        TAG_PRECOMPUTED => {
            let store = vectors_from_bytes(r.rest())?;
            if store.dim() != dim {
                return Err(Error::ModelFormat(
                    "header and body dimensions differ".into(),
                ));
            }
            EncoderModel::Precomputed(store)
        }
        other => return Err(Error::ModelFormat(format!("unknown backend tag {other}"))),
    };
    Ok(model)
}

pub fn vectors_to_bytes(store: &PrecomputedStore) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(VECTORS_MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(store.dim() as u32).to_le_bytes());
    out.extend_from_slice(&(store.len() as u64).to_le_bytes());
    for (text, _) in store.iter() {
        out.extend_from_slice(&(text.len() as u32).to_le_bytes());
        out.extend_from_slice(text.as_bytes());
    }
    for (_, v) in store.iter() {
        for x in v {
            out.extend_from_slice(&x.to_le_bytes());
        }
    }
    out
}

pub fn vectors_from_bytes(bytes: &[u8]) -> Result<PrecomputedStore> {
    let mut r = Reader::new(bytes);
    r.magic(VECTORS_MAGIC)?;
    r.version()?;
    let dim = r.u32()? as usize;
    let count = r.u64()? as usize;
    let mut texts = Vec::new();
    for _ in 0..count {
        let len = r.u32()? as usize;
        let raw = r.take(len)?;
        let text = core::str::from_utf8(raw)
            .map_err(|_| Error::ModelFormat("statement text is not UTF-8".into()))?;
        texts.push(String::from(text));
    }
    if r.remaining() != count * dim * 8 {
        return Err(Error::ModelFormat(format!(
            "expected {} vector bytes, found {}",
            count * dim * 8,
            r.remaining()
        )));
    }
    let mut store = PrecomputedStore::new(dim);
    for text in texts {
        let v = (0..dim).map(|_| r.f64()).collect::<Result<Vec<f64>>>()?;
        store
            .insert(text, v)
            .map_err(|e| Error::ModelFormat(format!("{e}")))?;
    }
    Ok(store)
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn new(bytes: &'a [u8]) -> Self {
        Self { bytes, pos: 0 }
    }

    fn remaining(&self) -> usize {
        self.bytes.len() - self.pos
    }

    fn rest(&mut self) -> &'a [u8] {
        let r = &self.bytes[self.pos..];
        self.pos = self.bytes.len();
        r
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.remaining() < n {
            return Err(Error::ModelFormat(format!(
                "truncated at byte {}",
                self.pos
            )));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn magic(&mut self, expected: &[u8; 4]) -> Result<()> {
        let got = self.take(4)?;
        if got != expected {
            return Err(Error::ModelFormat(format!(
                "bad magic {:?}, expected {:?}",
                String::from_utf8_lossy(got),
                String::from_utf8_lossy(expected)
            )));
        }
        Ok(())
    }

    fn version(&mut self) -> Result<()> {
        let v = self.u32()?;
        if v != VERSION {
            return Err(Error::ModelFormat(format!("unsupported version {v}")));
        }
        Ok(())
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32> {
        let b = self.take(4)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }

    fn u64(&mut self) -> Result<u64> {
        let mut a = [0u8; 8];
        a.copy_from_slice(self.take(8)?);
        Ok(u64::from_le_bytes(a))
    }

    fn f64(&mut self) -> Result<f64> {
        let mut a = [0u8; 8];
        a.copy_from_slice(self.take(8)?);
        Ok(f64::from_le_bytes(a))
    }
}
