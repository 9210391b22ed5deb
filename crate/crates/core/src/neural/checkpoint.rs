//! Binary parameter checkpoints.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! magic      8 bytes  "GZPCKPT\0"
//! version    u32      1
//! count      u32      number of tensors
//! repeated count times:
//!   name_len u32, name (UTF-8, name_len bytes)
//!   ndim     u32, dims (u64 × ndim)
//!   payload  f64 × product(dims)
//! ```

use std::fs;
use std::path::Path;

use super::param::Parameterized;
use super::tensor::Tensor;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const MAGIC: &[u8; 8] = b"GZPCKPT\0";
pub const VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct NamedTensor {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

pub fn encode(tensors: &[NamedTensor]) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(tensors.len() as u32).to_le_bytes());
    for t in tensors {
        out.extend_from_slice(&(t.name.len() as u32).to_le_bytes());
        out.extend_from_slice(t.name.as_bytes());
        out.extend_from_slice(&(t.shape.len() as u32).to_le_bytes());
        for &d in &t.shape {
            out.extend_from_slice(&(d as u64).to_le_bytes());
        }
        for &v in &t.data {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| Error::Checkpoint(format!("truncated at byte {}", self.pos)))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

pub fn decode(bytes: &[u8]) -> Result<Vec<NamedTensor>> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(8)? != MAGIC {
        return Err(Error::Checkpoint("bad magic".into()));
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(Error::Checkpoint(format!("unsupported version {version}")));
    }
    let count = r.u32()? as usize;
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let len = r.u32()? as usize;
        let name = String::from_utf8(r.take(len)?.to_vec())
            .map_err(|_| Error::Checkpoint("tensor name is not UTF-8".into()))?;
        let ndim = r.u32()? as usize;
        let shape = (0..ndim)
            .map(|_| r.u64().map(|d| d as usize))
            .collect::<Result<Vec<_>>>()?;
        let n: usize = shape.iter().product();
        let data = (0..n).map(|_| r.f64()).collect::<Result<Vec<_>>>()?;
        out.push(NamedTensor { name, shape, data });
    }
    if r.pos != bytes.len() {
        return Err(Error::Checkpoint("trailing bytes after last tensor".into()));
    }
    Ok(out)
}

pub fn snapshot<T: Scalar, M: Parameterized<T> + ?Sized>(model: &M) -> Vec<NamedTensor> {
    model
        .params()
        .into_iter()
        .map(|(name, p)| NamedTensor {
            name,
            shape: p.value.shape().to_vec(),
            data: p.value.data().iter().map(|v| v.as_f64()).collect(),
        })
        .collect()
}

/// Copies tensors into `model`, requiring an exact match of names and shapes.
pub fn restore<T: Scalar, M: Parameterized<T> + ?Sized>(model: &mut M, tensors: &[NamedTensor]) -> Result<()> {
    let mut params = model.params_mut();
    if params.len() != tensors.len() {
        return Err(Error::Checkpoint(format!(
            "checkpoint holds {} tensors, model has {}",
            tensors.len(),
            params.len()
        )));
    }
    for ((name, p), t) in params.iter_mut().zip(tensors) {
        if *name != t.name || p.value.shape() != t.shape.as_slice() {
            return Err(Error::Checkpoint(format!(
                "expected {name} {:?}, found {} {:?}",
                p.value.shape(),
                t.name,
                t.shape
            )));
        }
        p.value = Tensor::from_vec(&t.shape, t.data.iter().map(|&v| T::of(v)).collect())?;
    }
    Ok(())
}

pub fn save<T: Scalar, M: Parameterized<T> + ?Sized>(model: &M, path: &Path) -> Result<()> {
    fs::write(path, encode(&snapshot(model))).map_err(|e| Error::io(path, e))
}

pub fn load<T: Scalar, M: Parameterized<T> + ?Sized>(model: &mut M, path: &Path) -> Result<()> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    restore(model, &decode(&bytes)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn encode_decode_round_trip() {
        let tensors = vec![
            NamedTensor {
                name: "a.weight".into(),
                shape: vec![2, 3],
                data: vec![1.0, -2.5, 3.25, 0.0, f64::MIN_POSITIVE, 1e300],
            },
            NamedTensor {
                name: "b".into(),
                shape: vec![1],
                data: vec![7.0],
            },
        ];
        let bytes = encode(&tensors);
        assert_eq!(&bytes[..8], MAGIC);
        assert_eq!(decode(&bytes).unwrap(), tensors);
        assert!(decode(&bytes[..bytes.len() - 1]).is_err());
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(decode(&bad).is_err());
    }
}
