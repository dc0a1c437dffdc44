//! Parameter checkpoint file.
//!
//! ```text
//! "EGNW" | config hash u64 | tensor count u32
//! per tensor: name length u32 | name (UTF-8) | dtype u8 (0 = f32, 1 = f64)
//!             | rank u32 | dims u32 * rank | little-endian payload
//! ```

use std::fs;
use std::path::Path;

use super::{NnError, Scalar, Tensor};

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"EGNW";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DType {
    F32,
    F64,
}

impl DType {
    fn code(self) -> u8 {
        match self {
            DType::F32 => 0,
            DType::F64 => 1,
        }
    }

    fn width(self) -> usize {
        match self {
            DType::F32 => 4,
            DType::F64 => 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckpointTensor {
    pub name: String,
    pub dtype: DType,
    pub dims: Vec<usize>,
    /// Raw little-endian payload.
    pub bytes: Vec<u8>,
}

impl CheckpointTensor {
    pub fn from_tensor<T: Scalar>(name: &str, t: &Tensor<T>) -> Self {
        let mut bytes = Vec::with_capacity(t.len() * T::DTYPE.width());
        for v in &t.data {
            match T::DTYPE {
                DType::F32 => bytes.extend_from_slice(&(v.to_f64_lossy() as f32).to_le_bytes()),
                DType::F64 => bytes.extend_from_slice(&v.to_f64_lossy().to_le_bytes()),
            }
        }
        CheckpointTensor { name: name.to_string(), dtype: T::DTYPE, dims: t.shape.clone(), bytes }
    }

    pub fn to_tensor<T: Scalar>(&self) -> Result<Tensor<T>, NnError> {
        let data = match self.dtype {
            DType::F32 => self
                .bytes
                .chunks_exact(4)
                .map(|c| T::from_f64_lossy(f32::from_le_bytes(c.try_into().unwrap()) as f64))
                .collect(),
            DType::F64 => self
                .bytes
                .chunks_exact(8)
                .map(|c| T::from_f64_lossy(f64::from_le_bytes(c.try_into().unwrap())))
                .collect(),
        };
        Tensor::from_vec(data, &self.dims)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub config_hash: u64,
    pub tensors: Vec<CheckpointTensor>,
}

impl Checkpoint {
    pub fn get(&self, name: &str) -> Option<&CheckpointTensor> {
        self.tensors.iter().find(|t| t.name == name)
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(CHECKPOINT_MAGIC);
        out.extend_from_slice(&self.config_hash.to_le_bytes());
        out.extend_from_slice(&(self.tensors.len() as u32).to_le_bytes());
        for t in &self.tensors {
            out.extend_from_slice(&(t.name.len() as u32).to_le_bytes());
            out.extend_from_slice(t.name.as_bytes());
            out.push(t.dtype.code());
            out.extend_from_slice(&(t.dims.len() as u32).to_le_bytes());
            for d in &t.dims {
                out.extend_from_slice(&(*d as u32).to_le_bytes());
            }
            out.extend_from_slice(&t.bytes);
        }
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, NnError> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(4)? != CHECKPOINT_MAGIC {
            return Err(NnError::Checkpoint("bad magic".into()));
        }
        let config_hash = u64::from_le_bytes(r.take(8)?.try_into().unwrap());
        let count = r.u32()? as usize;
        let mut tensors = Vec::with_capacity(count.min(1024));
        for _ in 0..count {
            let name_len = r.u32()? as usize;
            let name = String::from_utf8(r.take(name_len)?.to_vec())
                .map_err(|_| NnError::Checkpoint("tensor name is not UTF-8".into()))?;
            let dtype = match r.take(1)?[0] {
                0 => DType::F32,
                1 => DType::F64,
                other => return Err(NnError::Checkpoint(format!("unknown dtype code {other}"))),
            };
            let rank = r.u32()? as usize;
            let dims = (0..rank).map(|_| r.u32().map(|d| d as usize)).collect::<Result<Vec<_>, _>>()?;
            let n: usize = dims.iter().product();
            let payload = r.take(n * dtype.width())?.to_vec();
            tensors.push(CheckpointTensor { name, dtype, dims, bytes: payload });
        }
        if r.pos != bytes.len() {
            return Err(NnError::Checkpoint(format!("{} trailing bytes", bytes.len() - r.pos)));
        }
        Ok(Checkpoint { config_hash, tensors })
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], NnError> {
        if self.pos + n > self.bytes.len() {
            return Err(NnError::Checkpoint("truncated file".into()));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32, NnError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
}

pub fn write_checkpoint(path: impl AsRef<Path>, ckpt: &Checkpoint) -> Result<(), NnError> {
    let path = path.as_ref();
    fs::write(path, ckpt.encode()).map_err(|e| NnError::Checkpoint(format!("{}: {e}", path.display())))
}

pub fn read_checkpoint(path: impl AsRef<Path>) -> Result<Checkpoint, NnError> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| NnError::Checkpoint(format!("{}: {e}", path.display())))?;
    Checkpoint::decode(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_both_dtypes() {
        let a = Tensor::from_vec(vec![1.5f32, -2.0, 0.25, 3.0, 0.0, 1e-7], &[2, 3]).unwrap();
        let b = Tensor::from_vec(vec![std::f64::consts::PI], &[1]).unwrap();
        let ck = Checkpoint {
            config_hash: 0xDEAD_BEEF_1234,
            tensors: vec![CheckpointTensor::from_tensor("a", &a), CheckpointTensor::from_tensor("b", &b)],
        };
        let bytes = ck.encode();
        assert_eq!(&bytes[..4], b"EGNW");
        let back = Checkpoint::decode(&bytes).unwrap();
        assert_eq!(back, ck);
        assert_eq!(back.get("a").unwrap().to_tensor::<f32>().unwrap(), a);
        assert_eq!(back.get("b").unwrap().to_tensor::<f64>().unwrap(), b);
        assert!(Checkpoint::decode(&bytes[..bytes.len() - 2]).is_err());
    }
}
