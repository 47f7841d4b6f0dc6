//! Binary tensor container.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! "MLFM" | u32 version = 1 | u32 entry count
//! per entry: u16 name length | UTF-8 name | u8 dtype (0 = f32, 1 = f64)
//!            | u8 rank | rank × u32 extents | raw little-endian values
//! ```

use std::path::Path;

use super::Tensor;
use crate::error::{Error, Result};
use crate::scalar::{DType, Scalar};

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"MLFM";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckpointEntry {
    pub name: String,
    pub dtype: DType,
    pub shape: Vec<u32>,
    /// Raw little-endian element bytes.
    pub bytes: Vec<u8>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Checkpoint {
    entries: Vec<CheckpointEntry>,
}

impl Checkpoint {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn entries(&self) -> &[CheckpointEntry] {
        &self.entries
    }

    /// Appends (or replaces) an entry holding `t` in its own dtype.
    pub fn insert<T: Scalar>(&mut self, name: &str, t: &Tensor<T>) {
        let mut bytes = Vec::with_capacity(t.numel() * T::DTYPE.size_of());
        for &v in t.data() {
            v.write_le(&mut bytes);
        }
        let entry = CheckpointEntry {
            name: name.to_owned(),
            dtype: T::DTYPE,
            shape: t.shape().iter().map(|&d| d as u32).collect(),
            bytes,
        };
        match self.entries.iter_mut().find(|e| e.name == name) {
            Some(slot) => *slot = entry,
            None => self.entries.push(entry),
        }
    }

    /// Reads an entry, converting to `T` when the stored dtype differs.
    pub fn get<T: Scalar>(&self, name: &str) -> Result<Tensor<T>> {
        let e = self
            .entries
            .iter()
            .find(|e| e.name == name)
            .ok_or_else(|| Error::Checkpoint(format!("missing entry `{name}`")))?;
        let width = e.dtype.size_of();
        let values: Vec<T> = match e.dtype {
            DType::F32 => e
                .bytes
                .chunks_exact(width)
                .map(|c| T::from_f64_lossy(f32::read_le(c) as f64))
                .collect(),
            DType::F64 => e
                .bytes
                .chunks_exact(width)
                .map(|c| T::from_f64_lossy(f64::read_le(c)))
                .collect(),
        };
        Tensor::new(e.shape.iter().map(|&d| d as usize).collect::<Vec<_>>(), values)
            .map_err(|err| Error::Checkpoint(format!("entry `{name}`: {err}")))
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut out = Vec::new();
        out.extend_from_slice(CHECKPOINT_MAGIC);
        out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
        out.extend_from_slice(&(self.entries.len() as u32).to_le_bytes());
        for e in &self.entries {
            let name = e.name.as_bytes();
            let name_len =
                u16::try_from(name.len()).map_err(|_| Error::Checkpoint(format!("entry name too long: {}", e.name)))?;
            let rank = u8::try_from(e.shape.len())
                .map_err(|_| Error::Checkpoint(format!("rank too large for `{}`", e.name)))?;
            out.extend_from_slice(&name_len.to_le_bytes());
            out.extend_from_slice(name);
            out.push(e.dtype.code());
            out.push(rank);
            for d in &e.shape {
                out.extend_from_slice(&d.to_le_bytes());
            }
            out.extend_from_slice(&e.bytes);
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(4)? != CHECKPOINT_MAGIC {
            return Err(Error::Checkpoint("bad magic bytes".into()));
        }
        let version = r.u32()?;
        if version != CHECKPOINT_VERSION {
            return Err(Error::CheckpointVersion {
                found: version,
                expected: CHECKPOINT_VERSION,
            });
        }
        let count = r.u32()? as usize;
        let mut entries = Vec::with_capacity(count.min(1 << 16));
        for _ in 0..count {
            let name_len = u16::from_le_bytes(r.take(2)?.try_into().unwrap()) as usize;
            let name = std::str::from_utf8(r.take(name_len)?)
                .map_err(|_| Error::Checkpoint("entry name is not UTF-8".into()))?
                .to_owned();
            let code = r.take(1)?[0];
            let dtype = DType::from_code(code)
                .ok_or_else(|| Error::Checkpoint(format!("`{name}`: unknown dtype code {code}")))?;
            let rank = r.take(1)?[0] as usize;
            let mut shape = Vec::with_capacity(rank);
            for _ in 0..rank {
                shape.push(r.u32()?);
            }
            let numel = shape.iter().map(|&d| d as usize).product::<usize>();
            let bytes = r.take(numel * dtype.size_of())?.to_vec();
            entries.push(CheckpointEntry {
                name,
                dtype,
                shape,
                bytes,
            });
        }
        if r.pos != bytes.len() {
            return Err(Error::Checkpoint(format!("{} trailing bytes", bytes.len() - r.pos)));
        }
        Ok(Self { entries })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }
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
            .ok_or_else(|| Error::Checkpoint("truncated container".into()))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
}
