//! Dense row-major `f32` tensors and the ISVT binary file format.
//!
//! ISVT layout (all integers little-endian):
//!
//! ```text
//! offset  size  field
//! 0       4     magic "ISVT"
//! 4       1     version (1)
//! 5       3     reserved, zero
//! 8       4     rank (u32, at most 8)
//! 12      4     reserved, zero
//! 16      4*r   dims (u32 each)
//! ..      4*n   payload, f32 little-endian, row-major
//! ```

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

pub const ISVT_MAGIC: [u8; 4] = *b"ISVT";
pub const ISVT_VERSION: u8 = 1;
pub const ISVT_HEADER_LEN: usize = 16;
pub const MAX_RANK: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f32>,
}

impl Tensor {
    pub fn new(shape: Vec<usize>, data: Vec<f32>) -> Result<Self> {
        let expected: usize = shape.iter().product();
        if shape.contains(&0) || expected != data.len() {
            return Err(Error::InvalidShape {
                shape,
                len: data.len(),
            });
        }
        Ok(Self { shape, data })
    }

    pub fn zeros(shape: Vec<usize>) -> Self {
        let len = shape.iter().product();
        Self {
            shape,
            data: vec![0.0; len],
        }
    }

    pub fn filled(shape: Vec<usize>, value: f32) -> Self {
        let len = shape.iter().product();
        Self {
            shape,
            data: vec![value; len],
        }
    }

    /// One-dimensional tensor over `data`.
    pub fn from_vec(data: Vec<f32>) -> Self {
        Self {
            shape: vec![data.len()],
            data,
        }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn rank(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f32] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f32> {
        self.data
    }

    pub fn reshape(self, shape: Vec<usize>) -> Result<Self> {
        Tensor::new(shape, self.data)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Largest element; `f32::NEG_INFINITY` for an empty tensor.
    pub fn max(&self) -> f32 {
        self.data.iter().copied().fold(f32::NEG_INFINITY, f32::max)
    }

    /// Index of the largest element, ties resolved to the lowest index.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &v) in self.data.iter().enumerate() {
            if v > self.data[best] {
                best = i;
            }
        }
        best
    }

    pub fn map(&self, f: impl Fn(f32) -> f32) -> Tensor {
        Tensor {
            shape: self.shape.clone(),
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        if self.rank() > MAX_RANK {
            return Err(Error::RankTooLarge(self.rank()));
        }
        let mut out =
            Vec::with_capacity(ISVT_HEADER_LEN + 4 * self.rank() + 4 * self.data.len());
        out.extend_from_slice(&ISVT_MAGIC);
        out.push(ISVT_VERSION);
        out.extend_from_slice(&[0; 3]);
        out.extend_from_slice(&(self.rank() as u32).to_le_bytes());
        out.extend_from_slice(&[0; 4]);
        for &d in &self.shape {
            out.extend_from_slice(&(d as u32).to_le_bytes());
        }
        for &v in &self.data {
            out.extend_from_slice(&v.to_le_bytes());
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < ISVT_HEADER_LEN {
            if bytes.len() >= 4 && bytes[..4] != ISVT_MAGIC {
                return Err(Error::BadMagic {
                    found: bytes[..4].try_into().unwrap(),
                });
            }
            return Err(Error::Truncated {
                expected: ISVT_HEADER_LEN,
                found: bytes.len(),
            });
        }
        let magic: [u8; 4] = bytes[..4].try_into().unwrap();
        if magic != ISVT_MAGIC {
            return Err(Error::BadMagic { found: magic });
        }
        if bytes[4] != ISVT_VERSION {
            return Err(Error::UnsupportedVersion(bytes[4]));
        }
        let rank = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
        if rank > MAX_RANK {
            return Err(Error::RankTooLarge(rank));
        }
        let dims_end = ISVT_HEADER_LEN + 4 * rank;
        if bytes.len() < dims_end {
            return Err(Error::Truncated {
                expected: dims_end,
                found: bytes.len(),
            });
        }
        let shape: Vec<usize> = bytes[ISVT_HEADER_LEN..dims_end]
            .chunks_exact(4)
            .map(|c| u32::from_le_bytes(c.try_into().unwrap()) as usize)
            .collect();
        let count: usize = shape.iter().product();
        let expected = dims_end + 4 * count;
        if bytes.len() < expected {
            return Err(Error::Truncated {
                expected,
                found: bytes.len(),
            });
        }
        let data = bytes[dims_end..expected]
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Tensor::new(shape, data)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let bytes = self.to_bytes()?;
        fs::write(path, bytes).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Tensor::from_bytes(&bytes)
    }
}

/// Writes `t` to `path` in ISVT format.
pub fn tensor_write(t: &Tensor, path: impl AsRef<Path>) -> Result<()> {
    t.write(path)
}

/// Reads an ISVT tensor from `path`.
pub fn tensor_read(path: impl AsRef<Path>) -> Result<Tensor> {
    Tensor::read(path)
}
