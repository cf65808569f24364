//! Flat parameter vectors, the unit of federated exchange.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::{Error, Result};

/// Binds a parameter vector to one model architecture and shape.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LayoutTag(String);

impl LayoutTag {
    pub fn new(descriptor: impl Into<String>) -> Self {
        Self(descriptor.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for LayoutTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Dense vector of trainable parameters. All entries are finite.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamVector {
    layout: LayoutTag,
    values: Vec<f64>,
}

const MAGIC: &[u8; 4] = b"FCPV";

impl ParamVector {
    pub fn new(layout: LayoutTag, values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self { layout, values })
    }

    pub fn zeros(layout: LayoutTag, len: usize) -> Self {
        Self { layout, values: alloc::vec![0.0; len] }
    }

    pub fn zeros_like(&self) -> Self {
        Self::zeros(self.layout.clone(), self.len())
    }

    pub fn layout(&self) -> &LayoutTag {
        &self.layout
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn check_layout(&self, other: &ParamVector) -> Result<()> {
        if self.layout != other.layout || self.len() != other.len() {
            return Err(Error::LayoutMismatch {
                expected: self.layout.to_string(),
                found: other.layout.to_string(),
            });
        }
        Ok(())
    }

    /// Elementwise `f(self_i, other_i)`, refusing mismatched layouts and
    /// non-finite results.
    pub fn zip_with(&self, other: &ParamVector, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.check_layout(other)?;
        let values = self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect();
        Self::new(self.layout.clone(), values)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(self.layout.clone(), self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn add(&self, other: &ParamVector) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &ParamVector) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn scale(&self, factor: f64) -> Result<Self> {
        self.map(|v| v * factor)
    }

    /// Coordinate-wise median; even counts average the two central values.
    pub fn median(vectors: &[&ParamVector]) -> Result<Self> {
        let first = vectors.first().ok_or(Error::NoParticipants)?;
        for v in vectors {
            first.check_layout(v)?;
        }
        let mut column = Vec::with_capacity(vectors.len());
        let values = (0..first.len())
            .map(|i| {
                column.clear();
                column.extend(vectors.iter().map(|v| v.values[i]));
                column.sort_unstable_by(f64::total_cmp);
                let mid = column.len() / 2;
                if column.len() % 2 == 1 {
                    column[mid]
                } else {
                    (column[mid - 1] + column[mid]) / 2.0
                }
            })
            .collect();
        Self::new(first.layout.clone(), values)
    }

    /// Serializes as `FCPV`, a little-endian `u32` tag length, the UTF-8
    /// tag, a little-endian `u64` count and then the values as
    /// little-endian `f64`.
    pub fn to_bytes(&self) -> Vec<u8> {
        let tag = self.layout.as_str().as_bytes();
        let mut out = Vec::with_capacity(16 + tag.len() + 8 * self.len());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&(tag.len() as u32).to_le_bytes());
        out.extend_from_slice(tag);
        out.extend_from_slice(&(self.len() as u64).to_le_bytes());
        for v in &self.values {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut cursor = bytes;
        let mut take = |n: usize| -> Result<&[u8]> {
            if cursor.len() < n {
                return Err(Error::Decode("truncated input".into()));
            }
            let (head, tail) = cursor.split_at(n);
            cursor = tail;
            Ok(head)
        };
        if take(4)? != MAGIC {
            return Err(Error::Decode("bad magic".into()));
        }
        let tag_len = u32::from_le_bytes(take(4)?.try_into().expect("4 bytes")) as usize;
        let tag = core::str::from_utf8(take(tag_len)?)
            .map_err(|_| Error::Decode("layout tag is not UTF-8".into()))?
            .to_string();
        let count = u64::from_le_bytes(take(8)?.try_into().expect("8 bytes")) as usize;
        let body = take(count.checked_mul(8).ok_or_else(|| Error::Decode("count overflow".into()))?)?;
        let values = body
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect();
        if !cursor.is_empty() {
            return Err(Error::Decode("trailing bytes".into()));
        }
        Self::new(LayoutTag::new(tag), values)
    }
}
