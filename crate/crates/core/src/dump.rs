//! Raw field dumps: `u64` LE header length, a JSON header, then the samples
//! as little-endian `f64`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DUMP_FORMAT: &str = "pampere-dump";
pub const DUMP_VERSION: u32 = 1;
/// Headers above this size are rejected before parsing.
pub const MAX_HEADER: u64 = 1 << 20;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DumpHeader {
    pub format: String,
    pub version: u32,
    pub name: String,
    /// Nodes per axis, slowest first. A leading time axis is allowed.
    pub shape: Vec<usize>,
    pub spacing: Vec<f64>,
    pub origin: Vec<f64>,
    pub byte_order: String,
    pub dtype: String,
}

impl DumpHeader {
    pub fn new(name: &str, shape: Vec<usize>, spacing: Vec<f64>, origin: Vec<f64>) -> Self {
        Self {
            format: DUMP_FORMAT.into(),
            version: DUMP_VERSION,
            name: name.into(),
            shape,
            spacing,
            origin,
            byte_order: "little".into(),
            dtype: "f64".into(),
        }
    }

    /// Product of `shape`, or `None` on overflow.
    pub fn count(&self) -> Option<usize> {
        self.shape.iter().try_fold(1usize, |acc, &s| acc.checked_mul(s))
    }

    fn validate(&self) -> Result<usize> {
        if self.format != DUMP_FORMAT || self.version != DUMP_VERSION {
            return Err(Error::Dump(format!("unsupported format {} v{}", self.format, self.version)));
        }
        if self.byte_order != "little" || self.dtype != "f64" {
            return Err(Error::Dump("only little-endian f64 is supported".into()));
        }
        if self.shape.is_empty() || self.spacing.len() != self.shape.len() || self.origin.len() != self.shape.len() {
            return Err(Error::Dump("shape, spacing and origin must have equal nonzero length".into()));
        }
        self.count().ok_or_else(|| Error::Dump("shape overflows".into()))
    }
}

pub fn encode_dump(header: &DumpHeader, values: &[f64]) -> Result<Vec<u8>> {
    let count = header.validate()?;
    if count != values.len() {
        return Err(Error::Dump(format!("header promises {count} values, got {}", values.len())));
    }
    let json = serde_json::to_vec(header)?;
    let mut out = Vec::with_capacity(8 + json.len() + 8 * values.len());
    out.extend_from_slice(&(json.len() as u64).to_le_bytes());
    out.extend_from_slice(&json);
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
    Ok(out)
}

pub fn decode_dump(bytes: &[u8]) -> Result<(DumpHeader, Vec<f64>)> {
    let len_bytes: [u8; 8] = bytes
        .get(..8)
        .and_then(|b| b.try_into().ok())
        .ok_or_else(|| Error::Dump("truncated header length".into()))?;
    let len = u64::from_le_bytes(len_bytes);
    if len > MAX_HEADER {
        return Err(Error::Dump(format!("header of {len} bytes is too large")));
    }
    let end = 8 + len as usize;
    let json = bytes.get(8..end).ok_or_else(|| Error::Dump("truncated header".into()))?;
    let header: DumpHeader = serde_json::from_slice(json).map_err(|e| Error::Dump(e.to_string()))?;
    let count = header.validate()?;
    let body = &bytes[end..];
    if count.checked_mul(8) != Some(body.len()) {
        return Err(Error::Dump(format!("expected {count} values, body has {} bytes", body.len())));
    }
    let values = body.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
    Ok((header, values))
}

pub fn write_dump(path: &Path, header: &DumpHeader, values: &[f64]) -> Result<()> {
    std::fs::write(path, encode_dump(header, values)?)?;
    Ok(())
}

pub fn read_dump(path: &Path) -> Result<(DumpHeader, Vec<f64>)> {
    decode_dump(&std::fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn round_trip() {
        let h = DumpHeader::new("xi", vec![2, 3], vec![0.5, 0.25], vec![0.0, 0.0]);
        let v = [1.0, -2.5, 3.0, f64::MIN_POSITIVE, 0.0, 1e300];
        let (h2, v2) = decode_dump(&encode_dump(&h, &v).unwrap()).unwrap();
        assert_eq!(h, h2);
        assert_eq!(v.to_vec(), v2);
    }

    #[test]
    fn wrong_count_and_truncation() {
        let h = DumpHeader::new("xi", vec![2], vec![1.0], vec![0.0]);
        assert!(encode_dump(&h, &[1.0]).is_err());
        let bytes = encode_dump(&h, &[1.0, 2.0]).unwrap();
        assert!(decode_dump(&bytes[..bytes.len() - 1]).is_err());
        assert!(decode_dump(&bytes[..5]).is_err());
    }

    #[test]
    fn huge_header_length_rejected() {
        let mut bytes = u64::MAX.to_le_bytes().to_vec();
        bytes.extend_from_slice(b"{}");
        assert!(matches!(decode_dump(&bytes), Err(Error::Dump(_))));
    }

    proptest! {
        #[test]
        fn decode_never_panics(bytes in proptest::collection::vec(any::<u8>(), 0..256)) {
            let _ = decode_dump(&bytes);
        }

        #[test]
        fn encode_decode(values in proptest::collection::vec(-1e6f64..1e6, 1..40)) {
            let h = DumpHeader::new("v", vec![values.len()], vec![1.0], vec![0.0]);
            let (_, back) = decode_dump(&encode_dump(&h, &values).unwrap()).unwrap();
            prop_assert_eq!(back, values);
        }
    }
}
