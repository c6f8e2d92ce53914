//! Binary snapshots: magic `NV2D`, `u32` format version, `u32` extents, then
//! the values as `f64` in row-major order, all little-endian.
//!
//! Version 1 files hold a 2D field with extents `N, M`. Version 2 files hold a
//! distribution with extents `N_x1, N_x2, N_p1, N_p2`.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"NV2D";
pub const VERSION_FIELD: u32 = 1;
pub const VERSION_DISTRIBUTION: u32 = 2;

fn rank_of(version: u32) -> Option<usize> {
    match version {
        VERSION_FIELD => Some(2),
        VERSION_DISTRIBUTION => Some(4),
        _ => None,
    }
}

/// A dense array of rank 2 or 4.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

impl Snapshot {
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        if shape.len() != 2 && shape.len() != 4 {
            return Err(Error::InvalidArgument(format!("snapshot rank {} is not 2 or 4", shape.len())));
        }
        if shape.iter().any(|&n| n > u32::MAX as usize) || shape.iter().product::<usize>() != data.len() {
            return Err(Error::InvalidArgument(format!("shape {shape:?} cannot hold {} values", data.len())));
        }
        Ok(Snapshot { shape, data })
    }

    pub fn version(&self) -> u32 {
        if self.shape.len() == 2 {
            VERSION_FIELD
        } else {
            VERSION_DISTRIBUTION
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(8 + 4 * self.shape.len() + 8 * self.data.len());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&self.version().to_le_bytes());
        for &n in &self.shape {
            out.extend_from_slice(&(n as u32).to_le_bytes());
        }
        for &v in &self.data {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let bad = |m: &str| Error::Io(format!("malformed snapshot: {m}"));
        let word = |k: usize| -> Result<u32> {
            bytes.get(k..k + 4).map(|b| u32::from_le_bytes(b.try_into().unwrap())).ok_or_else(|| bad("truncated header"))
        };
        if bytes.get(..4) != Some(MAGIC.as_slice()) {
            return Err(bad("bad magic"));
        }
        let rank = rank_of(word(4)?).ok_or_else(|| bad("unsupported version"))?;
        let shape = (0..rank).map(|k| word(8 + 4 * k).map(|n| n as usize)).collect::<Result<Vec<_>>>()?;
        let start = 8 + 4 * rank;
        let count = shape.iter().fold(1u128, |a, &n| a * n as u128);
        if bytes.len() as u128 != start as u128 + 8 * count {
            return Err(bad("length does not match extents"));
        }
        let data = bytes[start..].chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
        Ok(Snapshot { shape, data })
    }
}

pub fn write_snapshot(path: &Path, snap: &Snapshot) -> Result<()> {
    let mut file = fs::File::create(path)?;
    file.write_all(&snap.to_bytes())?;
    Ok(())
}

pub fn read_snapshot(path: &Path) -> Result<Snapshot> {
    Snapshot::from_bytes(&fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let s = Snapshot::new(vec![2, 3], vec![1.0, -2.5, 0.0, 1e-300, f64::MAX, 3.25]).unwrap();
        assert_eq!(Snapshot::from_bytes(&s.to_bytes()).unwrap(), s);
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.bin");
        write_snapshot(&p, &s).unwrap();
        assert_eq!(read_snapshot(&p).unwrap(), s);
    }

    #[test]
    fn rejects_damage() {
        assert!(Snapshot::new(vec![2, 2], vec![0.0; 3]).is_err());
        let s = Snapshot::new(vec![1, 4], vec![0.5; 4]).unwrap();
        let b = s.to_bytes();
        assert!(Snapshot::from_bytes(&b[..b.len() - 1]).is_err());
        let mut m = b.clone();
        m[0] = b'X';
        assert!(Snapshot::from_bytes(&m).is_err());
        let mut v = b.clone();
        v[4] = 9;
        assert!(Snapshot::from_bytes(&v).is_err());
        assert_eq!(&b[..4], b"NV2D");
        assert_eq!(u32::from_le_bytes(b[8..12].try_into().unwrap()), 1);
        assert_eq!(u32::from_le_bytes(b[12..16].try_into().unwrap()), 4);
        assert_eq!(b.len(), 16 + 32);
        let d = Snapshot::new(vec![2, 1, 1, 2], vec![0.25; 4]).unwrap();
        let db = d.to_bytes();
        assert_eq!(u32::from_le_bytes(db[4..8].try_into().unwrap()), 2);
        assert_eq!(db.len(), 24 + 32);
        assert_eq!(Snapshot::from_bytes(&db).unwrap(), d);
        assert!(Snapshot::new(vec![4], vec![0.0; 4]).is_err());
    }
}
