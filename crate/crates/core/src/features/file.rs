//! `.ekf` feature files.
//!
//! Layout (little-endian): `"EKF1"` | u32 n | u32 d | u8 has_temporal_channel |
//! f32 temporal_weight | n·d f32 values, row-major.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::FeatureMatrix;
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"EKF1";
pub const HEADER_LEN: usize = 17;
const KIND: &str = "feature file";

pub fn write_feature_matrix<W: Write>(f: &FeatureMatrix, mut w: W) -> Result<()> {
    let n = u32::try_from(f.n()).map_err(|_| Error::input("row count exceeds u32"))?;
    let d = u32::try_from(f.d()).map_err(|_| Error::input("dimension exceeds u32"))?;
    let mut header = [0u8; HEADER_LEN];
    header[..4].copy_from_slice(MAGIC);
    header[4..8].copy_from_slice(&n.to_le_bytes());
    header[8..12].copy_from_slice(&d.to_le_bytes());
    header[12] = f.has_temporal_channel() as u8;
    header[13..17].copy_from_slice(&f.temporal_weight().to_le_bytes());
    w.write_all(&header)?;
    let mut buf = Vec::with_capacity(f.d() * 4);
    for row in f.rows() {
        buf.clear();
        for v in row {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        w.write_all(&buf)?;
    }
    w.flush()?;
    Ok(())
}

/// Parses a feature matrix; rejects anything that does not match the layout
/// exactly, including trailing bytes.
pub fn read_feature_matrix<R: Read>(mut r: R) -> Result<FeatureMatrix> {
    let mut header = [0u8; HEADER_LEN];
    read_exact_or_truncated(&mut r, &mut header)?;
    if &header[..4] != MAGIC {
        return Err(Error::format(KIND, "bad magic"));
    }
    let n = u32::from_le_bytes(header[4..8].try_into().unwrap()) as usize;
    let d = u32::from_le_bytes(header[8..12].try_into().unwrap()) as usize;
    let temporal = match header[12] {
        0 => false,
        1 => true,
        other => return Err(Error::format(KIND, format!("temporal flag {other}"))),
    };
    let weight = f32::from_le_bytes(header[13..17].try_into().unwrap());
    let count = n
        .checked_mul(d)
        .filter(|c| c.checked_mul(4).is_some())
        .ok_or_else(|| Error::format(KIND, format!("{n}x{d} overflows")))?;

    // Read in bounded chunks so a lying header cannot force a huge allocation
    // before the truncation is noticed.
    let mut data = Vec::with_capacity(count.min(1 << 20));
    let mut chunk = vec![0u8; 1 << 16];
    let mut remaining = count * 4;
    while remaining > 0 {
        let take = remaining.min(chunk.len());
        read_exact_or_truncated(&mut r, &mut chunk[..take])?;
        data.extend(
            chunk[..take]
                .chunks_exact(4)
                .map(|b| f32::from_le_bytes(b.try_into().unwrap())),
        );
        remaining -= take;
    }
    let mut probe = [0u8; 1];
    if r.read(&mut probe)? != 0 {
        return Err(Error::format(KIND, "trailing bytes after matrix"));
    }
    FeatureMatrix::from_parts(n, d, data, temporal, weight).map_err(|e| match e {
        Error::Input(msg) => Error::format(KIND, msg),
        other => other,
    })
}

fn read_exact_or_truncated<R: Read>(r: &mut R, buf: &mut [u8]) -> Result<()> {
    r.read_exact(buf).map_err(|e| {
        if e.kind() == std::io::ErrorKind::UnexpectedEof {
            Error::format(KIND, "truncated")
        } else {
            Error::Io(e)
        }
    })
}

pub fn write_feature_file(f: &FeatureMatrix, path: impl AsRef<Path>) -> Result<()> {
    write_feature_matrix(f, BufWriter::new(File::create(path)?))
}

pub fn load_feature_file(path: impl AsRef<Path>) -> Result<FeatureMatrix> {
    read_feature_matrix(BufReader::new(File::open(path)?))
}
