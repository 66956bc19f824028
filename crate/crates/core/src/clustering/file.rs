//! `.ekd` dendrogram cache.
//!
//! Layout (little-endian): `"EKD1"` | u32 n | u8 constraint kind | u32 span |
//! n−1 records of (u32 left, u32 right, f64 cost, u32 size).

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{Connectivity, Dendrogram, Merge};
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"EKD1";
pub const HEADER_LEN: usize = 13;
pub const RECORD_LEN: usize = 20;
const KIND: &str = "dendrogram file";

pub fn write_dendrogram<W: Write>(d: &Dendrogram, mut w: W) -> Result<()> {
    let n = u32::try_from(d.n()).map_err(|_| Error::input("leaf count exceeds u32"))?;
    let mut header = [0u8; HEADER_LEN];
    header[..4].copy_from_slice(MAGIC);
    header[4..8].copy_from_slice(&n.to_le_bytes());
    header[8] = d.constraint().kind_code();
    header[9..13].copy_from_slice(&d.constraint().span().to_le_bytes());
    w.write_all(&header)?;
    let mut rec = [0u8; RECORD_LEN];
    for m in d.merges() {
        rec[..4].copy_from_slice(&m.left.to_le_bytes());
        rec[4..8].copy_from_slice(&m.right.to_le_bytes());
        rec[8..16].copy_from_slice(&m.cost.to_le_bytes());
        rec[16..20].copy_from_slice(&m.size.to_le_bytes());
        w.write_all(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_dendrogram<R: Read>(mut r: R) -> Result<Dendrogram> {
    let mut header = [0u8; HEADER_LEN];
    read_exact(&mut r, &mut header)?;
    if &header[..4] != MAGIC {
        return Err(Error::format(KIND, "bad magic"));
    }
    let n = u32::from_le_bytes(header[4..8].try_into().unwrap()) as usize;
    let span = u32::from_le_bytes(header[9..13].try_into().unwrap());
    let constraint = Connectivity::from_code(header[8], span).ok_or_else(|| {
        Error::format(
            KIND,
            format!("constraint kind {} with span {span}", header[8]),
        )
    })?;
    if n == 0 {
        return Err(Error::format(KIND, "zero leaves"));
    }
    let mut merges = Vec::with_capacity((n - 1).min(1 << 20));
    let mut rec = [0u8; RECORD_LEN];
    for _ in 0..n - 1 {
        read_exact(&mut r, &mut rec)?;
        merges.push(Merge {
            left: u32::from_le_bytes(rec[..4].try_into().unwrap()),
            right: u32::from_le_bytes(rec[4..8].try_into().unwrap()),
            cost: f64::from_le_bytes(rec[8..16].try_into().unwrap()),
            size: u32::from_le_bytes(rec[16..20].try_into().unwrap()),
        });
    }
    let mut probe = [0u8; 1];
    if r.read(&mut probe)? != 0 {
        return Err(Error::format(KIND, "trailing bytes after merges"));
    }
    Dendrogram::from_parts(n, merges, constraint).map_err(|e| match e {
        Error::Input(msg) => Error::format(KIND, msg),
        other => other,
    })
}

fn read_exact<R: Read>(r: &mut R, buf: &mut [u8]) -> Result<()> {
    r.read_exact(buf).map_err(|e| {
        if e.kind() == std::io::ErrorKind::UnexpectedEof {
            Error::format(KIND, "truncated")
        } else {
            Error::Io(e)
        }
    })
}

pub fn save_dendrogram(d: &Dendrogram, path: impl AsRef<Path>) -> Result<()> {
    write_dendrogram(d, BufWriter::new(File::create(path)?))
}

pub fn load_dendrogram(path: impl AsRef<Path>) -> Result<Dendrogram> {
    read_dendrogram(BufReader::new(File::open(path)?))
}
