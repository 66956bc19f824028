//! `.ekv` keyframe container.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! "EKV1" | u16 version | u32 n_total | u32 k | u8 codec
//! k × (u32 frame_id, u32 cluster_start, u32 cluster_end, u64 offset, u64 len, u32 crc32)
//! payloads
//! ```
//!
//! Offsets are absolute. Every payload is one frame encoded on its own, so
//! any subset can be fetched with one positioned read per frame.

use std::fs::File;
use std::io::{self, BufWriter, Read, Write};
use std::path::Path;

use flate2::read::DeflateDecoder;
use flate2::write::DeflateEncoder;
use flate2::Compression;

use super::source::{ByteSource, FileSource};
use crate::clustering::Clustering;
use crate::error::{Error, Result};
use crate::features::FrameSequence;
use crate::sampler::SampleSet;

const MAGIC: &[u8; 4] = b"EKV1";
pub const VERSION: u16 = 1;
pub const HEADER_LEN: u64 = 15;
pub const INDEX_RECORD_LEN: u64 = 32;
/// Largest single frame a store accepts.
pub const MAX_FRAME_BYTES: usize = 1 << 30;
const KIND: &str = "keyframe store";

/// Payload encoding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Codec {
    Raw,
    /// Raw DEFLATE, one stream per frame.
    Lossless,
}

impl Codec {
    pub fn id(self) -> u8 {
        match self {
            Codec::Raw => 0,
            Codec::Lossless => 1,
        }
    }

    pub fn from_id(id: u8) -> Option<Self> {
        match id {
            0 => Some(Codec::Raw),
            1 => Some(Codec::Lossless),
            _ => None,
        }
    }

    fn encode(self, pixels: &[u8]) -> Result<Vec<u8>> {
        match self {
            Codec::Raw => Ok(pixels.to_vec()),
            Codec::Lossless => {
                let mut enc = DeflateEncoder::new(Vec::new(), Compression::default());
                enc.write_all(pixels)?;
                Ok(enc.finish()?)
            }
        }
    }

    fn decode(self, payload: Vec<u8>) -> io::Result<Vec<u8>> {
        match self {
            Codec::Raw => Ok(payload),
            Codec::Lossless => {
                let mut out = Vec::new();
                DeflateDecoder::new(&payload[..]).read_to_end(&mut out)?;
                Ok(out)
            }
        }
    }
}

impl std::str::FromStr for Codec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "raw" => Ok(Codec::Raw),
            "lossless" => Ok(Codec::Lossless),
            other => Err(Error::input(format!(
                "codec must be raw or lossless, got {other:?}"
            ))),
        }
    }
}

impl std::fmt::Display for Codec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Codec::Raw => "raw",
            Codec::Lossless => "lossless",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StoreHeader {
    pub version: u16,
    pub n_total: u32,
    pub k: u32,
    pub codec: Codec,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IndexRecord {
    pub frame_id: u32,
    pub cluster_start: u32,
    pub cluster_end: u32,
    pub offset: u64,
    pub len: u64,
    pub crc32: u32,
}

impl IndexRecord {
    fn to_bytes(self) -> [u8; INDEX_RECORD_LEN as usize] {
        let mut b = [0u8; INDEX_RECORD_LEN as usize];
        b[..4].copy_from_slice(&self.frame_id.to_le_bytes());
        b[4..8].copy_from_slice(&self.cluster_start.to_le_bytes());
        b[8..12].copy_from_slice(&self.cluster_end.to_le_bytes());
        b[12..20].copy_from_slice(&self.offset.to_le_bytes());
        b[20..28].copy_from_slice(&self.len.to_le_bytes());
        b[28..32].copy_from_slice(&self.crc32.to_le_bytes());
        b
    }

    fn from_bytes(b: &[u8]) -> Self {
        let u32_at = |i: usize| u32::from_le_bytes(b[i..i + 4].try_into().unwrap());
        let u64_at = |i: usize| u64::from_le_bytes(b[i..i + 8].try_into().unwrap());
        IndexRecord {
            frame_id: u32_at(0),
            cluster_start: u32_at(4),
            cluster_end: u32_at(8),
            offset: u64_at(12),
            len: u64_at(20),
            crc32: u32_at(28),
        }
    }
}

/// Totals reported after writing a store.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StoreSummary {
    pub file_bytes: u64,
    pub payload_bytes: u64,
    pub raw_bytes: u64,
    pub frames: usize,
}

fn header_bytes(h: &StoreHeader) -> [u8; HEADER_LEN as usize] {
    let mut b = [0u8; HEADER_LEN as usize];
    b[..4].copy_from_slice(MAGIC);
    b[4..6].copy_from_slice(&h.version.to_le_bytes());
    b[6..10].copy_from_slice(&h.n_total.to_le_bytes());
    b[10..14].copy_from_slice(&h.k.to_le_bytes());
    b[14] = h.codec.id();
    b
}

/// Serializes the sampled frames of `seq` into a store.
///
/// Every sample must belong to the cluster of `cl` whose extent it carries,
/// with exactly one sample per cluster.
pub fn write_store<W: Write>(
    seq: &FrameSequence,
    s: &SampleSet,
    cl: &Clustering,
    codec: Codec,
    mut w: W,
) -> Result<StoreSummary> {
    if seq.is_empty() {
        return Err(Error::input("frame sequence is empty"));
    }
    if cl.n() != seq.len() {
        return Err(Error::input(format!(
            "clustering covers {} frames, sequence has {}",
            cl.n(),
            seq.len()
        )));
    }
    if s.len() != cl.k() {
        return Err(Error::input(format!(
            "{} samples for {} clusters",
            s.len(),
            cl.k()
        )));
    }
    let hulls = cl.hulls();
    let mut seen = vec![false; cl.k()];
    for (i, e) in s.entries.iter().enumerate() {
        if i > 0 && e.frame_id <= s.entries[i - 1].frame_id {
            return Err(Error::input("sample frame ids must strictly increase"));
        }
        if e.frame_id as usize >= seq.len() {
            return Err(Error::input(format!(
                "sample frame {} not in a {}-frame sequence",
                e.frame_id,
                seq.len()
            )));
        }
        let c = cl.label(e.frame_id as usize) as usize;
        if std::mem::replace(&mut seen[c], true) {
            return Err(Error::input(format!("cluster {c} sampled twice")));
        }
        if hulls[c] != (e.cluster_start, e.cluster_end) {
            return Err(Error::input(format!(
                "sample {} carries extent {}..={} but its cluster spans {}..={}",
                e.frame_id, e.cluster_start, e.cluster_end, hulls[c].0, hulls[c].1
            )));
        }
    }

    let frame_bytes = seq.frame_bytes();
    if frame_bytes > MAX_FRAME_BYTES {
        return Err(Error::Encode(format!(
            "frame of {frame_bytes} bytes exceeds the {MAX_FRAME_BYTES}-byte limit"
        )));
    }
    let mut payloads = Vec::with_capacity(s.len());
    for e in &s.entries {
        let frame = &seq.frames[e.frame_id as usize];
        if frame.pixels.len() != frame_bytes {
            return Err(Error::Encode(format!(
                "frame {} holds {} bytes, expected {frame_bytes}",
                e.frame_id,
                frame.pixels.len()
            )));
        }
        payloads.push(codec.encode(&frame.pixels)?);
    }

    let header = StoreHeader {
        version: VERSION,
        n_total: u32::try_from(seq.len()).map_err(|_| Error::Encode("too many frames".into()))?,
        k: s.len() as u32,
        codec,
    };
    w.write_all(&header_bytes(&header))?;
    let mut offset = HEADER_LEN + INDEX_RECORD_LEN * s.len() as u64;
    for (e, p) in s.entries.iter().zip(&payloads) {
        let rec = IndexRecord {
            frame_id: e.frame_id,
            cluster_start: e.cluster_start,
            cluster_end: e.cluster_end,
            offset,
            len: p.len() as u64,
            crc32: crc32fast::hash(p),
        };
        w.write_all(&rec.to_bytes())?;
        offset += rec.len;
    }
    for p in &payloads {
        w.write_all(p)?;
    }
    w.flush()?;
    let payload_bytes: u64 = payloads.iter().map(|p| p.len() as u64).sum();
    Ok(StoreSummary {
        file_bytes: offset,
        payload_bytes,
        raw_bytes: (frame_bytes * s.len()) as u64,
        frames: s.len(),
    })
}

/// Writes a store file at `path`.
pub fn encode_store(
    seq: &FrameSequence,
    s: &SampleSet,
    cl: &Clustering,
    codec: Codec,
    path: impl AsRef<Path>,
) -> Result<StoreSummary> {
    let file = File::create(path)?;
    let summary = write_store(seq, s, cl, codec, BufWriter::new(&file))?;
    file.sync_all()?;
    Ok(summary)
}

/// An opened store: header and index are resident, payloads stay on the
/// source until asked for.
pub struct StoreHandle<S> {
    header: StoreHeader,
    index: Vec<IndexRecord>,
    source: S,
}

fn map_eof(e: io::Error) -> Error {
    if e.kind() == io::ErrorKind::UnexpectedEof {
        Error::format(KIND, "truncated")
    } else {
        Error::Io(e)
    }
}

fn parse_header(b: &[u8]) -> Result<StoreHeader> {
    if &b[..4] != MAGIC {
        return Err(Error::format(KIND, "bad magic"));
    }
    let version = u16::from_le_bytes([b[4], b[5]]);
    if version != VERSION {
        return Err(Error::format(
            KIND,
            format!("unsupported version {version}"),
        ));
    }
    let codec = Codec::from_id(b[14])
        .ok_or_else(|| Error::format(KIND, format!("unknown codec {}", b[14])))?;
    Ok(StoreHeader {
        version,
        n_total: u32::from_le_bytes(b[6..10].try_into().unwrap()),
        k: u32::from_le_bytes(b[10..14].try_into().unwrap()),
        codec,
    })
}

fn validate_index(header: &StoreHeader, index: &[IndexRecord], file_len: u64) -> Result<()> {
    let mut payload_floor = HEADER_LEN + INDEX_RECORD_LEN * index.len() as u64;
    for (i, r) in index.iter().enumerate() {
        if i > 0 && r.frame_id <= index[i - 1].frame_id {
            return Err(Error::format(KIND, "index not sorted by frame id"));
        }
        if !(r.cluster_start <= r.frame_id && r.frame_id <= r.cluster_end)
            || r.cluster_end >= header.n_total
        {
            return Err(Error::format(
                KIND,
                format!("frame {} has an invalid cluster extent", r.frame_id),
            ));
        }
        let end = r
            .offset
            .checked_add(r.len)
            .ok_or_else(|| Error::format(KIND, "payload offset overflows"))?;
        if r.offset < payload_floor || end > file_len {
            return Err(Error::format(
                KIND,
                format!(
                    "payload of frame {} overlaps or leaves the file",
                    r.frame_id
                ),
            ));
        }
        payload_floor = end;
    }
    Ok(())
}

impl<S: ByteSource> StoreHandle<S> {
    /// Reads and validates header and index only.
    pub fn open(source: S) -> Result<Self> {
        let mut hb = [0u8; HEADER_LEN as usize];
        source.read_at(0, &mut hb).map_err(map_eof)?;
        let header = parse_header(&hb)?;
        let index_len = INDEX_RECORD_LEN * header.k as u64;
        if HEADER_LEN + index_len > source.len() {
            return Err(Error::format(KIND, "index runs past end of file"));
        }
        let mut ib = vec![0u8; index_len as usize];
        source.read_at(HEADER_LEN, &mut ib).map_err(map_eof)?;
        let index: Vec<IndexRecord> = ib
            .chunks_exact(INDEX_RECORD_LEN as usize)
            .map(IndexRecord::from_bytes)
            .collect();
        validate_index(&header, &index, source.len())?;
        Ok(StoreHandle {
            header,
            index,
            source,
        })
    }

    pub fn header(&self) -> &StoreHeader {
        &self.header
    }

    pub fn index(&self) -> &[IndexRecord] {
        &self.index
    }

    pub fn frame_ids(&self) -> Vec<u32> {
        self.index.iter().map(|r| r.frame_id).collect()
    }

    pub fn source(&self) -> &S {
        &self.source
    }

    /// True when the stored cluster extents tile `0..n_total` exactly.
    pub fn intervals_partition(&self) -> bool {
        let mut next = 0u32;
        for r in &self.index {
            if r.cluster_start != next {
                return false;
            }
            next = r.cluster_end + 1;
        }
        next == self.header.n_total
    }

    fn record(&self, id: u32) -> Result<&IndexRecord> {
        self.index
            .binary_search_by_key(&id, |r| r.frame_id)
            .map(|i| &self.index[i])
            .map_err(|_| Error::Lookup(id))
    }

    /// Stored (still encoded) bytes of one frame, checksum verified.
    pub fn read_payload(&self, id: u32) -> Result<Vec<u8>> {
        let r = self.record(id)?;
        let mut buf = vec![0u8; r.len as usize];
        self.source.read_at(r.offset, &mut buf).map_err(map_eof)?;
        let computed = crc32fast::hash(&buf);
        if computed != r.crc32 {
            return Err(Error::Corruption {
                frame_id: id,
                stored: r.crc32,
                computed,
            });
        }
        Ok(buf)
    }

    /// Decoded pixels of each requested frame, in request order.
    pub fn read_frames(&self, ids: &[u32]) -> Result<Vec<Vec<u8>>> {
        // resolve every id first so an unknown id reads nothing
        for &id in ids {
            self.record(id)?;
        }
        ids.iter()
            .map(|&id| {
                let payload = self.read_payload(id)?;
                self.header
                    .codec
                    .decode(payload)
                    .map_err(|e| Error::format(KIND, format!("frame {id}: {e}")))
            })
            .collect()
    }
}

/// An index record with its decoded pixels.
pub type StoredFrame = (IndexRecord, Vec<u8>);

/// Opens a store file with positioned reads.
pub fn open_store(path: impl AsRef<Path>) -> Result<StoreHandle<FileSource>> {
    StoreHandle::open(FileSource::open(path)?)
}

/// Parses a whole store from a sequential stream, returning every index
/// record with its decoded frame.
pub fn read_store_stream<R: Read>(mut r: R) -> Result<(StoreHeader, Vec<StoredFrame>)> {
    let mut hb = [0u8; HEADER_LEN as usize];
    r.read_exact(&mut hb).map_err(map_eof)?;
    let header = parse_header(&hb)?;
    let mut index = Vec::with_capacity((header.k as usize).min(1 << 16));
    let mut rec = [0u8; INDEX_RECORD_LEN as usize];
    for _ in 0..header.k {
        r.read_exact(&mut rec).map_err(map_eof)?;
        index.push(IndexRecord::from_bytes(&rec));
    }
    let mut pos = HEADER_LEN + INDEX_RECORD_LEN * header.k as u64;
    validate_index(&header, &index, u64::MAX)?;
    let mut out = Vec::with_capacity(index.len());
    for rec in index {
        if rec.offset > pos {
            io::copy(&mut (&mut r).take(rec.offset - pos), &mut io::sink())?;
        }
        let mut buf = vec![0u8; rec.len as usize];
        r.read_exact(&mut buf).map_err(map_eof)?;
        pos = rec.offset + rec.len;
        let computed = crc32fast::hash(&buf);
        if computed != rec.crc32 {
            return Err(Error::Corruption {
                frame_id: rec.frame_id,
                stored: rec.crc32,
                computed,
            });
        }
        let pixels = header
            .codec
            .decode(buf)
            .map_err(|e| Error::format(KIND, format!("frame {}: {e}", rec.frame_id)))?;
        out.push((rec, pixels));
    }
    Ok((header, out))
}
