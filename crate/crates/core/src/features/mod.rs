//! Per-frame feature vectors.
//!
//! Features come either from the built-in pixel-grid extractor or from an
//! `.ekf` file produced by an external feature network.

mod file;
mod frames;

pub use file::{load_feature_file, read_feature_matrix, write_feature_file, write_feature_matrix};
pub use frames::{load_frame_dir, load_raw_stream, read_stream_meta, write_raw_stream, StreamMeta};

use crate::error::{Error, Result};
use crate::par;

/// One decoded frame.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FramePayload {
    pub frame_id: u32,
    /// Row-major, channel-interleaved bytes.
    pub pixels: Vec<u8>,
}

/// A decoded video: frame `i` is timestamp `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameSequence {
    pub frames: Vec<FramePayload>,
    pub width: u32,
    pub height: u32,
    pub channels: u8,
    pub frame_rate: f64,
}

impl FrameSequence {
    pub fn frame_bytes(&self) -> usize {
        self.width as usize * self.height as usize * self.channels as usize
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    /// Checks that metadata and payloads agree.
    pub fn validate(&self) -> Result<()> {
        if self.frames.is_empty() {
            return Err(Error::input("frame sequence is empty"));
        }
        if self.width == 0 || self.height == 0 {
            return Err(Error::input("frame dimensions must be nonzero"));
        }
        if self.channels != 1 && self.channels != 3 {
            return Err(Error::input(format!(
                "channels must be 1 or 3, got {}",
                self.channels
            )));
        }
        let expected = self.frame_bytes();
        for (i, f) in self.frames.iter().enumerate() {
            if f.pixels.len() != expected {
                return Err(Error::input(format!(
                    "frame {i} has {} bytes, expected {expected} ({}x{}x{})",
                    f.pixels.len(),
                    self.width,
                    self.height,
                    self.channels
                )));
            }
            if f.frame_id as usize != i {
                return Err(Error::input(format!(
                    "frame at position {i} carries id {}",
                    f.frame_id
                )));
            }
        }
        Ok(())
    }
}

/// An `n × d` matrix of finite per-frame features, stored row-major.
///
/// When `has_temporal_channel` is set the last coordinate of row `i` equals
/// `temporal_weight · i/(n−1)` (0 for a single frame).
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    n: usize,
    d: usize,
    data: Vec<f32>,
    has_temporal_channel: bool,
    temporal_weight: f32,
}

impl FeatureMatrix {
    /// Builds a matrix without a temporal channel.
    pub fn new(n: usize, d: usize, data: Vec<f32>) -> Result<Self> {
        Self::from_parts(n, d, data, false, 0.0)
    }

    pub fn from_rows<R: AsRef<[f32]>>(rows: &[R]) -> Result<Self> {
        let d = rows.first().map(|r| r.as_ref().len()).unwrap_or(0);
        let mut data = Vec::with_capacity(rows.len() * d);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != d {
                return Err(Error::input(format!(
                    "row {i} has {} coordinates, expected {d}",
                    r.len()
                )));
            }
            data.extend_from_slice(r);
        }
        Self::new(rows.len(), d, data)
    }

    /// Builds a matrix and checks every invariant, including the temporal
    /// channel ramp when the flag is set.
    pub fn from_parts(
        n: usize,
        d: usize,
        data: Vec<f32>,
        has_temporal_channel: bool,
        temporal_weight: f32,
    ) -> Result<Self> {
        if n == 0 {
            return Err(Error::input("feature matrix needs at least one row"));
        }
        if d == 0 {
            return Err(Error::input("feature dimension must be at least 1"));
        }
        if n.checked_mul(d) != Some(data.len()) {
            return Err(Error::input(format!(
                "{} values cannot form a {n}x{d} matrix",
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::input(format!(
                "non-finite feature at row {}, column {}",
                pos / d,
                pos % d
            )));
        }
        if !temporal_weight.is_finite() || temporal_weight < 0.0 {
            return Err(Error::input("temporal weight must be finite and >= 0"));
        }
        if has_temporal_channel {
            for i in 0..n {
                if data[i * d + d - 1] != temporal_coordinate(i, n, temporal_weight) {
                    return Err(Error::input(format!(
                        "row {i} temporal coordinate does not match weight {temporal_weight}"
                    )));
                }
            }
        }
        Ok(FeatureMatrix {
            n,
            d,
            data,
            has_temporal_channel,
            temporal_weight,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn has_temporal_channel(&self) -> bool {
        self.has_temporal_channel
    }

    pub fn temporal_weight(&self) -> f32 {
        self.temporal_weight
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.data[i * self.d..(i + 1) * self.d]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f32]> {
        self.data.chunks_exact(self.d)
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.data
    }

    /// Multiplies every coordinate by `s`. The result carries no temporal
    /// channel flag since the ramp no longer matches the recorded weight.
    pub fn scaled(&self, s: f32) -> Result<Self> {
        Self::new(self.n, self.d, self.data.iter().map(|v| v * s).collect())
    }

    /// Keeps only the listed rows, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> Result<Self> {
        let mut data = Vec::with_capacity(rows.len() * self.d);
        for &r in rows {
            if r >= self.n {
                return Err(Error::input(format!("row {r} out of range (n={})", self.n)));
            }
            data.extend_from_slice(self.row(r));
        }
        Self::new(rows.len(), self.d, data)
    }

    /// Scales each row to unit L2 norm. Zero rows stay zero.
    pub fn l2_normalized(&self) -> Result<Self> {
        let mut data = self.data.clone();
        for row in data.chunks_exact_mut(self.d) {
            let norm = row
                .iter()
                .map(|&v| (v as f64) * (v as f64))
                .sum::<f64>()
                .sqrt();
            if norm > 0.0 {
                for v in row.iter_mut() {
                    *v = (*v as f64 / norm) as f32;
                }
            }
        }
        Self::new(self.n, self.d, data)
    }
}

fn temporal_coordinate(i: usize, n: usize, weight: f32) -> f32 {
    if n <= 1 {
        0.0
    } else {
        (weight as f64 * i as f64 / (n - 1) as f64) as f32
    }
}

/// Rec. 601 luma.
fn luma(r: u8, g: u8, b: u8) -> f64 {
    0.299 * r as f64 + 0.587 * g as f64 + 0.114 * b as f64
}

/// Overlap of pixel `p` with each grid cell along one axis.
///
/// Coordinates are scaled by `grid` so that pixel `p` spans
/// `[p·grid, (p+1)·grid)` and cell `c` spans `[c·len, (c+1)·len)`; every
/// overlap is an exact integer.
fn axis_weights(len: usize, grid: usize) -> Vec<[(usize, u64); 2]> {
    (0..len)
        .map(|p| {
            let lo = p * grid;
            let hi = lo + grid;
            let first = lo / len;
            let mut out = [(first, 0u64), (first, 0u64)];
            let first_end = (first + 1) * len;
            out[0].1 = (hi.min(first_end) - lo) as u64;
            if hi > first_end {
                out[1] = (first + 1, (hi - first_end) as u64);
            }
            out
        })
        .collect()
}

/// Downsamples each frame to a `grid × grid` mosaic of area-weighted cell
/// means, scaled to `[0, 1]`.
///
/// Color frames yield `3·grid²` coordinates ordered cell-major with
/// interleaved channels; `grayscale` collapses them to luma first.
pub fn extract_pixel_features(
    seq: &FrameSequence,
    grid: usize,
    grayscale: bool,
) -> Result<FeatureMatrix> {
    seq.validate()?;
    let (w, h) = (seq.width as usize, seq.height as usize);
    if grid == 0 || grid > w.min(h) {
        return Err(Error::input(format!(
            "grid {grid} must lie in 1..={}",
            w.min(h)
        )));
    }
    let in_ch = seq.channels as usize;
    let out_ch = if grayscale { 1 } else { in_ch };
    let d = grid * grid * out_ch;
    let wx = axis_weights(w, grid);
    let wy = axis_weights(h, grid);
    let norm = (w * h) as f64 * 255.0;

    let extract = |frame: &FramePayload| -> Vec<f32> {
        let mut acc = vec![0.0f64; d];
        let mut row_acc = vec![0.0f64; grid * out_ch];
        for (line, row_weights) in frame.pixels.chunks_exact(w * in_ch).zip(&wy) {
            row_acc.iter_mut().for_each(|v| *v = 0.0);
            for (x, px) in line.chunks_exact(in_ch).enumerate() {
                for &(cx, weight) in &wx[x] {
                    if weight == 0 {
                        continue;
                    }
                    let wt = weight as f64;
                    if grayscale && in_ch == 3 {
                        row_acc[cx] += wt * luma(px[0], px[1], px[2]);
                    } else {
                        for (c, &v) in px.iter().enumerate() {
                            row_acc[cx * out_ch + c] += wt * v as f64;
                        }
                    }
                }
            }
            for &(cy, weight) in row_weights {
                if weight == 0 {
                    continue;
                }
                let wt = weight as f64;
                let base = cy * grid * out_ch;
                for (j, v) in row_acc.iter().enumerate() {
                    acc[base + j] += wt * v;
                }
            }
        }
        acc.into_iter()
            .map(|v| ((v / norm).clamp(0.0, 1.0)) as f32)
            .collect()
    };

    let rows = par::map_collect(&seq.frames, extract);
    let mut data = Vec::with_capacity(seq.len() * d);
    for r in rows {
        data.extend_from_slice(&r);
    }
    FeatureMatrix::new(seq.len(), d, data)
}

/// Appends the normalized frame position, scaled by `weight`, as a new last
/// coordinate.
pub fn append_temporal_channel(f: &FeatureMatrix, weight: f32) -> Result<FeatureMatrix> {
    if f.has_temporal_channel {
        return Err(Error::Precondition(
            "feature matrix already has a temporal channel".into(),
        ));
    }
    if !weight.is_finite() || weight < 0.0 {
        return Err(Error::input(format!(
            "temporal weight must be finite and >= 0, got {weight}"
        )));
    }
    let d = f.d + 1;
    let mut data = Vec::with_capacity(f.n * d);
    for (i, row) in f.rows().enumerate() {
        data.extend_from_slice(row);
        data.push(temporal_coordinate(i, f.n, weight));
    }
    FeatureMatrix::from_parts(f.n, d, data, true, weight)
}
