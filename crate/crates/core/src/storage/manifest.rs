//! Keyframe manifests for external transcoders.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::sampler::SampleSet;

const KIND: &str = "keyframe manifest";

/// Sampled frame indices that an external encoder should force to be
/// intra-coded.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeyframeManifest {
    pub n_total: usize,
    pub frames: Vec<u32>,
    /// Source video the indices refer to; may be empty.
    pub source: String,
}

/// Builds a manifest from a nonempty sample set over `n` frames.
pub fn emit_manifest(s: &SampleSet, n: usize, source: &str) -> Result<KeyframeManifest> {
    if s.is_empty() {
        return Err(Error::input("cannot emit a manifest without keyframes"));
    }
    let frames = s.frame_ids();
    validate(n, &frames)?;
    if source.chars().any(char::is_whitespace) {
        return Err(Error::input("manifest source must not contain whitespace"));
    }
    Ok(KeyframeManifest {
        n_total: n,
        frames,
        source: source.to_string(),
    })
}

fn validate(n: usize, frames: &[u32]) -> Result<()> {
    for (i, &f) in frames.iter().enumerate() {
        if f as usize >= n {
            return Err(Error::input(format!("keyframe {f} beyond {n} frames")));
        }
        if i > 0 && f <= frames[i - 1] {
            return Err(Error::input("keyframe indices must strictly increase"));
        }
    }
    Ok(())
}

fn check_fps(fps: f64) -> Result<()> {
    if !(fps.is_finite() && fps > 0.0) {
        return Err(Error::input(format!("fps must be positive, got {fps}")));
    }
    Ok(())
}

impl KeyframeManifest {
    /// Header `n=<n> fps=<fps>` (plus ` source=<id>` when a source is
    /// set), then one frame index per line.
    pub fn write_text<W: Write>(&self, fps: f64, mut w: W) -> Result<()> {
        check_fps(fps)?;
        write!(w, "n={} fps={}", self.n_total, fps)?;
        if !self.source.is_empty() {
            write!(w, " source={}", self.source)?;
        }
        writeln!(w)?;
        for f in &self.frames {
            writeln!(w, "{f}")?;
        }
        w.flush()?;
        Ok(())
    }

    /// Returns the manifest and the frame rate recorded in its header.
    pub fn read_text<R: BufRead>(r: R) -> Result<(Self, f64)> {
        let mut lines = r.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::format(KIND, "empty file"))??;
        let (mut n, mut fps, mut source) = (None, None, String::new());
        for tok in header.split_whitespace() {
            match tok.split_once('=') {
                Some(("n", v)) => n = v.parse::<usize>().ok(),
                Some(("fps", v)) => fps = v.parse::<f64>().ok(),
                Some(("source", v)) => source = v.to_string(),
                _ => return Err(Error::format(KIND, format!("unexpected token {tok:?}"))),
            }
        }
        let n = n.ok_or_else(|| Error::format(KIND, "header lacks a valid n"))?;
        let fps = fps.ok_or_else(|| Error::format(KIND, "header lacks a valid fps"))?;
        check_fps(fps).map_err(|e| Error::format(KIND, e.to_string()))?;
        let mut frames = Vec::new();
        for (i, line) in lines.enumerate() {
            let line = line?;
            let t = line.trim();
            if t.is_empty() {
                continue;
            }
            frames.push(
                t.parse::<u32>()
                    .map_err(|_| Error::format(KIND, format!("line {}: {t:?}", i + 2)))?,
            );
        }
        validate(n, &frames).map_err(|e| Error::format(KIND, e.to_string()))?;
        Ok((
            KeyframeManifest {
                n_total: n,
                frames,
                source,
            },
            fps,
        ))
    }

    /// Comma-separated keyframe timestamps in seconds, six decimals each.
    pub fn timestamps(&self, fps: f64) -> Result<String> {
        check_fps(fps)?;
        Ok(self
            .frames
            .iter()
            .map(|&f| format!("{:.6}", f as f64 / fps))
            .collect::<Vec<_>>()
            .join(","))
    }
}

/// `ffmpeg -i <src> -force_key_frames <T> <dst> -y`, with `T` from
/// [`KeyframeManifest::timestamps`]. The manifest's source is the input;
/// an empty source renders as `src`.
pub fn render_transcode_args(m: &KeyframeManifest, fps: f64, dst: &str) -> Result<String> {
    let t = m.timestamps(fps)?;
    let src = if m.source.is_empty() {
        "src"
    } else {
        &m.source
    };
    Ok(format!("ffmpeg -i {src} -force_key_frames {t} {dst} -y"))
}
