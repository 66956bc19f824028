//! File helpers that tag every failure with the flag that named the file.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use eko_core::FrameSequence;

pub fn meta_path(p: &Path) -> PathBuf {
    let mut s = p.as_os_str().to_owned();
    s.push(".meta");
    PathBuf::from(s)
}

/// A directory of numbered images or a raw stream with a `.meta` sidecar.
/// `fps` overrides the stream's own rate.
pub fn load_frames(path: &Path, fps: Option<f64>) -> Result<FrameSequence> {
    let ctx = || format!("--input {}", path.display());
    if let Some(r) = fps {
        if !(r.is_finite() && r > 0.0) {
            bail!("--fps: must be positive, got {r}");
        }
    }
    let mut seq = if path.is_dir() {
        eko_core::features::load_frame_dir(path, fps.unwrap_or(25.0)).with_context(ctx)?
    } else {
        eko_core::features::load_raw_stream(path).with_context(ctx)?
    };
    if let Some(r) = fps {
        seq.frame_rate = r;
    }
    Ok(seq)
}

pub fn read_with<T>(
    path: &Path,
    flag: &str,
    parse: impl FnOnce(BufReader<File>) -> eko_core::Result<T>,
) -> Result<T> {
    let ctx = || format!("{flag} {}", path.display());
    let file = File::open(path).with_context(ctx)?;
    parse(BufReader::new(file)).with_context(ctx)
}

pub fn write_with(
    path: &Path,
    flag: &str,
    emit: impl FnOnce(&mut BufWriter<File>) -> eko_core::Result<()>,
) -> Result<()> {
    let ctx = || format!("{flag} {}", path.display());
    let mut w = BufWriter::new(File::create(path).with_context(ctx)?);
    emit(&mut w).with_context(ctx)?;
    w.flush().with_context(ctx)
}

/// `frame_id,label` lines, labels 0 or 1.
pub fn read_sample_labels(path: &Path) -> Result<BTreeMap<u32, u8>> {
    let ctx = || format!("--sample-labels {}", path.display());
    let file = File::open(path).with_context(ctx)?;
    let mut out = BTreeMap::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.with_context(ctx)?;
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        let parsed = t
            .split_once(',')
            .and_then(|(f, l)| Some((f.trim().parse::<u32>().ok()?, l.trim().parse::<u8>().ok()?)))
            .filter(|&(_, l)| l <= 1);
        let Some((frame, label)) = parsed else {
            bail!(
                "--sample-labels {}: line {}: expected frame_id,0|1",
                path.display(),
                i + 1
            );
        };
        if out.insert(frame, label).is_some() {
            bail!(
                "--sample-labels {}: frame {frame} listed twice",
                path.display()
            );
        }
    }
    Ok(out)
}
