//! Frame input: raw interleaved streams with a `key=value` sidecar, or a
//! directory of numbered image files.

use std::fs;
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use super::{FramePayload, FrameSequence};
use crate::error::{Error, Result};

const META_KIND: &str = "stream metadata";

/// Sidecar describing a raw frame stream.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StreamMeta {
    pub width: u32,
    pub height: u32,
    pub channels: u8,
    pub count: u32,
    pub fps: f64,
}

impl StreamMeta {
    pub fn of(seq: &FrameSequence) -> Self {
        StreamMeta {
            width: seq.width,
            height: seq.height,
            channels: seq.channels,
            count: seq.len() as u32,
            fps: seq.frame_rate,
        }
    }

    pub fn frame_bytes(&self) -> usize {
        self.width as usize * self.height as usize * self.channels as usize
    }

    pub fn to_text(&self) -> String {
        format!(
            "width={}\nheight={}\nchannels={}\ncount={}\nfps={}\n",
            self.width, self.height, self.channels, self.count, self.fps
        )
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut width = None;
        let mut height = None;
        let mut channels = None;
        let mut count = None;
        let mut fps = 25.0;
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::format(
                    META_KIND,
                    format!("line {}: expected key=value", lineno + 1),
                )
            })?;
            let bad = |k: &str| Error::format(META_KIND, format!("bad value for {k}: {value}"));
            match key.trim() {
                "width" => width = Some(value.trim().parse().map_err(|_| bad("width"))?),
                "height" => height = Some(value.trim().parse().map_err(|_| bad("height"))?),
                "channels" => channels = Some(value.trim().parse().map_err(|_| bad("channels"))?),
                "count" => count = Some(value.trim().parse().map_err(|_| bad("count"))?),
                "fps" => fps = value.trim().parse().map_err(|_| bad("fps"))?,
                other => {
                    return Err(Error::format(META_KIND, format!("unknown key {other}")));
                }
            }
        }
        let missing = |k: &str| Error::format(META_KIND, format!("missing {k}"));
        Ok(StreamMeta {
            width: width.ok_or_else(|| missing("width"))?,
            height: height.ok_or_else(|| missing("height"))?,
            channels: channels.ok_or_else(|| missing("channels"))?,
            count: count.ok_or_else(|| missing("count"))?,
            fps,
        })
    }
}

fn meta_path(stream: &Path) -> PathBuf {
    let mut p = stream.as_os_str().to_owned();
    p.push(".meta");
    PathBuf::from(p)
}

pub fn read_stream_meta(path: impl AsRef<Path>) -> Result<StreamMeta> {
    StreamMeta::parse(&fs::read_to_string(path)?)
}

/// Loads `path` as back-to-back frames described by `path.meta`.
pub fn load_raw_stream(path: impl AsRef<Path>) -> Result<FrameSequence> {
    let path = path.as_ref();
    let meta = read_stream_meta(meta_path(path))?;
    let frame_bytes = meta.frame_bytes();
    let mut file = fs::File::open(path)?;
    let expected = frame_bytes as u64 * meta.count as u64;
    let actual = file.metadata()?.len();
    if actual != expected {
        return Err(Error::input(format!(
            "{} holds {actual} bytes but metadata declares {expected}",
            path.display()
        )));
    }
    let mut frames = Vec::with_capacity(meta.count as usize);
    for frame_id in 0..meta.count {
        let mut pixels = vec![0u8; frame_bytes];
        file.read_exact(&mut pixels)?;
        frames.push(FramePayload { frame_id, pixels });
    }
    let seq = FrameSequence {
        frames,
        width: meta.width,
        height: meta.height,
        channels: meta.channels,
        frame_rate: meta.fps,
    };
    seq.validate()?;
    Ok(seq)
}

/// Writes a sequence as a raw stream plus its `.meta` sidecar.
pub fn write_raw_stream(seq: &FrameSequence, path: impl AsRef<Path>) -> Result<()> {
    seq.validate()?;
    let path = path.as_ref();
    let mut out = BufWriter::new(fs::File::create(path)?);
    for f in &seq.frames {
        out.write_all(&f.pixels)?;
    }
    out.flush()?;
    fs::write(meta_path(path), StreamMeta::of(seq).to_text())?;
    Ok(())
}

/// The numeric run in a file stem, used to order `frame_0001.png`-style names.
#[cfg(feature = "images")]
fn frame_number(path: &Path) -> Option<u64> {
    let stem = path.file_stem()?.to_str()?;
    let digits: String = stem
        .chars()
        .rev()
        .skip_while(|c| !c.is_ascii_digit())
        .take_while(|c| c.is_ascii_digit())
        .collect::<Vec<_>>()
        .into_iter()
        .rev()
        .collect();
    digits.parse().ok()
}

/// Loads every numbered image in `dir`, ordered by number, as RGB frames.
#[cfg(feature = "images")]
pub fn load_frame_dir(dir: impl AsRef<Path>, fps: f64) -> Result<FrameSequence> {
    let dir = dir.as_ref();
    let mut files: Vec<(u64, PathBuf)> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file())
        .filter_map(|p| frame_number(&p).map(|n| (n, p)))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(Error::input(format!(
            "{} contains no numbered image files",
            dir.display()
        )));
    }
    let mut frames = Vec::with_capacity(files.len());
    let mut dims = None;
    for (i, (_, p)) in files.iter().enumerate() {
        let img = image::open(p)
            .map_err(|e| Error::input(format!("{}: {e}", p.display())))?
            .to_rgb8();
        let this = img.dimensions();
        match dims {
            None => dims = Some(this),
            Some(first) if first != this => {
                return Err(Error::input(format!(
                    "{} is {}x{}, earlier frames are {}x{}",
                    p.display(),
                    this.0,
                    this.1,
                    first.0,
                    first.1
                )));
            }
            _ => {}
        }
        frames.push(FramePayload {
            frame_id: i as u32,
            pixels: img.into_raw(),
        });
    }
    let (width, height) = dims.unwrap();
    Ok(FrameSequence {
        frames,
        width,
        height,
        channels: 3,
        frame_rate: fps,
    })
}

#[cfg(not(feature = "images"))]
pub fn load_frame_dir(dir: impl AsRef<Path>, _fps: f64) -> Result<FrameSequence> {
    Err(Error::input(format!(
        "{}: image directory input needs the `images` feature",
        dir.as_ref().display()
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn meta_parse_and_errors() {
        let m = StreamMeta::parse("width=4\nheight=2\nchannels=1\ncount=3\n").unwrap();
        assert_eq!((m.width, m.height, m.channels, m.count), (4, 2, 1, 3));
        assert_eq!(m.fps, 25.0);
        assert_eq!(StreamMeta::parse(&m.to_text()).unwrap(), m);
        assert!(StreamMeta::parse("width=4\nheight=2\nchannels=1\n").is_err());
        assert!(StreamMeta::parse("width=x\nheight=2\nchannels=1\ncount=1").is_err());
        assert!(StreamMeta::parse("depth=3").is_err());
    }

    #[test]
    fn raw_stream_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("clip.raw");
        let seq = FrameSequence {
            frames: (0..3)
                .map(|i| FramePayload {
                    frame_id: i,
                    pixels: vec![i as u8 * 10; 8],
                })
                .collect(),
            width: 4,
            height: 2,
            channels: 1,
            frame_rate: 30.0,
        };
        write_raw_stream(&seq, &path).unwrap();
        assert_eq!(load_raw_stream(&path).unwrap(), seq);

        fs::write(&path, [0u8; 5]).unwrap();
        assert!(load_raw_stream(&path).is_err());
    }

    #[cfg(feature = "images")]
    #[test]
    fn frame_numbers() {
        assert_eq!(frame_number(Path::new("frame_0012.png")), Some(12));
        assert_eq!(frame_number(Path::new("7.jpg")), Some(7));
        assert_eq!(frame_number(Path::new("cover.png")), None);
    }

    #[cfg(feature = "images")]
    #[test]
    fn image_directory_in_numeric_order() {
        let dir = tempfile::tempdir().unwrap();
        for (i, v) in [(10u32, 200u8), (2, 100)] {
            let img = image::RgbImage::from_pixel(3, 2, image::Rgb([v, v, v]));
            img.save(dir.path().join(format!("f{i}.png"))).unwrap();
        }
        fs::write(dir.path().join("notes.txt"), "x").unwrap();
        let seq = load_frame_dir(dir.path(), 25.0).unwrap();
        assert_eq!(seq.len(), 2);
        assert_eq!((seq.width, seq.height, seq.channels), (3, 2, 3));
        assert_eq!(seq.frames[0].pixels[0], 100);
        assert_eq!(seq.frames[1].pixels[0], 200);
    }
}
