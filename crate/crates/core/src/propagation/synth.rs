//! Seeded synthetic streams: piecewise-constant content with rare labelled
//! segments, standing in for detector-labelled footage.

use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::LabelVector;
use crate::error::{Error, Result};
use crate::features::{FeatureMatrix, FramePayload, FrameSequence};

/// Parameters of a synthetic stream.
#[derive(Debug, Clone, PartialEq)]
pub struct StreamSpec {
    pub seed: u64,
    pub n: usize,
    pub segments: usize,
    /// Target fraction of frames labelled 1.
    pub rare_event_rate: f64,
    /// Standard deviation of per-coordinate Gaussian noise.
    pub noise_sigma: f64,
    /// Feature dimension.
    pub dim: usize,
}

impl StreamSpec {
    pub const DEFAULT_DIM: usize = 16;

    pub fn new(
        seed: u64,
        n: usize,
        segments: usize,
        rare_event_rate: f64,
        noise_sigma: f64,
    ) -> Self {
        StreamSpec {
            seed,
            n,
            segments,
            rare_event_rate,
            noise_sigma,
            dim: Self::DEFAULT_DIM,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.segments == 0 || self.segments > self.n {
            return Err(Error::input(format!(
                "need 1 <= segments <= n, got segments={} n={}",
                self.segments, self.n
            )));
        }
        if !(0.0..=1.0).contains(&self.rare_event_rate) {
            return Err(Error::input(format!(
                "rare_event_rate {} outside [0, 1]",
                self.rare_event_rate
            )));
        }
        if !self.noise_sigma.is_finite() || self.noise_sigma < 0.0 {
            return Err(Error::input(format!(
                "noise_sigma {} must be finite and >= 0",
                self.noise_sigma
            )));
        }
        if self.dim == 0 {
            return Err(Error::input("dim must be at least 1"));
        }
        Ok(())
    }

    /// First frame of every segment, ascending, starting with 0.
    pub fn segment_starts(&self) -> Result<Vec<usize>> {
        self.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        Ok(draw_starts(&mut rng, self.n, self.segments))
    }
}

fn draw_starts(rng: &mut ChaCha8Rng, n: usize, segments: usize) -> Vec<usize> {
    let mut starts: Vec<usize> = index::sample(rng, n - 1, segments - 1)
        .into_iter()
        .map(|i| i + 1)
        .collect();
    starts.push(0);
    starts.sort_unstable();
    starts
}

/// Generates features and ground truth for `spec`.
///
/// Segment boundaries are uniform random cut points. Each segment gets its
/// own uniformly random state vector in `[0, 1]^dim`; frames are that state
/// plus noise. Segments are visited in random order and marked positive
/// while the positive frame count stays below `rare_event_rate · n`, so
/// label changes always coincide with content changes.
pub fn synthesize_stream(spec: &StreamSpec) -> Result<(FeatureMatrix, LabelVector)> {
    spec.validate()?;
    let StreamSpec {
        n, segments, dim, ..
    } = *spec;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let starts = draw_starts(&mut rng, n, segments);
    let len = |s: usize| starts.get(s + 1).copied().unwrap_or(n) - starts[s];

    let target = spec.rare_event_rate * n as f64;
    let mut rare = vec![false; segments];
    if target > 0.0 {
        let mut order: Vec<usize> = (0..segments).collect();
        order.shuffle(&mut rng);
        let mut covered = 0usize;
        for &s in &order {
            if covered as f64 >= target {
                break;
            }
            // do not overshoot the target by more than a quarter
            if (covered + len(s)) as f64 <= target * 1.25 {
                rare[s] = true;
                covered += len(s);
            }
        }
        if covered == 0 {
            let shortest = (0..segments).min_by_key(|&s| (len(s), s)).unwrap();
            rare[shortest] = true;
        }
    }

    let states: Vec<Vec<f64>> = (0..segments)
        .map(|_| (0..dim).map(|_| rng.random::<f64>()).collect())
        .collect();
    let noise = Normal::new(0.0, spec.noise_sigma).expect("sigma validated");
    let mut data = Vec::with_capacity(n * dim);
    let mut truth = Vec::with_capacity(n);
    for s in 0..segments {
        for _ in 0..len(s) {
            for &v in &states[s] {
                let jitter = if spec.noise_sigma > 0.0 {
                    noise.sample(&mut rng)
                } else {
                    0.0
                };
                data.push((v + jitter) as f32);
            }
            truth.push(rare[s] as u8);
        }
    }
    Ok((FeatureMatrix::new(n, dim, data)?, LabelVector::new(truth)?))
}

/// Paints each feature row as a grayscale mosaic: the first `g²`
/// coordinates (`g = ⌊√d⌋`) become `g × g` cells of `cell` pixels each,
/// clamped to `[0, 1]` and scaled to bytes.
pub fn render_frames(f: &FeatureMatrix, cell: u32, fps: f64) -> Result<FrameSequence> {
    if cell == 0 {
        return Err(Error::input("cell size must be at least 1"));
    }
    let g = (f.d() as f64).sqrt().floor() as usize;
    let side = g * cell as usize;
    let frames = f
        .rows()
        .enumerate()
        .map(|(i, row)| {
            let mut pixels = vec![0u8; side * side];
            for y in 0..side {
                for x in 0..side {
                    let v = row[(y / cell as usize) * g + x / cell as usize];
                    pixels[y * side + x] = (v.clamp(0.0, 1.0) * 255.0).round() as u8;
                }
            }
            FramePayload {
                frame_id: i as u32,
                pixels,
            }
        })
        .collect();
    Ok(FrameSequence {
        frames,
        width: side as u32,
        height: side as u32,
        channels: 1,
        frame_rate: fps,
    })
}
