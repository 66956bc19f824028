//! Selectivity sweep: every method samples the same stream at each budget,
//! then the sampled frames are stored, read back, labelled from ground truth
//! and propagated.

use std::path::PathBuf;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::Args;
use eko_core::storage::{write_store, Codec, CountingSource, StoreHandle};
use eko_core::{
    agglomerate, clustering_from_intervals, evaluate, extract_pixel_features, gop_baseline,
    propagate, render_frames, samples_for_budget, synthesize_stream, uniform_baseline, Clustering,
    Connectivity, FeatureMatrix, FrameSequence, LabelVector, Policy, SampleSet, StreamSpec,
};
use serde::Serialize;

use crate::io;

#[derive(Args)]
pub struct BenchArgs {
    /// Frames to benchmark on; a synthetic stream is generated when omitted.
    #[arg(long, requires = "truth")]
    input: Option<PathBuf>,
    /// Ground truth for --input.
    #[arg(long, requires = "input")]
    truth: Option<PathBuf>,
    /// Cells per side of the pixel grid for --input.
    #[arg(long, default_value_t = 8)]
    grid: usize,
    #[arg(long, default_value_t = 1.0)]
    temporal_weight: f32,
    #[arg(long, default_value = "tight")]
    constraint: Connectivity,
    #[arg(long, value_delimiter = ',', default_value = "0.01,0.001,0.0001")]
    selectivities: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "first,mean,middle")]
    policies: Vec<Policy>,
    #[arg(long, default_value = "raw")]
    codec: Codec,
    /// Synthetic stream length.
    #[arg(long, default_value_t = 100_000)]
    frames: usize,
    #[arg(long, default_value_t = 200)]
    segments: usize,
    #[arg(long, default_value_t = 0.02)]
    rare_rate: f64,
    #[arg(long, default_value_t = 0.1)]
    noise: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// CSV destination; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Serialize)]
struct Row {
    method: &'static str,
    policy: String,
    selectivity: f64,
    precision: String,
    recall: String,
    f1: String,
    wall_ms: String,
    bytes_read: u64,
}

/// Budget for a selectivity: `max(1, round(s·n))`, capped at `n`.
pub fn budget_for(selectivity: f64, n: usize) -> usize {
    ((selectivity * n as f64).round() as usize).clamp(1, n)
}

fn load(a: &BenchArgs) -> Result<(FrameSequence, FeatureMatrix, LabelVector)> {
    if !(a.temporal_weight.is_finite() && a.temporal_weight >= 0.0) {
        bail!("--temporal-weight: must be finite and >= 0");
    }
    let (seq, f, truth) = match (&a.input, &a.truth) {
        (Some(input), Some(t)) => {
            let seq = io::load_frames(input, None)?;
            let f = extract_pixel_features(&seq, a.grid, true).context("--grid")?;
            let truth = io::read_with(t, "--truth", LabelVector::read_text)?;
            if truth.len() != seq.len() {
                bail!("--truth: {} labels for {} frames", truth.len(), seq.len());
            }
            (seq, f, truth)
        }
        _ => {
            let spec = StreamSpec::new(a.seed, a.frames, a.segments, a.rare_rate, a.noise);
            let (f, truth) = synthesize_stream(&spec).context("synthetic stream parameters")?;
            let seq = render_frames(&f, 4, 25.0)?;
            (seq, f, truth)
        }
    };
    let f = if a.temporal_weight > 0.0 {
        eko_core::append_temporal_channel(&f, a.temporal_weight).context("--temporal-weight")?
    } else {
        f
    };
    Ok((seq, f, truth))
}

/// Stores the samples, then times opening the store, decoding every sample,
/// labelling it and propagating.
fn measure(
    seq: &FrameSequence,
    s: &SampleSet,
    cl: &Clustering,
    truth: &LabelVector,
    codec: Codec,
) -> Result<(eko_core::Metrics, f64, u64)> {
    let mut bytes = Vec::new();
    write_store(seq, s, cl, codec, &mut bytes)?;
    let t = Instant::now();
    let store = StoreHandle::open(CountingSource::new(bytes))?;
    let ids = store.frame_ids();
    store.read_frames(&ids)?;
    let pred = propagate(s, cl, &truth.at(&ids)?)?;
    let wall_ms = t.elapsed().as_secs_f64() * 1e3;
    let m = evaluate(&pred, truth)?;
    Ok((m, wall_ms, store.source().bytes_read()))
}

pub fn run(a: BenchArgs) -> Result<()> {
    if let Some(&s) = a.selectivities.iter().find(|&&s| !(s > 0.0 && s <= 1.0)) {
        bail!("--selectivities: {s} outside (0, 1]");
    }
    let (seq, f, truth) = load(&a)?;
    let n = f.n();
    let d = agglomerate(&f, a.constraint).context("--constraint")?;

    let mut rows = Vec::new();
    let mut push = |method, policy: String, sel, r: (eko_core::Metrics, f64, u64)| {
        let (m, wall_ms, bytes_read) = r;
        rows.push(Row {
            method,
            policy,
            selectivity: sel,
            precision: format!("{:.6}", m.precision),
            recall: format!("{:.6}", m.recall),
            f1: format!("{:.6}", m.f1),
            wall_ms: format!("{wall_ms:.3}"),
            bytes_read,
        });
    };
    for &sel in &a.selectivities {
        let budget = budget_for(sel, n);
        for &p in &a.policies {
            let (s, cl) = samples_for_budget(&d, &f, budget.max(d.min_clusters()), p)?;
            push(
                "eko",
                p.to_string(),
                sel,
                measure(&seq, &s, &cl, &truth, a.codec)?,
            );
        }
        let s = uniform_baseline(n, budget)?;
        let cl = clustering_from_intervals(n, &s)?;
        push(
            "uniform",
            "-".into(),
            sel,
            measure(&seq, &s, &cl, &truth, a.codec)?,
        );
        let s = gop_baseline(n, n.div_ceil(budget))?;
        let cl = clustering_from_intervals(n, &s)?;
        push(
            "gop",
            "-".into(),
            sel,
            measure(&seq, &s, &cl, &truth, a.codec)?,
        );
    }

    let sink: Box<dyn std::io::Write> = match &a.out {
        Some(p) => {
            Box::new(std::fs::File::create(p).with_context(|| format!("--out {}", p.display()))?)
        }
        None => Box::new(std::io::stdout()),
    };
    let mut w = csv::Writer::from_writer(sink);
    for r in &rows {
        w.serialize(r).context("--out")?;
    }
    w.flush().context("--out")?;
    Ok(())
}
