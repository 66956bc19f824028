//! `eko`: the offline sampling pipeline, online label propagation and the
//! selectivity benchmark, one subcommand per stage.

mod bench;
mod io;

use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use eko_core::clustering::{load_dendrogram, save_dendrogram};
use eko_core::storage::{
    emit_manifest, encode_store, render_transcode_args, write_label_sidecar, ByteSource, Codec,
    CountingSource, LabelSidecar, StoreHandle,
};
use eko_core::{
    agglomerate, append_temporal_channel, cluster_stats, clustering_from_intervals, default_k_grid,
    extract_pixel_features, gop_baseline, load_feature_file, optimal_k, propagate, render_frames,
    samples_for_budget, synthesize_stream, write_feature_file, Clustering, Connectivity,
    Dendrogram, FeatureMatrix, FramePayload, FrameSequence, LabelVector, Policy, SampleSet,
    StreamSpec,
};

#[derive(Parser)]
#[command(
    name = "eko",
    version,
    about = "Adaptive keyframe sampling for video analytics"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic frame stream with ground-truth labels.
    Synth(SynthArgs),
    /// Build a feature file from frames or from external features.
    Extract(ExtractArgs),
    /// Cluster a feature file into a dendrogram.
    Cluster(ClusterArgs),
    /// Cut a dendrogram and pick one frame per cluster.
    Sample(SampleArgs),
    /// Write the sampled frames into a keyframe store.
    Encode(EncodeArgs),
    /// Read frames back out of a keyframe store.
    Decode(DecodeArgs),
    /// Spread sample labels to every frame of their cluster.
    Propagate(PropagateArgs),
    /// Score predicted labels against ground truth.
    Evaluate(EvaluateArgs),
    /// Cluster size statistics.
    Stats(StatsArgs),
    /// Run extract, cluster, sample and encode in one go.
    Pipeline(PipelineArgs),
    /// Compare sampling methods across selectivities.
    Bench(bench::BenchArgs),
}

#[derive(Args)]
struct SynthArgs {
    /// Output directory; receives frames.raw, frames.raw.meta and truth.txt.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 10_000)]
    frames: usize,
    #[arg(long, default_value_t = 50)]
    segments: usize,
    /// Target fraction of positive frames.
    #[arg(long, default_value_t = 0.02)]
    rare_rate: f64,
    #[arg(long, default_value_t = 0.1)]
    noise: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Pixels per mosaic cell edge.
    #[arg(long, default_value_t = 4)]
    cell: u32,
    #[arg(long, default_value_t = 25.0)]
    fps: f64,
}

#[derive(Args, Clone)]
struct FeatureOpts {
    /// Cells per side of the pixel grid.
    #[arg(long, default_value_t = 8, conflicts_with = "features")]
    grid: usize,
    /// Keep RGB channels instead of converting to luma.
    #[arg(long, conflicts_with = "features")]
    color: bool,
    /// Weight of the appended frame-position channel; 0 disables it.
    #[arg(long, default_value_t = 1.0)]
    temporal_weight: f32,
    /// Scale every row to unit length before the temporal channel is added.
    #[arg(long)]
    normalize: bool,
}

#[derive(Args)]
struct ExtractArgs {
    /// Raw stream (with a .meta sidecar) or a directory of numbered images.
    #[arg(
        long,
        required_unless_present = "features",
        conflicts_with = "features"
    )]
    input: Option<PathBuf>,
    /// External feature file to prepare instead of extracting from pixels.
    #[arg(long)]
    features: Option<PathBuf>,
    #[command(flatten)]
    opts: FeatureOpts,
    /// Frame rate for image directories.
    #[arg(long)]
    fps: Option<f64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ClusterArgs {
    #[arg(long)]
    features: PathBuf,
    /// tight, medium, loose or span:N.
    #[arg(long, default_value = "tight")]
    constraint: Connectivity,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Clone)]
#[group(required = true, multiple = false, id = "budget_source")]
struct BudgetOpts {
    /// Number of frames to sample.
    #[arg(long)]
    budget: Option<usize>,
    /// Pick the cluster count by silhouette score.
    #[arg(long)]
    auto_k: bool,
}

#[derive(Args, Clone)]
struct AutoKOpts {
    /// Candidate cluster counts for --auto-k.
    #[arg(long, value_delimiter = ',', requires = "auto_k")]
    k_grid: Option<Vec<usize>>,
    /// Frames used to score each candidate.
    #[arg(long, default_value_t = 5000)]
    subsample_cap: usize,
}

#[derive(Args)]
struct SampleArgs {
    #[arg(long)]
    features: PathBuf,
    #[arg(long)]
    dendrogram: PathBuf,
    #[command(flatten)]
    budget: BudgetOpts,
    #[command(flatten)]
    auto_k: AutoKOpts,
    #[arg(long, default_value = "middle")]
    policy: Policy,
    /// Sample list.
    #[arg(long)]
    out: PathBuf,
    /// Cluster run table for propagation.
    #[arg(long)]
    sidecar: PathBuf,
}

#[derive(Args)]
struct EncodeArgs {
    /// Frames the samples refer to.
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    samples: PathBuf,
    #[arg(long)]
    sidecar: PathBuf,
    #[arg(long, default_value = "raw")]
    codec: Codec,
    /// Store path; geometry goes to `<out>.meta`.
    #[arg(long)]
    out: PathBuf,
    /// Also write a keyframe manifest for an external transcoder.
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Source video named in the manifest.
    #[arg(long, default_value = "")]
    source: String,
    /// Frame rate; defaults to the input's.
    #[arg(long)]
    fps: Option<f64>,
}

#[derive(Args)]
struct DecodeArgs {
    #[arg(long)]
    input: PathBuf,
    /// Frame ids to read; all stored frames when omitted.
    #[arg(long, value_delimiter = ',')]
    frames: Option<Vec<u32>>,
    /// Read through a memory map instead of positioned reads.
    #[arg(long)]
    mmap: bool,
    /// Raw stream of the decoded frames; ids go to `<out>.ids`.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
#[group(id = "label_source", required = true, multiple = false)]
struct LabelSource {
    /// Ground truth to read the sampled frames' labels from.
    #[arg(long)]
    truth: Option<PathBuf>,
    /// `frame_id,label` lines for the sampled frames.
    #[arg(long)]
    sample_labels: Option<PathBuf>,
}

#[derive(Args)]
struct PropagateArgs {
    #[arg(long)]
    samples: PathBuf,
    #[arg(long)]
    sidecar: PathBuf,
    #[command(flatten)]
    labels: LabelSource,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    pred: PathBuf,
    #[arg(long)]
    truth: PathBuf,
}

#[derive(Args)]
struct StatsArgs {
    /// Cluster run table.
    #[arg(long, required_unless_present = "gop", conflicts_with = "gop")]
    sidecar: Option<PathBuf>,
    /// Fixed-size intervals of this many frames instead.
    #[arg(long, requires = "frames")]
    gop: Option<usize>,
    /// Stream length for --gop.
    #[arg(long)]
    frames: Option<usize>,
}

#[derive(Args)]
struct PipelineArgs {
    /// Frames to extract features from and to encode.
    #[arg(long, required_unless_present = "features")]
    input: Option<PathBuf>,
    /// External features to use instead of the pixel grid.
    #[arg(long)]
    features: Option<PathBuf>,
    #[command(flatten)]
    opts: FeatureOpts,
    #[arg(long, default_value = "tight")]
    constraint: Connectivity,
    #[command(flatten)]
    budget: BudgetOpts,
    #[command(flatten)]
    auto_k: AutoKOpts,
    #[arg(long, default_value = "middle")]
    policy: Policy,
    #[arg(long, default_value = "raw")]
    codec: Codec,
    #[arg(long)]
    fps: Option<f64>,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = configure_threads().and_then(|_| run(cli.command)) {
        eprintln!("eko: {e:#}");
        std::process::exit(1);
    }
}

fn configure_threads() -> Result<()> {
    let Ok(v) = std::env::var("EKO_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .with_context(|| format!("EKO_THREADS: expected a positive integer, got {v:?}"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .context("EKO_THREADS: could not size the worker pool")
}

fn run(cmd: Command) -> Result<()> {
    match cmd {
        Command::Synth(a) => cmd_synth(a),
        Command::Extract(a) => cmd_extract(a),
        Command::Cluster(a) => cmd_cluster(a),
        Command::Sample(a) => cmd_sample(a),
        Command::Encode(a) => cmd_encode(a),
        Command::Decode(a) => cmd_decode(a),
        Command::Propagate(a) => cmd_propagate(a),
        Command::Evaluate(a) => cmd_evaluate(a),
        Command::Stats(a) => cmd_stats(a),
        Command::Pipeline(a) => cmd_pipeline(a),
        Command::Bench(a) => bench::run(a),
    }
}

fn cmd_synth(a: SynthArgs) -> Result<()> {
    let spec = StreamSpec::new(a.seed, a.frames, a.segments, a.rare_rate, a.noise);
    let (f, truth) = synthesize_stream(&spec).context("synthetic stream parameters")?;
    let seq = render_frames(&f, a.cell, a.fps).context("--cell")?;
    std::fs::create_dir_all(&a.out).with_context(|| format!("--out {}", a.out.display()))?;
    let frames = a.out.join("frames.raw");
    eko_core::features::write_raw_stream(&seq, &frames)
        .with_context(|| format!("--out {}", frames.display()))?;
    let truth_path = a.out.join("truth.txt");
    io::write_with(&truth_path, "--out", |w| truth.write_text(w))?;
    println!(
        "frames={} positives={} size={}x{}",
        truth.len(),
        truth.positives(),
        seq.width,
        seq.height
    );
    Ok(())
}

/// Applies normalization and the temporal channel to `f`.
fn prepare_features(f: FeatureMatrix, opts: &FeatureOpts) -> Result<FeatureMatrix> {
    if !(opts.temporal_weight.is_finite() && opts.temporal_weight >= 0.0) {
        bail!(
            "--temporal-weight: must be finite and >= 0, got {}",
            opts.temporal_weight
        );
    }
    let f = if opts.normalize {
        f.l2_normalized().context("--normalize")?
    } else {
        f
    };
    if opts.temporal_weight == 0.0 {
        return Ok(f);
    }
    if f.has_temporal_channel() {
        bail!("--temporal-weight: features already carry a temporal channel; pass 0 to keep it");
    }
    append_temporal_channel(&f, opts.temporal_weight).context("--temporal-weight")
}

fn features_from(
    input: Option<&Path>,
    features: Option<&Path>,
    opts: &FeatureOpts,
    fps: Option<f64>,
) -> Result<FeatureMatrix> {
    let raw = match (features, input) {
        (Some(p), _) => {
            load_feature_file(p).with_context(|| format!("--features {}", p.display()))?
        }
        (None, Some(p)) => {
            let seq = io::load_frames(p, fps)?;
            extract_pixel_features(&seq, opts.grid, !opts.color).context("--grid")?
        }
        (None, None) => bail!("--input or --features is required"),
    };
    prepare_features(raw, opts)
}

fn cmd_extract(a: ExtractArgs) -> Result<()> {
    let f = features_from(a.input.as_deref(), a.features.as_deref(), &a.opts, a.fps)?;
    write_feature_file(&f, &a.out).with_context(|| format!("--out {}", a.out.display()))?;
    println!(
        "n={} d={} temporal={}",
        f.n(),
        f.d(),
        f.has_temporal_channel()
    );
    Ok(())
}

fn cmd_cluster(a: ClusterArgs) -> Result<()> {
    let f = load_feature_file(&a.features)
        .with_context(|| format!("--features {}", a.features.display()))?;
    let d = agglomerate(&f, a.constraint).context("--constraint")?;
    save_dendrogram(&d, &a.out).with_context(|| format!("--out {}", a.out.display()))?;
    println!(
        "n={} merges={} constraint={}",
        d.n(),
        d.merges().len(),
        a.constraint
    );
    Ok(())
}

/// Resolves the budget flags to a cluster count and samples the dendrogram.
fn sample_dendrogram(
    d: &Dendrogram,
    f: &FeatureMatrix,
    budget: &BudgetOpts,
    auto_k: &AutoKOpts,
    policy: Policy,
) -> Result<(SampleSet, Clustering)> {
    if d.n() != f.n() {
        bail!(
            "--features: {} rows but the dendrogram has {} leaves",
            f.n(),
            d.n()
        );
    }
    let (k, flag) = match budget.budget {
        Some(m) => (m, "--budget"),
        None => {
            let grid = auto_k
                .k_grid
                .clone()
                .unwrap_or_else(|| default_k_grid(f.n()));
            let k = optimal_k(f, d, &grid, auto_k.subsample_cap).context("--k-grid")?;
            // a loose constraint can leave more components than the best k
            (k.max(d.min_clusters()), "--auto-k")
        }
    };
    samples_for_budget(d, f, k, policy).context(flag)
}

fn cmd_sample(a: SampleArgs) -> Result<()> {
    let f = load_feature_file(&a.features)
        .with_context(|| format!("--features {}", a.features.display()))?;
    let d = load_dendrogram(&a.dendrogram)
        .with_context(|| format!("--dendrogram {}", a.dendrogram.display()))?;
    let (s, cl) = sample_dendrogram(&d, &f, &a.budget, &a.auto_k, a.policy)?;
    io::write_with(&a.out, "--out", |w| s.write_text(w))?;
    write_label_sidecar(&cl, &s, &a.sidecar)
        .with_context(|| format!("--sidecar {}", a.sidecar.display()))?;
    println!("samples={} policy={}", s.len(), a.policy);
    Ok(())
}

fn encode_stage(
    seq: &FrameSequence,
    s: &SampleSet,
    cl: &Clustering,
    codec: Codec,
    out: &Path,
) -> Result<()> {
    let summary =
        encode_store(seq, s, cl, codec, out).with_context(|| format!("--out {}", out.display()))?;
    let meta = eko_core::features::StreamMeta {
        count: summary.frames as u32,
        ..eko_core::features::StreamMeta::of(seq)
    };
    let meta_path = io::meta_path(out);
    std::fs::write(&meta_path, meta.to_text())
        .with_context(|| format!("--out {}", meta_path.display()))?;
    println!(
        "frames={} file_bytes={} payload_bytes={} raw_bytes={}",
        summary.frames, summary.file_bytes, summary.payload_bytes, summary.raw_bytes
    );
    Ok(())
}

fn write_manifest(s: &SampleSet, n: usize, source: &str, fps: f64, path: &Path) -> Result<()> {
    let m = emit_manifest(s, n, source).context("--source")?;
    io::write_with(path, "--manifest", |w| m.write_text(fps, w))?;
    println!(
        "transcode: {}",
        render_transcode_args(&m, fps, "keyframed.mp4").context("--fps")?
    );
    Ok(())
}

fn cmd_encode(a: EncodeArgs) -> Result<()> {
    let seq = io::load_frames(&a.input, a.fps)?;
    let s = io::read_with(&a.samples, "--samples", SampleSet::read_text)?;
    let sidecar = io::read_with(&a.sidecar, "--sidecar", LabelSidecar::read_text)?;
    let cl = sidecar
        .to_clustering()
        .with_context(|| format!("--sidecar {}", a.sidecar.display()))?;
    encode_stage(&seq, &s, &cl, a.codec, &a.out)?;
    if let Some(m) = &a.manifest {
        write_manifest(&s, seq.len(), &a.source, seq.frame_rate, m)?;
    }
    Ok(())
}

fn decode_from<S: ByteSource>(a: &DecodeArgs, store: StoreHandle<CountingSource<S>>) -> Result<()> {
    let ids = a.frames.clone().unwrap_or_else(|| store.frame_ids());
    let pixels = store.read_frames(&ids).context("--frames")?;
    let meta_path = io::meta_path(&a.input);
    let meta = eko_core::features::read_stream_meta(&meta_path)
        .with_context(|| format!("--input {}", meta_path.display()))?;
    let seq = FrameSequence {
        frames: pixels
            .into_iter()
            .enumerate()
            .map(|(i, pixels)| FramePayload {
                frame_id: i as u32,
                pixels,
            })
            .collect(),
        width: meta.width,
        height: meta.height,
        channels: meta.channels,
        frame_rate: meta.fps,
    };
    eko_core::features::write_raw_stream(&seq, &a.out)
        .with_context(|| format!("--out {}", a.out.display()))?;
    let mut ids_path = a.out.clone().into_os_string();
    ids_path.push(".ids");
    io::write_with(Path::new(&ids_path), "--out", |w| {
        for id in &ids {
            writeln!(w, "{id}")?;
        }
        Ok(())
    })?;
    let src = store.source();
    println!(
        "frames={} bytes_read={} file_bytes={}",
        ids.len(),
        src.bytes_read(),
        src.len()
    );
    Ok(())
}

fn cmd_decode(a: DecodeArgs) -> Result<()> {
    let ctx = || format!("--input {}", a.input.display());
    if a.mmap {
        let src = eko_core::storage::MmapSource::open(&a.input).with_context(ctx)?;
        let store = StoreHandle::open(CountingSource::new(src)).with_context(ctx)?;
        decode_from(&a, store)
    } else {
        let src = eko_core::storage::FileSource::open(&a.input).with_context(ctx)?;
        let store = StoreHandle::open(CountingSource::new(src)).with_context(ctx)?;
        decode_from(&a, store)
    }
}

fn cmd_propagate(a: PropagateArgs) -> Result<()> {
    let s = io::read_with(&a.samples, "--samples", SampleSet::read_text)?;
    let sidecar = io::read_with(&a.sidecar, "--sidecar", LabelSidecar::read_text)?;
    let cl = sidecar
        .to_clustering()
        .with_context(|| format!("--sidecar {}", a.sidecar.display()))?;
    let labels = match (&a.labels.truth, &a.labels.sample_labels) {
        (Some(t), _) => {
            let truth = io::read_with(t, "--truth", LabelVector::read_text)?;
            if truth.len() != cl.n() {
                bail!("--truth: {} labels for {} frames", truth.len(), cl.n());
            }
            truth.at(&s.frame_ids()).context("--truth")?
        }
        (None, Some(p)) => io::read_sample_labels(p)?,
        (None, None) => bail!("--truth or --sample-labels is required"),
    };
    let pred = propagate(&s, &cl, &labels).context("--samples")?;
    io::write_with(&a.out, "--out", |w| pred.write_text(w))?;
    println!("frames={} positives={}", pred.len(), pred.positives());
    Ok(())
}

fn cmd_evaluate(a: EvaluateArgs) -> Result<()> {
    let pred = io::read_with(&a.pred, "--pred", LabelVector::read_text)?;
    let truth = io::read_with(&a.truth, "--truth", LabelVector::read_text)?;
    let m = eko_core::evaluate(&pred, &truth).context("--pred")?;
    print!("{}", m.to_key_value());
    Ok(())
}

fn cmd_stats(a: StatsArgs) -> Result<()> {
    let (k, st) = match (&a.sidecar, a.gop) {
        (Some(p), _) => {
            let sc = io::read_with(p, "--sidecar", LabelSidecar::read_text)?;
            let cl = sc
                .to_clustering()
                .with_context(|| format!("--sidecar {}", p.display()))?;
            (cl.k(), cluster_stats(&cl))
        }
        (None, Some(g)) => {
            let n = a.frames.context("--frames: required with --gop")?;
            let cl = clustering_from_intervals(n, &gop_baseline(n, g).context("--gop")?)
                .context("--frames")?;
            (cl.k(), cluster_stats(&cl))
        }
        (None, None) => bail!("--sidecar or --gop is required"),
    };
    println!(
        "k={k}\nmean={:.6}\nmedian={:.6}\nstd={:.6}\nmin={:.6}\nmax={:.6}",
        st.mean, st.median, st.std, st.min, st.max
    );
    Ok(())
}

fn cmd_pipeline(a: PipelineArgs) -> Result<()> {
    std::fs::create_dir_all(&a.out).with_context(|| format!("--out {}", a.out.display()))?;
    let seq = a
        .input
        .as_deref()
        .map(|p| io::load_frames(p, a.fps))
        .transpose()?;
    let f = match (&a.features, &seq) {
        (Some(p), _) => prepare_features(
            load_feature_file(p).with_context(|| format!("--features {}", p.display()))?,
            &a.opts,
        )?,
        (None, Some(seq)) => prepare_features(
            extract_pixel_features(seq, a.opts.grid, !a.opts.color).context("--grid")?,
            &a.opts,
        )?,
        (None, None) => bail!("--input or --features is required"),
    };
    if let Some(seq) = &seq {
        if seq.len() != f.n() {
            bail!(
                "--features: {} rows but --input has {} frames",
                f.n(),
                seq.len()
            );
        }
    }
    write_feature_file(&f, a.out.join("features.ekf")).context("--out")?;
    let d = agglomerate(&f, a.constraint).context("--constraint")?;
    save_dendrogram(&d, a.out.join("dendrogram.ekd")).context("--out")?;
    let (s, cl) = sample_dendrogram(&d, &f, &a.budget, &a.auto_k, a.policy)?;
    io::write_with(&a.out.join("samples.txt"), "--out", |w| s.write_text(w))?;
    write_label_sidecar(&cl, &s, a.out.join("clusters.txt")).context("--out")?;
    println!(
        "samples={} policy={} constraint={}",
        s.len(),
        a.policy,
        a.constraint
    );
    if let Some(seq) = &seq {
        encode_stage(seq, &s, &cl, a.codec, &a.out.join("store.ekv"))?;
        write_manifest(
            &s,
            seq.len(),
            "",
            seq.frame_rate,
            &a.out.join("manifest.txt"),
        )?;
    }
    Ok(())
}
