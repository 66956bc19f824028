//! WebAssembly bindings for the browser demo. Each export takes plain
//! numbers, runs on a seeded synthetic stream and returns a JSON string.

use eko_core::clustering::subsample_stride;
use eko_core::{
    agglomerate, append_temporal_channel, clustering_from_intervals, cut, evaluate, gop_baseline,
    propagate, samples_for_budget, silhouette_score, synthesize_stream, uniform_baseline,
    Clustering, Connectivity, Dendrogram, FeatureMatrix, LabelVector, Policy, SampleSet,
    StreamSpec,
};
use serde::Serialize;
use wasm_bindgen::prelude::*;

#[derive(Debug, Clone, Copy)]
pub struct Stream {
    pub seed: u64,
    pub n: usize,
    pub segments: usize,
    pub rare_rate: f64,
    pub noise: f64,
}

struct Prepared {
    spec: StreamSpec,
    features: FeatureMatrix,
    truth: LabelVector,
    dendrogram: Dendrogram,
}

fn prepare(s: Stream, constraint: &str) -> Result<Prepared, String> {
    let spec = StreamSpec::new(s.seed, s.n, s.segments, s.rare_rate, s.noise);
    let (f, truth) = synthesize_stream(&spec).map_err(|e| e.to_string())?;
    let features = append_temporal_channel(&f, 1.0).map_err(|e| e.to_string())?;
    let c: Connectivity = constraint
        .parse()
        .map_err(|e: eko_core::Error| e.to_string())?;
    let dendrogram = agglomerate(&features, c).map_err(|e| e.to_string())?;
    Ok(Prepared {
        spec,
        features,
        truth,
        dendrogram,
    })
}

fn f1_of(s: &SampleSet, cl: &Clustering, truth: &LabelVector) -> Result<f64, String> {
    let labels = truth.at(&s.frame_ids()).map_err(|e| e.to_string())?;
    let pred = propagate(s, cl, &labels).map_err(|e| e.to_string())?;
    Ok(evaluate(&pred, truth).map_err(|e| e.to_string())?.f1)
}

fn baseline_f1(n: usize, s: SampleSet, truth: &LabelVector) -> Result<f64, String> {
    let cl = clustering_from_intervals(n, &s).map_err(|e| e.to_string())?;
    f1_of(&s, &cl, truth)
}

#[derive(Debug, Serialize)]
pub struct ClusterView {
    /// First feature coordinate of every frame.
    pub signal: Vec<f32>,
    pub truth: Vec<u8>,
    pub predicted: Vec<u8>,
    pub segment_starts: Vec<usize>,
    /// Inclusive `[start, end]` extent of every cluster.
    pub clusters: Vec<(u32, u32)>,
    pub samples: Vec<u32>,
    pub f1: f64,
    pub uniform_f1: f64,
}

pub fn cluster_view(
    s: Stream,
    budget: usize,
    policy: &str,
    constraint: &str,
) -> Result<ClusterView, String> {
    let p = prepare(s, constraint)?;
    let policy: Policy = policy.parse().map_err(|e: eko_core::Error| e.to_string())?;
    let budget = budget.clamp(p.dendrogram.min_clusters().max(1), s.n);
    let (samples, cl) = samples_for_budget(&p.dendrogram, &p.features, budget, policy)
        .map_err(|e| e.to_string())?;
    let labels = p
        .truth
        .at(&samples.frame_ids())
        .map_err(|e| e.to_string())?;
    let pred = propagate(&samples, &cl, &labels).map_err(|e| e.to_string())?;
    let f1 = evaluate(&pred, &p.truth).map_err(|e| e.to_string())?.f1;
    let uniform_f1 = baseline_f1(
        s.n,
        uniform_baseline(s.n, budget).map_err(|e| e.to_string())?,
        &p.truth,
    )?;
    Ok(ClusterView {
        signal: p.features.rows().map(|r| r[0]).collect(),
        truth: p.truth.as_slice().to_vec(),
        predicted: pred.as_slice().to_vec(),
        segment_starts: p.spec.segment_starts().map_err(|e| e.to_string())?,
        clusters: cl.hulls(),
        samples: samples.frame_ids(),
        f1,
        uniform_f1,
    })
}

#[derive(Debug, Serialize)]
pub struct CurvePoint {
    pub selectivity: f64,
    pub budget: usize,
    pub first: f64,
    pub mean: f64,
    pub middle: f64,
    pub uniform: f64,
    pub gop: f64,
}

pub fn selectivity_curve(
    s: Stream,
    selectivities: &[f64],
    constraint: &str,
) -> Result<Vec<CurvePoint>, String> {
    let p = prepare(s, constraint)?;
    selectivities
        .iter()
        .map(|&sel| {
            if !(sel > 0.0 && sel <= 1.0) {
                return Err(format!("selectivity {sel} outside (0, 1]"));
            }
            let budget = ((sel * s.n as f64).round() as usize)
                .clamp(1, s.n)
                .max(p.dendrogram.min_clusters());
            let eko = |policy| -> Result<f64, String> {
                let (smp, cl) = samples_for_budget(&p.dendrogram, &p.features, budget, policy)
                    .map_err(|e| e.to_string())?;
                f1_of(&smp, &cl, &p.truth)
            };
            Ok(CurvePoint {
                selectivity: sel,
                budget,
                first: eko(Policy::First)?,
                mean: eko(Policy::Mean)?,
                middle: eko(Policy::Middle)?,
                uniform: baseline_f1(
                    s.n,
                    uniform_baseline(s.n, budget).map_err(|e| e.to_string())?,
                    &p.truth,
                )?,
                gop: baseline_f1(
                    s.n,
                    gop_baseline(s.n, s.n.div_ceil(budget)).map_err(|e| e.to_string())?,
                    &p.truth,
                )?,
            })
        })
        .collect()
}

#[derive(Debug, Serialize)]
pub struct SilhouettePoint {
    pub k: usize,
    pub score: f64,
}

/// Frames scored per silhouette; keeps the quadratic cost interactive.
const SILHOUETTE_CAP: usize = 1500;

/// Silhouette of every cut in `ks`, scored on every `⌈n/cap⌉`-th frame.
pub fn silhouette_curve(
    s: Stream,
    ks: &[usize],
    constraint: &str,
) -> Result<Vec<SilhouettePoint>, String> {
    let p = prepare(s, constraint)?;
    let picks: Vec<usize> = (0..s.n)
        .step_by(subsample_stride(s.n, SILHOUETTE_CAP))
        .collect();
    let sub = p.features.select_rows(&picks).map_err(|e| e.to_string())?;
    ks.iter()
        .map(|&k| {
            if k < 2 || k > s.n {
                return Err(format!("k={k} outside 2..={}", s.n));
            }
            let cl = cut(&p.dendrogram, k).map_err(|e| e.to_string())?;
            let labels: Vec<u32> = picks.iter().map(|&i| cl.label(i)).collect();
            let score = silhouette_score(&sub, &labels).map_err(|e| e.to_string())?;
            Ok(SilhouettePoint { k, score })
        })
        .collect()
}

fn to_js<T: Serialize>(r: Result<T, String>) -> Result<String, JsError> {
    let v = r.map_err(|e| JsError::new(&e))?;
    serde_json::to_string(&v).map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn cluster_stream(
    seed: u32,
    n: usize,
    segments: usize,
    rare_rate: f64,
    noise: f64,
    budget: usize,
    policy: &str,
    constraint: &str,
) -> Result<String, JsError> {
    let s = Stream {
        seed: seed.into(),
        n,
        segments,
        rare_rate,
        noise,
    };
    to_js(cluster_view(s, budget, policy, constraint))
}

#[wasm_bindgen]
pub fn f1_curve(
    seed: u32,
    n: usize,
    segments: usize,
    rare_rate: f64,
    noise: f64,
    selectivities: Vec<f64>,
    constraint: &str,
) -> Result<String, JsError> {
    let s = Stream {
        seed: seed.into(),
        n,
        segments,
        rare_rate,
        noise,
    };
    to_js(selectivity_curve(s, &selectivities, constraint))
}

#[wasm_bindgen]
pub fn silhouette_by_k(
    seed: u32,
    n: usize,
    segments: usize,
    noise: f64,
    ks: Vec<usize>,
    constraint: &str,
) -> Result<String, JsError> {
    let s = Stream {
        seed: seed.into(),
        n,
        segments,
        rare_rate: 0.0,
        noise,
    };
    to_js(silhouette_curve(s, &ks, constraint))
}
