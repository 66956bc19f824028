//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

mod common;

use std::time::{Duration, Instant};

use eko_core::clustering::{read_dendrogram, write_dendrogram};
use eko_core::features::{read_feature_matrix, write_feature_matrix};
use eko_core::storage::{
    emit_manifest, read_store_stream, write_store, Codec, CountingSource, KeyframeManifest,
    StoreHandle,
};
use eko_core::*;
use rand::Rng;

use common::{brute_force_ward, matches_oracle, random_features, rng};

type Outcome = Result<String, String>;

const SEEDS: u64 = 20;
const N_RARE: usize = 100_000;
const SELECTIVITY: f64 = 0.001;

fn within(limit: Duration, t: Duration) -> Result<(), String> {
    if t > limit {
        Err(format!("took {t:.2?}, limit {limit:?}"))
    } else {
        Ok(())
    }
}

fn oracle_equivalence() -> Outcome {
    let t = Instant::now();
    let mut r = rng(1);
    let constraints = [
        Connectivity::Tight,
        Connectivity::Medium,
        Connectivity::Loose,
    ];
    for i in 0..100 {
        let n = r.random_range(2..=64);
        let d = r.random_range(1..=8);
        let c = constraints[i % 3];
        let f = random_features(&mut r, n, d);
        let got = agglomerate(&f, c).map_err(|e| e.to_string())?;
        let want = brute_force_ward(&f, c.span() as usize);
        matches_oracle(&got, &want, 1e-9).map_err(|e| format!("instance {i} ({c}, n={n}): {e}"))?;
    }
    within(Duration::from_secs(10), t.elapsed())?;
    Ok(format!("100 instances in {:.2?}", t.elapsed()))
}

fn contiguity_and_nesting() -> Outcome {
    let t = Instant::now();
    let mut r = rng(2);
    for i in 0..50 {
        let n = r.random_range(2..=120);
        let d = r.random_range(1..=6);
        let f = random_features(&mut r, n, d);
        let d = agglomerate(&f, Connectivity::Tight).map_err(|e| e.to_string())?;
        let mut finer: Option<Clustering> = None;
        for k in (1..=n).rev() {
            let cl = cut(&d, k).map_err(|e| e.to_string())?;
            if cl.k() != k || !cl.is_contiguous() {
                return Err(format!("instance {i}, k={k}: not {k} intervals"));
            }
            if let Some(fine) = &finer {
                // each finer cluster maps into exactly one coarser cluster
                let mut parent = vec![None; fine.k()];
                for (&a, &b) in fine.labels().iter().zip(cl.labels()) {
                    if *parent[a as usize].get_or_insert(b) != b {
                        return Err(format!("instance {i}: cut {k} does not nest in {}", k + 1));
                    }
                }
            }
            finer = Some(cl);
        }
    }
    within(Duration::from_secs(5), t.elapsed())?;
    Ok(format!("50 instances, all k, in {:.2?}", t.elapsed()))
}

fn cluster_size_shape() -> Outcome {
    let n = 100_000;
    let k = 1000;
    let gop = clustering_from_intervals(n, &gop_baseline(n, n / k).map_err(|e| e.to_string())?)
        .map_err(|e| e.to_string())?;
    let g = cluster_stats(&gop);
    if (g.mean, g.median, g.std, g.min, g.max) != (100.0, 100.0, 0.0, 100.0, 100.0) {
        return Err(format!("gop stats {g:?}"));
    }
    let (f, _) =
        synthesize_stream(&StreamSpec::new(0, n, 200, 0.02, 0.1)).map_err(|e| e.to_string())?;
    let f = append_temporal_channel(&f, 1.0).map_err(|e| e.to_string())?;
    let t = Instant::now();
    let d = agglomerate(&f, Connectivity::Tight).map_err(|e| e.to_string())?;
    let elapsed = t.elapsed();
    within(Duration::from_secs(60), elapsed)?;
    let e = cluster_stats(&cut(&d, k).map_err(|e| e.to_string())?);
    if !(e.std > 0.0 && e.min < e.mean && e.mean < e.max) {
        return Err(format!("eko stats {e:?}"));
    }
    Ok(format!(
        "gop 100/100/0/100/100; eko mean={:.1} median={} std={:.1} min={} max={}; agglomerate {elapsed:.2?}",
        e.mean, e.median, e.std, e.min, e.max
    ))
}

struct RareRun {
    middle: f64,
    first: f64,
    uniform: f64,
}

fn rare_event_runs() -> Vec<RareRun> {
    let budget = ((SELECTIVITY * N_RARE as f64).round() as usize).max(1);
    (0..SEEDS)
        .map(|seed| {
            let (f, truth) =
                synthesize_stream(&StreamSpec::new(seed, N_RARE, 200, 0.02, 0.1)).unwrap();
            let f = common::with_time(&f);
            let d = agglomerate(&f, Connectivity::Tight).unwrap();
            RareRun {
                middle: common::eko_f1(&d, &f, &truth, budget, Policy::Middle),
                first: common::eko_f1(&d, &f, &truth, budget, Policy::First),
                uniform: common::uniform_f1(&truth, budget),
            }
        })
        .collect()
}

fn rare_event_advantage(runs: &[RareRun]) -> Outcome {
    let wins = runs.iter().filter(|r| r.middle >= r.uniform).count();
    let gap = runs.iter().map(|r| r.middle - r.uniform).sum::<f64>() / runs.len() as f64;
    let detail = format!(
        "eko >= uniform in {wins}/{} seeds, mean gap {gap:.4}",
        runs.len()
    );
    if wins * 5 >= runs.len() * 4 && gap > 0.0 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn middle_vs_first(runs: &[RareRun]) -> Outcome {
    let wins = runs.iter().filter(|r| r.middle >= r.first).count();
    let gain = runs.iter().map(|r| r.middle - r.first).sum::<f64>() / runs.len() as f64;
    let detail = format!(
        "middle >= first in {wins}/{} seeds, mean gain {gain:.4}",
        runs.len()
    );
    if wins * 5 >= runs.len() * 4 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// A store of `k` sampled 64×64 grayscale frames.
fn sample_store(seed: u64, n: usize, k: usize, codec: Codec) -> (Vec<u8>, SampleSet) {
    let (f, _) = synthesize_stream(&StreamSpec::new(seed, n, (n / 10).max(1), 0.0, 0.05)).unwrap();
    let seq = render_frames(&f, 16, 25.0).unwrap();
    let d = agglomerate(&common::with_time(&f), Connectivity::Tight).unwrap();
    let (s, cl) = samples_for_budget(&d, &f, k, Policy::Middle).unwrap();
    let mut buf = Vec::new();
    write_store(&seq, &s, &cl, codec, &mut buf).unwrap();
    (buf, s)
}

fn selective_io() -> Outcome {
    let (bytes, s) = sample_store(3, 5000, 1000, Codec::Raw);
    let total = bytes.len() as u64;
    let store = StoreHandle::open(CountingSource::new(bytes.clone())).map_err(|e| e.to_string())?;
    let ids = s.frame_ids();
    let subset: Vec<u32> = ids.iter().step_by(100).copied().collect();
    store.read_frames(&subset).map_err(|e| e.to_string())?;
    let partial = store.source().bytes_read();
    // a fresh open, so the header and index count again
    let store = StoreHandle::open(CountingSource::new(bytes)).map_err(|e| e.to_string())?;
    store.read_frames(&ids).map_err(|e| e.to_string())?;
    let full = store.source().bytes_read();

    let frac = partial as f64 / total as f64;
    let detail = format!(
        "{} of {} frames read {partial} of {total} bytes ({:.2}%); all frames read {full}",
        subset.len(),
        ids.len(),
        frac * 100.0
    );
    if frac < 0.05 && full == total {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn round_trips() -> Outcome {
    let mut r = rng(7);
    for i in 0..100 {
        let n = r.random_range(1..=200);
        let d = r.random_range(1..=32);
        let f = random_features(&mut r, n, d);
        let mut buf = Vec::new();
        write_feature_matrix(&f, &mut buf).map_err(|e| e.to_string())?;
        let back = read_feature_matrix(&buf[..]).map_err(|e| e.to_string())?;
        let bits = |m: &FeatureMatrix| m.as_slice().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        if (back.n(), back.d()) != (n, d) || bits(&back) != bits(&f) {
            return Err(format!("feature file {i} differs"));
        }

        let c = [
            Connectivity::Tight,
            Connectivity::Medium,
            Connectivity::Loose,
        ][r.random_range(0..3)];
        let dg = agglomerate(&f, c).map_err(|e| e.to_string())?;
        let mut buf = Vec::new();
        write_dendrogram(&dg, &mut buf).map_err(|e| e.to_string())?;
        let back = read_dendrogram(&buf[..]).map_err(|e| e.to_string())?;
        let same = back.n() == dg.n()
            && back.constraint() == dg.constraint()
            && back.merges().iter().zip(dg.merges()).all(|(a, b)| {
                (a.left, a.right, a.size, a.cost.to_bits())
                    == (b.left, b.right, b.size, b.cost.to_bits())
            });
        if !same {
            return Err(format!("dendrogram {i} differs"));
        }

        let k = r.random_range(1..=n);
        let (s, _) = samples_for_budget(&dg, &f, k, Policy::Middle).map_err(|e| e.to_string())?;
        let m = emit_manifest(&s, n, "clip.mp4").map_err(|e| e.to_string())?;
        let fps = r.random_range(1.0..120.0);
        let mut buf = Vec::new();
        m.write_text(fps, &mut buf).map_err(|e| e.to_string())?;
        let (back, back_fps) = KeyframeManifest::read_text(&buf[..]).map_err(|e| e.to_string())?;
        if back != m || back_fps.to_bits() != fps.to_bits() {
            return Err(format!("manifest {i} differs"));
        }
    }

    for i in 0..100u64 {
        let codec = if i % 2 == 0 {
            Codec::Raw
        } else {
            Codec::Lossless
        };
        let n = rng(i).random_range(2..=60);
        let k = rng(i + 1000).random_range(1..=n);
        let (f, _) = synthesize_stream(&StreamSpec::new(i, n, n.min(5), 0.0, 0.1)).unwrap();
        let seq = render_frames(&f, 2, 25.0).unwrap();
        let d = agglomerate(&f, Connectivity::Tight).map_err(|e| e.to_string())?;
        let (s, cl) = samples_for_budget(&d, &f, k, Policy::Mean).map_err(|e| e.to_string())?;
        let mut buf = Vec::new();
        write_store(&seq, &s, &cl, codec, &mut buf).map_err(|e| e.to_string())?;
        let (h, frames) = read_store_stream(&buf[..]).map_err(|e| e.to_string())?;
        if h.k as usize != k || h.n_total as usize != n {
            return Err(format!("store {i} header {h:?}"));
        }
        for ((rec, pixels), e) in frames.iter().zip(&s.entries) {
            let same = rec.frame_id == e.frame_id
                && (rec.cluster_start, rec.cluster_end) == (e.cluster_start, e.cluster_end)
                && *pixels == seq.frames[e.frame_id as usize].pixels;
            if !same {
                return Err(format!("store {i} frame {} differs", e.frame_id));
            }
        }
        // flip one random byte inside one random payload
        let store = StoreHandle::open(buf.clone()).map_err(|e| e.to_string())?;
        let rec = store.index()[rng(i + 2000).random_range(0..k)];
        let pos = rec.offset as usize + rng(i + 3000).random_range(0..rec.len as usize);
        let mut bad = buf.clone();
        bad[pos] ^= 1 << rng(i + 4000).random_range(0..8);
        let store = StoreHandle::open(bad.clone()).map_err(|e| e.to_string())?;
        if !matches!(
            store.read_payload(rec.frame_id),
            Err(Error::Corruption { .. })
        ) {
            return Err(format!("store {i}: corrupt byte {pos} went unnoticed"));
        }
        if read_store_stream(&bad[..]).is_ok() {
            return Err(format!(
                "store {i}: streamed read missed corrupt byte {pos}"
            ));
        }
    }

    // exhaustive: every payload byte of one store, every value
    let (buf, s) = sample_store(11, 40, 8, Codec::Lossless);
    let store = StoreHandle::open(buf.clone()).map_err(|e| e.to_string())?;
    let mut checked = 0usize;
    for rec in store.index() {
        for pos in rec.offset as usize..(rec.offset + rec.len) as usize {
            for delta in 1..=255u8 {
                let mut bad = buf.clone();
                bad[pos] = bad[pos].wrapping_add(delta);
                let h = StoreHandle::open(bad).map_err(|e| e.to_string())?;
                if h.read_frames(&s.frame_ids()).is_ok() {
                    return Err(format!("byte {pos} + {delta} went unnoticed"));
                }
                checked += 1;
            }
        }
    }
    Ok(format!(
        "100 each of .ekf/.ekd/manifest/.ekv bit-exact; {checked} single-byte payload corruptions all detected"
    ))
}

fn no_sampling_limit() -> Outcome {
    for seed in 0..10 {
        let mut r = rng(100 + seed);
        let n = r.random_range(50..=2000);
        let spec = StreamSpec::new(seed, n, r.random_range(1..=n.min(40)), 0.1, 0.2);
        let (f, truth) = synthesize_stream(&spec).map_err(|e| e.to_string())?;
        let d =
            agglomerate(&common::with_time(&f), Connectivity::Tight).map_err(|e| e.to_string())?;
        for p in Policy::ALL {
            let f1 = common::eko_f1(&d, &common::with_time(&f), &truth, n, p);
            // streams with no positives have an undefined F1, scored 0
            let expect = if truth.positives() == 0 { 0.0 } else { 1.0 };
            if f1 != expect {
                return Err(format!("stream {seed} ({p}): f1 {f1}"));
            }
        }
    }
    Ok("10 streams, all policies, f1 = 1.0".into())
}

fn main() {
    let mut failed = 0;
    let mut report = |id: u32, name: &str, o: Outcome| match o {
        Ok(d) => println!("PASS {id} {name}: {d}"),
        Err(d) => {
            failed += 1;
            println!("FAIL {id} {name}: {d}");
        }
    };
    report(1, "oracle equivalence", oracle_equivalence());
    report(2, "contiguity and nesting", contiguity_and_nesting());
    report(3, "cluster size shape", cluster_size_shape());
    let runs = rare_event_runs();
    report(4, "rare-event advantage", rare_event_advantage(&runs));
    report(5, "middle vs first", middle_vs_first(&runs));
    report(6, "selective decode i/o", selective_io());
    report(7, "format round trips", round_trips());
    report(8, "no-sampling limit", no_sampling_limit());
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
