//! Shared test support: a brute-force constrained Ward oracle and the
//! sampling/propagation harness used by the accuracy checks.
#![allow(dead_code)]

use eko_core::{
    append_temporal_channel, clustering_from_intervals, evaluate, propagate, samples_for_budget,
    uniform_baseline, Dendrogram, FeatureMatrix, LabelVector, Policy,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// One oracle merge: ids follow the leaf `0..n`, merge `n + s` convention.
#[derive(Debug, Clone, Copy)]
pub struct OracleMerge {
    pub left: u32,
    pub right: u32,
    pub cost: f64,
}

/// Recomputes every pairwise Ward cost from raw members at each step.
/// `O(n³·span)`-ish; only for small inputs.
pub fn brute_force_ward(f: &FeatureMatrix, span: usize) -> Vec<OracleMerge> {
    let n = f.n();
    let d = f.d();
    // (id, sorted members)
    let mut clusters: Vec<(u32, Vec<usize>)> = (0..n).map(|i| (i as u32, vec![i])).collect();
    let mean = |m: &[usize]| -> Vec<f64> {
        let mut c = vec![0.0; d];
        for &i in m {
            for (j, v) in f.row(i).iter().enumerate() {
                c[j] += *v as f64;
            }
        }
        c.iter().map(|v| v / m.len() as f64).collect()
    };
    let mut out = Vec::new();
    let mut next_id = n as u32;
    while clusters.len() > 1 {
        let mut best: Option<(f64, usize, usize, usize, usize)> = None;
        for a in 0..clusters.len() {
            for b in 0..clusters.len() {
                if a == b {
                    continue;
                }
                let (ma, mb) = (&clusters[a].1, &clusters[b].1);
                // a is the left cluster
                if ma[0] >= mb[0] {
                    continue;
                }
                let gap = ma
                    .iter()
                    .flat_map(|&x| mb.iter().map(move |&y| x.abs_diff(y)))
                    .min()
                    .unwrap();
                if gap > span {
                    continue;
                }
                let (ca, cb) = (mean(ma), mean(mb));
                let dist2: f64 = ca.iter().zip(&cb).map(|(x, y)| (x - y) * (x - y)).sum();
                let (na, nb) = (ma.len() as f64, mb.len() as f64);
                let cost = na * nb / (na + nb) * dist2;
                let key = (cost, ma[0], mb[0]);
                let better = match best {
                    None => true,
                    Some((c, ls, rs, _, _)) => {
                        key.0 < c || (key.0 == c && (key.1, key.2) < (ls, rs))
                    }
                };
                if better {
                    best = Some((cost, ma[0], mb[0], a, b));
                }
            }
        }
        let (cost, _, _, a, b) = best.expect("chain connectivity keeps a pair available");
        let (ida, idb) = (clusters[a].0, clusters[b].0);
        let mut members = clusters[a].1.clone();
        members.extend_from_slice(&clusters[b].1);
        members.sort_unstable();
        let (hi, lo) = if a > b { (a, b) } else { (b, a) };
        clusters.remove(hi);
        clusters.remove(lo);
        clusters.push((next_id, members));
        next_id += 1;
        out.push(OracleMerge {
            left: ida,
            right: idb,
            cost,
        });
    }
    out
}

/// Compares partners exactly and costs to `rel_tol` relative error.
pub fn matches_oracle(d: &Dendrogram, oracle: &[OracleMerge], rel_tol: f64) -> Result<(), String> {
    if d.merges().len() != oracle.len() {
        return Err(format!(
            "{} merges vs oracle {}",
            d.merges().len(),
            oracle.len()
        ));
    }
    for (s, (m, o)) in d.merges().iter().zip(oracle).enumerate() {
        if (m.left, m.right) != (o.left, o.right) {
            return Err(format!(
                "step {s}: merged ({}, {}) but oracle merged ({}, {})",
                m.left, m.right, o.left, o.right
            ));
        }
        let scale = o.cost.abs().max(m.cost.abs());
        if (m.cost - o.cost).abs() > rel_tol * scale && scale > 0.0 {
            return Err(format!("step {s}: cost {} vs oracle {}", m.cost, o.cost));
        }
        if scale == 0.0 && m.cost != o.cost {
            return Err(format!("step {s}: cost {} vs oracle {}", m.cost, o.cost));
        }
    }
    Ok(())
}

/// Random features: `n` rows of `d` uniform coordinates, with a random
/// subset of rows duplicated from their predecessor to exercise ties.
pub fn random_features(rng: &mut ChaCha8Rng, n: usize, d: usize) -> FeatureMatrix {
    let mut data: Vec<f32> = Vec::with_capacity(n * d);
    for i in 0..n {
        if i > 0 && rng.random_bool(0.1) {
            let prev: Vec<f32> = data[(i - 1) * d..i * d].to_vec();
            data.extend(prev);
        } else {
            data.extend((0..d).map(|_| rng.random_range(-5.0f32..5.0)));
        }
    }
    FeatureMatrix::new(n, d, data).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// F1 of cluster sampling with oracle labels on the representatives.
pub fn eko_f1(
    d: &Dendrogram,
    f: &FeatureMatrix,
    truth: &LabelVector,
    budget: usize,
    p: Policy,
) -> f64 {
    let (s, cl) = samples_for_budget(d, f, budget, p).unwrap();
    let pred = propagate(&s, &cl, &truth.at(&s.frame_ids()).unwrap()).unwrap();
    evaluate(&pred, truth).unwrap().f1
}

pub fn uniform_f1(truth: &LabelVector, budget: usize) -> f64 {
    let s = uniform_baseline(truth.len(), budget).unwrap();
    let cl = clustering_from_intervals(truth.len(), &s).unwrap();
    let pred = propagate(&s, &cl, &truth.at(&s.frame_ids()).unwrap()).unwrap();
    evaluate(&pred, truth).unwrap().f1
}

pub fn with_time(f: &FeatureMatrix) -> FeatureMatrix {
    append_temporal_channel(f, 1.0).unwrap()
}
