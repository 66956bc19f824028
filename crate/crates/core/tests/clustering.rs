mod common;

use common::{brute_force_ward, matches_oracle, random_features, rng};
use eko_core::{
    agglomerate, cluster_stats, cut, optimal_k, silhouette_score, synthesize_stream, Connectivity,
    FeatureMatrix, StreamSpec,
};
use proptest::prelude::*;
use rand::Rng;

#[test]
fn tight_matches_brute_force() {
    let mut r = rng(11);
    for _ in 0..30 {
        let n = r.random_range(1..40);
        let d = r.random_range(1..5);
        let f = random_features(&mut r, n, d);
        let got = agglomerate(&f, Connectivity::Tight).unwrap();
        matches_oracle(&got, &brute_force_ward(&f, 1), 1e-9).unwrap();
    }
}

#[test]
fn spans_match_brute_force() {
    let mut r = rng(12);
    for span in [2u32, 3, 7, 50] {
        for _ in 0..8 {
            let n = r.random_range(2..30);
            let f = random_features(&mut r, n, 3);
            let got = agglomerate(&f, Connectivity::Custom(span)).unwrap();
            matches_oracle(&got, &brute_force_ward(&f, span as usize), 1e-9)
                .unwrap_or_else(|e| panic!("span {span} n {n}: {e}"));
        }
    }
}

#[test]
fn shared_constant_rows_chain_left_to_right() {
    let f = FeatureMatrix::new(10, 2, vec![0.25; 20]).unwrap();
    let d = agglomerate(&f, Connectivity::Loose).unwrap();
    assert_eq!(d.merges()[0].left, 0);
    assert_eq!(d.merges()[0].right, 1);
    for m in &d.merges()[1..] {
        assert_eq!(m.cost, 0.0);
    }
}

#[test]
fn random_labels_on_one_blob_score_near_zero() {
    let mut r = rng(5);
    for _ in 0..20 {
        let n = 200;
        let data: Vec<f32> = (0..n * 2)
            .map(|_| {
                // sum of uniforms: roughly Gaussian
                (0..6).map(|_| r.random::<f32>()).sum::<f32>() - 3.0
            })
            .collect();
        let f = FeatureMatrix::new(n, 2, data).unwrap();
        let labels: Vec<u32> = (0..n).map(|_| r.random_range(0..2)).collect();
        let s = silhouette_score(&f, &labels).unwrap();
        assert!(s.abs() < 0.2, "{s}");
    }
}

#[test]
fn three_segments_pick_three() {
    // three constant levels with light deterministic jitter
    let mut r = rng(3);
    let levels = [0.0f32, 4.0, 9.0];
    let lens = [70usize, 40, 90];
    let mut data = Vec::new();
    for (lvl, len) in levels.iter().zip(lens) {
        for _ in 0..len {
            data.push(lvl + r.random_range(-0.1f32..0.1));
        }
    }
    let f = FeatureMatrix::new(data.len(), 1, data).unwrap();
    let d = agglomerate(&f, Connectivity::Tight).unwrap();
    let grid = [2, 3, 4, 8];
    // exhaustive check the grid's argmax independently of optimal_k
    let scores: Vec<f64> = grid
        .iter()
        .map(|&k| silhouette_score(&f, cut(&d, k).unwrap().labels()).unwrap())
        .collect();
    let argmax = grid[scores
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .unwrap()
        .0];
    assert_eq!(argmax, 3);
    assert_eq!(optimal_k(&f, &d, &grid, 5000).unwrap(), 3);
    // the subsampled path agrees here too
    assert_eq!(optimal_k(&f, &d, &grid, 50).unwrap(), 3);
    let cl = cut(&d, 3).unwrap();
    assert_eq!(cl.sizes(), lens.to_vec());
}

#[test]
fn eko_cluster_sizes_vary() {
    let (f, _) = synthesize_stream(&StreamSpec::new(1, 20_000, 60, 0.02, 0.1)).unwrap();
    let d = agglomerate(&f, Connectivity::Tight).unwrap();
    let s = cluster_stats(&cut(&d, 200).unwrap());
    assert_eq!(s.mean, 100.0);
    assert!(s.std > 0.0);
    assert!(s.min < s.mean && s.mean < s.max);
    assert!(s.min <= s.median && s.median <= s.max);
}

fn arb_features() -> impl Strategy<Value = FeatureMatrix> {
    (1usize..48, 1usize..4, any::<u64>()).prop_map(|(n, d, seed)| {
        let mut r = rng(seed);
        random_features(&mut r, n, d)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn tight_cuts_are_contiguous_and_nested(f in arb_features()) {
        let d = agglomerate(&f, Connectivity::Tight).unwrap();
        prop_assert_eq!(d.merges().len(), f.n() - 1);
        let mut finer = cut(&d, f.n()).unwrap();
        for k in (1..f.n()).rev() {
            let coarser = cut(&d, k).unwrap();
            prop_assert!(coarser.is_contiguous());
            prop_assert_eq!(coarser.k(), k);
            // every finer cluster sits inside one coarser cluster
            for members in finer.members() {
                let parent = coarser.label(members[0] as usize);
                prop_assert!(members.iter().all(|&m| coarser.label(m as usize) == parent));
            }
            finer = coarser;
        }
    }

    #[test]
    fn span_cuts_nest(f in arb_features(), span in 1u32..6) {
        let d = agglomerate(&f, Connectivity::Custom(span)).unwrap();
        for k in 1..f.n() {
            let fine = cut(&d, k + 1).unwrap();
            let coarse = cut(&d, k).unwrap();
            for members in fine.members() {
                let parent = coarse.label(members[0] as usize);
                prop_assert!(members.iter().all(|&m| coarse.label(m as usize) == parent));
            }
        }
    }

    #[test]
    fn scaling_scales_costs_quadratically(f in arb_features(), s in prop::sample::select(vec![0.5f32, 2.0, 4.0, 0.25])) {
        // powers of two keep the scaled features exact, so tie-breaks agree
        let base = agglomerate(&f, Connectivity::Tight).unwrap();
        let scaled = agglomerate(&f.scaled(s).unwrap(), Connectivity::Tight).unwrap();
        let s2 = (s as f64) * (s as f64);
        for (a, b) in base.merges().iter().zip(scaled.merges()) {
            prop_assert_eq!((a.left, a.right, a.size), (b.left, b.right, b.size));
            prop_assert!((a.cost * s2 - b.cost).abs() <= 1e-9 * b.cost.abs().max(1e-300));
        }
    }
}
