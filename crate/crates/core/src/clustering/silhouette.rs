use std::collections::HashMap;

use super::{cut, Dendrogram};
use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::par;

fn euclidean(a: &[f32], b: &[f32]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| {
            let t = x as f64 - y as f64;
            t * t
        })
        .sum::<f64>()
        .sqrt()
}

/// Mean silhouette width over all rows of `f`.
///
/// Points in singleton clusters score 0, as do points with `a = b = 0`.
pub fn silhouette_score(f: &FeatureMatrix, labels: &[u32]) -> Result<f64> {
    if labels.len() != f.n() {
        return Err(Error::input(format!(
            "{} labels for {} feature rows",
            labels.len(),
            f.n()
        )));
    }
    let mut dense: HashMap<u32, usize> = HashMap::new();
    let ids: Vec<usize> = labels
        .iter()
        .map(|&l| {
            let next = dense.len();
            *dense.entry(l).or_insert(next)
        })
        .collect();
    let k = dense.len();
    if k < 2 {
        return Err(Error::input(format!(
            "silhouette needs at least 2 clusters, got {k}"
        )));
    }
    let mut sizes = vec![0usize; k];
    for &c in &ids {
        sizes[c] += 1;
    }

    let points: Vec<usize> = (0..f.n()).collect();
    let widths = par::map_collect(&points, |&i| {
        let own = ids[i];
        if sizes[own] == 1 {
            return 0.0;
        }
        let mut sums = vec![0.0f64; k];
        let ri = f.row(i);
        for (j, &c) in ids.iter().enumerate() {
            if j != i {
                sums[c] += euclidean(ri, f.row(j));
            }
        }
        let a = sums[own] / (sizes[own] - 1) as f64;
        let b = (0..k)
            .filter(|&c| c != own)
            .map(|c| sums[c] / sizes[c] as f64)
            .fold(f64::INFINITY, f64::min);
        let denom = a.max(b);
        if denom > 0.0 {
            (b - a) / denom
        } else {
            0.0
        }
    });
    Ok(widths.iter().sum::<f64>() / f.n() as f64)
}

/// Stride of the evenly spaced subsample used by [`optimal_k`].
pub fn subsample_stride(n: usize, cap: usize) -> usize {
    n.div_ceil(cap.max(1)).max(1)
}

/// Eight geometrically spaced cluster counts from `⌈n/1000⌉` to `⌈n/10⌉`,
/// clamped to `2..=n` and deduplicated.
pub fn default_k_grid(n: usize) -> Vec<usize> {
    if n < 2 {
        return Vec::new();
    }
    let lo = n.div_ceil(1000).max(2);
    let hi = n.div_ceil(10).clamp(lo, n);
    let mut grid: Vec<usize> = (0..8)
        .map(|j| {
            let t = j as f64 / 7.0;
            let v = (lo as f64) * ((hi as f64) / (lo as f64)).powf(t);
            (v.round() as usize).clamp(lo, hi)
        })
        .collect();
    grid.dedup();
    grid
}

/// Picks the cluster count from `k_grid` with the highest silhouette score,
/// evaluated on every `⌈n/cap⌉`-th frame. Ties go to the smaller count;
/// candidates whose subsample holds fewer than two clusters are skipped, and
/// if every candidate is skipped the smallest one is returned.
pub fn optimal_k(
    f: &FeatureMatrix,
    d: &Dendrogram,
    k_grid: &[usize],
    subsample_cap: usize,
) -> Result<usize> {
    let n = f.n();
    if d.n() != n {
        return Err(Error::input(format!(
            "dendrogram has {} leaves, features have {n} rows",
            d.n()
        )));
    }
    if k_grid.is_empty() {
        return Err(Error::input("k grid is empty"));
    }
    if let Some(&bad) = k_grid.iter().find(|&&k| k < 2 || k > n) {
        return Err(Error::input(format!("candidate k={bad} outside 2..={n}")));
    }
    let mut grid = k_grid.to_vec();
    grid.sort_unstable();
    grid.dedup();

    let stride = subsample_stride(n, subsample_cap);
    let picks: Vec<usize> = (0..n).step_by(stride).collect();
    let sub = f.select_rows(&picks)?;
    let scores = par::map_collect(&grid, |&k| -> Result<f64> {
        let cl = cut(d, k)?;
        let labels: Vec<u32> = picks.iter().map(|&i| cl.label(i)).collect();
        let distinct = labels
            .iter()
            .collect::<std::collections::HashSet<_>>()
            .len();
        if distinct < 2 {
            return Ok(f64::NEG_INFINITY);
        }
        silhouette_score(&sub, &labels)
    });
    let mut best = (grid[0], f64::NEG_INFINITY);
    for (&k, s) in grid.iter().zip(scores) {
        let s = s?;
        if s > best.1 {
            best = (k, s);
        }
    }
    Ok(best.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clustering::{agglomerate, Connectivity};

    fn one_d(values: &[f32]) -> FeatureMatrix {
        FeatureMatrix::new(values.len(), 1, values.to_vec()).unwrap()
    }

    /// Direct transcription of the silhouette definition, one point at a
    /// time, with no shared accumulators.
    fn reference(values: &[f64], labels: &[u32]) -> f64 {
        let n = values.len();
        let mut total = 0.0;
        for i in 0..n {
            let same: Vec<f64> = (0..n)
                .filter(|&j| j != i && labels[j] == labels[i])
                .map(|j| (values[i] - values[j]).abs())
                .collect();
            if same.is_empty() {
                continue;
            }
            let a = same.iter().sum::<f64>() / same.len() as f64;
            let mut others: Vec<u32> = labels.iter().copied().filter(|&l| l != labels[i]).collect();
            others.sort();
            others.dedup();
            let b = others
                .iter()
                .map(|&c| {
                    let d: Vec<f64> = (0..n)
                        .filter(|&j| labels[j] == c)
                        .map(|j| (values[i] - values[j]).abs())
                        .collect();
                    d.iter().sum::<f64>() / d.len() as f64
                })
                .fold(f64::INFINITY, f64::min);
            total += (b - a) / a.max(b);
        }
        total / n as f64
    }

    #[test]
    fn four_point_hand_example() {
        let f = one_d(&[0.0, 1.0, 10.0, 11.0]);
        let labels = [0, 0, 1, 1];
        let s = silhouette_score(&f, &labels).unwrap();
        let expect = reference(&[0.0, 1.0, 10.0, 11.0], &labels);
        // per point: 9.5/10.5, 8.5/9.5, 8.5/9.5, 9.5/10.5
        let hand = (9.5 / 10.5 + 8.5 / 9.5) / 2.0;
        assert!((expect - hand).abs() < 1e-12);
        assert!((s - hand).abs() < 1e-12, "{s}");
    }

    #[test]
    fn separated_identical_blobs_score_one() {
        let f = one_d(&[2.0, 2.0, 2.0, 50.0, 50.0]);
        assert_eq!(silhouette_score(&f, &[0, 0, 0, 1, 1]).unwrap(), 1.0);
    }

    #[test]
    fn singletons_and_degenerate() {
        let f = one_d(&[0.0, 1.0, 2.0]);
        let s = silhouette_score(&f, &[0, 1, 2]).unwrap();
        assert_eq!(s, 0.0);
        let flat = one_d(&[4.0; 4]);
        assert_eq!(silhouette_score(&flat, &[0, 0, 1, 1]).unwrap(), 0.0);
        assert!(silhouette_score(&f, &[1, 1, 1]).is_err());
        assert!(silhouette_score(&f, &[0, 1]).is_err());
    }

    #[test]
    fn matches_reference_on_arbitrary_labels() {
        let vals = [0.3, 2.0, 1.1, 7.5, 7.0, 3.3, 9.9, 0.0];
        let labels = [5, 5, 2, 9, 9, 2, 9, 5];
        let f = one_d(&vals.map(|v| v as f32));
        let want = reference(&vals.map(|v| v as f32 as f64), &labels);
        assert!((silhouette_score(&f, &labels).unwrap() - want).abs() < 1e-12);
    }

    #[test]
    fn grid_shape() {
        assert_eq!(default_k_grid(1), Vec::<usize>::new());
        assert_eq!(default_k_grid(2), vec![2]);
        let g = default_k_grid(100_000);
        assert_eq!(g.first(), Some(&100));
        assert_eq!(g.last(), Some(&10_000));
        assert_eq!(g.len(), 8);
        assert!(g.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn two_constant_segments() {
        let mut v = vec![0.0f32; 40];
        v.extend(vec![5.0f32; 60]);
        let f = one_d(&v);
        let d = agglomerate(&f, Connectivity::Tight).unwrap();
        assert_eq!(optimal_k(&f, &d, &[2, 3, 5, 10], 5000).unwrap(), 2);
    }

    #[test]
    fn constant_stream_returns_smallest() {
        let f = one_d(&[1.0; 30]);
        let d = agglomerate(&f, Connectivity::Tight).unwrap();
        assert_eq!(optimal_k(&f, &d, &[7, 3, 5], 5000).unwrap(), 3);
    }

    #[test]
    fn rejects_bad_grid() {
        let f = one_d(&[0.0, 1.0, 2.0]);
        let d = agglomerate(&f, Connectivity::Tight).unwrap();
        assert!(optimal_k(&f, &d, &[], 10).is_err());
        assert!(optimal_k(&f, &d, &[1], 10).is_err());
        assert!(optimal_k(&f, &d, &[4], 10).is_err());
    }

    #[test]
    fn subsample_spacing() {
        assert_eq!(subsample_stride(100, 5000), 1);
        assert_eq!(subsample_stride(10_001, 5000), 3);
        assert_eq!(subsample_stride(10_000, 5000), 2);
    }
}
