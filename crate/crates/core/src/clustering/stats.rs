use serde::Serialize;

use super::Clustering;

/// Summary of cluster sizes, in frames.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClusterStats {
    pub mean: f64,
    /// Lower middle element for an even cluster count.
    pub median: f64,
    /// Population standard deviation.
    pub std: f64,
    pub min: f64,
    pub max: f64,
}

pub fn cluster_stats(cl: &Clustering) -> ClusterStats {
    size_stats(&cl.sizes())
}

/// Statistics over an arbitrary nonempty list of sizes.
pub fn size_stats(sizes: &[usize]) -> ClusterStats {
    assert!(!sizes.is_empty(), "size_stats needs at least one cluster");
    let mut sorted = sizes.to_vec();
    sorted.sort_unstable();
    let k = sorted.len() as f64;
    let total: usize = sorted.iter().sum();
    let mean = total as f64 / k;
    let var = sorted
        .iter()
        .map(|&s| {
            let t = s as f64 - mean;
            t * t
        })
        .sum::<f64>()
        / k;
    ClusterStats {
        mean,
        median: sorted[(sorted.len() - 1) / 2] as f64,
        std: var.sqrt(),
        min: sorted[0] as f64,
        max: *sorted.last().unwrap() as f64,
    }
}
