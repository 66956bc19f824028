//! Temporally constrained Ward clustering.
//!
//! [`agglomerate`] builds a [`Dendrogram`] once; [`cut`] turns it into a
//! [`Clustering`] for any cluster count without re-clustering.

mod agglomerate;
mod file;
mod silhouette;
mod stats;

use std::fmt;
use std::str::FromStr;

pub use agglomerate::agglomerate;
pub use file::{load_dendrogram, read_dendrogram, save_dendrogram, write_dendrogram};
pub use silhouette::{default_k_grid, optimal_k, silhouette_score, subsample_stride};
pub use stats::{cluster_stats, size_stats, ClusterStats};

use crate::error::{Error, Result};

/// Which clusters may merge: two clusters are connected when the smallest
/// distance between a frame of one and a frame of the other is at most
/// [`span`](Connectivity::span) frames.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Connectivity {
    /// Only abutting intervals merge (span 1).
    Tight,
    /// Span 50.
    Medium,
    /// Span 100.
    Loose,
    Custom(u32),
}

impl Connectivity {
    pub const MEDIUM_SPAN: u32 = 50;
    pub const LOOSE_SPAN: u32 = 100;

    pub fn custom(span: u32) -> Result<Self> {
        if span == 0 {
            return Err(Error::input("connectivity span must be at least 1"));
        }
        Ok(Connectivity::Custom(span))
    }

    pub fn span(self) -> u32 {
        match self {
            Connectivity::Tight => 1,
            Connectivity::Medium => Self::MEDIUM_SPAN,
            Connectivity::Loose => Self::LOOSE_SPAN,
            Connectivity::Custom(s) => s,
        }
    }

    pub(crate) fn kind_code(self) -> u8 {
        match self {
            Connectivity::Tight => 0,
            Connectivity::Medium => 1,
            Connectivity::Loose => 2,
            Connectivity::Custom(_) => 3,
        }
    }

    pub(crate) fn from_code(code: u8, span: u32) -> Option<Self> {
        let c = match code {
            0 => Connectivity::Tight,
            1 => Connectivity::Medium,
            2 => Connectivity::Loose,
            3 if span >= 1 => Connectivity::Custom(span),
            _ => return None,
        };
        (c.span() == span).then_some(c)
    }
}

impl fmt::Display for Connectivity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Connectivity::Tight => f.write_str("tight"),
            Connectivity::Medium => f.write_str("medium"),
            Connectivity::Loose => f.write_str("loose"),
            Connectivity::Custom(s) => write!(f, "span:{s}"),
        }
    }
}

impl FromStr for Connectivity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tight" => Ok(Connectivity::Tight),
            "medium" => Ok(Connectivity::Medium),
            "loose" => Ok(Connectivity::Loose),
            other => {
                let span = other
                    .strip_prefix("span:")
                    .and_then(|v| v.parse::<u32>().ok())
                    .ok_or_else(|| {
                        Error::input(format!(
                            "constraint must be tight, medium, loose or span:N, got {other:?}"
                        ))
                    })?;
                Connectivity::custom(span)
            }
        }
    }
}

/// One agglomeration step. Leaves are ids `0..n`; the merge at position `s`
/// creates id `n + s`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Merge {
    /// The cluster whose earliest frame comes first.
    pub left: u32,
    pub right: u32,
    /// Ward cost of the merge.
    pub cost: f64,
    /// Frames in the merged cluster.
    pub size: u32,
}

/// Recorded merge sequence of a constrained agglomeration.
#[derive(Debug, Clone, PartialEq)]
pub struct Dendrogram {
    n: usize,
    merges: Vec<Merge>,
    constraint: Connectivity,
}

impl Dendrogram {
    /// Checks that ids are consumed at most once and that sizes add up.
    pub fn from_parts(n: usize, merges: Vec<Merge>, constraint: Connectivity) -> Result<Self> {
        if n == 0 {
            return Err(Error::input("dendrogram needs at least one leaf"));
        }
        if merges.len() >= n {
            return Err(Error::input(format!(
                "{} merges for {n} leaves",
                merges.len()
            )));
        }
        let mut sizes: Vec<u32> = vec![1; n];
        let mut used = vec![false; n + merges.len()];
        for (step, m) in merges.iter().enumerate() {
            let limit = n + step;
            for id in [m.left, m.right] {
                let id = id as usize;
                if id >= limit {
                    return Err(Error::input(format!(
                        "merge {step} references cluster {id} before it exists"
                    )));
                }
                if used[id] {
                    return Err(Error::input(format!("merge {step} reuses cluster {id}")));
                }
                used[id] = true;
            }
            if m.left == m.right {
                return Err(Error::input(format!(
                    "merge {step} joins a cluster with itself"
                )));
            }
            let expect = sizes[m.left as usize] + sizes[m.right as usize];
            if m.size != expect {
                return Err(Error::input(format!(
                    "merge {step} size {} but parts sum to {expect}",
                    m.size
                )));
            }
            if !m.cost.is_finite() {
                return Err(Error::input(format!("merge {step} has non-finite cost")));
            }
            sizes.push(expect);
        }
        Ok(Dendrogram {
            n,
            merges,
            constraint,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn merges(&self) -> &[Merge] {
        &self.merges
    }

    pub fn constraint(&self) -> Connectivity {
        self.constraint
    }

    /// Smallest cluster count reachable by cutting.
    pub fn min_clusters(&self) -> usize {
        self.n - self.merges.len()
    }
}

/// A partition of frames `0..n` into `k` clusters, labelled in order of
/// their earliest frame.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Clustering {
    labels: Vec<u32>,
    k: usize,
    representative: Vec<u32>,
}

impl Clustering {
    /// Builds a clustering from arbitrary per-frame ids, relabelling them
    /// `0..k` by first appearance.
    pub fn from_labels(raw: &[u32]) -> Result<Self> {
        if raw.is_empty() {
            return Err(Error::input("clustering needs at least one frame"));
        }
        let mut remap = std::collections::HashMap::new();
        let labels = raw
            .iter()
            .map(|&l| {
                let next = remap.len() as u32;
                *remap.entry(l).or_insert(next)
            })
            .collect();
        Ok(Clustering {
            labels,
            k: remap.len(),
            representative: Vec::new(),
        })
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn label(&self, frame: usize) -> u32 {
        self.labels[frame]
    }

    /// Representative frame per cluster; empty until a sampler fills it.
    pub fn representatives(&self) -> &[u32] {
        &self.representative
    }

    pub fn with_representatives(mut self, reps: Vec<u32>) -> Result<Self> {
        if reps.len() != self.k {
            return Err(Error::input(format!(
                "{} representatives for {} clusters",
                reps.len(),
                self.k
            )));
        }
        for (c, &r) in reps.iter().enumerate() {
            if r as usize >= self.n() || self.labels[r as usize] != c as u32 {
                return Err(Error::input(format!(
                    "frame {r} is not a member of cluster {c}"
                )));
            }
        }
        self.representative = reps;
        Ok(self)
    }

    /// Member frames per cluster, each ascending.
    pub fn members(&self) -> Vec<Vec<u32>> {
        let mut out = vec![Vec::new(); self.k];
        for (i, &l) in self.labels.iter().enumerate() {
            out[l as usize].push(i as u32);
        }
        out
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut out = vec![0; self.k];
        for &l in &self.labels {
            out[l as usize] += 1;
        }
        out
    }

    /// `(first, last)` frame of each cluster.
    pub fn hulls(&self) -> Vec<(u32, u32)> {
        let mut out = vec![(u32::MAX, 0); self.k];
        for (i, &l) in self.labels.iter().enumerate() {
            let h = &mut out[l as usize];
            h.0 = h.0.min(i as u32);
            h.1 = h.1.max(i as u32);
        }
        out
    }

    /// True when every cluster is an interval of consecutive frames.
    pub fn is_contiguous(&self) -> bool {
        // With first-appearance labelling, contiguity means labels never
        // decrease and step by at most one.
        self.labels
            .windows(2)
            .all(|w| w[1] == w[0] || w[1] == w[0] + 1)
    }
}

/// Applies the first `n − k` merges and returns the resulting `k` clusters.
pub fn cut(d: &Dendrogram, k: usize) -> Result<Clustering> {
    let n = d.n;
    if k == 0 || k > n || k < d.min_clusters() {
        return Err(Error::input(format!(
            "cluster count {k} outside {}..={n}",
            d.min_clusters()
        )));
    }
    let steps = n - k;
    // parent pointers over leaves; `leaf_of[id]` is any leaf inside `id`
    let mut parent: Vec<u32> = (0..n as u32).collect();
    let mut leaf_of: Vec<u32> = (0..n as u32).collect();
    leaf_of.reserve(steps);
    fn find(parent: &mut [u32], mut x: u32) -> u32 {
        while parent[x as usize] != x {
            let up = parent[parent[x as usize] as usize];
            parent[x as usize] = up;
            x = up;
        }
        x
    }
    for m in &d.merges[..steps] {
        let a = find(&mut parent, leaf_of[m.left as usize]);
        let b = find(&mut parent, leaf_of[m.right as usize]);
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        parent[hi as usize] = lo;
        leaf_of.push(lo);
    }
    let roots: Vec<u32> = (0..n as u32).map(|i| find(&mut parent, i)).collect();
    Clustering::from_labels(&roots)
}
