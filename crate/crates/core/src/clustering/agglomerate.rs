use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use super::{Connectivity, Dendrogram, Merge};
use crate::error::Result;
use crate::features::FeatureMatrix;

/// A mergeable pair waiting in the heap. Entries go stale once either side
/// has been merged away; they are discarded when popped.
#[derive(Debug, Clone, Copy)]
struct Candidate {
    cost: f64,
    left_start: u32,
    right_start: u32,
    left: u32,
    right: u32,
}

impl Candidate {
    fn key(&self) -> (u32, u32) {
        (self.left_start, self.right_start)
    }
}

impl PartialEq for Candidate {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Candidate {}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.cost
            .total_cmp(&other.cost)
            .then_with(|| self.key().cmp(&other.key()))
    }
}

struct State {
    d: usize,
    /// cluster id -> row of `centroids`
    slot: Vec<u32>,
    size: Vec<u32>,
    start: Vec<u32>,
    alive: Vec<bool>,
    neighbors: Vec<Vec<u32>>,
    centroids: Vec<f64>,
}

impl State {
    fn centroid(&self, id: u32) -> &[f64] {
        let s = self.slot[id as usize] as usize;
        &self.centroids[s * self.d..(s + 1) * self.d]
    }

    fn ward(&self, a: u32, b: u32) -> f64 {
        let (na, nb) = (self.size[a as usize] as f64, self.size[b as usize] as f64);
        let dist2: f64 = self
            .centroid(a)
            .iter()
            .zip(self.centroid(b))
            .map(|(x, y)| (x - y) * (x - y))
            .sum();
        na * nb / (na + nb) * dist2
    }

    fn candidate(&self, a: u32, b: u32) -> Candidate {
        let (sa, sb) = (self.start[a as usize], self.start[b as usize]);
        let (left, right, ls, rs) = if sa < sb {
            (a, b, sa, sb)
        } else {
            (b, a, sb, sa)
        };
        Candidate {
            cost: self.ward(a, b),
            left_start: ls,
            right_start: rs,
            left,
            right,
        }
    }
}

/// Greedy bottom-up Ward clustering under a temporal connectivity
/// constraint.
///
/// Each step merges the connected pair with the lowest Ward cost
/// `|A||B|/(|A|+|B|) · ‖μA − μB‖²`. Ties go to the pair whose left (earlier
/// starting) cluster starts first, then to the earlier right cluster.
///
/// Connectivity is tracked as a cluster adjacency graph seeded with every
/// frame pair at most `span` apart, so two clusters are linked exactly when
/// their member sets come within `span` frames. Under [`Connectivity::Tight`]
/// every cluster has at most two neighbours and the whole run is
/// `O(n log n)` heap work with `O(n·d)` memory.
pub fn agglomerate(f: &FeatureMatrix, c: Connectivity) -> Result<Dendrogram> {
    let n = f.n();
    let d = f.d();
    let span = c.span() as usize;

    let mut centroids = Vec::with_capacity(n * d);
    centroids.extend(f.as_slice().iter().map(|&v| v as f64));
    let mut st = State {
        d,
        slot: (0..n as u32).collect(),
        size: vec![1; n],
        start: (0..n as u32).collect(),
        alive: vec![true; n],
        neighbors: (0..n)
            .map(|i| {
                let lo = i.saturating_sub(span);
                let hi = (i + span).min(n - 1);
                (lo..=hi).filter(|&j| j != i).map(|j| j as u32).collect()
            })
            .collect(),
        centroids,
    };
    st.slot.reserve(n - 1);
    st.size.reserve(n - 1);
    st.start.reserve(n - 1);
    st.alive.reserve(n - 1);
    st.neighbors.reserve(n - 1);

    let mut heap: BinaryHeap<Reverse<Candidate>> = BinaryHeap::with_capacity(n * span.min(n));
    for i in 0..n as u32 {
        for &j in &st.neighbors[i as usize] {
            if j > i {
                heap.push(Reverse(st.candidate(i, j)));
            }
        }
    }

    let mut merges = Vec::with_capacity(n.saturating_sub(1));
    let mut merged_nbrs: Vec<u32> = Vec::new();
    while let Some(Reverse(best)) = heap.pop() {
        let (a, b) = (best.left, best.right);
        if !st.alive[a as usize] || !st.alive[b as usize] {
            continue;
        }
        let id = (n + merges.len()) as u32;
        let (sa, sb) = (st.size[a as usize], st.size[b as usize]);
        let size = sa + sb;
        merges.push(Merge {
            left: a,
            right: b,
            cost: best.cost,
            size,
        });

        // new centroid goes into the left cluster's slot
        let slot_a = st.slot[a as usize] as usize;
        let slot_b = st.slot[b as usize] as usize;
        // step form keeps equal centroids exactly equal
        let wb = sb as f64 / size as f64;
        for j in 0..d {
            let va = st.centroids[slot_a * d + j];
            let vb = st.centroids[slot_b * d + j];
            st.centroids[slot_a * d + j] = va + (vb - va) * wb;
        }
        st.slot.push(slot_a as u32);
        st.size.push(size);
        st.start.push(best.left_start);
        st.alive.push(true);
        st.alive[a as usize] = false;
        st.alive[b as usize] = false;

        merged_nbrs.clear();
        merged_nbrs.extend(
            st.neighbors[a as usize]
                .iter()
                .chain(&st.neighbors[b as usize])
                .copied()
                .filter(|&x| x != a && x != b),
        );
        merged_nbrs.sort_unstable();
        merged_nbrs.dedup();
        st.neighbors[a as usize] = Vec::new();
        st.neighbors[b as usize] = Vec::new();
        for &x in &merged_nbrs {
            let list = &mut st.neighbors[x as usize];
            list.retain(|&y| y != a && y != b);
            list.push(id);
        }
        st.neighbors.push(merged_nbrs.clone());
        for &x in &merged_nbrs {
            heap.push(Reverse(st.candidate(id, x)));
        }
    }
    Dendrogram::from_parts(n, merges, c)
}
