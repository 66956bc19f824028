//! Representative frame selection and the uniform / fixed-GOP baselines.

use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use crate::clustering::{cut, Clustering, Dendrogram};
use crate::error::{Error, Result};
use crate::features::FeatureMatrix;

/// How a cluster's representative is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Policy {
    /// Earliest member.
    First,
    /// Member nearest to the cluster centroid in feature space.
    Mean,
    /// Temporal median member (lower middle for even sizes).
    Middle,
}

impl Policy {
    pub const ALL: [Policy; 3] = [Policy::First, Policy::Mean, Policy::Middle];

    pub fn as_str(self) -> &'static str {
        match self {
            Policy::First => "first",
            Policy::Mean => "mean",
            Policy::Middle => "middle",
        }
    }
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Policy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "first" => Ok(Policy::First),
            "mean" => Ok(Policy::Mean),
            "middle" => Ok(Policy::Middle),
            other => Err(Error::input(format!(
                "policy must be first, mean or middle, got {other:?}"
            ))),
        }
    }
}

/// Where a sample set came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SampleOrigin {
    Cluster(Policy),
    Uniform,
    Gop,
}

impl fmt::Display for SampleOrigin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SampleOrigin::Cluster(p) => p.fmt(f),
            SampleOrigin::Uniform => f.write_str("uniform"),
            SampleOrigin::Gop => f.write_str("gop"),
        }
    }
}

impl FromStr for SampleOrigin {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(SampleOrigin::Uniform),
            "gop" => Ok(SampleOrigin::Gop),
            other => other.parse().map(SampleOrigin::Cluster),
        }
    }
}

/// One sampled frame and the extent of the cluster it represents.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SampleEntry {
    pub frame_id: u32,
    pub cluster_id: u32,
    /// First member frame of the cluster.
    pub cluster_start: u32,
    /// Last member frame of the cluster.
    pub cluster_end: u32,
}

/// Sampled frames, one per cluster, in ascending frame order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SampleSet {
    pub entries: Vec<SampleEntry>,
    pub origin: SampleOrigin,
    pub budget: usize,
}

impl SampleSet {
    pub fn frame_ids(&self) -> Vec<u32> {
        self.entries.iter().map(|e| e.frame_id).collect()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Text manifest: a `policy=<p> budget=<m>` header followed by one
    /// `frame_id,cluster_start,cluster_end` line per entry.
    pub fn write_text<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "policy={} budget={}", self.origin, self.budget)?;
        for e in &self.entries {
            writeln!(w, "{},{},{}", e.frame_id, e.cluster_start, e.cluster_end)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Parses [`write_text`](Self::write_text) output. Cluster ids are
    /// assigned in line order, which matches the clustering's labels whenever
    /// clusters are intervals.
    pub fn read_text<R: BufRead>(r: R) -> Result<Self> {
        const KIND: &str = "sample manifest";
        let mut lines = r.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::format(KIND, "empty file"))??;
        let mut origin = None;
        let mut budget = None;
        for tok in header.split_whitespace() {
            match tok.split_once('=') {
                Some(("policy", v)) => origin = Some(v.parse::<SampleOrigin>()?),
                Some(("budget", v)) => {
                    budget = Some(
                        v.parse::<usize>()
                            .map_err(|_| Error::format(KIND, format!("bad budget {v:?}")))?,
                    )
                }
                _ => {
                    return Err(Error::format(
                        KIND,
                        format!("unexpected header token {tok:?}"),
                    ))
                }
            }
        }
        let origin = origin.ok_or_else(|| Error::format(KIND, "header lacks policy"))?;
        let budget = budget.ok_or_else(|| Error::format(KIND, "header lacks budget"))?;
        let mut entries = Vec::new();
        for (i, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let parts: Vec<u32> = line
                .split(',')
                .map(|p| p.trim().parse::<u32>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| Error::format(KIND, format!("line {}: {line:?}", i + 2)))?;
            let [frame_id, cluster_start, cluster_end] = parts[..] else {
                return Err(Error::format(
                    KIND,
                    format!("line {}: expected 3 fields", i + 2),
                ));
            };
            if !(cluster_start <= frame_id && frame_id <= cluster_end) {
                return Err(Error::format(
                    KIND,
                    format!("line {}: frame {frame_id} outside its cluster", i + 2),
                ));
            }
            if let Some(prev) = entries.last().map(|e: &SampleEntry| e.frame_id) {
                if frame_id <= prev {
                    return Err(Error::format(KIND, "frame ids must strictly increase"));
                }
            }
            entries.push(SampleEntry {
                frame_id,
                cluster_id: entries.len() as u32,
                cluster_start,
                cluster_end,
            });
        }
        Ok(SampleSet {
            entries,
            origin,
            budget,
        })
    }
}

fn nearest_to_centroid(members: &[u32], f: &FeatureMatrix) -> u32 {
    let d = f.d();
    let mut centroid = vec![0.0f64; d];
    for &m in members {
        for (c, &v) in centroid.iter_mut().zip(f.row(m as usize)) {
            *c += v as f64;
        }
    }
    let inv = 1.0 / members.len() as f64;
    centroid.iter_mut().for_each(|c| *c *= inv);
    let mut best = (members[0], f64::INFINITY);
    for &m in members {
        let dist: f64 = f
            .row(m as usize)
            .iter()
            .zip(&centroid)
            .map(|(&v, c)| {
                let t = v as f64 - c;
                t * t
            })
            .sum();
        // members are ascending, so strict < keeps the smaller id on ties
        if dist < best.1 {
            best = (m, dist);
        }
    }
    best.0
}

/// Picks one representative per cluster. Returns the samples together with
/// a copy of the clustering whose representative map is filled in.
pub fn select_frames(
    cl: &Clustering,
    f: &FeatureMatrix,
    p: Policy,
) -> Result<(SampleSet, Clustering)> {
    if cl.n() != f.n() {
        return Err(Error::input(format!(
            "clustering covers {} frames, features cover {}",
            cl.n(),
            f.n()
        )));
    }
    let members = cl.members();
    let reps: Vec<u32> = members
        .iter()
        .map(|m| match p {
            Policy::First => m[0],
            Policy::Middle => m[(m.len() - 1) / 2],
            Policy::Mean => nearest_to_centroid(m, f),
        })
        .collect();
    let hulls = cl.hulls();
    let mut entries: Vec<SampleEntry> = reps
        .iter()
        .enumerate()
        .map(|(c, &frame_id)| SampleEntry {
            frame_id,
            cluster_id: c as u32,
            cluster_start: hulls[c].0,
            cluster_end: hulls[c].1,
        })
        .collect();
    entries.sort_by_key(|e| e.frame_id);
    let with_reps = cl.clone().with_representatives(reps)?;
    Ok((
        SampleSet {
            entries,
            origin: SampleOrigin::Cluster(p),
            budget: cl.k(),
        },
        with_reps,
    ))
}

/// Cuts the cached dendrogram into `budget` clusters and samples each.
pub fn samples_for_budget(
    d: &Dendrogram,
    f: &FeatureMatrix,
    budget: usize,
    p: Policy,
) -> Result<(SampleSet, Clustering)> {
    if budget == 0 || budget > d.n() {
        return Err(Error::input(format!(
            "budget {budget} outside 1..={}",
            d.n()
        )));
    }
    let cl = cut(d, budget)?;
    let (mut s, cl) = select_frames(&cl, f, p)?;
    s.budget = budget;
    Ok((s, cl))
}

/// Frames `⌊i·n/m⌋` for `i < m`; each owns the frames nearer to it than to
/// any other pick (midpoints go to the earlier pick).
pub fn uniform_baseline(n: usize, m: usize) -> Result<SampleSet> {
    if n == 0 || m == 0 || m > n {
        return Err(Error::input(format!(
            "uniform baseline needs 1 <= m <= n, got n={n} m={m}"
        )));
    }
    let mut picks: Vec<u32> = (0..m).map(|i| (i * n / m) as u32).collect();
    picks.dedup();
    let entries = picks
        .iter()
        .enumerate()
        .map(|(j, &p)| {
            let start = if j == 0 {
                0
            } else {
                (picks[j - 1] + p) / 2 + 1
            };
            let end = match picks.get(j + 1) {
                Some(&next) => (p + next) / 2,
                None => n as u32 - 1,
            };
            SampleEntry {
                frame_id: p,
                cluster_id: j as u32,
                cluster_start: start,
                cluster_end: end,
            }
        })
        .collect();
    Ok(SampleSet {
        entries,
        origin: SampleOrigin::Uniform,
        budget: m,
    })
}

/// First frame of every fixed-size group of pictures.
pub fn gop_baseline(n: usize, gop_size: usize) -> Result<SampleSet> {
    if n == 0 || gop_size == 0 {
        return Err(Error::input(format!(
            "gop baseline needs n >= 1 and gop_size >= 1, got n={n} gop_size={gop_size}"
        )));
    }
    let entries: Vec<SampleEntry> = (0..n)
        .step_by(gop_size)
        .enumerate()
        .map(|(j, start)| SampleEntry {
            frame_id: start as u32,
            cluster_id: j as u32,
            cluster_start: start as u32,
            cluster_end: ((start + gop_size).min(n) - 1) as u32,
        })
        .collect();
    let budget = entries.len();
    Ok(SampleSet {
        entries,
        origin: SampleOrigin::Gop,
        budget,
    })
}

/// Rebuilds the clustering described by a sample set whose cluster extents
/// tile `0..n`, with each sample as its cluster's representative.
pub fn clustering_from_intervals(n: usize, s: &SampleSet) -> Result<Clustering> {
    if s.entries.is_empty() {
        return Err(Error::input("sample set is empty"));
    }
    let mut labels = Vec::with_capacity(n);
    let mut next = 0u32;
    for (c, e) in s.entries.iter().enumerate() {
        if e.cluster_start != next || e.cluster_end < e.cluster_start {
            return Err(Error::input(format!(
                "cluster {c} spans {}..={} but frame {next} is next",
                e.cluster_start, e.cluster_end
            )));
        }
        labels.extend(std::iter::repeat_n(
            c as u32,
            (e.cluster_end - e.cluster_start + 1) as usize,
        ));
        next = e.cluster_end + 1;
    }
    if next as usize != n {
        return Err(Error::input(format!(
            "cluster intervals cover {next} frames, expected {n}"
        )));
    }
    Clustering::from_labels(&labels)?.with_representatives(s.frame_ids())
}
