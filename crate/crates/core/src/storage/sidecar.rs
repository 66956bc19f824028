//! Cluster sidecar: the run table a decoder needs to propagate labels
//! without re-clustering.
//!
//! Text layout: header `n=<n> k=<k>`, then one `start,end,representative`
//! line per maximal run of frames sharing a cluster, in frame order. Runs
//! with the same representative belong to the same cluster, so clusters
//! that are not intervals are representable too.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufWriter, Write};
use std::path::Path;

use crate::clustering::Clustering;
use crate::error::{Error, Result};
use crate::sampler::SampleSet;

const KIND: &str = "label sidecar";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ClusterRun {
    pub start: u32,
    pub end: u32,
    pub representative: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelSidecar {
    pub n: usize,
    pub k: usize,
    pub runs: Vec<ClusterRun>,
}

/// Builds the run table for `cl` with representatives taken from `s`.
pub fn label_sidecar(cl: &Clustering, s: &SampleSet) -> Result<LabelSidecar> {
    if s.len() != cl.k() {
        return Err(Error::input(format!(
            "{} samples for {} clusters",
            s.len(),
            cl.k()
        )));
    }
    let mut rep = vec![None; cl.k()];
    for e in &s.entries {
        if e.frame_id as usize >= cl.n() {
            return Err(Error::input(format!(
                "sample {} beyond clustering",
                e.frame_id
            )));
        }
        let c = cl.label(e.frame_id as usize) as usize;
        if rep[c].replace(e.frame_id).is_some() {
            return Err(Error::input(format!("cluster {c} sampled twice")));
        }
    }
    let rep: Vec<u32> = rep.into_iter().map(|r| r.unwrap()).collect();
    let mut runs: Vec<ClusterRun> = Vec::new();
    for (i, &c) in cl.labels().iter().enumerate() {
        let r = rep[c as usize];
        match runs.last_mut() {
            Some(last) if last.representative == r => last.end = i as u32,
            _ => runs.push(ClusterRun {
                start: i as u32,
                end: i as u32,
                representative: r,
            }),
        }
    }
    Ok(LabelSidecar {
        n: cl.n(),
        k: cl.k(),
        runs,
    })
}

pub fn write_label_sidecar(cl: &Clustering, s: &SampleSet, path: impl AsRef<Path>) -> Result<()> {
    label_sidecar(cl, s)?.write_text(BufWriter::new(File::create(path)?))
}

impl LabelSidecar {
    /// Checks that runs tile `0..n` with no gap or overlap, that every
    /// representative lies inside one of its own runs, and that there are
    /// exactly `k` clusters.
    pub fn validate(&self) -> Result<()> {
        let mut next = 0u32;
        let mut rep_home: HashMap<u32, bool> = HashMap::new();
        for (i, r) in self.runs.iter().enumerate() {
            if r.start != next || r.end < r.start {
                return Err(Error::format(
                    KIND,
                    format!(
                        "run {i} covers {}..={}, expected to start at {next}",
                        r.start, r.end
                    ),
                ));
            }
            if i > 0 && self.runs[i - 1].representative == r.representative {
                return Err(Error::format(KIND, format!("run {i} is not maximal")));
            }
            let inside = (r.start..=r.end).contains(&r.representative);
            *rep_home.entry(r.representative).or_insert(false) |= inside;
            next = r.end + 1;
        }
        if next as usize != self.n {
            return Err(Error::format(
                KIND,
                format!("runs cover {next} frames, header says {}", self.n),
            ));
        }
        if rep_home.len() != self.k {
            return Err(Error::format(
                KIND,
                format!("{} clusters listed, header says {}", rep_home.len(), self.k),
            ));
        }
        if let Some((&r, _)) = rep_home.iter().find(|(_, &home)| !home) {
            return Err(Error::format(
                KIND,
                format!("representative {r} lies outside its cluster"),
            ));
        }
        Ok(())
    }

    /// Reconstructs the clustering with its representative map.
    pub fn to_clustering(&self) -> Result<Clustering> {
        self.validate()?;
        let mut labels = Vec::with_capacity(self.n);
        for r in &self.runs {
            labels.extend(std::iter::repeat_n(
                r.representative,
                (r.end - r.start + 1) as usize,
            ));
        }
        let cl = Clustering::from_labels(&labels)?;
        let mut reps = vec![0u32; cl.k()];
        for r in &self.runs {
            reps[cl.label(r.start as usize) as usize] = r.representative;
        }
        cl.with_representatives(reps)
    }

    pub fn write_text<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "n={} k={}", self.n, self.k)?;
        for r in &self.runs {
            writeln!(w, "{},{},{}", r.start, r.end, r.representative)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Parses and validates a sidecar.
    pub fn read_text<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::format(KIND, "empty file"))??;
        let (mut n, mut k) = (None, None);
        for tok in header.split_whitespace() {
            match tok.split_once('=') {
                Some(("n", v)) => n = v.parse::<usize>().ok(),
                Some(("k", v)) => k = v.parse::<usize>().ok(),
                _ => return Err(Error::format(KIND, format!("unexpected token {tok:?}"))),
            }
        }
        let n = n.ok_or_else(|| Error::format(KIND, "header lacks a valid n"))?;
        let k = k.ok_or_else(|| Error::format(KIND, "header lacks a valid k"))?;
        let mut runs = Vec::new();
        for (i, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let v: Vec<u32> = line
                .split(',')
                .map(|p| p.trim().parse())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| Error::format(KIND, format!("line {}: {line:?}", i + 2)))?;
            let [start, end, representative] = v[..] else {
                return Err(Error::format(
                    KIND,
                    format!("line {}: expected 3 fields", i + 2),
                ));
            };
            runs.push(ClusterRun {
                start,
                end,
                representative,
            });
        }
        let out = LabelSidecar { n, k, runs };
        out.validate()?;
        Ok(out)
    }
}
