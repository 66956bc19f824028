//! Label propagation from sampled frames and precision/recall scoring.

mod synth;

pub use synth::{render_frames, synthesize_stream, StreamSpec};

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use serde::Serialize;

use crate::clustering::Clustering;
use crate::error::{Error, Result};
use crate::sampler::SampleSet;

/// Per-frame binary labels.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LabelVector(Vec<u8>);

impl LabelVector {
    pub fn new(labels: Vec<u8>) -> Result<Self> {
        if let Some(i) = labels.iter().position(|&v| v > 1) {
            return Err(Error::input(format!(
                "label at frame {i} is {}, expected 0 or 1",
                labels[i]
            )));
        }
        Ok(LabelVector(labels))
    }

    pub fn zeros(n: usize) -> Self {
        LabelVector(vec![0; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[u8] {
        &self.0
    }

    pub fn get(&self, i: usize) -> u8 {
        self.0[i]
    }

    pub fn positives(&self) -> usize {
        self.0.iter().filter(|&&v| v == 1).count()
    }

    /// Labels of the given frames, keyed by frame id.
    pub fn at(&self, frames: &[u32]) -> Result<BTreeMap<u32, u8>> {
        frames
            .iter()
            .map(|&f| {
                self.0
                    .get(f as usize)
                    .map(|&v| (f, v))
                    .ok_or_else(|| Error::input(format!("frame {f} beyond {} labels", self.len())))
            })
            .collect()
    }

    /// One `0` or `1` per line.
    pub fn write_text<W: Write>(&self, mut w: W) -> Result<()> {
        let mut buf = Vec::with_capacity(self.0.len() * 2);
        for &v in &self.0 {
            buf.push(b'0' + v);
            buf.push(b'\n');
        }
        w.write_all(&buf)?;
        w.flush()?;
        Ok(())
    }

    pub fn read_text<R: BufRead>(r: R) -> Result<Self> {
        let mut out = Vec::new();
        for (i, line) in r.lines().enumerate() {
            let line = line?;
            match line.trim() {
                "0" => out.push(0),
                "1" => out.push(1),
                "" => continue,
                other => {
                    return Err(Error::format(
                        "label file",
                        format!("line {}: expected 0 or 1, got {other:?}", i + 1),
                    ))
                }
            }
        }
        Ok(LabelVector(out))
    }
}

/// Confusion counts and derived scores, with 1 as the positive class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Metrics {
    pub frames: usize,
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub tn: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl Metrics {
    /// `key=value` lines, six decimals for the scores.
    pub fn to_key_value(&self) -> String {
        format!(
            "frames={}\ntp={}\nfp={}\nfn={}\ntn={}\nprecision={:.6}\nrecall={:.6}\nf1={:.6}\n",
            self.frames, self.tp, self.fp, self.fn_, self.tn, self.precision, self.recall, self.f1
        )
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Gives every frame the label of its cluster's sampled frame.
///
/// `sample_labels` must hold exactly the sampled frames, and the sample set
/// must hold exactly one frame per cluster of `cl`.
pub fn propagate(
    s: &SampleSet,
    cl: &Clustering,
    sample_labels: &BTreeMap<u32, u8>,
) -> Result<LabelVector> {
    if s.len() != cl.k() {
        return Err(Error::input(format!(
            "{} samples for {} clusters",
            s.len(),
            cl.k()
        )));
    }
    if sample_labels.len() != s.len() {
        return Err(Error::input(format!(
            "{} sample labels for {} samples",
            sample_labels.len(),
            s.len()
        )));
    }
    let mut per_cluster: Vec<Option<u8>> = vec![None; cl.k()];
    for e in &s.entries {
        if e.frame_id as usize >= cl.n() {
            return Err(Error::input(format!(
                "sample frame {} beyond {} frames",
                e.frame_id,
                cl.n()
            )));
        }
        let label = *sample_labels
            .get(&e.frame_id)
            .ok_or_else(|| Error::input(format!("no label for sampled frame {}", e.frame_id)))?;
        if label > 1 {
            return Err(Error::input(format!(
                "label {label} for frame {} is not binary",
                e.frame_id
            )));
        }
        let c = cl.label(e.frame_id as usize) as usize;
        if per_cluster[c].replace(label).is_some() {
            return Err(Error::input(format!(
                "cluster {c} has more than one sample"
            )));
        }
    }
    // every cluster got exactly one label: len(s) == k and no duplicates
    let per_cluster: Vec<u8> = per_cluster.into_iter().map(|v| v.unwrap()).collect();
    Ok(LabelVector(
        cl.labels()
            .iter()
            .map(|&c| per_cluster[c as usize])
            .collect(),
    ))
}

/// Scores `pred` against `truth`. Empty denominators give 0.
pub fn evaluate(pred: &LabelVector, truth: &LabelVector) -> Result<Metrics> {
    if pred.len() != truth.len() {
        return Err(Error::input(format!(
            "prediction has {} frames, ground truth {}",
            pred.len(),
            truth.len()
        )));
    }
    let (mut tp, mut fp, mut fn_, mut tn) = (0, 0, 0, 0);
    for (&p, &t) in pred.0.iter().zip(&truth.0) {
        match (p, t) {
            (1, 1) => tp += 1,
            (1, 0) => fp += 1,
            (0, 1) => fn_ += 1,
            _ => tn += 1,
        }
    }
    let precision = ratio(tp, tp + fp);
    let recall = ratio(tp, tp + fn_);
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    Ok(Metrics {
        frames: pred.len(),
        tp,
        fp,
        fn_,
        tn,
        precision,
        recall,
        f1,
    })
}
