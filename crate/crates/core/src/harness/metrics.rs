use serde::{Deserialize, Serialize};

use super::data::Dataset;
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClsMetrics {
    pub top1: f64,
    pub top5: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SegMetrics {
    pub oa: f64,
    pub miou: f64,
    pub precision: f64,
    pub recall: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Metrics {
    Cls(ClsMetrics),
    Seg(SegMetrics),
}

impl Metrics {
    /// Top-1 accuracy or mIoU.
    pub fn headline(&self) -> f64 {
        match self {
            Metrics::Cls(m) => m.top1,
            Metrics::Seg(m) => m.miou,
        }
    }
}

/// Whether `label` is among the `k` largest of `scores`, ties going to the
/// lower class index.
pub fn in_top_k(scores: &[f64], label: usize, k: usize) -> bool {
    let s = scores[label];
    let ahead = scores
        .iter()
        .enumerate()
        .filter(|&(c, &v)| v > s || (v == s && c < label))
        .count();
    ahead < k
}

/// Index of the largest score, the lowest index on ties.
pub fn argmax(scores: &[f64]) -> usize {
    let mut best = 0;
    for (c, &v) in scores.iter().enumerate() {
        if v > scores[best] {
            best = c;
        }
    }
    best
}

/// Top-1/top-5 over row-major `[N, K]` scores.
pub fn topk_metrics(scores: &[f64], classes: usize, labels: &[usize]) -> Result<ClsMetrics> {
    if labels.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if scores.len() != labels.len() * classes {
        return Err(Error::config(format!(
            "metrics: {} scores for {} samples of {classes} classes",
            scores.len(),
            labels.len()
        )));
    }
    let (mut t1, mut t5) = (0usize, 0usize);
    for (row, &l) in scores.chunks(classes).zip(labels) {
        t1 += in_top_k(row, l, 1) as usize;
        t5 += in_top_k(row, l, 5) as usize;
    }
    let n = labels.len() as f64;
    Ok(ClsMetrics {
        top1: t1 as f64 / n,
        top5: t5 as f64 / n,
    })
}

/// Global confusion matrix, `counts[gt·K + pred]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Confusion {
    pub classes: usize,
    pub counts: Vec<u64>,
}

impl Confusion {
    pub fn new(classes: usize) -> Self {
        Self {
            classes,
            counts: vec![0; classes * classes],
        }
    }

    pub fn add(&mut self, gt: usize, pred: usize) {
        self.counts[gt * self.classes + pred] += 1;
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    fn tp(&self, c: usize) -> u64 {
        self.counts[c * self.classes + c]
    }

    fn gt_count(&self, c: usize) -> u64 {
        self.counts[c * self.classes..(c + 1) * self.classes].iter().sum()
    }

    fn pred_count(&self, c: usize) -> u64 {
        (0..self.classes).map(|g| self.counts[g * self.classes + c]).sum()
    }

    /// OA, then IoU/precision/recall macro-averaged over the classes present
    /// in the ground truth. A present class that is never predicted has
    /// precision 0.
    pub fn metrics(&self) -> Result<SegMetrics> {
        let total = self.total();
        if total == 0 {
            return Err(Error::EmptyDataset);
        }
        let trace: u64 = (0..self.classes).map(|c| self.tp(c)).sum();
        let (mut iou, mut prec, mut rec, mut present) = (0.0, 0.0, 0.0, 0usize);
        for c in 0..self.classes {
            let gt = self.gt_count(c);
            if gt == 0 {
                continue;
            }
            let (tp, pred) = (self.tp(c) as f64, self.pred_count(c));
            present += 1;
            iou += tp / (gt + pred - self.tp(c)) as f64;
            prec += if pred == 0 { 0.0 } else { tp / pred as f64 };
            rec += tp / gt as f64;
        }
        let p = present as f64;
        Ok(SegMetrics {
            oa: trace as f64 / total as f64,
            miou: iou / p,
            precision: prec / p,
            recall: rec / p,
        })
    }
}

/// Samples per inference batch.
pub const EVAL_BATCH: usize = 32;

fn check_graph<T: Scalar>(g: &Graph<T>, d: &Dataset) -> Result<()> {
    if d.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if d.shape != g.spec().input {
        return Err(Error::config(format!(
            "dataset images {:?} do not match graph input {:?}",
            d.shape,
            g.spec().input
        )));
    }
    if d.classes != g.spec().classes {
        return Err(Error::config(format!(
            "dataset has {} classes, graph {}",
            d.classes,
            g.spec().classes
        )));
    }
    Ok(())
}

/// Top-1/top-5 accuracy of a classifier over `d`.
pub fn evaluate_cls<T: Scalar>(g: &Graph<T>, d: &Dataset) -> Result<ClsMetrics> {
    check_graph(g, d)?;
    if d.is_segmentation() || g.spec().arch.is_segmentation() {
        return Err(Error::config("evaluate_cls needs a classifier and class labels"));
    }
    let idx: Vec<usize> = (0..d.len()).collect();
    let (mut scores, mut labels) = (Vec::new(), Vec::new());
    for chunk in idx.chunks(EVAL_BATCH) {
        let (x, l) = d.batch::<T>(chunk);
        scores.extend(g.forward(&x)?.output.to_f64_vec());
        labels.extend(l);
    }
    topk_metrics(&scores, d.classes, &labels)
}

/// Adds per-pixel argmax predictions of `[N,K,H,W]` logits to `cm`.
pub fn accumulate_seg(cm: &mut Confusion, logits: &[f64], shape: [usize; 4], labels: &[usize]) {
    let [n, k, h, w] = shape;
    let plane = h * w;
    let mut scores = vec![0.0; k];
    for s in 0..n {
        let base = s * k * plane;
        for p in 0..plane {
            for (c, v) in scores.iter_mut().enumerate() {
                *v = logits[base + c * plane + p];
            }
            cm.add(labels[s * plane + p], argmax(&scores));
        }
    }
}

/// OA, mIoU, precision and recall of a segmenter over `d`.
pub fn evaluate_seg<T: Scalar>(g: &Graph<T>, d: &Dataset) -> Result<SegMetrics> {
    check_graph(g, d)?;
    if !d.is_segmentation() || !g.spec().arch.is_segmentation() {
        return Err(Error::config("evaluate_seg needs a segmenter and per-pixel labels"));
    }
    let idx: Vec<usize> = (0..d.len()).collect();
    let mut cm = Confusion::new(d.classes);
    for chunk in idx.chunks(EVAL_BATCH) {
        let (x, l) = d.batch::<T>(chunk);
        let out = g.forward(&x)?.output;
        accumulate_seg(&mut cm, &out.to_f64_vec(), out.dims4()?, &l);
    }
    cm.metrics()
}

/// `evaluate_cls` or `evaluate_seg`, by label type.
pub fn evaluate<T: Scalar>(g: &Graph<T>, d: &Dataset) -> Result<Metrics> {
    if d.is_segmentation() {
        evaluate_seg(g, d).map(Metrics::Seg)
    } else {
        evaluate_cls(g, d).map(Metrics::Cls)
    }
}
