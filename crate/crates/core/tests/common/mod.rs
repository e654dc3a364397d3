//! Reference implementations and fixtures shared by the integration tests.
//!
//! Each oracle is written independently of the library code it checks.

#![allow(dead_code)]

use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use recipe_align::proposal::{FeatureMatrix, Proposal};
use recipe_align::trace::Segment;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Run-length reference for thresholding, gap merging and short-run removal.
pub fn runs_reference(scores: &[f64], threshold: f64, gap: usize, min_len: usize) -> Vec<(usize, usize)> {
    let on: Vec<bool> = scores.iter().map(|&s| s >= threshold).collect();
    let mut runs: Vec<(usize, usize)> = Vec::new();
    let mut i = 0;
    while i < on.len() {
        if on[i] {
            let mut j = i;
            while j < on.len() && on[j] {
                j += 1;
            }
            runs.push((i, j));
            i = j;
        } else {
            i += 1;
        }
    }
    let mut merged: Vec<(usize, usize)> = Vec::new();
    for r in runs {
        match merged.last_mut() {
            Some(last) if r.0 - last.1 <= gap => last.1 = r.1,
            _ => merged.push(r),
        }
    }
    merged.into_iter().filter(|(s, e)| e - s >= min_len).collect()
}

pub fn iou(a: (usize, usize), b: (usize, usize)) -> f64 {
    let lo = a.0.max(b.0);
    let hi = a.1.min(b.1);
    let inter = hi.saturating_sub(lo) as f64;
    inter / ((a.1 - a.0) as f64 + (b.1 - b.0) as f64 - inter)
}

/// Quadratic greedy NMS written out directly.
pub fn nms_reference(props: &[Proposal], threshold: f64) -> Vec<Proposal> {
    let mut remaining: Vec<Proposal> = props.to_vec();
    let mut kept: Vec<Proposal> = Vec::new();
    while !remaining.is_empty() {
        let mut best = 0;
        for (i, p) in remaining.iter().enumerate() {
            let b = &remaining[best];
            let better = p.confidence > b.confidence
                || (p.confidence == b.confidence && (p.start, p.end) < (b.start, b.end));
            if better {
                best = i;
            }
        }
        let cand = remaining.remove(best);
        if kept.iter().all(|k| iou((k.start, k.end), (cand.start, cand.end)) < threshold) {
            kept.push(cand);
        }
    }
    kept.sort_by_key(|p| (p.start, p.end));
    kept
}

/// Maximum number of truth segments matchable one-to-one at IOU >= alpha,
/// by exhaustive search over assignments.
pub fn exhaustive_recall(pred: &[(usize, usize)], truth: &[(usize, usize)], alpha: f64) -> Option<f64> {
    fn best(t: usize, pred: &[(usize, usize)], truth: &[(usize, usize)], alpha: f64, used: &mut Vec<bool>) -> usize {
        if t == truth.len() {
            return 0;
        }
        let mut top = best(t + 1, pred, truth, alpha, used);
        for j in 0..pred.len() {
            if !used[j] && iou(truth[t], pred[j]) >= alpha {
                used[j] = true;
                top = top.max(1 + best(t + 1, pred, truth, alpha, used));
                used[j] = false;
            }
        }
        top
    }
    if truth.is_empty() {
        return None;
    }
    let mut used = vec![false; pred.len()];
    Some(best(0, pred, truth, alpha, &mut used) as f64 / truth.len() as f64)
}

/// Sorted, pairwise disjoint random intervals inside `[0, horizon)`.
pub fn random_disjoint(rng: &mut impl Rng, max_count: usize, horizon: usize) -> Vec<(usize, usize)> {
    let count = rng.random_range(0..=max_count);
    let mut cuts: Vec<usize> = (0..count * 2).map(|_| rng.random_range(0..=horizon)).collect();
    cuts.sort_unstable();
    cuts.chunks(2).filter(|c| c[0] < c[1]).map(|c| (c[0], c[1])).collect()
}

pub fn to_segments(iv: &[(usize, usize)]) -> Vec<Segment> {
    iv.iter().map(|&(s, e)| Segment::new(s, e)).collect()
}

/// Mean logistic loss computed directly from the definition.
pub fn logistic_loss(w: &[f64], b: f64, x: &FeatureMatrix, y: &[u8]) -> f64 {
    let mut total = 0.0;
    for (i, row) in x.row_iter().enumerate() {
        let z: f64 = b + w.iter().zip(row).map(|(a, c)| a * c).sum::<f64>();
        let p = 1.0 / (1.0 + (-z).exp());
        total -= if y[i] == 1 { p.ln() } else { (1.0 - p).ln() };
    }
    total / y.len() as f64
}
