//! Turning per-frame action scores into action segments.
//!
//! Post-processing order is threshold, then gap merging, then short-run
//! elimination, so the minimum-length guarantee holds on the final output.

mod features;
mod scorer;

use std::cmp::Ordering;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::eval::interval_iou;
use crate::trace::Segment;

pub use features::{load_features, FeatureMatrix};
pub use scorer::{logistic, lipschitz_bound, loss_and_gradient, score_frames, train_scorer, LinearFrameScorer, TrainParams};

#[derive(Debug, Clone, PartialEq)]
pub struct ProposalConfig {
    pub score_threshold: f64,
    pub min_segment_frames: usize,
    pub gap_merge_frames: usize,
}

impl Default for ProposalConfig {
    fn default() -> Self {
        ProposalConfig {
            score_threshold: 0.5,
            min_segment_frames: 10,
            gap_merge_frames: 0,
        }
    }
}

impl ProposalConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.score_threshold) {
            return Err(Error::Config(format!(
                "score_threshold {} outside [0, 1]",
                self.score_threshold
            )));
        }
        if self.min_segment_frames == 0 {
            return Err(Error::Config("min_segment_frames must be at least 1".into()));
        }
        Ok(())
    }
}

/// Thresholds `scores` into maximal runs, merges runs separated by at most
/// `gap_merge_frames` frames, and drops runs shorter than `min_segment_frames`.
///
/// Each segment's confidence is the mean score over its frames.
pub fn segments_from_scores(scores: &[f64], cfg: &ProposalConfig) -> Result<Vec<Segment>> {
    if scores.is_empty() {
        return Err(Error::Argument("score sequence is empty".into()));
    }
    cfg.validate()?;

    let mut runs: Vec<(usize, usize)> = Vec::new();
    let mut open: Option<usize> = None;
    for (i, &s) in scores.iter().enumerate() {
        match (s >= cfg.score_threshold, open) {
            (true, None) => open = Some(i),
            (false, Some(start)) => {
                runs.push((start, i));
                open = None;
            }
            _ => {}
        }
    }
    if let Some(start) = open {
        runs.push((start, scores.len()));
    }

    let mut merged: Vec<(usize, usize)> = Vec::with_capacity(runs.len());
    for run in runs {
        match merged.last_mut() {
            Some(last) if run.0 - last.1 <= cfg.gap_merge_frames => last.1 = run.1,
            _ => merged.push(run),
        }
    }

    Ok(merged
        .into_iter()
        .filter(|(s, e)| e - s >= cfg.min_segment_frames)
        .map(|(s, e)| {
            let mean = scores[s..e].iter().sum::<f64>() / (e - s) as f64;
            Segment::with_confidence(s, e, mean)
        })
        .collect())
}

/// An externally produced proposal: `[start, end)` with a confidence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Proposal {
    pub start: usize,
    pub end: usize,
    pub confidence: f64,
}

impl Proposal {
    pub fn new(start: usize, end: usize, confidence: f64) -> Self {
        Proposal { start, end, confidence }
    }

    pub fn segment(&self) -> Segment {
        Segment::with_confidence(self.start, self.end, self.confidence)
    }
}

/// Greedy non-maximum suppression over 1-D intervals.
///
/// Proposals are visited by descending confidence (ties by start, then end);
/// one is kept iff its IOU with every kept proposal is below `iou_threshold`.
/// The result is sorted by start.
pub fn nms_intervals(proposals: &[Proposal], iou_threshold: f64) -> Result<Vec<Proposal>> {
    if !(iou_threshold > 0.0 && iou_threshold <= 1.0) {
        return Err(Error::Argument(format!("iou_threshold {iou_threshold} outside (0, 1]")));
    }
    for (i, p) in proposals.iter().enumerate() {
        if p.start >= p.end {
            return Err(Error::Argument(format!("proposal {i}: empty interval [{}, {})", p.start, p.end)));
        }
        if !p.confidence.is_finite() {
            return Err(Error::Argument(format!("proposal {i}: non-finite confidence")));
        }
    }

    let mut order: Vec<&Proposal> = proposals.iter().collect();
    order.sort_by(|a, b| {
        b.confidence
            .partial_cmp(&a.confidence)
            .unwrap_or(Ordering::Equal)
            .then(a.start.cmp(&b.start))
            .then(a.end.cmp(&b.end))
    });

    let mut kept: Vec<Proposal> = Vec::new();
    for p in order {
        let suppressed = kept
            .iter()
            .any(|k| interval_iou((k.start, k.end), (p.start, p.end)).unwrap_or(0.0) >= iou_threshold);
        if !suppressed {
            kept.push(*p);
        }
    }
    kept.sort_by_key(|p| (p.start, p.end));
    Ok(kept)
}

/// Reads a proposal list stored as `[[start, end, confidence], ...]`.
pub fn load_proposals(path: impl AsRef<Path>) -> Result<Vec<Proposal>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let rows: Vec<(usize, usize, f64)> =
        serde_json::from_str(&text).map_err(|e| Error::from_json(path.display().to_string(), e))?;
    let proposals: Vec<Proposal> = rows.into_iter().map(|(s, e, c)| Proposal::new(s, e, c)).collect();
    for (i, p) in proposals.iter().enumerate() {
        if p.start >= p.end {
            return Err(Error::validation(format!("proposals[{i}]"), "start must be less than end"));
        }
    }
    Ok(proposals)
}

pub fn save_proposals(proposals: &[Proposal], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let rows: Vec<(usize, usize, f64)> = proposals.iter().map(|p| (p.start, p.end, p.confidence)).collect();
    let text = serde_json::to_string(&rows).map_err(|e| Error::from_json("proposals", e))?;
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Segments as a proposal list; segments without a confidence are written with 1.0.
pub fn segments_to_proposals(segments: &[Segment]) -> Vec<Proposal> {
    segments
        .iter()
        .map(|s| Proposal::new(s.start, s.end, s.confidence.unwrap_or(1.0)))
        .collect()
}
