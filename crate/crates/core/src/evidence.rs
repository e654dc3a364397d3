//! Segment-level object evidence: a histogram of per-frame object
//! predictions and its most frequent labels.

use std::cmp::Reverse;
use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::trace::{Detection, Segment, VideoTrace};

pub const DEFAULT_TOP_K: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct ObjectEvidence {
    pub segment: Segment,
    pub histogram: BTreeMap<String, usize>,
    pub top_k: Vec<String>,
}

impl ObjectEvidence {
    /// Evidence-free segment, e.g. a proposal with no detections inside.
    pub fn empty(segment: Segment) -> Self {
        ObjectEvidence {
            segment,
            histogram: BTreeMap::new(),
            top_k: Vec::new(),
        }
    }
}

/// The single label a frame votes for: highest confidence, ties broken by the
/// lexicographically smallest label.
fn frame_vote(detections: &[Detection]) -> Option<&str> {
    detections
        .iter()
        .max_by(|a, b| {
            a.confidence
                .total_cmp(&b.confidence)
                .then_with(|| b.label.cmp(&a.label))
        })
        .map(|d| d.label.as_str())
}

/// Counts one vote per sampled frame (`start`, `start + stride`, ...) and keeps the `k` most frequent labels.
pub fn build_histogram(trace: &VideoTrace, segment: Segment, frame_stride: usize, k: usize) -> Result<ObjectEvidence> {
    if segment.start >= segment.end || segment.end > trace.num_frames {
        return Err(Error::Argument(format!(
            "segment [{}, {}) outside trace of {} frames",
            segment.start, segment.end, trace.num_frames
        )));
    }
    if frame_stride == 0 {
        return Err(Error::Argument("frame_stride must be positive".into()));
    }
    let mut histogram = BTreeMap::new();
    for f in segment.frames().step_by(frame_stride) {
        if let Some(label) = frame_vote(&trace.detections[f]) {
            *histogram.entry(label.to_owned()).or_insert(0) += 1;
        }
    }
    let top_k = top_objects(&histogram, k);
    Ok(ObjectEvidence {
        segment,
        histogram,
        top_k,
    })
}

/// Up to `k` labels by descending count, ties in lexicographic order.
pub fn top_objects(histogram: &BTreeMap<String, usize>, k: usize) -> Vec<String> {
    let mut entries: Vec<(&String, &usize)> = histogram.iter().collect();
    // BTreeMap iteration is already lexicographic; the stable sort keeps it for ties.
    entries.sort_by_key(|&(_, &count)| Reverse(count));
    entries.into_iter().take(k).map(|(label, _)| label.clone()).collect()
}

/// Evidence for every segment of a trace.
pub fn collect_evidence(trace: &VideoTrace, segments: &[Segment], frame_stride: usize, k: usize) -> Result<Vec<ObjectEvidence>> {
    segments
        .iter()
        .map(|&s| build_histogram(trace, s, frame_stride, k))
        .collect()
}
