//! Video traces: per-frame action scores, per-frame object detections and
//! optional ground truth, plus their JSON file format.
//!
//! A trace is the perception interface of the pipeline. Whatever front-end
//! produced the scores and detections, the rest of the crate only sees this.

use std::fmt;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Per-frame label: either a 1-based recipe step or background.
///
/// Files encode background as `0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    Background,
    Step(u32),
}

impl Label {
    pub fn from_index(index: u32) -> Self {
        if index == 0 {
            Label::Background
        } else {
            Label::Step(index)
        }
    }

    pub fn index(self) -> u32 {
        match self {
            Label::Background => 0,
            Label::Step(i) => i,
        }
    }

    pub fn is_background(self) -> bool {
        matches!(self, Label::Background)
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::Background => f.write_str("BACKGROUND"),
            Label::Step(i) => write!(f, "step {i}"),
        }
    }
}

/// Half-open frame interval `[start, end)` with an optional confidence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub start: usize,
    pub end: usize,
    pub confidence: Option<f64>,
}

impl Segment {
    pub fn new(start: usize, end: usize) -> Self {
        Segment {
            start,
            end,
            confidence: None,
        }
    }

    pub fn with_confidence(start: usize, end: usize, confidence: f64) -> Self {
        Segment {
            start,
            end,
            confidence: Some(confidence),
        }
    }

    pub fn len(&self) -> usize {
        self.end.saturating_sub(self.start)
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }

    pub fn frames(&self) -> std::ops::Range<usize> {
        self.start..self.end
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    pub label: String,
    pub confidence: f64,
}

impl Detection {
    pub fn new(label: impl Into<String>, confidence: f64) -> Self {
        Detection {
            label: label.into(),
            confidence,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruthSegment {
    pub start: usize,
    pub end: usize,
    pub label: Label,
    pub main_object: String,
}

impl GroundTruthSegment {
    pub fn interval(&self) -> Segment {
        Segment::new(self.start, self.end)
    }
}

/// Annotated segments, sorted by start and pairwise disjoint.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct GroundTruth {
    pub segments: Vec<GroundTruthSegment>,
}

impl GroundTruth {
    pub fn new(segments: Vec<GroundTruthSegment>, num_frames: usize) -> Result<Self> {
        let gt = GroundTruth { segments };
        gt.validate(num_frames)?;
        Ok(gt)
    }

    pub fn validate(&self, num_frames: usize) -> Result<()> {
        for (i, s) in self.segments.iter().enumerate() {
            if s.start >= s.end || s.end > num_frames {
                return Err(Error::validation(
                    format!("ground_truth[{i}]"),
                    format!("interval [{}, {}) outside [0, {num_frames})", s.start, s.end),
                ));
            }
        }
        for (i, pair) in self.segments.windows(2).enumerate() {
            if pair[0].end > pair[1].start {
                return Err(Error::validation(
                    format!("ground_truth[{}]", i + 1),
                    "segments must be sorted by start and non-overlapping",
                ));
            }
        }
        Ok(())
    }

    /// Expands the annotation into one label per frame; unannotated frames are background.
    pub fn frame_labels(&self, num_frames: usize) -> Vec<Label> {
        let mut labels = vec![Label::Background; num_frames];
        for s in &self.segments {
            for l in &mut labels[s.start..s.end.min(num_frames)] {
                *l = s.label;
            }
        }
        labels
    }

    /// Segments that belong to a recipe step (background annotations excluded).
    pub fn step_segments(&self) -> Vec<Segment> {
        self.segments
            .iter()
            .filter(|s| !s.label.is_background())
            .map(GroundTruthSegment::interval)
            .collect()
    }

    /// Every annotated action segment, whether or not it maps to a step.
    pub fn action_segments(&self) -> Vec<Segment> {
        self.segments.iter().map(GroundTruthSegment::interval).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VideoTrace {
    pub video_id: String,
    pub fps: f64,
    pub num_frames: usize,
    pub action_scores: Vec<f64>,
    pub detections: Vec<Vec<Detection>>,
    pub ground_truth: Option<GroundTruth>,
}

impl VideoTrace {
    pub fn validate(&self) -> Result<()> {
        if !(self.fps.is_finite() && self.fps > 0.0) {
            return Err(Error::validation("fps", format!("must be a positive real, got {}", self.fps)));
        }
        if self.num_frames == 0 {
            return Err(Error::validation("num_frames", "must be positive"));
        }
        if self.action_scores.len() != self.num_frames {
            return Err(Error::validation(
                "action_scores",
                format!("length {} does not match num_frames {}", self.action_scores.len(), self.num_frames),
            ));
        }
        if let Some(i) = self.action_scores.iter().position(|s| !(0.0..=1.0).contains(s)) {
            return Err(Error::validation(
                format!("action_scores[{i}]"),
                format!("score {} outside [0, 1]", self.action_scores[i]),
            ));
        }
        if self.detections.len() != self.num_frames {
            return Err(Error::validation(
                "detections",
                format!("length {} does not match num_frames {}", self.detections.len(), self.num_frames),
            ));
        }
        for (f, dets) in self.detections.iter().enumerate() {
            for (j, d) in dets.iter().enumerate() {
                if d.label.is_empty() {
                    return Err(Error::validation(format!("detections[{f}][{j}]"), "empty label"));
                }
                if !(0.0..=1.0).contains(&d.confidence) {
                    return Err(Error::validation(
                        format!("detections[{f}][{j}]"),
                        format!("confidence {} outside [0, 1]", d.confidence),
                    ));
                }
            }
        }
        if let Some(gt) = &self.ground_truth {
            gt.validate(self.num_frames)?;
        }
        Ok(())
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let file: TraceFile = serde_json::from_str(text).map_err(|e| Error::from_json("trace", e))?;
        let trace = VideoTrace::from(file);
        trace.validate()?;
        Ok(trace)
    }

    pub fn to_json_string(&self) -> Result<String> {
        self.validate()?;
        serde_json::to_string(&TraceFile::from(self)).map_err(|e| Error::from_json("trace", e))
    }
}

/// On-disk layout of a trace. Detections and ground truth rows are positional arrays.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TraceFile {
    video_id: String,
    fps: f64,
    num_frames: usize,
    action_scores: Vec<f64>,
    detections: Vec<Vec<(String, f64)>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    ground_truth: Option<Vec<(usize, usize, u32, String)>>,
}

impl From<TraceFile> for VideoTrace {
    fn from(f: TraceFile) -> Self {
        VideoTrace {
            video_id: f.video_id,
            fps: f.fps,
            num_frames: f.num_frames,
            action_scores: f.action_scores,
            detections: f
                .detections
                .into_iter()
                .map(|frame| frame.into_iter().map(|(label, confidence)| Detection { label, confidence }).collect())
                .collect(),
            ground_truth: f.ground_truth.map(|rows| GroundTruth {
                segments: rows
                    .into_iter()
                    .map(|(start, end, step, main_object)| GroundTruthSegment {
                        start,
                        end,
                        label: Label::from_index(step),
                        main_object,
                    })
                    .collect(),
            }),
        }
    }
}

impl From<&VideoTrace> for TraceFile {
    fn from(t: &VideoTrace) -> Self {
        TraceFile {
            video_id: t.video_id.clone(),
            fps: t.fps,
            num_frames: t.num_frames,
            action_scores: t.action_scores.clone(),
            detections: t
                .detections
                .iter()
                .map(|frame| frame.iter().map(|d| (d.label.clone(), d.confidence)).collect())
                .collect(),
            ground_truth: t.ground_truth.as_ref().map(|gt| {
                gt.segments
                    .iter()
                    .map(|s| (s.start, s.end, s.label.index(), s.main_object.clone()))
                    .collect()
            }),
        }
    }
}

pub fn load_trace(path: impl AsRef<Path>) -> Result<VideoTrace> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    VideoTrace::from_json_str(&text).map_err(|e| match e {
        Error::Schema { line, column, message, .. } => {
            Error::schema(path.display().to_string(), line, column, message)
        }
        other => other,
    })
}

/// Writes the trace as JSON. Reals use the shortest representation that
/// parses back to the identical `f64`.
pub fn save_trace(trace: &VideoTrace, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let text = trace.to_json_string()?;
    fs::write(path, text).map_err(|e| Error::io(path, e))
}
