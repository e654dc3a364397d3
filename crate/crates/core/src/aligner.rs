//! Segment-to-step assignment driven by the alignment similarity score.
//!
//! A frame's score against a step mixes three terms: how well the segment's
//! detected objects match the step's objects, how well they match the step's
//! actions, and how close the frame's relative position in the video is to
//! the step's relative position in the recipe. Segment scores are a Gaussian
//! weighted average of frame scores centred on the segment midpoint.

use std::collections::BTreeSet;
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::embeddings::{similarity, EmbeddingStore};
use crate::error::{Error, Result};
use crate::evidence::ObjectEvidence;
use crate::recipe::{ParsedRecipe, ParsedStep};
use crate::trace::{Label, Segment};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoreMode {
    Full,
    TemporalOnly,
    SemanticOnly,
}

impl ScoreMode {
    pub const ALL: [ScoreMode; 3] = [ScoreMode::Full, ScoreMode::TemporalOnly, ScoreMode::SemanticOnly];

    pub fn as_str(self) -> &'static str {
        match self {
            ScoreMode::Full => "full",
            ScoreMode::TemporalOnly => "temporal_only",
            ScoreMode::SemanticOnly => "semantic_only",
        }
    }
}

impl fmt::Display for ScoreMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ScoreMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(ScoreMode::Full),
            "temporal_only" => Ok(ScoreMode::TemporalOnly),
            "semantic_only" => Ok(ScoreMode::SemanticOnly),
            other => Err(Error::Argument(format!("unknown mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlignConfig {
    pub w_obj: f64,
    pub w_act: f64,
    pub w_temp: f64,
    pub secondary_object_weight: f64,
    pub score_threshold: f64,
    pub gaussian_sigma_fraction: f64,
    pub mode: ScoreMode,
}

impl Default for AlignConfig {
    fn default() -> Self {
        AlignConfig {
            w_obj: 0.5,
            w_act: 0.2,
            w_temp: 0.3,
            secondary_object_weight: 0.5,
            score_threshold: 0.2,
            gaussian_sigma_fraction: 0.25,
            mode: ScoreMode::Full,
        }
    }
}

/// Term weights after applying the score mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TermWeights {
    pub obj: f64,
    pub act: f64,
    pub temp: f64,
}

impl AlignConfig {
    pub fn with_mode(mut self, mode: ScoreMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let ws = [self.w_obj, self.w_act, self.w_temp];
        if ws.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::Config("term weights must be non-negative".into()));
        }
        let sum: f64 = ws.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!("term weights sum to {sum}, expected 1")));
        }
        if !(0.0..=1.0).contains(&self.secondary_object_weight) {
            return Err(Error::Config("secondary_object_weight outside [0, 1]".into()));
        }
        if !(0.0..=1.0).contains(&self.score_threshold) {
            return Err(Error::Config("score_threshold outside [0, 1]".into()));
        }
        if !(self.gaussian_sigma_fraction.is_finite() && self.gaussian_sigma_fraction > 0.0) {
            return Err(Error::Config("gaussian_sigma_fraction must be positive".into()));
        }
        self.term_weights().map(|_| ())
    }

    /// `temporal_only` zeroes the semantic terms and `semantic_only` zeroes the
    /// temporal term; the remaining weights are renormalized to sum to 1.
    pub fn term_weights(&self) -> Result<TermWeights> {
        match self.mode {
            ScoreMode::Full => Ok(TermWeights {
                obj: self.w_obj,
                act: self.w_act,
                temp: self.w_temp,
            }),
            ScoreMode::TemporalOnly => Ok(TermWeights {
                obj: 0.0,
                act: 0.0,
                temp: 1.0,
            }),
            ScoreMode::SemanticOnly => {
                let s = self.w_obj + self.w_act;
                if s <= 0.0 {
                    return Err(Error::Config("semantic_only needs a positive object or action weight".into()));
                }
                Ok(TermWeights {
                    obj: self.w_obj / s,
                    act: self.w_act / s,
                    temp: 0.0,
                })
            }
        }
    }
}

/// Frame-independent semantic terms for one (segment, step) pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SemanticTerms {
    pub object: f64,
    pub action: f64,
}

/// Best-match object and action similarities between a step and a segment's top labels.
pub fn semantic_terms(step: &ParsedStep, evidence: &ObjectEvidence, store: &EmbeddingStore, cfg: &AlignConfig) -> SemanticTerms {
    let best = |words: &[String], scale: f64| -> f64 {
        words
            .iter()
            .flat_map(|w| evidence.top_k.iter().map(move |d| (w, d)))
            .map(|(w, d)| scale * similarity(store.word_distance(w, d)))
            .fold(0.0, f64::max)
    };
    let object = best(&step.primary_objects, 1.0).max(best(&step.secondary_objects, cfg.secondary_object_weight));
    let action = best(&step.actions, 1.0);
    SemanticTerms { object, action }
}

/// `1 - |frame / total_frames - step / num_steps|`, clamped to [0, 1].
pub fn temporal_similarity(frame: usize, total_frames: usize, step_index: u32, num_steps: usize) -> f64 {
    let video_pos = frame as f64 / total_frames as f64;
    let recipe_pos = f64::from(step_index) / num_steps as f64;
    (1.0 - (video_pos - recipe_pos).abs()).clamp(0.0, 1.0)
}

fn combine(weights: TermWeights, sem: SemanticTerms, temporal: f64) -> f64 {
    (weights.obj * sem.object + weights.act * sem.action + weights.temp * temporal).clamp(0.0, 1.0)
}

/// Alignment score of one frame against one step.
pub fn frame_step_score(
    frame: usize,
    total_frames: usize,
    step: &ParsedStep,
    num_steps: usize,
    evidence: &ObjectEvidence,
    store: &EmbeddingStore,
    cfg: &AlignConfig,
) -> Result<f64> {
    if frame >= total_frames {
        return Err(Error::Argument(format!("frame {frame} beyond {total_frames} frames")));
    }
    if step.index == 0 || step.index as usize > num_steps {
        return Err(Error::Argument(format!("step {} outside 1..={num_steps}", step.index)));
    }
    let weights = cfg.term_weights()?;
    let sem = semantic_terms(step, evidence, store, cfg);
    Ok(combine(weights, sem, temporal_similarity(frame, total_frames, step.index, num_steps)))
}

/// Discrete Gaussian over the segment's frames, centred on its midpoint with
/// `sigma = sigma_fraction * len`, normalized to sum to 1.
pub fn gaussian_weights(len: usize, sigma_fraction: f64) -> Vec<f64> {
    if len == 0 {
        return Vec::new();
    }
    let mid = (len as f64 - 1.0) / 2.0;
    let sigma = sigma_fraction * len as f64;
    let raw: Vec<f64> = (0..len)
        .map(|i| {
            let d = i as f64 - mid;
            (-(d * d) / (2.0 * sigma * sigma)).exp()
        })
        .collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|w| w / total).collect()
}

/// Gaussian-weighted average of frame scores across a segment.
pub fn segment_step_score(
    segment: Segment,
    total_frames: usize,
    step: &ParsedStep,
    num_steps: usize,
    evidence: &ObjectEvidence,
    store: &EmbeddingStore,
    cfg: &AlignConfig,
) -> Result<f64> {
    if segment.is_empty() {
        return Err(Error::Argument("empty segment".into()));
    }
    if segment.end > total_frames {
        return Err(Error::Argument(format!(
            "segment [{}, {}) beyond {total_frames} frames",
            segment.start, segment.end
        )));
    }
    if step.index == 0 || step.index as usize > num_steps {
        return Err(Error::Argument(format!("step {} outside 1..={num_steps}", step.index)));
    }
    let weights = cfg.term_weights()?;
    let sem = semantic_terms(step, evidence, store, cfg);
    Ok(weighted_segment_score(segment, total_frames, step.index, num_steps, weights, sem, cfg.gaussian_sigma_fraction))
}

fn weighted_segment_score(
    segment: Segment,
    total_frames: usize,
    step_index: u32,
    num_steps: usize,
    weights: TermWeights,
    sem: SemanticTerms,
    sigma_fraction: f64,
) -> f64 {
    let gw = gaussian_weights(segment.len(), sigma_fraction);
    let score: f64 = segment
        .frames()
        .zip(&gw)
        .map(|(f, w)| w * combine(weights, sem, temporal_similarity(f, total_frames, step_index, num_steps)))
        .sum();
    score.clamp(0.0, 1.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Alignment {
    pub video_id: String,
    pub frame_labels: Vec<Label>,
    /// `segment_scores[s][j]` is segment `s` against step `j + 1`.
    pub segment_scores: Vec<Vec<f64>>,
    /// Indices of segments left unassigned.
    pub discarded: BTreeSet<usize>,
    /// Per segment: the assigned step, or `None` when discarded.
    pub assignments: Vec<Option<u32>>,
    pub segments: Vec<Segment>,
}

impl Alignment {
    pub fn num_frames(&self) -> usize {
        self.frame_labels.len()
    }

    pub fn to_json_string(&self) -> Result<String> {
        let file = AlignmentFile {
            video_id: self.video_id.clone(),
            frame_labels: self.frame_labels.iter().map(|l| l.index()).collect(),
            segment_scores: self.segment_scores.clone(),
            discarded: self.discarded.iter().copied().collect(),
        };
        serde_json::to_string(&file).map_err(|e| Error::from_json("alignment", e))
    }
}

/// On-disk alignment: `{"video_id", "frame_labels", "segment_scores", "discarded"}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlignmentFile {
    pub video_id: String,
    pub frame_labels: Vec<u32>,
    pub segment_scores: Vec<Vec<f64>>,
    pub discarded: Vec<usize>,
}

impl AlignmentFile {
    pub fn labels(&self) -> Vec<Label> {
        self.frame_labels.iter().map(|&i| Label::from_index(i)).collect()
    }
}

pub fn save_alignment(alignment: &Alignment, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, alignment.to_json_string()?).map_err(|e| Error::io(path, e))
}

pub fn load_alignment(path: impl AsRef<Path>) -> Result<AlignmentFile> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::from_json(path.display().to_string(), e))
}

/// Assigns each segment to at most one step.
///
/// Segments are visited in temporal order. Candidate steps are ranked by
/// segment score (ties to the lower step index); a step whose prerequisites
/// have not yet been assigned to an earlier segment is skipped in favour of
/// the next candidate. If the best admissible score is below the threshold,
/// the segment is discarded and its frames stay background.
pub fn align(
    video_id: &str,
    num_frames: usize,
    evidence: &[ObjectEvidence],
    recipe: &ParsedRecipe,
    store: &EmbeddingStore,
    cfg: &AlignConfig,
) -> Result<Alignment> {
    cfg.validate()?;
    if num_frames == 0 {
        return Err(Error::Argument("video has no frames".into()));
    }
    for (i, e) in evidence.iter().enumerate() {
        let s = e.segment;
        if s.is_empty() || s.end > num_frames {
            return Err(Error::Argument(format!("segment {i} [{}, {}) invalid for {num_frames} frames", s.start, s.end)));
        }
    }
    if evidence.windows(2).any(|w| w[0].segment.end > w[1].segment.start) {
        return Err(Error::Argument("segments must be sorted by start and disjoint".into()));
    }
    let n_steps = recipe.num_steps();
    let weights = cfg.term_weights()?;

    let segment_scores: Vec<Vec<f64>> = evidence
        .iter()
        .map(|e| {
            recipe
                .steps
                .iter()
                .map(|step| {
                    let sem = semantic_terms(step, e, store, cfg);
                    weighted_segment_score(e.segment, num_frames, step.index, n_steps, weights, sem, cfg.gaussian_sigma_fraction)
                })
                .collect()
        })
        .collect();

    let mut frame_labels = vec![Label::Background; num_frames];
    let mut assigned: BTreeSet<u32> = BTreeSet::new();
    let mut assignments = Vec::with_capacity(evidence.len());
    let mut discarded = BTreeSet::new();

    for (si, (e, scores)) in evidence.iter().zip(&segment_scores).enumerate() {
        let mut ranked: Vec<usize> = (0..n_steps).collect();
        ranked.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
        let choice = ranked
            .into_iter()
            .find(|&j| recipe.steps[j].prerequisites.iter().all(|p| assigned.contains(p)));
        match choice {
            Some(j) if scores[j] >= cfg.score_threshold => {
                let step = recipe.steps[j].index;
                assigned.insert(step);
                frame_labels[e.segment.start..e.segment.end].fill(Label::Step(step));
                assignments.push(Some(step));
            }
            _ => {
                discarded.insert(si);
                assignments.push(None);
            }
        }
    }

    Ok(Alignment {
        video_id: video_id.to_string(),
        frame_labels,
        segment_scores,
        discarded,
        assignments,
        segments: evidence.iter().map(|e| e.segment).collect(),
    })
}

/// Human-readable summary: the frame ranges assigned to each step.
pub fn step_report(alignment: &Alignment, recipe: &ParsedRecipe, fps: f64) -> String {
    let mut out = String::new();
    for step in &recipe.steps {
        let ranges: Vec<String> = alignment
            .segments
            .iter()
            .zip(&alignment.assignments)
            .filter(|(_, a)| **a == Some(step.index))
            .map(|(s, _)| format!("{}-{} ({:.1}s-{:.1}s)", s.start, s.end, s.start as f64 / fps, s.end as f64 / fps))
            .collect();
        out.push_str(&format!(
            "step {:>2} [{} | {} | {}]: {}\n",
            step.index,
            step.actions.join(","),
            step.primary_objects.join(","),
            step.secondary_objects.join(","),
            if ranges.is_empty() { "-".to_string() } else { ranges.join(", ") }
        ));
    }
    out.push_str(&format!(
        "discarded segments: {}\n",
        if alignment.discarded.is_empty() {
            "-".to_string()
        } else {
            alignment.discarded.iter().map(|d| d.to_string()).collect::<Vec<_>>().join(", ")
        }
    ));
    out
}
