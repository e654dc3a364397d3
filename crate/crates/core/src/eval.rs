//! Evaluation: proposal recall at IOU thresholds, frame-level alignment
//! precision averaged over videos, and the similarity-score ablation.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;

use serde::Serialize;

use crate::aligner::ScoreMode;
use crate::embeddings::EmbeddingStore;
use crate::error::{Error, Result};
use crate::pipeline::{run_video, PipelineConfig};
use crate::recipe::ParsedRecipe;
use crate::trace::{Label, Segment, VideoTrace};

pub const IOU_ALPHAS: [f64; 3] = [0.3, 0.4, 0.5];

/// IOU of two half-open intervals given as `(start, end)`.
pub fn interval_iou(a: (usize, usize), b: (usize, usize)) -> Result<f64> {
    if a.0 >= a.1 || b.0 >= b.1 {
        return Err(Error::Argument(format!("invalid interval in IOU: {a:?}, {b:?}")));
    }
    let inter = a.1.min(b.1).saturating_sub(a.0.max(b.0));
    let union = (a.1 - a.0) + (b.1 - b.0) - inter;
    Ok(inter as f64 / union as f64)
}

fn iou(a: &Segment, b: &Segment) -> f64 {
    interval_iou((a.start, a.end), (b.start, b.end)).unwrap_or(0.0)
}

fn check_list(list: &[Segment], name: &str) -> Result<()> {
    if let Some(s) = list.iter().find(|s| s.is_empty()) {
        return Err(Error::Argument(format!("{name}: empty interval [{}, {})", s.start, s.end)));
    }
    if list.windows(2).any(|w| w[0].end > w[1].start) {
        return Err(Error::Argument(format!("{name}: intervals must be sorted and disjoint")));
    }
    Ok(())
}

fn augment(t: usize, adj: &[Vec<usize>], seen: &mut [bool], owner: &mut [Option<usize>]) -> bool {
    for &p in &adj[t] {
        if seen[p] {
            continue;
        }
        seen[p] = true;
        if owner[p].is_none_or(|other| augment(other, adj, seen, owner)) {
            owner[p] = Some(t);
            return true;
        }
    }
    false
}

/// Fraction of ground-truth segments matched one-to-one to a prediction with
/// IOU of at least `alpha`, using a maximum-cardinality matching.
///
/// Returns `None` when `truth` is empty.
pub fn proposal_recall_at(predicted: &[Segment], truth: &[Segment], alpha: f64) -> Result<Option<f64>> {
    check_list(predicted, "predicted")?;
    check_list(truth, "truth")?;
    if truth.is_empty() {
        return Ok(None);
    }
    let adj: Vec<Vec<usize>> = truth
        .iter()
        .map(|t| {
            predicted
                .iter()
                .enumerate()
                .filter(|(_, p)| iou(t, p) >= alpha)
                .map(|(j, _)| j)
                .collect()
        })
        .collect();
    let mut owner = vec![None; predicted.len()];
    let mut matched = 0usize;
    for t in 0..truth.len() {
        let mut seen = vec![false; predicted.len()];
        if augment(t, &adj, &mut seen, &mut owner) {
            matched += 1;
        }
    }
    Ok(Some(matched as f64 / truth.len() as f64))
}

/// IOU of each truth segment under a greedy one-to-one matching by
/// descending IOU; unmatched truth segments get 0.
pub fn matched_ious(predicted: &[Segment], truth: &[Segment]) -> Vec<f64> {
    let mut pairs: Vec<(f64, usize, usize)> = truth
        .iter()
        .enumerate()
        .flat_map(|(i, t)| predicted.iter().enumerate().map(move |(j, p)| (iou(t, p), i, j)))
        .filter(|(v, _, _)| *v > 0.0)
        .collect();
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut out = vec![0.0; truth.len()];
    let mut used_t = vec![false; truth.len()];
    let mut used_p = vec![false; predicted.len()];
    for (v, i, j) in pairs {
        if !used_t[i] && !used_p[j] {
            used_t[i] = true;
            used_p[j] = true;
            out[i] = v;
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PrecisionDenominator {
    /// Every frame, background included.
    #[default]
    All,
    /// Only frames whose ground truth is a recipe step.
    Labeled,
}

impl FromStr for PrecisionDenominator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "all" => Ok(PrecisionDenominator::All),
            "labeled" => Ok(PrecisionDenominator::Labeled),
            other => Err(Error::Argument(format!("unknown precision denominator {other:?}"))),
        }
    }
}

/// Fraction of frames whose predicted label equals the ground-truth label.
///
/// With [`PrecisionDenominator::Labeled`] only frames annotated with a step
/// count; `None` if there are none.
pub fn frame_precision(predicted: &[Label], truth: &[Label], denominator: PrecisionDenominator) -> Result<Option<f64>> {
    if predicted.len() != truth.len() {
        return Err(Error::Argument(format!(
            "alignment has {} frames, ground truth has {}",
            predicted.len(),
            truth.len()
        )));
    }
    let (hits, total) = predicted
        .iter()
        .zip(truth)
        .filter(|(_, t)| denominator == PrecisionDenominator::All || !t.is_background())
        .fold((0usize, 0usize), |(h, n), (p, t)| (h + usize::from(p == t), n + 1));
    Ok((total > 0).then(|| hits as f64 / total as f64))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VideoEval {
    pub video_id: String,
    pub precision_all: f64,
    pub precision_labeled: Option<f64>,
    /// Recall at each of [`IOU_ALPHAS`]; absent without proposals or truth segments.
    pub recall_at: Option<Vec<Option<f64>>>,
    pub matched_iou: Vec<f64>,
}

/// Scores one video. `predicted_segments`, when given, are evaluated as
/// proposals against every annotated action segment.
pub fn evaluate_video(
    video_id: &str,
    predicted_labels: &[Label],
    trace: &VideoTrace,
    predicted_segments: Option<&[Segment]>,
) -> Result<VideoEval> {
    let gt = trace.ground_truth.as_ref().ok_or_else(|| {
        Error::validation("ground_truth", format!("trace {} has no ground truth", trace.video_id))
    })?;
    let truth_labels = gt.frame_labels(trace.num_frames);
    let precision_all = frame_precision(predicted_labels, &truth_labels, PrecisionDenominator::All)?
        .expect("traces have at least one frame");
    let precision_labeled = frame_precision(predicted_labels, &truth_labels, PrecisionDenominator::Labeled)?;
    let (recall_at, matched_iou) = match predicted_segments {
        Some(pred) => {
            let truth = gt.action_segments();
            let recalls = IOU_ALPHAS
                .iter()
                .map(|&a| proposal_recall_at(pred, &truth, a))
                .collect::<Result<Vec<_>>>()?;
            (Some(recalls), matched_ious(pred, &truth))
        }
        None => (None, Vec::new()),
    };
    Ok(VideoEval {
        video_id: video_id.to_string(),
        precision_all,
        precision_labeled,
        recall_at,
        matched_iou,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub denominator: PrecisionDenominator,
    /// Mean recall per alpha over videos with truth segments, keyed by alpha.
    pub iou_at: BTreeMap<String, Option<f64>>,
    pub frame_precision_per_video: BTreeMap<String, Option<f64>>,
    pub mean_frame_precision: Option<f64>,
    pub mean_frame_precision_all: Option<f64>,
    pub mean_frame_precision_labeled: Option<f64>,
    pub matched_iou: Vec<f64>,
}

fn mean(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let present: Vec<f64> = values.flatten().collect();
    (!present.is_empty()).then(|| present.iter().sum::<f64>() / present.len() as f64)
}

/// Aggregates per-video results. Videos are reported in `video_id` order.
pub fn summarize(videos: &[VideoEval], denominator: PrecisionDenominator) -> EvalReport {
    let mut sorted: Vec<&VideoEval> = videos.iter().collect();
    sorted.sort_by(|a, b| a.video_id.cmp(&b.video_id));

    let with_recall: Vec<&Vec<Option<f64>>> = sorted.iter().filter_map(|v| v.recall_at.as_ref()).collect();
    let iou_at = if with_recall.is_empty() {
        BTreeMap::new()
    } else {
        IOU_ALPHAS
            .iter()
            .enumerate()
            .map(|(i, a)| (format!("{a:.1}"), mean(with_recall.iter().map(|r| r[i]))))
            .collect()
    };
    let selected = |v: &VideoEval| match denominator {
        PrecisionDenominator::All => Some(v.precision_all),
        PrecisionDenominator::Labeled => v.precision_labeled,
    };
    EvalReport {
        denominator,
        iou_at,
        frame_precision_per_video: sorted.iter().map(|v| (v.video_id.clone(), selected(v))).collect(),
        mean_frame_precision: mean(sorted.iter().map(|v| selected(v))),
        mean_frame_precision_all: mean(sorted.iter().map(|v| Some(v.precision_all))),
        mean_frame_precision_labeled: mean(sorted.iter().map(|v| v.precision_labeled)),
        matched_iou: sorted.iter().flat_map(|v| v.matched_iou.iter().copied()).collect(),
    }
}

fn cell(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".to_string(), |x| format!("{x:.6}"))
}

impl EvalReport {
    pub fn to_json_string(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::from_json("report", e))
    }

    /// Plain-text tables: proposal recall by alpha, then per-video precision.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        if !self.iou_at.is_empty() {
            out.push_str("Action proposal evaluation (recall at IOU >= alpha)\n");
            let _ = write!(out, "{:<28}", "alpha");
            for a in self.iou_at.keys() {
                let _ = write!(out, "{a:>12}");
            }
            let _ = write!(out, "\n{:<28}", "recall");
            for v in self.iou_at.values() {
                let _ = write!(out, "{:>12}", cell(*v));
            }
            out.push_str("\n\n");
        }
        let denom = match self.denominator {
            PrecisionDenominator::All => "all",
            PrecisionDenominator::Labeled => "labeled",
        };
        let _ = writeln!(out, "Alignment evaluation (frame precision, denominator {denom})");
        let _ = writeln!(out, "{:<28}{:>12}", "video", "precision");
        for (id, v) in &self.frame_precision_per_video {
            let _ = writeln!(out, "{:<28}{:>12}", id, cell(*v));
        }
        let _ = writeln!(out, "{:<28}{:>12}", "mean", cell(self.mean_frame_precision));
        let _ = writeln!(out, "{:<28}{:>12}", "mean (all frames)", cell(self.mean_frame_precision_all));
        let _ = writeln!(out, "{:<28}{:>12}", "mean (labeled frames)", cell(self.mean_frame_precision_labeled));
        out
    }
}

/// Reads the numbers back out of [`EvalReport::to_table`] output.
///
/// Keys are `recall@<alpha>`, `video:<id>`, `mean`, `mean (all frames)` and
/// `mean (labeled frames)`. Cells printed as `n/a` are omitted.
pub fn parse_report_table(text: &str) -> Result<BTreeMap<String, f64>> {
    let mut out = BTreeMap::new();
    let mut alphas: Vec<String> = Vec::new();
    let mut in_videos = false;
    for (i, line) in text.lines().enumerate() {
        let bad = |msg: &str| Error::schema("report table", i + 1, 0, msg);
        let fields: Vec<&str> = line.split_whitespace().collect();
        match fields.first() {
            None => continue,
            Some(&"alpha") => alphas = fields[1..].iter().map(|s| s.to_string()).collect(),
            Some(&"recall") => {
                if fields.len() - 1 != alphas.len() {
                    return Err(bad("recall row does not match alpha header"));
                }
                for (a, v) in alphas.iter().zip(&fields[1..]) {
                    if *v != "n/a" {
                        out.insert(format!("recall@{a}"), v.parse().map_err(|_| bad("bad number"))?);
                    }
                }
            }
            Some(&"video") => in_videos = true,
            Some(_) if in_videos => {
                let (key, value) = line.trim_end().rsplit_once(char::is_whitespace).ok_or_else(|| bad("missing value"))?;
                let key = key.trim();
                let key = if key.starts_with("mean") { key.to_string() } else { format!("video:{key}") };
                if value != "n/a" {
                    out.insert(key, value.parse().map_err(|_| bad("bad number"))?);
                }
            }
            Some(_) => {}
        }
    }
    Ok(out)
}

/// One video of an evaluation corpus.
#[derive(Debug, Clone, Copy)]
pub struct VideoCase<'a> {
    pub trace: &'a VideoTrace,
    pub recipe: &'a ParsedRecipe,
    pub store: &'a EmbeddingStore,
}

/// Mean frame precision of the full pipeline under each score mode, with
/// everything else in `cfg` held fixed.
pub fn run_ablation(
    corpus: &[VideoCase<'_>],
    cfg: &PipelineConfig,
    denominator: PrecisionDenominator,
) -> Result<BTreeMap<ScoreMode, Option<f64>>> {
    let mut out = BTreeMap::new();
    for mode in ScoreMode::ALL {
        let mut mode_cfg = cfg.clone();
        mode_cfg.align.mode = mode;
        let mut evals = Vec::with_capacity(corpus.len());
        for case in corpus {
            let alignment = run_video(case.trace, None, case.recipe, case.store, &mode_cfg)?;
            evals.push(evaluate_video(&case.trace.video_id, &alignment.frame_labels, case.trace, None)?);
        }
        out.insert(mode, summarize(&evals, denominator).mean_frame_precision);
    }
    Ok(out)
}
