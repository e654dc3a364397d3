//! End-to-end processing of one video: proposals, evidence, alignment.

use crate::aligner::{align, AlignConfig, Alignment};
use crate::embeddings::EmbeddingStore;
use crate::error::Result;
use crate::evidence::{collect_evidence, DEFAULT_TOP_K};
use crate::proposal::{segments_from_scores, ProposalConfig};
use crate::recipe::ParsedRecipe;
use crate::trace::{Segment, VideoTrace};

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub proposal: ProposalConfig,
    pub frame_stride: usize,
    pub top_k: usize,
    pub align: AlignConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            proposal: ProposalConfig::default(),
            frame_stride: 1,
            top_k: DEFAULT_TOP_K,
            align: AlignConfig::default(),
        }
    }
}

/// Aligns a trace against a recipe. When `segments` is `None` they are
/// proposed from the trace's action scores.
pub fn run_video(
    trace: &VideoTrace,
    segments: Option<&[Segment]>,
    recipe: &ParsedRecipe,
    store: &EmbeddingStore,
    cfg: &PipelineConfig,
) -> Result<Alignment> {
    let proposed;
    let segments = match segments {
        Some(s) => s,
        None => {
            proposed = segments_from_scores(&trace.action_scores, &cfg.proposal)?;
            &proposed
        }
    };
    let evidence = collect_evidence(trace, segments, cfg.frame_stride, cfg.top_k)?;
    align(&trace.video_id, trace.num_frames, &evidence, recipe, store, &cfg.align)
}
