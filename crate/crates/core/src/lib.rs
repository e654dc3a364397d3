//! Alignment of sparse recipe steps to first-person video.
//!
//! The pipeline runs per video:
//! per-frame action scores -> action segments ([`proposal`]) ->
//! segment object histograms ([`evidence`]) -> similarity-scored
//! segment-to-step assignment ([`aligner`]) against a dependency-parsed
//! recipe ([`recipe`]) using word vectors ([`embeddings`]).
//! [`eval`] implements the proposal and alignment metrics and
//! [`simulator`] generates corpora with known ground truth.

pub mod aligner;
pub mod cli;
pub mod embeddings;
pub mod error;
pub mod eval;
pub mod evidence;
pub mod manifest;
pub mod pipeline;
pub mod proposal;
pub mod recipe;
pub mod simulator;
pub mod trace;

pub use aligner::{align, AlignConfig, Alignment, ScoreMode};
pub use embeddings::{load_embeddings, EmbeddingStore};
pub use error::{Error, Result};
pub use eval::{frame_precision, interval_iou, proposal_recall_at, EvalReport, PrecisionDenominator};
pub use evidence::{build_histogram, ObjectEvidence};
pub use pipeline::{run_video, PipelineConfig};
pub use proposal::{nms_intervals, segments_from_scores, ProposalConfig};
pub use recipe::{load_conllu, parse_recipe, ParsedRecipe, ParsedStep, RelationLabels};
pub use trace::{load_trace, save_trace, Label, Segment, VideoTrace};
