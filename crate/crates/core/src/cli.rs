//! Command-line front end: `simulate`, `propose`, `nms`, `parse`, `align`, `eval`.
//!
//! Exit codes: 0 on success, 1 on I/O errors, 2 on validation or usage errors.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use crate::aligner::{save_alignment, load_alignment, step_report, AlignConfig, Alignment, ScoreMode};
use crate::embeddings::{load_embeddings, EmbeddingStore};
use crate::error::{Error, Result};
use crate::eval::{evaluate_video, summarize, EvalReport, PrecisionDenominator, VideoEval};
use crate::manifest::{fold_of, load_manifest, RunManifest};
use crate::pipeline::{run_video, PipelineConfig};
use crate::proposal::{
    load_proposals, nms_intervals, save_proposals, segments_from_scores, segments_to_proposals, ProposalConfig,
};
use crate::recipe::{load_conllu, load_coref_overrides, parse_recipe, ParsedRecipe, RelationLabels};
use crate::simulator::{write_corpus, SimConfig};
use crate::trace::{load_trace, Segment, VideoTrace};

#[derive(Debug, Parser)]
#[command(name = "recipe-align", version, about = "Align recipe steps to first-person video")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic corpus with ground truth.
    Simulate(SimulateArgs),
    /// Turn per-frame action scores into action segments.
    Propose(ProposeArgs),
    /// Non-maximum suppression over an external proposal list.
    Nms(NmsArgs),
    /// Parse a CoNLL-U recipe and print the extracted steps as JSON.
    Parse(ParseArgs),
    /// Align action segments to recipe steps.
    Align(AlignArgs),
    /// Evaluate alignments (and proposals) against ground truth.
    Eval(EvalArgs),
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 20)]
    pub videos: usize,
    #[arg(long, default_value_t = 6)]
    pub steps: usize,
    #[arg(long, default_value_t = 2)]
    pub segments_per_step: usize,
    #[arg(long, default_value_t = 20)]
    pub vocab: usize,
    #[arg(long, default_value_t = 0.0)]
    pub detection_noise: f64,
    #[arg(long, default_value_t = 0.0)]
    pub out_of_order_rate: f64,
    #[arg(long, default_value_t = 0.0)]
    pub distractor_rate: f64,
    /// Fixed number of frames per video.
    #[arg(long)]
    pub frames: Option<usize>,
    #[arg(long, default_value_t = 20)]
    pub min_segment_len: usize,
    #[arg(long, default_value_t = 40)]
    pub max_segment_len: usize,
}

#[derive(Debug, Args, Clone)]
pub struct ProposalFlags {
    /// Frames with score at or above this are action frames.
    #[arg(long = "score-threshold", default_value_t = 0.5)]
    pub score_threshold: f64,
    #[arg(long, default_value_t = 10)]
    pub min_segment_frames: usize,
    #[arg(long, default_value_t = 0)]
    pub gap_merge_frames: usize,
}

impl ProposalFlags {
    fn config(&self) -> ProposalConfig {
        ProposalConfig {
            score_threshold: self.score_threshold,
            min_segment_frames: self.min_segment_frames,
            gap_merge_frames: self.gap_merge_frames,
        }
    }
}

#[derive(Debug, Args)]
pub struct ProposeArgs {
    #[arg(long, required_unless_present = "manifest", conflicts_with = "manifest")]
    pub trace: Option<PathBuf>,
    /// Process every video of a manifest, writing each video's `segments` path.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    #[arg(long, required_unless_present = "manifest")]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub proposal: ProposalFlags,
}

#[derive(Debug, Args)]
pub struct NmsArgs {
    #[arg(long)]
    pub proposals: PathBuf,
    #[arg(long, default_value_t = 0.5)]
    pub iou_threshold: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ParseArgs {
    #[arg(long)]
    pub recipe: PathBuf,
    #[arg(long)]
    pub coref: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AlignArgs {
    #[arg(long, required_unless_present = "manifest", conflicts_with = "manifest")]
    pub trace: Option<PathBuf>,
    #[arg(long, required_unless_present = "manifest")]
    pub recipe: Option<PathBuf>,
    #[arg(long, required_unless_present = "manifest")]
    pub embeddings: Option<PathBuf>,
    /// Proposal list `[[start, end, confidence]]`; proposed from the trace when absent.
    #[arg(long)]
    pub segments: Option<PathBuf>,
    /// Coreference override sidecar.
    #[arg(long)]
    pub coref: Option<PathBuf>,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Output file (single video) or directory (manifest; defaults to the manifest's out_dir).
    #[arg(long, required_unless_present = "manifest")]
    pub out: Option<PathBuf>,
    /// Minimum alignment score for a segment to be kept.
    #[arg(long = "score-threshold", default_value_t = 0.2)]
    pub score_threshold: f64,
    #[arg(long, default_value_t = 10)]
    pub min_segment_frames: usize,
    #[arg(long, default_value_t = 0.5)]
    pub proposal_threshold: f64,
    #[arg(long, value_parser = parse_mode, default_value = "full")]
    pub mode: ScoreMode,
    /// Term weights `w_obj,w_act,w_temp`.
    #[arg(long, value_parser = parse_weights, default_value = "0.5,0.2,0.3")]
    pub weights: (f64, f64, f64),
    #[arg(long, default_value_t = 3)]
    pub top_k: usize,
    /// Write per-step segment timelines as CSV.
    #[arg(long)]
    pub timeline_csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long, required_unless_present = "manifest", conflicts_with = "manifest")]
    pub alignment: Option<PathBuf>,
    #[arg(long, required_unless_present = "manifest")]
    pub trace: Option<PathBuf>,
    /// Proposal list to score with IOU recall.
    #[arg(long)]
    pub segments: Option<PathBuf>,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Directory for report.json and report.txt.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_parser = parse_denominator, default_value = "all")]
    pub precision_denominator: PrecisionDenominator,
    /// Number of cross-validation folds (videos are assigned by id hash).
    #[arg(long, requires = "fold")]
    pub folds: Option<u64>,
    /// Only evaluate videos in this fold.
    #[arg(long, requires = "folds")]
    pub fold: Option<u64>,
}

fn parse_mode(s: &str) -> std::result::Result<ScoreMode, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_denominator(s: &str) -> std::result::Result<PrecisionDenominator, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_weights(s: &str) -> std::result::Result<(f64, f64, f64), String> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("{p:?}: {e}")))
        .collect::<std::result::Result<_, _>>()?;
    match parts.as_slice() {
        [a, b, c] => Ok((*a, *b, *c)),
        _ => Err("expected three comma-separated weights".into()),
    }
}

fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn cmd_simulate(args: &SimulateArgs) -> Result<()> {
    let cfg = SimConfig {
        seed: args.seed,
        num_steps: args.steps,
        segments_per_step: args.segments_per_step,
        object_vocab_size: args.vocab,
        detection_noise: args.detection_noise,
        out_of_order_rate: args.out_of_order_rate,
        distractor_segment_rate: args.distractor_rate,
        frames_per_segment: (args.min_segment_len, args.max_segment_len),
        num_frames: args.frames,
        ..Default::default()
    };
    let manifest = write_corpus(&cfg, args.videos, &args.out)?;
    println!("wrote {} videos to {}", manifest.videos.len(), args.out.display());
    Ok(())
}

fn propose_one(trace_path: &Path, out: &Path, cfg: &ProposalConfig) -> Result<usize> {
    let trace = load_trace(trace_path)?;
    let segments = segments_from_scores(&trace.action_scores, cfg)?;
    if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    save_proposals(&segments_to_proposals(&segments), out)?;
    Ok(segments.len())
}

fn cmd_propose(args: &ProposeArgs) -> Result<()> {
    let cfg = args.proposal.config();
    cfg.validate()?;
    if let Some(manifest_path) = &args.manifest {
        let manifest = load_manifest(manifest_path)?;
        manifest.check_inputs()?;
        let counts = manifest
            .videos
            .par_iter()
            .map(|v| {
                let out = v.segments.as_ref().ok_or_else(|| {
                    Error::validation("manifest", format!("video {} has no segments path", v.trace.display()))
                })?;
                propose_one(&v.trace, out, &cfg)
            })
            .collect::<Result<Vec<usize>>>()?;
        println!(
            "proposed {} segments across {} videos",
            counts.iter().sum::<usize>(),
            counts.len()
        );
    } else {
        let trace = args.trace.as_ref().expect("clap requires --trace");
        let out = args.out.as_ref().expect("clap requires --out");
        let n = propose_one(trace, out, &cfg)?;
        println!("proposed {n} segments");
    }
    Ok(())
}

fn cmd_nms(args: &NmsArgs) -> Result<()> {
    let proposals = load_proposals(&args.proposals)?;
    let kept = nms_intervals(&proposals, args.iou_threshold)?;
    save_proposals(&kept, &args.out)?;
    println!("kept {} of {} proposals", kept.len(), proposals.len());
    Ok(())
}

fn load_recipe(recipe: &Path, coref: Option<&Path>) -> Result<ParsedRecipe> {
    let steps = load_conllu(recipe)?;
    let overrides = coref.map(load_coref_overrides).transpose()?;
    parse_recipe(&steps, &RelationLabels::default(), overrides.as_ref())
}

fn cmd_parse(args: &ParseArgs) -> Result<()> {
    let recipe = load_recipe(&args.recipe, args.coref.as_deref())?;
    let json = serde_json::to_string_pretty(&recipe).map_err(|e| Error::from_json("recipe", e))?;
    match &args.out {
        Some(out) => write_file(out, json),
        None => {
            println!("{json}");
            Ok(())
        }
    }
}

fn pipeline_config(args: &AlignArgs) -> Result<PipelineConfig> {
    let (w_obj, w_act, w_temp) = args.weights;
    let cfg = PipelineConfig {
        proposal: ProposalConfig {
            score_threshold: args.proposal_threshold,
            min_segment_frames: args.min_segment_frames,
            gap_merge_frames: 0,
        },
        frame_stride: 1,
        top_k: args.top_k,
        align: AlignConfig {
            w_obj,
            w_act,
            w_temp,
            score_threshold: args.score_threshold,
            mode: args.mode,
            ..Default::default()
        },
    };
    if cfg.top_k == 0 {
        return Err(Error::Config("--top-k must be at least 1".into()));
    }
    cfg.proposal.validate()?;
    cfg.align.validate()?;
    Ok(cfg)
}

fn load_segments(path: &Path) -> Result<Vec<Segment>> {
    let mut segments: Vec<Segment> = load_proposals(path)?.iter().map(|p| p.segment()).collect();
    segments.sort_by_key(|s| (s.start, s.end));
    Ok(segments)
}

fn align_one(
    trace: &VideoTrace,
    segments: Option<&Path>,
    recipe: &ParsedRecipe,
    store: &EmbeddingStore,
    cfg: &PipelineConfig,
) -> Result<Alignment> {
    let segments = segments.map(load_segments).transpose()?;
    run_video(trace, segments.as_deref(), recipe, store, cfg)
}

fn timeline_csv(alignments: &[Alignment]) -> String {
    let mut out = String::from("video_id,step,start,end\n");
    for a in alignments {
        for (s, step) in a.segments.iter().zip(&a.assignments) {
            if let Some(step) = step {
                out.push_str(&format!("{},{},{},{}\n", a.video_id, step, s.start, s.end));
            }
        }
    }
    out
}

fn cmd_align(args: &AlignArgs) -> Result<()> {
    let cfg = pipeline_config(args)?;
    let alignments = if let Some(manifest_path) = &args.manifest {
        let manifest = load_manifest(manifest_path)?;
        manifest.check_inputs()?;
        let recipe = load_recipe(&manifest.recipe, manifest.coref.as_deref())?;
        let store = load_embeddings(&manifest.embeddings)?;
        let out_dir = args.out.clone().unwrap_or_else(|| manifest.out_dir.join("alignments"));
        let mut results = manifest
            .videos
            .par_iter()
            .map(|v| {
                let trace = load_trace(&v.trace)?;
                let segs = v.segments.as_deref().filter(|p| p.is_file());
                align_one(&trace, segs, &recipe, &store, &cfg).map(|a| (a, trace.fps))
            })
            .collect::<Result<Vec<(Alignment, f64)>>>()?;
        results.sort_by(|a, b| a.0.video_id.cmp(&b.0.video_id));
        for (a, fps) in &results {
            write_file(&out_dir.join(format!("{}.json", a.video_id)), a.to_json_string()?)?;
            println!("== {}", a.video_id);
            print!("{}", step_report(a, &recipe, *fps));
        }
        results.into_iter().map(|(a, _)| a).collect()
    } else {
        let trace_path = args.trace.as_ref().expect("clap requires --trace");
        let recipe_path = args.recipe.as_ref().expect("clap requires --recipe");
        let emb_path = args.embeddings.as_ref().expect("clap requires --embeddings");
        for p in [trace_path, recipe_path, emb_path] {
            if !p.is_file() {
                return Err(Error::io(p, std::io::Error::new(std::io::ErrorKind::NotFound, "input file not found")));
            }
        }
        let trace = load_trace(trace_path)?;
        let recipe = load_recipe(recipe_path, args.coref.as_deref())?;
        let store = load_embeddings(emb_path)?;
        let a = align_one(&trace, args.segments.as_deref(), &recipe, &store, &cfg)?;
        save_alignment(&a, args.out.as_ref().expect("clap requires --out"))?;
        print!("{}", step_report(&a, &recipe, trace.fps));
        vec![a]
    };
    if let Some(csv) = &args.timeline_csv {
        write_file(csv, timeline_csv(&alignments))?;
    }
    Ok(())
}

fn eval_one(alignment: &Path, trace: &Path, segments: Option<&Path>) -> Result<VideoEval> {
    let trace = load_trace(trace)?;
    let alignment = load_alignment(alignment)?;
    let segments = segments.map(load_segments).transpose()?;
    evaluate_video(&trace.video_id, &alignment.labels(), &trace, segments.as_deref())
}

fn manifest_evals(manifest: &RunManifest, args: &EvalArgs) -> Result<Vec<VideoEval>> {
    let align_dir = manifest.out_dir.join("alignments");
    let evals = manifest
        .videos
        .par_iter()
        .map(|v| {
            let trace = load_trace(&v.trace)?;
            if let (Some(k), Some(i)) = (args.folds, args.fold) {
                if fold_of(&trace.video_id, k) != i {
                    return Ok(None);
                }
            }
            let alignment = load_alignment(align_dir.join(format!("{}.json", trace.video_id)))?;
            let segments = v
                .segments
                .as_deref()
                .filter(|p| p.is_file())
                .map(load_segments)
                .transpose()?;
            evaluate_video(&trace.video_id, &alignment.labels(), &trace, segments.as_deref()).map(Some)
        })
        .collect::<Result<Vec<Option<VideoEval>>>>()?;
    Ok(evals.into_iter().flatten().collect())
}

fn cmd_eval(args: &EvalArgs) -> Result<()> {
    if let (Some(k), Some(i)) = (args.folds, args.fold) {
        if k == 0 || i >= k {
            return Err(Error::Config(format!("fold {i} outside 0..{k}")));
        }
    }
    let (evals, default_out) = if let Some(manifest_path) = &args.manifest {
        let manifest = load_manifest(manifest_path)?;
        manifest.check_inputs()?;
        (manifest_evals(&manifest, args)?, Some(manifest.out_dir.clone()))
    } else {
        let a = args.alignment.as_ref().expect("clap requires --alignment");
        let t = args.trace.as_ref().expect("clap requires --trace");
        (vec![eval_one(a, t, args.segments.as_deref())?], None)
    };
    let report: EvalReport = summarize(&evals, args.precision_denominator);
    let table = report.to_table();
    if let Some(dir) = args.out.clone().or(default_out) {
        write_file(&dir.join("report.json"), report.to_json_string()?)?;
        write_file(&dir.join("report.txt"), &table)?;
    }
    print!("{table}");
    Ok(())
}

pub fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Simulate(a) => cmd_simulate(a),
        Command::Propose(a) => cmd_propose(a),
        Command::Nms(a) => cmd_nms(a),
        Command::Parse(a) => cmd_parse(a),
        Command::Align(a) => cmd_align(a),
        Command::Eval(a) => cmd_eval(a),
    }
}

pub fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
