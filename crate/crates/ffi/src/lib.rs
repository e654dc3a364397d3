//! C ABI over `recipe_align`.
//!
//! Objects are opaque handles created by `ra_*_load` / `ra_align` and released
//! with the matching `ra_*_free`. Every fallible call returns an [`RaStatus`];
//! on failure [`ra_last_error_message`] describes the error for the calling
//! thread. Strings returned by the library are released with [`ra_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use recipe_align::aligner::ScoreMode;
use recipe_align::recipe::load_coref_overrides;
use recipe_align::{
    frame_precision, interval_iou, load_conllu, load_embeddings, load_trace, parse_recipe, run_video,
    segments_from_scores, AlignConfig, Alignment, EmbeddingStore, Error, Label, ParsedRecipe, PipelineConfig,
    PrecisionDenominator, ProposalConfig, RelationLabels, VideoTrace,
};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RaStatus {
    Ok = 0,
    Io = 1,
    /// Malformed input file.
    Format = 2,
    Validation = 3,
    Argument = 4,
    NullPointer = 5,
    /// The caller's buffer is too small; the required length was written.
    BufferTooSmall = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RaScoreMode {
    Full = 0,
    TemporalOnly = 1,
    SemanticOnly = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RaAlignConfig {
    pub w_obj: f64,
    pub w_act: f64,
    pub w_temp: f64,
    pub secondary_object_weight: f64,
    pub score_threshold: f64,
    pub gaussian_sigma_fraction: f64,
    pub mode: RaScoreMode,
    pub proposal_threshold: f64,
    pub min_segment_frames: usize,
    pub gap_merge_frames: usize,
    pub top_k: usize,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RaInterval {
    pub start: usize,
    pub end: usize,
    pub confidence: f64,
}

pub struct RaTrace(VideoTrace);
pub struct RaRecipe(ParsedRecipe);
pub struct RaEmbeddings(EmbeddingStore);
pub struct RaAlignment(Alignment);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn fail(status: RaStatus, msg: impl Into<String>) -> RaStatus {
    set_error(msg);
    status
}

fn from_error(err: Error) -> RaStatus {
    let status = match &err {
        Error::Io { .. } => RaStatus::Io,
        Error::Schema { .. } => RaStatus::Format,
        Error::Validation { .. } | Error::Config(_) => RaStatus::Validation,
        Error::Argument(_) => RaStatus::Argument,
    };
    fail(status, err.to_string())
}

fn guard(f: impl FnOnce() -> RaStatus) -> RaStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            fail(RaStatus::Panic, format!("panic: {msg}"))
        }
    }
}

macro_rules! try_ra {
    ($e:expr) => {
        match $e {
            Ok(v) => v,
            Err(err) => return from_error(err),
        }
    };
}

macro_rules! non_null {
    ($($p:ident),+) => {
        $(if $p.is_null() {
            return fail(RaStatus::NullPointer, concat!(stringify!($p), " is null"));
        })+
    };
}

unsafe fn path_arg(p: *const c_char) -> Result<PathBuf, RaStatus> {
    CStr::from_ptr(p)
        .to_str()
        .map(PathBuf::from)
        .map_err(|_| fail(RaStatus::Argument, "path is not valid UTF-8"))
}

unsafe fn str_arg<'a>(p: *const c_char) -> Result<&'a str, RaStatus> {
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(RaStatus::Argument, "string is not valid UTF-8"))
}

unsafe fn emit<T>(out: *mut *mut T, value: T) -> RaStatus {
    *out = Box::into_raw(Box::new(value));
    RaStatus::Ok
}

unsafe fn drop_handle<T>(p: *mut T) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Message for the last failed call on this thread, or null. Valid until
/// another call fails on the same thread.
#[no_mangle]
pub extern "C" fn ra_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ra_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// # Safety
/// `s` must be null or a string returned by this library.
#[no_mangle]
pub unsafe extern "C" fn ra_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ra_trace_load(path: *const c_char, out: *mut *mut RaTrace) -> RaStatus {
    guard(|| {
        non_null!(path, out);
        let path = match path_arg(path) {
            Ok(p) => p,
            Err(s) => return s,
        };
        emit(out, RaTrace(try_ra!(load_trace(path))))
    })
}

/// # Safety
/// `trace` must be null or a handle from [`ra_trace_load`].
#[no_mangle]
pub unsafe extern "C" fn ra_trace_free(trace: *mut RaTrace) {
    drop_handle(trace);
}

/// # Safety
/// `trace` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn ra_trace_num_frames(trace: *const RaTrace) -> usize {
    trace.as_ref().map_or(0, |t| t.0.num_frames)
}

/// Loads a CoNLL-U recipe and resolves coreference. `coref_path` may be null.
///
/// # Safety
/// `path` must be a NUL-terminated string, `coref_path` null or one, `out` valid.
#[no_mangle]
pub unsafe extern "C" fn ra_recipe_load_conllu(
    path: *const c_char,
    coref_path: *const c_char,
    out: *mut *mut RaRecipe,
) -> RaStatus {
    guard(|| {
        non_null!(path, out);
        let path = match path_arg(path) {
            Ok(p) => p,
            Err(s) => return s,
        };
        let overrides = if coref_path.is_null() {
            None
        } else {
            match path_arg(coref_path) {
                Ok(p) => Some(try_ra!(load_coref_overrides(p))),
                Err(s) => return s,
            }
        };
        let steps = try_ra!(load_conllu(path));
        let recipe = try_ra!(parse_recipe(&steps, &RelationLabels::default(), overrides.as_ref()));
        emit(out, RaRecipe(recipe))
    })
}

/// # Safety
/// `recipe` must be null or a handle from [`ra_recipe_load_conllu`].
#[no_mangle]
pub unsafe extern "C" fn ra_recipe_free(recipe: *mut RaRecipe) {
    drop_handle(recipe);
}

/// # Safety
/// `recipe` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn ra_recipe_num_steps(recipe: *const RaRecipe) -> usize {
    recipe.as_ref().map_or(0, |r| r.0.num_steps())
}

/// Parsed recipe as JSON. Release with [`ra_string_free`].
///
/// # Safety
/// `recipe` must be a live handle and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn ra_recipe_to_json(recipe: *const RaRecipe, out: *mut *mut c_char) -> RaStatus {
    guard(|| {
        non_null!(recipe, out);
        match serde_json::to_string(&(*recipe).0) {
            Ok(s) => write_string(out, s),
            Err(e) => fail(RaStatus::Format, e.to_string()),
        }
    })
}

/// # Safety
/// `path` must be a NUL-terminated string and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn ra_embeddings_load(path: *const c_char, out: *mut *mut RaEmbeddings) -> RaStatus {
    guard(|| {
        non_null!(path, out);
        let path = match path_arg(path) {
            Ok(p) => p,
            Err(s) => return s,
        };
        emit(out, RaEmbeddings(try_ra!(load_embeddings(path))))
    })
}

/// # Safety
/// `store` must be null or a handle from [`ra_embeddings_load`].
#[no_mangle]
pub unsafe extern "C" fn ra_embeddings_free(store: *mut RaEmbeddings) {
    drop_handle(store);
}

/// Euclidean distance between two phrase vectors. `*found` is false (and
/// `*distance` NaN) when either phrase has no in-vocabulary token.
///
/// # Safety
/// All pointers must be valid; `a` and `b` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn ra_embeddings_distance(
    store: *const RaEmbeddings,
    a: *const c_char,
    b: *const c_char,
    distance: *mut f64,
    found: *mut bool,
) -> RaStatus {
    guard(|| {
        non_null!(store, a, b, distance, found);
        let (a, b) = match (str_arg(a), str_arg(b)) {
            (Ok(a), Ok(b)) => (a, b),
            (Err(s), _) | (_, Err(s)) => return s,
        };
        let d = (*store).0.word_distance(a, b);
        *found = d.is_some();
        *distance = d.unwrap_or(f64::NAN);
        RaStatus::Ok
    })
}

#[no_mangle]
pub extern "C" fn ra_align_config_default() -> RaAlignConfig {
    let a = AlignConfig::default();
    let p = PipelineConfig::default();
    RaAlignConfig {
        w_obj: a.w_obj,
        w_act: a.w_act,
        w_temp: a.w_temp,
        secondary_object_weight: a.secondary_object_weight,
        score_threshold: a.score_threshold,
        gaussian_sigma_fraction: a.gaussian_sigma_fraction,
        mode: RaScoreMode::Full,
        proposal_threshold: p.proposal.score_threshold,
        min_segment_frames: p.proposal.min_segment_frames,
        gap_merge_frames: p.proposal.gap_merge_frames,
        top_k: p.top_k,
    }
}

fn pipeline_config(c: &RaAlignConfig) -> PipelineConfig {
    PipelineConfig {
        proposal: ProposalConfig {
            score_threshold: c.proposal_threshold,
            min_segment_frames: c.min_segment_frames,
            gap_merge_frames: c.gap_merge_frames,
        },
        top_k: c.top_k,
        align: AlignConfig {
            w_obj: c.w_obj,
            w_act: c.w_act,
            w_temp: c.w_temp,
            secondary_object_weight: c.secondary_object_weight,
            score_threshold: c.score_threshold,
            gaussian_sigma_fraction: c.gaussian_sigma_fraction,
            mode: match c.mode {
                RaScoreMode::Full => ScoreMode::Full,
                RaScoreMode::TemporalOnly => ScoreMode::TemporalOnly,
                RaScoreMode::SemanticOnly => ScoreMode::SemanticOnly,
            },
        },
        ..PipelineConfig::default()
    }
}

/// Proposes segments from the trace's scores and aligns them to the recipe.
/// A null `config` uses [`ra_align_config_default`].
///
/// # Safety
/// Handles must be live; `config` null or valid; `out` valid.
#[no_mangle]
pub unsafe extern "C" fn ra_align(
    trace: *const RaTrace,
    recipe: *const RaRecipe,
    store: *const RaEmbeddings,
    config: *const RaAlignConfig,
    out: *mut *mut RaAlignment,
) -> RaStatus {
    guard(|| {
        non_null!(trace, recipe, store, out);
        let cfg = config.as_ref().copied().unwrap_or_else(|| ra_align_config_default());
        let alignment = try_ra!(run_video(
            &(*trace).0,
            None,
            &(*recipe).0,
            &(*store).0,
            &pipeline_config(&cfg)
        ));
        emit(out, RaAlignment(alignment))
    })
}

/// # Safety
/// `alignment` must be null or a handle from [`ra_align`].
#[no_mangle]
pub unsafe extern "C" fn ra_alignment_free(alignment: *mut RaAlignment) {
    drop_handle(alignment);
}

/// # Safety
/// `alignment` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn ra_alignment_num_frames(alignment: *const RaAlignment) -> usize {
    alignment.as_ref().map_or(0, |a| a.0.num_frames())
}

/// Copies per-frame step labels (0 = background) into `buf`. `*len` receives
/// the number of frames; `RA_STATUS_BUFFER_TOO_SMALL` if it exceeds `cap`.
///
/// # Safety
/// `buf` must hold `cap` elements (may be null when `cap` is 0); `len` valid.
#[no_mangle]
pub unsafe extern "C" fn ra_alignment_frame_labels(
    alignment: *const RaAlignment,
    buf: *mut u32,
    cap: usize,
    len: *mut usize,
) -> RaStatus {
    guard(|| {
        non_null!(alignment, len);
        let labels = &(*alignment).0.frame_labels;
        *len = labels.len();
        if labels.len() > cap {
            return fail(RaStatus::BufferTooSmall, format!("need {} labels, have room for {cap}", labels.len()));
        }
        non_null!(buf);
        for (i, l) in labels.iter().enumerate() {
            *buf.add(i) = l.index();
        }
        RaStatus::Ok
    })
}

unsafe fn write_string(out: *mut *mut c_char, s: String) -> RaStatus {
    match CString::new(s) {
        Ok(c) => {
            *out = c.into_raw();
            RaStatus::Ok
        }
        Err(_) => fail(RaStatus::Format, "output contains a NUL byte"),
    }
}

/// Alignment as JSON. Release with [`ra_string_free`].
///
/// # Safety
/// `alignment` must be a live handle and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn ra_alignment_to_json(alignment: *const RaAlignment, out: *mut *mut c_char) -> RaStatus {
    guard(|| {
        non_null!(alignment, out);
        let json = try_ra!((*alignment).0.to_json_string());
        write_string(out, json)
    })
}

/// Thresholds, gap-merges and length-filters per-frame scores into segments.
///
/// # Safety
/// `scores` must hold `n` values; `buf` `cap` elements; `len` valid.
#[no_mangle]
pub unsafe extern "C" fn ra_segments_from_scores(
    scores: *const f64,
    n: usize,
    score_threshold: f64,
    min_segment_frames: usize,
    gap_merge_frames: usize,
    buf: *mut RaInterval,
    cap: usize,
    len: *mut usize,
) -> RaStatus {
    guard(|| {
        non_null!(len);
        let scores: &[f64] = if n == 0 {
            &[]
        } else {
            non_null!(scores);
            std::slice::from_raw_parts(scores, n)
        };
        let cfg = ProposalConfig {
            score_threshold,
            min_segment_frames,
            gap_merge_frames,
        };
        let segs = try_ra!(segments_from_scores(scores, &cfg));
        *len = segs.len();
        if segs.len() > cap {
            return fail(RaStatus::BufferTooSmall, format!("need {} intervals, have room for {cap}", segs.len()));
        }
        if !segs.is_empty() {
            non_null!(buf);
        }
        for (i, s) in segs.iter().enumerate() {
            *buf.add(i) = RaInterval {
                start: s.start,
                end: s.end,
                confidence: s.confidence.unwrap_or(f64::NAN),
            };
        }
        RaStatus::Ok
    })
}

/// IOU of half-open intervals `[a_start, a_end)` and `[b_start, b_end)`.
///
/// # Safety
/// `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn ra_interval_iou(
    a_start: usize,
    a_end: usize,
    b_start: usize,
    b_end: usize,
    out: *mut f64,
) -> RaStatus {
    guard(|| {
        non_null!(out);
        *out = try_ra!(interval_iou((a_start, a_end), (b_start, b_end)));
        RaStatus::Ok
    })
}

/// Frame precision of `predicted` against `truth` (step labels, 0 =
/// background). With `labeled_only` only non-background truth frames count;
/// `*defined` is false when there are none.
///
/// # Safety
/// `predicted` and `truth` must hold `n` values; `out` and `defined` valid.
#[no_mangle]
pub unsafe extern "C" fn ra_frame_precision(
    predicted: *const u32,
    truth: *const u32,
    n: usize,
    labeled_only: bool,
    out: *mut f64,
    defined: *mut bool,
) -> RaStatus {
    guard(|| {
        non_null!(out, defined);
        let to_labels = |p: *const u32| -> Vec<Label> {
            if n == 0 {
                Vec::new()
            } else {
                std::slice::from_raw_parts(p, n).iter().map(|&i| Label::from_index(i)).collect()
            }
        };
        if n > 0 {
            non_null!(predicted, truth);
        }
        let denom = if labeled_only {
            PrecisionDenominator::Labeled
        } else {
            PrecisionDenominator::All
        };
        let p = try_ra!(frame_precision(&to_labels(predicted), &to_labels(truth), denom));
        *defined = p.is_some();
        *out = p.unwrap_or(f64::NAN);
        RaStatus::Ok
    })
}
