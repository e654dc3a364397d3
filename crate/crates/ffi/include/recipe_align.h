#ifndef RECIPE_ALIGN_H
#define RECIPE_ALIGN_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum RaStatus {
  RA_STATUS_OK = 0,
  RA_STATUS_IO = 1,
  /**
   * Malformed input file.
   */
  RA_STATUS_FORMAT = 2,
  RA_STATUS_VALIDATION = 3,
  RA_STATUS_ARGUMENT = 4,
  RA_STATUS_NULL_POINTER = 5,
  /**
   * The caller's buffer is too small; the required length was written.
   */
  RA_STATUS_BUFFER_TOO_SMALL = 6,
  RA_STATUS_PANIC = 7,
} RaStatus;

typedef enum RaScoreMode {
  RA_SCORE_MODE_FULL = 0,
  RA_SCORE_MODE_TEMPORAL_ONLY = 1,
  RA_SCORE_MODE_SEMANTIC_ONLY = 2,
} RaScoreMode;

typedef struct RaAlignment RaAlignment;

typedef struct RaEmbeddings RaEmbeddings;

typedef struct RaRecipe RaRecipe;

typedef struct RaTrace RaTrace;

typedef struct RaAlignConfig {
  double w_obj;
  double w_act;
  double w_temp;
  double secondary_object_weight;
  double score_threshold;
  double gaussian_sigma_fraction;
  enum RaScoreMode mode;
  double proposal_threshold;
  size_t min_segment_frames;
  size_t gap_merge_frames;
  size_t top_k;
} RaAlignConfig;

typedef struct RaInterval {
  size_t start;
  size_t end;
  double confidence;
} RaInterval;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or null. Valid until
 * another call fails on the same thread.
 */
const char *ra_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *ra_version(void);

/**
 * # Safety
 * `s` must be null or a string returned by this library.
 */
void ra_string_free(char *s);

/**
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum RaStatus ra_trace_load(const char *path, struct RaTrace **out);

/**
 * # Safety
 * `trace` must be null or a handle from [`ra_trace_load`].
 */
void ra_trace_free(struct RaTrace *trace);

/**
 * # Safety
 * `trace` must be a live handle.
 */
size_t ra_trace_num_frames(const struct RaTrace *trace);

/**
 * Loads a CoNLL-U recipe and resolves coreference. `coref_path` may be null.
 *
 * # Safety
 * `path` must be a NUL-terminated string, `coref_path` null or one, `out` valid.
 */
enum RaStatus ra_recipe_load_conllu(const char *path,
                                    const char *coref_path,
                                    struct RaRecipe **out);

/**
 * # Safety
 * `recipe` must be null or a handle from [`ra_recipe_load_conllu`].
 */
void ra_recipe_free(struct RaRecipe *recipe);

/**
 * # Safety
 * `recipe` must be a live handle.
 */
size_t ra_recipe_num_steps(const struct RaRecipe *recipe);

/**
 * Parsed recipe as JSON. Release with [`ra_string_free`].
 *
 * # Safety
 * `recipe` must be a live handle and `out` valid.
 */
enum RaStatus ra_recipe_to_json(const struct RaRecipe *recipe, char **out);

/**
 * # Safety
 * `path` must be a NUL-terminated string and `out` valid.
 */
enum RaStatus ra_embeddings_load(const char *path, struct RaEmbeddings **out);

/**
 * # Safety
 * `store` must be null or a handle from [`ra_embeddings_load`].
 */
void ra_embeddings_free(struct RaEmbeddings *store);

/**
 * Euclidean distance between two phrase vectors. `*found` is false (and
 * `*distance` NaN) when either phrase has no in-vocabulary token.
 *
 * # Safety
 * All pointers must be valid; `a` and `b` NUL-terminated.
 */
enum RaStatus ra_embeddings_distance(const struct RaEmbeddings *store,
                                     const char *a,
                                     const char *b,
                                     double *distance,
                                     bool *found);

struct RaAlignConfig ra_align_config_default(void);

/**
 * Proposes segments from the trace's scores and aligns them to the recipe.
 * A null `config` uses [`ra_align_config_default`].
 *
 * # Safety
 * Handles must be live; `config` null or valid; `out` valid.
 */
enum RaStatus ra_align(const struct RaTrace *trace,
                       const struct RaRecipe *recipe,
                       const struct RaEmbeddings *store,
                       const struct RaAlignConfig *config,
                       struct RaAlignment **out);

/**
 * # Safety
 * `alignment` must be null or a handle from [`ra_align`].
 */
void ra_alignment_free(struct RaAlignment *alignment);

/**
 * # Safety
 * `alignment` must be a live handle.
 */
size_t ra_alignment_num_frames(const struct RaAlignment *alignment);

/**
 * Copies per-frame step labels (0 = background) into `buf`. `*len` receives
 * the number of frames; `RA_STATUS_BUFFER_TOO_SMALL` if it exceeds `cap`.
 *
 * # Safety
 * `buf` must hold `cap` elements (may be null when `cap` is 0); `len` valid.
 */
enum RaStatus ra_alignment_frame_labels(const struct RaAlignment *alignment,
                                        uint32_t *buf,
                                        size_t cap,
                                        size_t *len);

/**
 * Alignment as JSON. Release with [`ra_string_free`].
 *
 * # Safety
 * `alignment` must be a live handle and `out` valid.
 */
enum RaStatus ra_alignment_to_json(const struct RaAlignment *alignment, char **out);

/**
 * Thresholds, gap-merges and length-filters per-frame scores into segments.
 *
 * # Safety
 * `scores` must hold `n` values; `buf` `cap` elements; `len` valid.
 */
enum RaStatus ra_segments_from_scores(const double *scores,
                                      size_t n,
                                      double score_threshold,
                                      size_t min_segment_frames,
                                      size_t gap_merge_frames,
                                      struct RaInterval *buf,
                                      size_t cap,
                                      size_t *len);

/**
 * IOU of half-open intervals `[a_start, a_end)` and `[b_start, b_end)`.
 *
 * # Safety
 * `out` must be valid.
 */
enum RaStatus ra_interval_iou(size_t a_start,
                              size_t a_end,
                              size_t b_start,
                              size_t b_end,
                              double *out);

/**
 * Frame precision of `predicted` against `truth` (step labels, 0 =
 * background). With `labeled_only` only non-background truth frames count;
 * `*defined` is false when there are none.
 *
 * # Safety
 * `predicted` and `truth` must hold `n` values; `out` and `defined` valid.
 */
enum RaStatus ra_frame_precision(const uint32_t *predicted,
                                 const uint32_t *truth,
                                 size_t n,
                                 bool labeled_only,
                                 double *out,
                                 bool *defined);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RECIPE_ALIGN_H */
