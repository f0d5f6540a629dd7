#ifndef LEVELSCORE_H
#define LEVELSCORE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum LsStatus {
  LS_STATUS_OK = 0,
  LS_STATUS_NULL_POINTER = 1,
  LS_STATUS_INVALID_ARGUMENT = 2,
  LS_STATUS_PARSE = 3,
  LS_STATUS_IO = 4,
  LS_STATUS_NOT_FOUND = 5,
  LS_STATUS_EMPTY = 6,
  LS_STATUS_NUMERIC = 7,
  LS_STATUS_AXIS = 8,
  LS_STATUS_UTF8 = 9,
  LS_STATUS_PANIC = 99,
} LsStatus;

typedef enum LsCategory {
  LS_CATEGORY_CELL_MOLECULAR = 0,
  LS_CATEGORY_ANIMAL = 1,
  LS_CATEGORY_HUMAN = 2,
  LS_CATEGORY_NEUTRAL = 3,
} LsCategory;

typedef enum LsReachMatrix {
  LS_REACH_MATRIX_R = 0,
  LS_REACH_MATRIX_L = 1,
  LS_REACH_MATRIX_Y = 2,
} LsReachMatrix;

typedef struct LsAxis LsAxis;

typedef struct LsEmbedding LsEmbedding;

typedef struct LsGraph LsGraph;

typedef struct LsReach LsReach;

typedef struct LsVocabulary LsVocabulary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failure on this thread, or null. The pointer stays
 * valid until the next failing call on the same thread.
 */
const char *ls_last_error_message(void);

void ls_clear_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *ls_version(void);

/**
 * Loads a `term<TAB>tree_number` file. Each roots argument is a
 * `;`-separated list of tree numbers or term names; null selects the default.
 *
 * # Safety
 * String arguments must be null or valid NUL-terminated strings; `out` must be writable.
 */
enum LsStatus ls_vocabulary_load(const char *mesh_tree_path,
                                 const char *cell_molecular_roots,
                                 const char *animal_roots,
                                 const char *human_roots,
                                 struct LsVocabulary **out);

/**
 * # Safety
 * `v` must be null or a handle from [`ls_vocabulary_load`] not yet freed.
 */
void ls_vocabulary_free(struct LsVocabulary *v);

/**
 * # Safety
 * `v` must be a live vocabulary handle.
 */
size_t ls_vocabulary_len(const struct LsVocabulary *v);

/**
 * # Safety
 * `v` must be a live handle, `name` a NUL-terminated string, `out_id` writable.
 */
enum LsStatus ls_vocabulary_term_id(const struct LsVocabulary *v,
                                    const char *name,
                                    uint32_t *out_id);

/**
 * # Safety
 * `v` must be a live handle and `out` writable.
 */
enum LsStatus ls_vocabulary_category(const struct LsVocabulary *v,
                                     uint32_t id,
                                     enum LsCategory *out);

/**
 * Reads an `emb_<t>.tsv` file for window `window_end`.
 *
 * # Safety
 * `path` must be a NUL-terminated string, `v` a live handle, `out` writable.
 */
enum LsStatus ls_embedding_read(const char *path,
                                const struct LsVocabulary *v,
                                int32_t window_end,
                                struct LsEmbedding **out);

/**
 * Builds an embedding from `n_terms` row-major vectors of length `dim`.
 *
 * # Safety
 * `terms` must hold `n_terms` ids and `vectors` `n_terms * dim` values.
 */
enum LsStatus ls_embedding_new(int32_t window_end,
                               size_t dim,
                               const uint32_t *terms,
                               size_t n_terms,
                               const double *vectors,
                               struct LsEmbedding **out);

/**
 * # Safety
 * `e` must be null or a live embedding handle.
 */
void ls_embedding_free(struct LsEmbedding *e);

/**
 * # Safety
 * `e` must be a live embedding handle.
 */
size_t ls_embedding_dim(const struct LsEmbedding *e);

/**
 * # Safety
 * `e` must be a live embedding handle.
 */
size_t ls_embedding_len(const struct LsEmbedding *e);

/**
 * Builds the basic-to-applied axis and term scores for one window. The
 * embedding is copied; both handles stay owned by the caller.
 *
 * # Safety
 * Handles must be live and `out` writable.
 */
enum LsStatus ls_axis_build(const struct LsEmbedding *e,
                            const struct LsVocabulary *v,
                            struct LsAxis **out);

/**
 * # Safety
 * `a` must be null or a live axis handle.
 */
void ls_axis_free(struct LsAxis *a);

/**
 * Copies the axis vector into `buf`, which must hold the embedding dimension.
 *
 * # Safety
 * `buf` must have room for `len` values.
 */
enum LsStatus ls_axis_vector(const struct LsAxis *a, double *buf, size_t len);

/**
 * Level score of one term; `LS_STATUS_NOT_FOUND` when it has no vector.
 *
 * # Safety
 * `a` must be live and `out` writable.
 */
enum LsStatus ls_axis_term_score(const struct LsAxis *a, uint32_t term, double *out);

/**
 * Paper score from its in-vocabulary term ids and original term count.
 * `out_scoreable` receives 0 when the majority rule fails, in which case
 * `out_score` is left untouched.
 *
 * # Safety
 * `terms` must hold `n_terms` ids; outputs must be writable.
 */
enum LsStatus ls_axis_paper_score(const struct LsAxis *a,
                                  const uint32_t *terms,
                                  size_t n_terms,
                                  size_t n_original,
                                  double *out_score,
                                  int32_t *out_scoreable);

/**
 * Citation graph over `n_nodes` papers; edge `k` runs from `citing[k]` to
 * `cited[k]` (node indices). Self-loops and duplicates are dropped.
 *
 * # Safety
 * `years` and `scores` must hold `n_nodes` values, `citing`/`cited` `n_edges`.
 */
enum LsStatus ls_graph_new(size_t n_nodes,
                           const int32_t *years,
                           const double *scores,
                           size_t n_edges,
                           const uint32_t *citing,
                           const uint32_t *cited,
                           struct LsGraph **out);

/**
 * # Safety
 * `g` must be null or a live graph handle.
 */
void ls_graph_free(struct LsGraph *g);

/**
 * # Safety
 * `g` must be a live graph handle.
 */
size_t ls_graph_edge_count(const struct LsGraph *g);

/**
 * Mean absolute score difference across edges; `LS_STATUS_EMPTY` without edges.
 *
 * # Safety
 * `g` must be live and `out` writable.
 */
enum LsStatus ls_graph_homophily_gap(const struct LsGraph *g, double *out);

/**
 * Copy of `g` with scores permuted across nodes.
 *
 * # Safety
 * `g` must be live and `out` writable.
 */
enum LsStatus ls_graph_shuffled(const struct LsGraph *g, uint64_t seed, struct LsGraph **out);

/**
 * Source-bin by target-bin reachability averages over a seeded sample.
 *
 * # Safety
 * `g` must be live and `out` writable.
 */
enum LsStatus ls_reach_aggregate(const struct LsGraph *g,
                                 double sample_fraction,
                                 double bin_width,
                                 uint64_t seed,
                                 struct LsReach **out);

/**
 * # Safety
 * `r` must be null or a live reach handle.
 */
void ls_reach_free(struct LsReach *r);

/**
 * # Safety
 * `r` must be a live reach handle.
 */
size_t ls_reach_bins(const struct LsReach *r);

/**
 * Cell `(source_bin, target_bin)` of one matrix. `out_defined` receives 0
 * for an undefined cell, leaving `out_value` untouched.
 *
 * # Safety
 * `r` must be live; outputs must be writable.
 */
enum LsStatus ls_reach_get(const struct LsReach *r,
                           enum LsReachMatrix which,
                           size_t source_bin,
                           size_t target_bin,
                           double *out_value,
                           int32_t *out_defined);

/**
 * Cosine similarity of two vectors of length `len`.
 *
 * # Safety
 * `u` and `v` must hold `len` values; `out` must be writable.
 */
enum LsStatus ls_cosine(const double *u, const double *v, size_t len, double *out);

/**
 * One-sided permutation test of `median(b) > median(a)`.
 *
 * # Safety
 * `a` and `b` must hold `na` and `nb` values; outputs must be writable.
 */
enum LsStatus ls_permutation_test_median(const double *a,
                                         size_t na,
                                         const double *b,
                                         size_t nb,
                                         size_t n_perm,
                                         uint64_t seed,
                                         double *out_statistic,
                                         double *out_p);

/**
 * Histogram threshold between the two dominant modes. `out_found` receives
 * 0 for a unimodal histogram, leaving `out_threshold` untouched.
 *
 * # Safety
 * `scores` must hold `n` values; outputs must be writable.
 */
enum LsStatus ls_detect_threshold(const double *scores,
                                  size_t n,
                                  double bin_width,
                                  double *out_threshold,
                                  int32_t *out_found);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LEVELSCORE_H */
