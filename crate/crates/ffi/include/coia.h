#ifndef COIA_H
#define COIA_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stddef.h>
#include <stdint.h>

typedef enum CoiaStatus {
  COIA_STATUS_OK = 0,
  COIA_STATUS_NULL_ARGUMENT = 1,
  COIA_STATUS_INVALID_UTF8 = 2,
  COIA_STATUS_PARSE = 3,
  COIA_STATUS_INVALID_ARGUMENT = 4,
  COIA_STATUS_NO_TRANSITION = 5,
  COIA_STATUS_NOT_CONVERGED = 6,
  COIA_STATUS_EMPTY = 7,
  COIA_STATUS_IO = 8,
  COIA_STATUS_PANIC = 99,
} CoiaStatus;

/*
 Parsed posts.
 */
typedef struct CoiaCorpus CoiaCorpus;

/*
 Accounts surviving dismantling at fixed thresholds.
 */
typedef struct CoiaDetection CoiaDetection;

/*
 Weighted account similarity graph.
 */
typedef struct CoiaGraph CoiaGraph;

/*
 Grid of minimum component densities.
 */
typedef struct CoiaSurface CoiaSurface;

/*
 One grid cell. `min_density` is NaN when `has_density` is 0.
 */
typedef struct CoiaGridCell {
  double edge_q;
  double node_q;
  int has_density;
  double min_density;
  size_t n_nodes;
  size_t n_edges;
  size_t n_components;
} CoiaGridCell;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Library version as a static NUL-terminated string.
 */
const char *coia_version(void);

/*
 Message of the last failure on this thread, or NULL. The pointer stays
 valid until the next failing call on the same thread.
 */
const char *coia_last_error_message(void);

/*
 # Safety
 `s` must come from a coia `char **` out-parameter and not be freed yet.
 */
void coia_string_free(char *s);

/*
 Parses newline-delimited JSON posts.

 # Safety
 `jsonl` must be a NUL-terminated string; `out` must be writable.
 */
enum CoiaStatus coia_corpus_parse(const char *jsonl, struct CoiaCorpus **out);

/*
 # Safety
 `corpus` must be a live handle or NULL.
 */
size_t coia_corpus_len(const struct CoiaCorpus *corpus);

/*
 # Safety
 `corpus` must be a handle from [`coia_corpus_parse`] or NULL.
 */
void coia_corpus_free(struct CoiaCorpus *corpus);

/*
 Builds the co-URL similarity graph: activity filter, DF filters, TF-IDF
 and cosine pairs. `cross` nonzero keeps only pairs across platforms.

 # Safety
 `corpus` must be a live handle; `out` must be writable.
 */
enum CoiaStatus coia_courl_graph(const struct CoiaCorpus *corpus,
                                 size_t min_unique_urls,
                                 size_t min_df,
                                 double max_df_quantile,
                                 int cross,
                                 struct CoiaGraph **out);

/*
 Parses an edge CSV (`src_platform,src_user,dst_platform,dst_user,weight`).

 # Safety
 `csv` must be a NUL-terminated string; `out` must be writable.
 */
enum CoiaStatus coia_graph_from_edge_csv(const char *csv, struct CoiaGraph **out);

/*
 # Safety
 `graph` must be a live handle; `out` must be writable.
 */
enum CoiaStatus coia_graph_to_edge_csv(const struct CoiaGraph *graph, char **out);

/*
 # Safety
 `graph` must be a live handle or NULL.
 */
size_t coia_graph_node_count(const struct CoiaGraph *graph);

/*
 # Safety
 `graph` must be a live handle or NULL.
 */
size_t coia_graph_edge_count(const struct CoiaGraph *graph);

/*
 # Safety
 `graph` must be a graph handle or NULL.
 */
void coia_graph_free(struct CoiaGraph *graph);

/*
 Grid search over the two quantile axes. A NULL axis or zero length selects
 the default axis (0 to 0.95 in 0.05 steps, then 0.99). `max_iter` 0 picks
 a generous centrality iteration budget.

 # Safety
 Axis pointers must address `n` readable doubles when non-NULL.
 */
enum CoiaStatus coia_grid_search(const struct CoiaGraph *graph,
                                 const double *edge_qs,
                                 size_t n_edge_qs,
                                 const double *node_qs,
                                 size_t n_node_qs,
                                 size_t max_iter,
                                 struct CoiaSurface **out);

/*
 # Safety
 `surface` must be a live handle or NULL.
 */
size_t coia_surface_cell_count(const struct CoiaSurface *surface);

/*
 Cell `index` in edge-major order.

 # Safety
 `surface` must be a live handle; `out` must be writable.
 */
enum CoiaStatus coia_surface_cell(const struct CoiaSurface *surface,
                                  size_t index,
                                  struct CoiaGridCell *out);

/*
 # Safety
 `surface` must be a live handle; `out` must be writable.
 */
enum CoiaStatus coia_surface_to_csv(const struct CoiaSurface *surface, char **out);

/*
 # Safety
 `surface` must be a surface handle or NULL.
 */
void coia_surface_free(struct CoiaSurface *surface);

/*
 Largest density jump among cells at or above `min_floor`.

 # Safety
 `surface` must be a live handle; the out pointers must be writable.
 */
enum CoiaStatus coia_select_auto(const struct CoiaSurface *surface,
                                 double min_floor,
                                 double *edge_q,
                                 double *node_q);

/*
 Echoes a pair after checking it lies on the surface axes.

 # Safety
 `surface` must be a live handle; the out pointers must be writable.
 */
enum CoiaStatus coia_select_manual(const struct CoiaSurface *surface,
                                   double want_edge_q,
                                   double want_node_q,
                                   double *edge_q,
                                   double *node_q);

/*
 Published threshold pair for `platform`.

 # Safety
 `platform` must be a NUL-terminated string; the out pointers must be writable.
 */
enum CoiaStatus coia_preset(const char *platform, double *edge_q, double *node_q);

/*
 # Safety
 `graph` must be a live handle; `out` must be writable.
 */
enum CoiaStatus coia_detect(const struct CoiaGraph *graph,
                            double edge_q,
                            double node_q,
                            size_t max_iter,
                            struct CoiaDetection **out);

/*
 # Safety
 `detection` must be a live handle or NULL.
 */
size_t coia_detection_account_count(const struct CoiaDetection *detection);

/*
 Detection as JSON: selected thresholds, accounts with component ids, densities.

 # Safety
 `detection` must be a live handle; `out` must be writable.
 */
enum CoiaStatus coia_detection_to_json(const struct CoiaDetection *detection, char **out);

/*
 # Safety
 `detection` must be a detection handle or NULL.
 */
void coia_detection_free(struct CoiaDetection *detection);

/*
 Nearest-rank quantile of `n` values.

 # Safety
 `values` must address `n` readable doubles; `out` must be writable.
 */
enum CoiaStatus coia_quantile(const double *values, size_t n, double q, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* COIA_H */
