/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#ifndef SMBIC_H
#define SMBIC_H

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

// Result code of every fallible call.
typedef enum SmbicStatus {
  SMBIC_STATUS_OK = 0,
  SMBIC_STATUS_NULL_POINTER = 1,
  SMBIC_STATUS_INVALID_ARGUMENT = 2,
  SMBIC_STATUS_IO = 3,
  SMBIC_STATUS_PARSE = 4,
  SMBIC_STATUS_NUMERIC = 5,
  SMBIC_STATUS_PANIC = 6,
} SmbicStatus;

typedef enum SmbicModel {
  SMBIC_MODEL_SBM = 0,
  SMBIC_MODEL_DCSBM = 1,
} SmbicModel;

// An undirected simple graph.
typedef struct SmbicGraph SmbicGraph;

// The outcome of one selection run.
typedef struct SmbicReport SmbicReport;

// Selection options; initialise with [`smbic_options_default`].
typedef struct SmbicOptions {
  // Largest candidate number of communities.
  size_t k_max;
  enum SmbicModel model;
  uint64_t seed;
  // Explicit subsample size; 0 uses the size rule.
  size_t subsample_size;
  // Constant of the size rule `ceil(zeta ln N / rho)`.
  double zeta;
  // Density for the size rule; 0 or negative estimates it from the graph.
  double rho;
  // Label unselected nodes by majority link instead of k-means.
  bool majority_link;
  // Keep the degree log term in the degree-corrected likelihood.
  bool include_psi_term;
} SmbicOptions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Fills `out` with the library defaults.
//
// # Safety
// `out` must be null or point to writable memory for one `SmbicOptions`.
enum SmbicStatus smbic_options_default(struct SmbicOptions *out);

// Loads a whitespace-separated edge list (see FORMATS.md).
//
// # Safety
// `path` must be null or a NUL-terminated string; `out` must be null or
// point to writable memory for one pointer.
enum SmbicStatus smbic_graph_load(const char *path, bool one_based, struct SmbicGraph **out);

// Builds a graph on `num_nodes` nodes from `num_edges` pairs
// `(src[i], dst[i])`. Self-loops and duplicates are dropped.
//
// # Safety
// `src` and `dst` must each point to `num_edges` readable values (or may
// be null when `num_edges` is 0); `out` must point to writable memory for
// one pointer.
enum SmbicStatus smbic_graph_from_edges(size_t num_nodes,
                                        const size_t *src,
                                        const size_t *dst,
                                        size_t num_edges,
                                        struct SmbicGraph **out);

// Number of nodes, or 0 for a null handle.
//
// # Safety
// `graph` must be null or a live handle.
size_t smbic_graph_num_nodes(const struct SmbicGraph *graph);

// Number of undirected edges, or 0 for a null handle.
//
// # Safety
// `graph` must be null or a live handle.
size_t smbic_graph_num_edges(const struct SmbicGraph *graph);

// Releases a graph; null is ignored.
//
// # Safety
// `graph` must be null or a handle not yet freed.
void smbic_graph_free(struct SmbicGraph *graph);

// Runs model selection on `graph`.
//
// # Safety
// `graph` must be a live handle, `options` must point to a valid
// `SmbicOptions`, and `out` must point to writable memory for one pointer.
enum SmbicStatus smbic_select(const struct SmbicGraph *graph,
                              const struct SmbicOptions *options,
                              struct SmbicReport **out);

// The selected number of communities, or 0 for a null handle.
//
// # Safety
// `report` must be null or a live handle.
size_t smbic_report_k_hat(const struct SmbicReport *report);

// Number of candidates scored (`k_max`), or 0 for a null handle.
//
// # Safety
// `report` must be null or a live handle.
size_t smbic_report_num_candidates(const struct SmbicReport *report);

// Subsample size used, or 0 for a null handle.
//
// # Safety
// `report` must be null or a live handle.
size_t smbic_report_subsample_size(const struct SmbicReport *report);

// Writes the score of candidate `k` (1-based); failed candidates score
// negative infinity.
//
// # Safety
// `report` must be a live handle and `out` must point to one writable
// `double`.
enum SmbicStatus smbic_report_score(const struct SmbicReport *report, size_t k, double *out);

// Copies the node labels of candidate `k` into `out`, which must hold
// `len` values with `len` equal to the number of nodes.
//
// # Safety
// `report` must be a live handle and `out` must point to `len` writable
// `size_t` values.
enum SmbicStatus smbic_report_labels(const struct SmbicReport *report,
                                     size_t k,
                                     size_t *out,
                                     size_t len);

// Serializes the full report as JSON into a new string released with
// [`smbic_string_free`].
//
// # Safety
// `report` must be a live handle and `out` must point to writable memory
// for one pointer.
enum SmbicStatus smbic_report_to_json(const struct SmbicReport *report, char **out);

// Releases a report; null is ignored.
//
// # Safety
// `report` must be null or a handle not yet freed.
void smbic_report_free(struct SmbicReport *report);

// Releases a string returned by this library; null is ignored.
//
// # Safety
// `s` must be null or a string from this library not yet freed.
void smbic_string_free(char *s);

// `min(N, ceil(zeta ln N / rho))`.
//
// # Safety
// `out` must point to one writable `uint64_t`.
enum SmbicStatus smbic_recommended_subsample_size(uint64_t num_nodes,
                                                  double rho,
                                                  double zeta,
                                                  uint64_t *out);

// The message of the last failed call on this thread, or null. The
// pointer stays valid until the next failing call on the same thread.
const char *smbic_last_error_message(void);

// Library version as a static NUL-terminated string.
const char *smbic_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SMBIC_H */
