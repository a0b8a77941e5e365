#ifndef PREDASSIGN_H
#define PREDASSIGN_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by every fallible entry point.
 */
typedef enum PaStatus {
  PaOk = 0,
  PaNullPointer = 1,
  PaInvalidArgument = 2,
  PaParseError = 3,
  PaIoError = 4,
  PaConvergenceError = 5,
  PaEmptyCommunity = 6,
  PaDisconnectedCommunity = 7,
  PaInternalError = 8,
} PaStatus;

/**
 * Assignment-rule selector.
 */
typedef enum PaModel {
  PaModelSbm = 0,
  PaModelDcbm = 1,
} PaModel;

/**
 * Subsampling scheme selector.
 */
typedef enum PaSampler {
  PaSamplerSrs = 0,
  PaSamplerRws = 1,
} PaSampler;

/**
 * Subgraph clustering variant selector.
 */
typedef enum PaMethod {
  PaMethodSc = 0,
  PaMethodScLap = 1,
  PaMethodRsc = 2,
  PaMethodRscLap = 3,
  PaMethodBasc = 4,
} PaMethod;

/**
 * Opaque handle to an immutable sparse graph.
 */
typedef struct PaGraph PaGraph;

/**
 * Error split and run counters for one evaluation or detection run.
 */
typedef struct PaErrorReport {
  double delta_s;
  double delta_sc;
  double delta;
  double delta_tilde_s;
  uint64_t wrong_s;
  uint64_t wrong_sc;
  uint64_t n;
  uint64_t m;
  uint64_t fallback_count;
  double t_sample_s;
  double t_cluster_s;
  double t_assign_s;
  double t_total_s;
  uint64_t peak_mem_bytes;
} PaErrorReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the most recent error message for this thread into `buf`
 * (NUL-terminated, truncated to `len`). Returns the full message length
 * in bytes, excluding the terminator.
 * # Safety
 * `buf` must be null or point to at least `len` writable bytes.
 */
uintptr_t pa_last_error_message(char *buf, uintptr_t len);

/**
 * Library version as a static NUL-terminated string.
 */
const char *pa_version(void);

/**
 * Reads an edge-list file (same format as the CLI) into a new graph
 * handle. The handle must be released with `pa_graph_free`.
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid slot.
 */
enum PaStatus pa_graph_from_edge_list(const char *path, struct PaGraph **out);

/**
 * Builds a graph from `n_edges` undirected pairs laid out as
 * `[u0, v0, u1, v1, ...]`. Self-loops are dropped and duplicates merged.
 * # Safety
 * `pairs` must point to `2 * n_edges` readable u32 values and `out`
 * must be a valid slot.
 */
enum PaStatus pa_graph_from_edges(uint64_t n_nodes,
                                  const uint32_t *pairs,
                                  uint64_t n_edges,
                                  struct PaGraph **out);

/**
 * Releases a graph handle; a null pointer is ignored.
 * # Safety
 * `g` must be null or a handle returned by this library, not yet freed.
 */
void pa_graph_free(struct PaGraph *g);

/**
 * # Safety
 * `g` must be null or a live handle returned by this library.
 */
uint64_t pa_graph_node_count(const struct PaGraph *g);

/**
 * Number of undirected edges.
 * # Safety
 * `g` must be null or a live handle returned by this library.
 */
uint64_t pa_graph_edge_count(const struct PaGraph *g);

/**
 * Samples a block-model graph with balanced communities. `labels_out`
 * may be null; otherwise it must hold `n` u32 slots.
 * # Safety
 * `out` must be a valid slot; `labels_out` must be null or hold `n`
 * writable u32 values.
 */
enum PaStatus pa_generate_sbm(uint64_t n,
                              uint64_t k,
                              double alpha,
                              double h,
                              uint64_t seed,
                              struct PaGraph **out,
                              uint32_t *labels_out);

/**
 * Samples a degree-corrected graph with Beta(1,5) degree parameters and
 * the given expected density. `labels_out` and `theta_out` may be null;
 * otherwise they must hold `n` slots each.
 * # Safety
 * `out` must be a valid slot; `labels_out` and `theta_out` must each be
 * null or hold `n` writable values.
 */
enum PaStatus pa_generate_dcbm(uint64_t n,
                               uint64_t k,
                               double density,
                               double h,
                               uint64_t seed,
                               struct PaGraph **out,
                               uint32_t *labels_out,
                               double *theta_out);

/**
 * Runs the full pipeline on `g` and writes one label per node into
 * `labels_out` (length `node_count`). `report_out` may be null.
 * # Safety
 * `g` must be a live handle, `labels_out` must hold `node_count`
 * writable u32 values, and `report_out` must be null or valid.
 */
enum PaStatus pa_detect(const struct PaGraph *g,
                        uint64_t k,
                        uint64_t m,
                        enum PaModel model,
                        enum PaSampler sampler,
                        enum PaMethod method,
                        uint64_t seed,
                        uint64_t threads,
                        uint32_t *labels_out,
                        struct PaErrorReport *report_out);

/**
 * Compares estimated labels against ground truth under the optimal label
 * permutation. `s_nodes` lists the subsampled node ids (`s_len` of them);
 * pass null / 0 to treat every node as in-sample.
 * # Safety
 * `truth` and `est` must hold `n` readable values, `s_nodes` must be
 * null or hold `s_len` values, and `report_out` must be valid.
 */
enum PaStatus pa_eval(const uint32_t *truth,
                      const uint32_t *est,
                      uint64_t n,
                      const uint32_t *s_nodes,
                      uint64_t s_len,
                      struct PaErrorReport *report_out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PREDASSIGN_H */
