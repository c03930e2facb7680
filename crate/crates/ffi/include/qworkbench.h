#ifndef QWORKBENCH_H
#define QWORKBENCH_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum QwStatus {
  QW_STATUS_OK = 0,
  QW_STATUS_NULL_POINTER = 1,
  QW_STATUS_INVALID_ARGUMENT = 2,
  QW_STATUS_NUMERIC = 3,
  QW_STATUS_PANIC = 4,
} QwStatus;

typedef enum QwModel {
  QW_MODEL_CLASSICAL_CLASSIFIER = 0,
  QW_MODEL_HYBRID_CLASSIFIER = 1,
  QW_MODEL_CLASSICAL_REGRESSOR = 2,
  QW_MODEL_HYBRID_REGRESSOR = 3,
} QwModel;

/**
 * Weighted undirected graph.
 */
typedef struct QwGraph QwGraph;

/**
 * Network with its current parameters.
 */
typedef struct QwNetwork QwNetwork;

/**
 * Converged TT solution of a Poisson problem.
 */
typedef struct QwTtSolution QwTtSolution;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the calling thread's last error message, NUL-terminated and
 * truncated to `len` bytes. Returns the untruncated length, so a call with
 * `buf = NULL` sizes the buffer.
 *
 * # Safety
 * `buf` is null or valid for `len` writable bytes.
 */
uintptr_t qw_last_error(char *buf, uintptr_t len);

/**
 * Complete graph with weights uniform in [0, 1).
 *
 * # Safety
 * `out` is valid for one write.
 */
enum QwStatus qw_graph_random_complete(uintptr_t num_nodes, uint64_t seed, struct QwGraph **out);

/**
 * Graph from `num_edges` triples `(from[k], to[k], weight[k])`.
 *
 * # Safety
 * The three arrays hold `num_edges` elements; `out` is valid for one write.
 */
enum QwStatus qw_graph_from_edges(uintptr_t num_nodes,
                                  const uintptr_t *from,
                                  const uintptr_t *to,
                                  const double *weight,
                                  uintptr_t num_edges,
                                  struct QwGraph **out);

/**
 * # Safety
 * `graph` is null or came from a `qw_graph_*` constructor and is not used
 * afterwards.
 */
void qw_graph_free(struct QwGraph *graph);

/**
 * # Safety
 * `graph` is a live handle.
 */
uintptr_t qw_graph_num_nodes(const struct QwGraph *graph);

/**
 * MaxCut energy `-cut(x)` of a 0/1 assignment.
 *
 * # Safety
 * `x` holds one byte per node; `energy` is valid for one write.
 */
enum QwStatus qw_maxcut_energy(const struct QwGraph *graph, const uint8_t *x, double *energy);

/**
 * Runs QuEnc and writes the best assignment and its energy.
 *
 * # Safety
 * `x_out` has room for one byte per node; `energy` is valid for one write.
 */
enum QwStatus qw_maxcut_quenc(const struct QwGraph *graph,
                              uintptr_t layers,
                              uintptr_t max_iters,
                              double learning_rate,
                              uint64_t seed,
                              uint8_t *x_out,
                              double *energy);

/**
 * Exact optimum by enumeration; at most 24 nodes.
 *
 * # Safety
 * As for [`qw_maxcut_quenc`].
 */
enum QwStatus qw_maxcut_brute_force(const struct QwGraph *graph, uint8_t *x_out, double *energy);

/**
 * Solves `-Δu = 1` with zero boundary values on `2^levels` points per axis.
 *
 * # Safety
 * `out` is valid for one write.
 */
enum QwStatus qw_poisson_tt_solve(uintptr_t dim,
                                  uintptr_t levels,
                                  double tolerance,
                                  uintptr_t max_rank,
                                  struct QwTtSolution **out);

/**
 * # Safety
 * `sol` is null or a handle from [`qw_poisson_tt_solve`] not used afterwards.
 */
void qw_tt_solution_free(struct QwTtSolution *sol);

/**
 * Relative residual; NaN for a null handle.
 *
 * # Safety
 * `sol` is a live handle.
 */
double qw_tt_solution_residual(const struct QwTtSolution *sol);

/**
 * # Safety
 * `sol` is a live handle.
 */
uintptr_t qw_tt_solution_sweeps(const struct QwTtSolution *sol);

/**
 * # Safety
 * `sol` is a live handle.
 */
uintptr_t qw_tt_solution_max_rank(const struct QwTtSolution *sol);

/**
 * Writes all grid values in natural order. `len` must equal the number of
 * grid points, which is limited to 2^24.
 *
 * # Safety
 * `values` is valid for `len` writes.
 */
enum QwStatus qw_tt_solution_values(const struct QwTtSolution *sol, double *values, uintptr_t len);

/**
 * Freshly initialised network of the given kind.
 *
 * # Safety
 * `out` is valid for one write.
 */
enum QwStatus qw_network_new(enum QwModel model, uint64_t seed, struct QwNetwork **out);

/**
 * # Safety
 * `net` is null or a handle from [`qw_network_new`] not used afterwards.
 */
void qw_network_free(struct QwNetwork *net);

/**
 * # Safety
 * `net` is a live handle.
 */
uintptr_t qw_network_num_params(const struct QwNetwork *net);

/**
 * Single-output forward pass on `len` input features.
 *
 * # Safety
 * `x` holds `len` values; `y` is valid for one write.
 */
enum QwStatus qw_network_forward(const struct QwNetwork *net,
                                 const double *x,
                                 uintptr_t len,
                                 double *y);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* QWORKBENCH_H */
