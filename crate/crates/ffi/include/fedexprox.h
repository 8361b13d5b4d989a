/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#ifndef FEDEXPROX_H
#define FEDEXPROX_H

#include <stddef.h>
#include <stdint.h>

/**
 * Result codes. Validation and oracle codes match the CLI's exit codes.
 */
typedef enum FxStatus {
  FX_STATUS_OK = 0,
  FX_STATUS_NULL_POINTER = 1,
  /**
   * Bad arguments, configuration or input data.
   */
  FX_STATUS_VALIDATION = 2,
  /**
   * A numerical failure (singular prox system, non-converging estimate).
   */
  FX_STATUS_ORACLE = 3,
  FX_STATUS_PANIC = 4,
} FxStatus;

/**
 * A federated problem instance.
 */
typedef struct FxProblem FxProblem;

/**
 * The result of a run.
 */
typedef struct FxTrace FxTrace;

/**
 * One row of a trace. Row 0 describes the starting point and has `alpha = NaN`
 * and `sampled_len = 0`; row `k ≥ 1` describes `x_k` and the round that produced it.
 */
typedef struct FxTraceRow {
  size_t k;
  double f_subopt;
  double env_subopt;
  double dist_sq;
  double alpha;
  size_t sampled_len;
} FxTraceRow;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or an empty string. The pointer
 * stays valid until the next call into this library on the same thread.
 */
const char *fx_last_error(void);

/**
 * Releases a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must come from this library and must not be used afterwards.
 */
void fx_string_free(char *s);

/**
 * Overparameterized least-squares regression with U[0,1) data; needs `d ≥ n·rows`.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for one handle.
 */
enum FxStatus fx_problem_regression(size_t n,
                                    size_t rows_per_client,
                                    size_t d,
                                    uint64_t seed,
                                    struct FxProblem **out);

/**
 * The diagonal family `f_i(x) = (θ/2) x_i²` with `d = n`.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for one handle.
 */
enum FxStatus fx_problem_example1(size_t n, double theta, struct FxProblem **out);

/**
 * `n` affine sets through a common random point.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for one handle.
 */
enum FxStatus fx_problem_feasibility(size_t n,
                                     size_t d,
                                     size_t rows_per_set,
                                     uint64_t seed,
                                     struct FxProblem **out);

/**
 * Parses a problem in the `fedexprox-problem/v1` JSON format.
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be writable.
 */
enum FxStatus fx_problem_from_json(const char *json, struct FxProblem **out);

/**
 * Serializes a problem to JSON; free the result with [`fx_string_free`].
 *
 * # Safety
 * `problem` must be a live handle; `out` must be writable.
 */
enum FxStatus fx_problem_to_json(const struct FxProblem *problem, char **out);

/**
 * Releases a problem. Null is ignored.
 *
 * # Safety
 * `problem` must come from this library and must not be used afterwards.
 */
void fx_problem_free(struct FxProblem *problem);

/**
 * Dimension `d`, or 0 for a null handle.
 *
 * # Safety
 * `problem` must be null or a live handle.
 */
size_t fx_problem_dim(const struct FxProblem *problem);

/**
 * Number of clients `n`, or 0 for a null handle.
 *
 * # Safety
 * `problem` must be null or a live handle.
 */
size_t fx_problem_num_clients(const struct FxProblem *problem);

/**
 * `f(x) − f⋆` for the average objective.
 *
 * # Safety
 * `x` must point to `len` doubles; `out` must be writable.
 */
enum FxStatus fx_problem_suboptimality(const struct FxProblem *problem,
                                       const double *x,
                                       size_t len,
                                       double *out);

/**
 * `Prox_{γ f_i}(x)` written to `out` (length `len = d`).
 *
 * # Safety
 * `x` and `out` must point to `len` doubles each.
 */
enum FxStatus fx_prox(const struct FxProblem *problem,
                      size_t client,
                      double gamma,
                      const double *x,
                      size_t len,
                      double *out);

/**
 * Moreau envelope value `M^γ_{f_i}(x)`.
 *
 * # Safety
 * `x` must point to `len` doubles; `out` must be writable.
 */
enum FxStatus fx_moreau_value(const struct FxProblem *problem,
                              size_t client,
                              double gamma,
                              const double *x,
                              size_t len,
                              double *out);

/**
 * Moreau envelope gradient `∇M^γ_{f_i}(x)` written to `out` (length `len = d`).
 *
 * # Safety
 * `x` and `out` must point to `len` doubles each.
 */
enum FxStatus fx_moreau_grad(const struct FxProblem *problem,
                             size_t client,
                             double gamma,
                             const double *x,
                             size_t len,
                             double *out);

/**
 * Rate constants at `(γ, τ)` as a JSON object; `tau = 0` means full participation.
 *
 * # Safety
 * `problem` must be a live handle; `out` must be writable.
 */
enum FxStatus fx_rates(const struct FxProblem *problem, double gamma, size_t tau, char **out);

/**
 * Runs one algorithm configuration, given as JSON with the fields of an algorithm
 * entry plus `iterations` (for example
 * `{"label":"opt","gamma":1.0,"alpha":{"policy":"optimal"},"iterations":100}`).
 *
 * # Safety
 * `config_json` must be a NUL-terminated string; `out` must be writable.
 */
enum FxStatus fx_run(const struct FxProblem *problem,
                     const char *config_json,
                     struct FxTrace **out);

/**
 * Releases a trace. Null is ignored.
 *
 * # Safety
 * `trace` must come from this library and must not be used afterwards.
 */
void fx_trace_free(struct FxTrace *trace);

/**
 * Number of rows, including row 0 for the starting point; 0 for a null handle.
 *
 * # Safety
 * `trace` must be null or a live handle.
 */
size_t fx_trace_len(const struct FxTrace *trace);

/**
 * Row `i` of the trace.
 *
 * # Safety
 * `trace` must be a live handle; `out` must be writable.
 */
enum FxStatus fx_trace_row(const struct FxTrace *trace, size_t i, struct FxTraceRow *out);

/**
 * Copies the clients sampled in the round that produced row `i` (0-based indices)
 * into `out`, which must hold `cap ≥ sampled_len` entries.
 *
 * # Safety
 * `trace` must be a live handle; `out` must point to `cap` writable entries.
 */
enum FxStatus fx_trace_sampled(const struct FxTrace *trace, size_t i, size_t *out, size_t cap);

/**
 * Final iterate written to `out` (length `len = d`).
 *
 * # Safety
 * `out` must point to `len` writable doubles.
 */
enum FxStatus fx_trace_final_iterate(const struct FxTrace *trace, double *out, size_t len);

/**
 * Whether the run halted early (`*converged = 1`) and, if so, after how many rounds.
 *
 * # Safety
 * `trace` must be a live handle; both out-pointers must be writable.
 */
enum FxStatus fx_trace_status(const struct FxTrace *trace, int *converged, size_t *after_rounds);

/**
 * `α` used in every round after resolving constant policies; NaN for adaptive policies.
 *
 * # Safety
 * `trace` must be a live handle; `out` must be writable.
 */
enum FxStatus fx_trace_resolved_alpha(const struct FxTrace *trace, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FEDEXPROX_H */
