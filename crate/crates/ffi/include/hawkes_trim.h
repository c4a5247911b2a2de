#ifndef HAWKES_TRIM_H
#define HAWKES_TRIM_H

/* Generated by cbindgen. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum HtStatus {
  HT_STATUS_OK = 0,
  HT_STATUS_NULL_POINTER = 1,
  /**
   * Invalid argument or configuration.
   */
  HT_STATUS_INVALID_ARGUMENT = 2,
  /**
   * Network fails the stationarity condition or the simulation ran away.
   */
  HT_STATUS_UNSTABLE = 3,
  /**
   * Malformed or inconsistent data, I/O failure.
   */
  HT_STATUS_DATA = 4,
  /**
   * A buffer passed by the caller is too small.
   */
  HT_STATUS_BUFFER_TOO_SMALL = 5,
  HT_STATUS_PANIC = 6,
} HtStatus;

typedef enum HtMethod {
  HT_METHOD_HP_TRIM = 0,
  HT_METHOD_NAIVE = 1,
  HT_METHOD_HIVE_ORACLE = 2,
  HT_METHOD_HIVE_EMPIRICAL = 3,
} HtMethod;

typedef enum HtPenaltyStrategy {
  HT_PENALTY_STRATEGY_RATE_RULE = 0,
  HT_PENALTY_STRATEGY_EDGE_BUDGET = 1,
  HT_PENALTY_STRATEGY_TIME_SPLIT_CV = 2,
} HtPenaltyStrategy;

typedef struct HtEstimate HtEstimate;

typedef struct HtEvents HtEvents;

typedef struct HtNetwork HtNetwork;

typedef struct HtPenalty {
  enum HtPenaltyStrategy strategy;
  /**
   * Rate-rule constant.
   */
  double c;
  /**
   * Edge budget.
   */
  size_t budget;
} HtPenalty;

typedef struct HtFitOptions {
  enum HtMethod method;
  struct HtPenalty penalty;
  double bin_width;
  double kernel_rate;
  /**
   * Negative or NaN selects the default λ/2.
   */
  double tau_select;
  /**
   * Latent dimension for hive-oracle; ignored otherwise.
   */
  size_t oracle_q;
} HtFitOptions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the most recent failure on this thread, or NULL. Valid until
 * the next `ht_*` call on the same thread.
 */
const char *ht_last_error(void);

/**
 * Frees a string returned by this library.
 *
 * # Safety
 * `s` must come from this library and not be freed twice.
 */
void ht_string_free(char *s);

/**
 * Block network generator. `orthogonal` selects the topology in which
 * confounded blocks carry no observed edges.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum HtStatus ht_network_block(size_t p,
                               size_t q,
                               size_t block_size,
                               double beta,
                               double delta,
                               double mu,
                               double confounded_fraction,
                               double kernel_rate,
                               bool orthogonal,
                               struct HtNetwork **out);

/**
 * # Safety
 * `json` must be a NUL-terminated string and `out` a valid pointer.
 */
enum HtStatus ht_network_from_json(const char *json, struct HtNetwork **out);

/**
 * # Safety
 * `net` must be a live handle and `out` a valid pointer.
 */
enum HtStatus ht_network_to_json(const struct HtNetwork *net, char **out);

/**
 * Number of observed components, 0 for NULL.
 *
 * # Safety
 * `net` must be NULL or a live handle.
 */
size_t ht_network_p(const struct HtNetwork *net);

/**
 * Λ_max(ΩᵀΩ) of the network.
 *
 * # Safety
 * `net` must be a live handle and `out` a valid pointer.
 */
enum HtStatus ht_network_lambda_max(const struct HtNetwork *net, double *out);

/**
 * # Safety
 * `net` must be NULL or a handle not freed before.
 */
void ht_network_free(struct HtNetwork *net);

/**
 * Simulates all components; only the observed ones are kept in the result.
 *
 * # Safety
 * `net` must be a live handle and `out` a valid pointer.
 */
enum HtStatus ht_simulate(const struct HtNetwork *net,
                          double horizon,
                          uint64_t seed,
                          double floor,
                          struct HtEvents **out);

/**
 * Builds event data from parallel arrays of component ids and times.
 *
 * # Safety
 * `ids` and `times` must point to `n` elements each (or be NULL when `n` is 0).
 */
enum HtStatus ht_events_from_arrays(size_t n_components,
                                    double horizon,
                                    const size_t *ids,
                                    const double *times,
                                    size_t n,
                                    struct HtEvents **out);

/**
 * # Safety
 * `ev` must be NULL or a live handle.
 */
size_t ht_events_n_components(const struct HtEvents *ev);

/**
 * # Safety
 * `ev` must be NULL or a live handle.
 */
size_t ht_events_total(const struct HtEvents *ev);

/**
 * Writes the events as `component_id,time` CSV to `path`.
 *
 * # Safety
 * `ev` must be a live handle and `path` a NUL-terminated string.
 */
enum HtStatus ht_events_write_csv(const struct HtEvents *ev, const char *path);

/**
 * # Safety
 * `ev` must be NULL or a handle not freed before.
 */
void ht_events_free(struct HtEvents *ev);

/**
 * Default options: hp-trim, rate rule with c = 0.5, unit bins, unit
 * kernel rate, λ/2 selection threshold.
 */
struct HtFitOptions ht_fit_options_default(void);

/**
 * Bins the events and fits the requested estimator.
 *
 * # Safety
 * `ev` must be a live handle, `opts` and `out` valid pointers.
 */
enum HtStatus ht_fit(const struct HtEvents *ev,
                     const struct HtFitOptions *opts,
                     struct HtEstimate **out);

/**
 * # Safety
 * `est` must be NULL or a live handle.
 */
size_t ht_estimate_p(const struct HtEstimate *est);

/**
 * # Safety
 * `est` must be NULL or a live handle.
 */
double ht_estimate_lambda(const struct HtEstimate *est);

/**
 * # Safety
 * `est` must be NULL or a live handle.
 */
size_t ht_estimate_n_edges(const struct HtEstimate *est);

/**
 * Copies the p×p coefficient matrix in row-major order (row = target).
 *
 * # Safety
 * `est` must be a live handle and `buf` must hold `len` doubles.
 */
enum HtStatus ht_estimate_beta(const struct HtEstimate *est, double *buf, size_t len);

/**
 * Copies the selected edges as (target, source) pairs, ordered.
 *
 * # Safety
 * `est` must be a live handle; `targets` and `sources` must hold `cap` elements.
 */
enum HtStatus ht_estimate_edges(const struct HtEstimate *est,
                                size_t *targets,
                                size_t *sources,
                                size_t cap);

/**
 * # Safety
 * `est` must be a live handle and `out` a valid pointer.
 */
enum HtStatus ht_estimate_to_json(const struct HtEstimate *est, char **out);

/**
 * # Safety
 * `est` must be NULL or a handle not freed before.
 */
void ht_estimate_free(struct HtEstimate *est);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HAWKES_TRIM_H */
