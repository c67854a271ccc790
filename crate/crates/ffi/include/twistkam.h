#ifndef TWISTKAM_H
#define TWISTKAM_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum TkStatus {
  TK_STATUS_OK = 0,
  TK_STATUS_INVALID_INPUT = 1,
  TK_STATUS_INFEASIBLE = 2,
  TK_STATUS_CONVERGENCE = 3,
  TK_STATUS_DEGENERATE = 4,
  TK_STATUS_EMPTY_FAMILY = 5,
  TK_STATUS_INVARIANT = 6,
  TK_STATUS_IO = 7,
  TK_STATUS_NULL_POINTER = 8,
  TK_STATUS_PANIC = 9,
} TkStatus;

/**
 * Cross-seed verdict of a run record.
 */
typedef enum TkVerdict {
  TK_VERDICT_BOUNDED_WITH_MARGIN = 0,
  TK_VERDICT_INCONCLUSIVE = 1,
  TK_VERDICT_VIOLATED = 2,
  /**
   * The run stopped before any report was produced.
   */
  TK_VERDICT_NONE = 3,
} TkVerdict;

/**
 * Rotation number with its continued-fraction data.
 */
typedef struct TkAlpha TkAlpha;

/**
 * A solved periodic minimal configuration.
 */
typedef struct TkConfiguration TkConfiguration;

/**
 * One member of the twist-map family.
 */
typedef struct TkMap TkMap;

/**
 * A full pipeline run.
 */
typedef struct TkRecord TkRecord;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread; empty if none. The
 * pointer stays valid until the next failing call on the same thread.
 */
const char *tk_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *tk_version(void);

/**
 * Releases a string returned by this library.
 *
 * # Safety
 * `s` must come from this library and not have been freed.
 */
void tk_string_free(char *s);

/**
 * Creates a named rotation number (`"golden"`, `"silver"`) stored to `depth`.
 *
 * # Safety
 * `name` must be a NUL-terminated string; `out` must be writable.
 */
enum TkStatus tk_alpha_preset(const char *name, size_t depth, struct TkAlpha **out);

/**
 * Creates a rotation number from one period of partial quotients.
 *
 * # Safety
 * `quotients` must point to `len` values; `out` must be writable.
 */
enum TkStatus tk_alpha_from_quotients(const uint64_t *quotients,
                                      size_t len,
                                      size_t depth,
                                      struct TkAlpha **out);

/**
 * # Safety
 * `alpha` must be a live handle or null.
 */
void tk_alpha_free(struct TkAlpha *alpha);

/**
 * Number of stored convergents.
 *
 * # Safety
 * `alpha` must be a live handle.
 */
enum TkStatus tk_alpha_depth(const struct TkAlpha *alpha, size_t *out);

/**
 * Convergent `p_n / q_n`.
 *
 * # Safety
 * `alpha` must be a live handle; `p` and `q` must be writable.
 */
enum TkStatus tk_alpha_convergent(const struct TkAlpha *alpha, size_t n, uint64_t *p, uint64_t *q);

/**
 * Distance from `q_n alpha` to the nearest integer.
 *
 * # Safety
 * `alpha` must be a live handle; `out` must be writable.
 */
enum TkStatus tk_alpha_qalpha_norm(const struct TkAlpha *alpha, size_t n, double *out);

/**
 * Map at `level` with the standard potential scaled by `amplitude`. The
 * rotation number is copied; `alpha` stays owned by the caller.
 *
 * # Safety
 * `alpha` must be a live handle; `out` must be writable.
 */
enum TkStatus tk_map_new(const struct TkAlpha *alpha,
                         size_t level,
                         double eps,
                         double amplitude,
                         struct TkMap **out);

/**
 * # Safety
 * `map` must be a live handle or null.
 */
void tk_map_free(struct TkMap *map);

/**
 * One forward step `(x, y) -> (x', y')` on the lift.
 *
 * # Safety
 * `map` must be a live handle; `xp` and `yp` must be writable.
 */
enum TkStatus tk_map_step(const struct TkMap *map, double x, double y, double *xp, double *yp);

/**
 * Sampled `|det DF - 1|` and generating-function deviation.
 *
 * # Safety
 * `map` must be a live handle; `det` and `generating` must be writable.
 */
enum TkStatus tk_map_self_check(const struct TkMap *map,
                                size_t samples,
                                uint64_t seed,
                                double *det,
                                double *generating);

/**
 * Least-action `(p, q)` periodic configuration of `map`.
 *
 * # Safety
 * `map` must be a live handle; `out` must be writable.
 */
enum TkStatus tk_minimize(const struct TkMap *map,
                          uint64_t p,
                          uint64_t q,
                          uint64_t seed,
                          struct TkConfiguration **out);

/**
 * # Safety
 * `config` must be a live handle or null.
 */
void tk_configuration_free(struct TkConfiguration *config);

/**
 * Period `q` of the configuration.
 *
 * # Safety
 * `config` must be a live handle; `out` must be writable.
 */
enum TkStatus tk_configuration_period(const struct TkConfiguration *config, uint64_t *out);

/**
 * Lifted position `x_i` for any integer `i`.
 *
 * # Safety
 * `config` must be a live handle; `out` must be writable.
 */
enum TkStatus tk_configuration_x(const struct TkConfiguration *config, int64_t i, double *out);

/**
 * Stationarity residual and periodic action.
 *
 * # Safety
 * `config` must be a live handle; `residual` and `action` must be writable.
 */
enum TkStatus tk_configuration_diagnostics(const struct TkConfiguration *config,
                                           double *residual,
                                           double *action);

/**
 * Runs the full criteria pipeline. `config_toml` may be null for the
 * default golden configuration. Failures inside the pipeline are part of
 * the record; only an unusable request returns an error status.
 *
 * # Safety
 * `config_toml` must be null or NUL-terminated; `out` must be writable.
 */
enum TkStatus tk_run_criteria(const char *config_toml, size_t workers, struct TkRecord **out);

/**
 * # Safety
 * `record` must be a live handle or null.
 */
void tk_record_free(struct TkRecord *record);

/**
 * Whether every seed produced a report (`1`), or the run was rejected or
 * stopped early (`0`).
 *
 * # Safety
 * `record` must be a live handle; `out` must be writable.
 */
enum TkStatus tk_record_complete(const struct TkRecord *record, int32_t *out);

/**
 * # Safety
 * `record` must be a live handle; `out` must be writable.
 */
enum TkStatus tk_record_verdict(const struct TkRecord *record, enum TkVerdict *out);

/**
 * The record as JSON; release with [`tk_string_free`].
 *
 * # Safety
 * `record` must be a live handle; `out` must be writable.
 */
enum TkStatus tk_record_json(const struct TkRecord *record, char **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TWISTKAM_H */
