/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#ifndef CPL_STAB_H
#define CPL_STAB_H

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

typedef enum CplOutcome {
  CPL_OUTCOME_DOMINANT = 0,
  CPL_OUTCOME_NO_EQUILIBRIUM = 1,
  CPL_OUTCOME_INCONCLUSIVE = 2,
} CplOutcome;

typedef enum CplStatus {
  CPL_STATUS_OK = 0,
  CPL_STATUS_NULL_POINTER = 1,
  CPL_STATUS_INVALID_UTF8 = 2,
  CPL_STATUS_PARSE = 3,
  /**
   * The system fails the structural checks on `A`.
   */
  CPL_STATUS_INVALID = 4,
  CPL_STATUS_DIMENSION = 5,
  CPL_STATUS_OPTIONS = 6,
  /**
   * The requested quantity does not exist for this outcome.
   */
  CPL_STATUS_NOT_AVAILABLE = 7,
  CPL_STATUS_BUFFER_TOO_SMALL = 8,
  CPL_STATUS_NUMERICAL = 9,
  CPL_STATUS_PANIC = 10,
} CplStatus;

/**
 * Opaque.
 */
typedef struct CplAnalysis CplAnalysis;

/**
 * Opaque.
 */
typedef struct CplSystem CplSystem;

typedef struct CplOptions {
  double rel_tol;
  double abs_tol;
  double collapse_threshold;
  double converge_tol;
  double max_time;
  uint64_t max_steps;
  double safety;
  double hyper_tol;
} CplOptions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or null. Valid until the
 * next failing call on the same thread.
 */
const char *cpl_last_error(void);

struct CplOptions cpl_options_default(void);

/**
 * Builds a system from `A` (row-major, `n * n`), `b` and `w` (length `n`).
 *
 * # Safety
 * The arrays must hold the stated number of doubles; `out` must be writable.
 */
enum CplStatus cpl_system_new(size_t n,
                              const double *a,
                              const double *b,
                              const double *w,
                              struct CplSystem **out);

/**
 * Parses a network document (any supported model) and reduces it.
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be writable.
 */
enum CplStatus cpl_system_from_json(const char *json, struct CplSystem **out);

/**
 * # Safety
 * `sys` must come from this library or be null.
 */
void cpl_system_free(struct CplSystem *sys);

/**
 * # Safety
 * `sys` must be a live handle or null (returns 0).
 */
size_t cpl_system_dim(const struct CplSystem *sys);

/**
 * Runs the structural checks; `passed` receives the verdict.
 *
 * # Safety
 * `sys` must be a live handle; `passed` must be writable.
 */
enum CplStatus cpl_system_validate(const struct CplSystem *sys, bool *passed);

/**
 * Classifies the system. `options` may be null for defaults.
 *
 * # Safety
 * `sys` must be a live handle, `options` null or valid, `out` writable.
 */
enum CplStatus cpl_analyze(const struct CplSystem *sys,
                           const struct CplOptions *options,
                           struct CplAnalysis **out);

/**
 * # Safety
 * `an` must come from this library or be null.
 */
void cpl_analysis_free(struct CplAnalysis *an);

/**
 * # Safety
 * `an` must be a live handle; `outcome` writable.
 */
enum CplStatus cpl_analysis_outcome(const struct CplAnalysis *an, enum CplOutcome *outcome);

/**
 * Copies the dominant equilibrium into `out[0..len]`; `len` must be at
 * least the system dimension.
 *
 * # Safety
 * `an` must be a live handle; `out` must hold `len` doubles.
 */
enum CplStatus cpl_analysis_x_max(const struct CplAnalysis *an, double *out, size_t len);

/**
 * Writes the collapsed coordinates (0-based) into `out[0..len]` and their
 * number into `count`. With `out` null only `count` is written.
 *
 * # Safety
 * `an` must be a live handle; `out` null or holding `len` entries; `count`
 * writable.
 */
enum CplStatus cpl_analysis_collapsed(const struct CplAnalysis *an,
                                      size_t *out,
                                      size_t len,
                                      size_t *count);

/**
 * Whether the Jacobian at the dominant equilibrium is Hurwitz.
 *
 * # Safety
 * `an` must be a live handle; `stable` writable.
 */
enum CplStatus cpl_analysis_long_term_stable(const struct CplAnalysis *an, bool *stable);

/**
 * Full report as JSON (1-based node numbers, no timings). Release with
 * [`cpl_string_free`].
 *
 * # Safety
 * `an` must be a live handle; `out` writable.
 */
enum CplStatus cpl_analysis_report_json(const struct CplAnalysis *an, char **out);

/**
 * # Safety
 * `s` must come from this library or be null.
 */
void cpl_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CPL_STAB_H */
