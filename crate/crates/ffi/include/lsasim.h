#ifndef LSASIM_H
#define LSASIM_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum lsasim_status {
  LSASIM_STATUS_OK = 0,
  LSASIM_STATUS_NULL_POINTER = 1,
  LSASIM_STATUS_INVALID_UTF8 = 2,
  /**
   * The scenario document did not parse or validate.
   */
  LSASIM_STATUS_INVALID_SCENARIO = 3,
  LSASIM_STATUS_NOT_FOUND = 4,
  /**
   * The run could not be set up or did not reach its horizon.
   */
  LSASIM_STATUS_RUN_FAILED = 5,
  LSASIM_STATUS_IO = 6,
  LSASIM_STATUS_INTERNAL = 7,
} lsasim_status;

/**
 * A finished run with its verdicts.
 */
typedef struct lsasim_run lsasim_run;

/**
 * A parsed, validated scenario.
 */
typedef struct lsasim_scenario lsasim_scenario;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failure on this thread, or NULL if none. The
 * pointer stays valid until the next failing call on the same thread.
 */
const char *lsasim_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *lsasim_version(void);

/**
 * Parses and validates a scenario document.
 *
 * # Safety
 * `json` must be NUL-terminated; `out` must be writable.
 */
enum lsasim_status lsasim_scenario_parse(const char *json, struct lsasim_scenario **out);

/**
 * Loads one of the bundled scenarios by name.
 *
 * # Safety
 * `name` must be NUL-terminated; `out` must be writable.
 */
enum lsasim_status lsasim_scenario_bundled(const char *name, struct lsasim_scenario **out);

/**
 * # Safety
 * `scenario` must come from this library and not be freed.
 */
enum lsasim_status lsasim_scenario_set_seed(struct lsasim_scenario *scenario, uint64_t seed);

/**
 * # Safety
 * `scenario` must be NULL or come from this library, and is invalid after.
 */
void lsasim_scenario_free(struct lsasim_scenario *scenario);

/**
 * Runs the scenario to its horizon. The scenario is left untouched.
 *
 * # Safety
 * `scenario` must come from this library; `out` must be writable.
 */
enum lsasim_status lsasim_scenario_run(const struct lsasim_scenario *scenario,
                                       struct lsasim_run **out);

/**
 * Writes 1 to `passed` if no verdict failed, else 0.
 *
 * # Safety
 * `run` must come from this library; `passed` must be writable.
 */
enum lsasim_status lsasim_run_passed(const struct lsasim_run *run, int32_t *passed);

/**
 * Reads one summary metric, e.g. `goodput_bps.A`.
 *
 * # Safety
 * `run` must come from this library, `name` NUL-terminated, `value` writable.
 */
enum lsasim_status lsasim_run_metric(const struct lsasim_run *run, const char *name, double *value);

/**
 * The summary document as JSON. Release it with [`lsasim_string_free`].
 *
 * # Safety
 * `run` must come from this library; `out` must be writable.
 */
enum lsasim_status lsasim_run_summary_json(const struct lsasim_run *run, char **out);

/**
 * Writes the report files into `dir`, creating it if needed.
 *
 * # Safety
 * `run` must come from this library; `dir` must be NUL-terminated.
 */
enum lsasim_status lsasim_run_write_reports(const struct lsasim_run *run, const char *dir);

/**
 * # Safety
 * `run` must be NULL or come from this library, and is invalid after.
 */
void lsasim_run_free(struct lsasim_run *run);

/**
 * # Safety
 * `s` must be NULL or a string returned by this library.
 */
void lsasim_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LSASIM_H */
