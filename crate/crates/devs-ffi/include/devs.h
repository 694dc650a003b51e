#ifndef DEVS_H
#define DEVS_H

/* Generated by cbindgen from the devs-ffi crate; regenerated on every build — do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible call in this API.
 */
typedef enum DevsStatus {
  /**
   * The call succeeded.
   */
  DEVS_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  DEVS_STATUS_NULL_POINTER = 1,
  /**
   * The configuration text was not valid UTF-8.
   */
  DEVS_STATUS_INVALID_UTF8 = 2,
  /**
   * The configuration text did not parse; see `devs_last_error`.
   */
  DEVS_STATUS_CONFIG_ERROR = 3,
  /**
   * The model was structurally invalid (coupling violations, failed
   * build, or no coupled structure to work on).
   */
  DEVS_STATUS_STRUCTURE_ERROR = 4,
  /**
   * The simulation itself faulted, or produced nothing to summarize.
   */
  DEVS_STATUS_SIMULATION_FAULT = 5,
  /**
   * Flatten-check ran both variants and they disagreed.
   */
  DEVS_STATUS_NOT_EQUIVALENT = 6,
  /**
   * An internal invariant failed; the library caught a panic at the
   * boundary. See `devs_last_error`.
   */
  DEVS_STATUS_PANIC = 7,
} DevsStatus;

/**
 * A parsed experiment configuration. Opaque.
 */
typedef struct DevsExperiment DevsExperiment;

/**
 * A finished run: rendered CSV, summary text, and the final simulated
 * time. Opaque.
 */
typedef struct DevsReport DevsReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * The message describing the most recent failure on this thread. Borrowed:
 * valid until the next `devs_*` call on the same thread. Never null; empty
 * after a success.
 */
const char *devs_last_error(void);

/**
 * Parses configuration text into an experiment handle.
 *
 * On `Ok`, `*out` owns the new handle; release it with
 * `devs_experiment_free`. On any failure `*out` is left untouched.
 * # Safety
 * `config_text` must point to a NUL-terminated string and `out` must be
 * valid for writing, both for the duration of the call.
 */
enum DevsStatus devs_experiment_parse(const char *config_text, struct DevsExperiment **out);

/**
 * Releases an experiment handle. Accepts null.
 * # Safety
 * `experiment` must be null or a handle from `devs_experiment_parse` not
 * yet freed; it must not be used afterwards.
 */
void devs_experiment_free(struct DevsExperiment *experiment);

/**
 * Runs the experiment to completion.
 *
 * On `Ok`, `*out` owns a report handle; release it with
 * `devs_report_free`. On any failure `*out` is left untouched.
 * # Safety
 * `experiment` must be a live handle from `devs_experiment_parse` and
 * `out` must be valid for writing, both for the duration of the call.
 */
enum DevsStatus devs_experiment_run(const struct DevsExperiment *experiment,
                                    struct DevsReport **out);

/**
 * The run's CSV body (header line included). Borrowed from the report;
 * valid until `devs_report_free`. Null only if `report` is null.
 * # Safety
 * `report` must be null or a live handle from `devs_experiment_run`.
 */
const char *devs_report_csv(const struct DevsReport *report);

/**
 * The run's aligned summary text. Borrowed from the report; valid until
 * `devs_report_free`. Null only if `report` is null.
 * # Safety
 * `report` must be null or a live handle from `devs_experiment_run`.
 */
const char *devs_report_summary(const struct DevsReport *report);

/**
 * Simulated time of the last executed event. NaN if `report` is null.
 * # Safety
 * `report` must be null or a live handle from `devs_experiment_run`.
 */
double devs_report_final_time(const struct DevsReport *report);

/**
 * Releases a report handle. Accepts null.
 * # Safety
 * `report` must be null or a handle from `devs_experiment_run` not yet
 * freed; it must not be used afterwards.
 */
void devs_report_free(struct DevsReport *report);

/**
 * Validates the configured model's structure without simulating.
 *
 * Always writes the full validation report to `*out_report` when the model
 * builds (even on violations — it lists them one per line); the caller
 * frees it with `devs_string_free`. Returns `Ok` for a clean report,
 * `StructureError` otherwise.
 * # Safety
 * `experiment` must be a live handle from `devs_experiment_parse` and
 * `out_report` must be valid for writing, both for the duration of the
 * call.
 */
enum DevsStatus devs_experiment_validate(const struct DevsExperiment *experiment,
                                         char **out_report);

/**
 * Runs the configured coupled model both hierarchically and flattened,
 * then compares observable behavior.
 *
 * On `Ok` or `NotEquivalent`, writes a one-line comparison detail to
 * `*out_detail` (caller frees it with `devs_string_free`). Other statuses
 * report why the check could not run — for instance an already-atomic
 * model.
 * # Safety
 * `experiment` must be a live handle from `devs_experiment_parse` and
 * `out_detail` must be valid for writing, both for the duration of the
 * call.
 */
enum DevsStatus devs_experiment_flatten_check(const struct DevsExperiment *experiment,
                                              char **out_detail);

/**
 * Releases a string returned through a `char **` out-parameter. Accepts
 * null.
 * # Safety
 * `string` must be null or a pointer received through a `char **`
 * out-parameter of this API, not yet freed; it must not be used
 * afterwards.
 */
void devs_string_free(char *string);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DEVS_H */
