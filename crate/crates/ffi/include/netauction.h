#ifndef NETAUCTION_H
#define NETAUCTION_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Bumped on any incompatible change to the functions below.
 */
#define NA_ABI_VERSION 1

/**
 * Result codes. The numeric values match the command-line exit codes.
 */
typedef enum NaStatus {
  NA_STATUS_OK = 0,
  /**
   * An audit ran and at least one axiom failed.
   */
  NA_STATUS_AUDIT_FAILED = 1,
  /**
   * Null pointer, bad UTF-8, unknown mechanism or axiom.
   */
  NA_STATUS_INVALID_ARGUMENT = 2,
  /**
   * Malformed or inconsistent scenario or reports.
   */
  NA_STATUS_VALIDATION = 3,
  /**
   * The mechanism would charge an unbounded payment.
   */
  NA_STATUS_UNBOUNDED_PAYMENT = 4,
  /**
   * The audit exceeded its evaluation budget.
   */
  NA_STATUS_SPACE_TOO_LARGE = 5,
  /**
   * Internal error; the library caught a panic.
   */
  NA_STATUS_INTERNAL = 6,
} NaStatus;

/**
 * Opaque outcome handle.
 */
typedef struct NaOutcome NaOutcome;

/**
 * Opaque scenario handle.
 */
typedef struct NaScenario NaScenario;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

uint32_t na_abi_version(void);

/**
 * The message of the last failed call on this thread, or null. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *na_last_error_message(void);

/**
 * Parses and validates a scenario document.
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` a writable pointer.
 */
enum NaStatus na_scenario_from_json(const char *json, struct NaScenario **out);

/**
 * Loads a bundled example scenario by name, e.g. `"fig1"`.
 *
 * # Safety
 * `name` must be a NUL-terminated string and `out` a writable pointer.
 */
enum NaStatus na_scenario_fixture(const char *name, struct NaScenario **out);

/**
 * Serializes a scenario back to its JSON form.
 *
 * # Safety
 * `scenario` must come from this library; `out` must be writable.
 */
enum NaStatus na_scenario_to_json(const struct NaScenario *scenario_, char **out);

/**
 * Number of agents, or 0 for a null handle.
 *
 * # Safety
 * `scenario` must be null or come from this library.
 */
uintptr_t na_scenario_agent_count(const struct NaScenario *scenario_);

/**
 * # Safety
 * `scenario` must be null or come from this library, and not be used after.
 */
void na_scenario_free(struct NaScenario *scenario_);

/**
 * Runs a mechanism. `reports_json` may be null for truthful reports.
 * `explore_k` only affects `exploratory-2`; pass 0 for the default.
 *
 * # Safety
 * Pointers must be valid as described; `out` must be writable.
 */
enum NaStatus na_run(const struct NaScenario *scenario_,
                     const char *mechanism_id,
                     const char *reports_json,
                     uint32_t explore_k,
                     struct NaOutcome **out);

/**
 * The outcome as a JSON result report.
 *
 * # Safety
 * `outcome` must come from this library; `out` must be writable.
 */
enum NaStatus na_outcome_to_json(const struct NaOutcome *outcome, char **out);

/**
 * Revenue as an exact amount string such as `"-203"` or `"7/2"`.
 *
 * # Safety
 * `outcome` must come from this library; `out` must be writable.
 */
enum NaStatus na_outcome_revenue(const struct NaOutcome *outcome, char **out);

/**
 * # Safety
 * `outcome` must be null or come from this library, and not be used after.
 */
void na_outcome_free(struct NaOutcome *outcome);

/**
 * Audits a mechanism against a comma-separated axiom list and writes the
 * verdicts as JSON. Returns `Ok` when every axiom passes and `AuditFailed`
 * otherwise; both fill `out`. A zero `budget` uses the default.
 *
 * # Safety
 * Pointers must be valid as described; `out` must be writable.
 */
enum NaStatus na_audit(const struct NaScenario *scenario_,
                       const char *mechanism_id,
                       const char *axioms,
                       uint64_t budget,
                       char **out);

/**
 * # Safety
 * `s` must be null or a string returned by this library.
 */
void na_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* NETAUCTION_H */
