#ifndef NOVELTYFORGE_H
#define NOVELTYFORGE_H

/* Generated by cbindgen from src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result of every fallible call.
typedef enum NfStatus {
  NF_STATUS_OK = 0,
  // A required pointer argument was null.
  NF_STATUS_NULL_POINTER = 1,
  // Input text was not valid UTF-8.
  NF_STATUS_INVALID_UTF8 = 2,
  // Model text did not parse.
  NF_STATUS_SYNTAX_ERROR = 3,
  // Model text parsed but failed validation.
  NF_STATUS_VALIDATION_FAILED = 4,
  // A JSON configuration was malformed or out of range.
  NF_STATUS_CONFIG_ERROR = 5,
  // Generation or simulation failed.
  NF_STATUS_RUNTIME_ERROR = 6,
  // An index was past the end.
  NF_STATUS_OUT_OF_RANGE = 7,
  // The library panicked; this is a bug.
  NF_STATUS_PANIC = 8,
} NfStatus;

// Viability level of a performance delta.
typedef enum NfLevel {
  NF_LEVEL_NONE = 0,
  NF_LEVEL_LOW = 1,
  NF_LEVEL_MEDIUM = 2,
  NF_LEVEL_HIGH = 3,
} NfLevel;

// A generated batch of novelty records.
typedef struct NfBatch NfBatch;

// A parsed, validated domain.
typedef struct NfDomain NfDomain;

// A parsed, validated problem. Independent of the domain handle it was
// parsed against.
typedef struct NfProblem NfProblem;

// Message for the last failed call on this thread, or null after a
// successful one. Valid until the next call on the same thread; do not free.
const char *nf_last_error_message(void);

// Library version as a static string.
const char *nf_version(void);

// Frees a string returned by this library. Null is ignored.
//
// # Safety
// `s` must come from this library and not have been freed.
void nf_string_free(char *s);

// Parses and validates domain text.
//
// # Safety
// `source` must be a nul-terminated string; `out_domain` must be writable.
enum NfStatus nf_domain_parse(const char *source, struct NfDomain **out_domain);

// Canonical text of a domain.
//
// # Safety
// `domain` must be a live handle; `out_text` must be writable.
enum NfStatus nf_domain_print(const struct NfDomain *domain, char **out_text);

// Releases a domain handle. Null is ignored.
//
// # Safety
// `domain` must come from [`nf_domain_parse`] and not have been freed.
void nf_domain_free(struct NfDomain *domain);

// Parses and validates problem text against `domain`.
//
// # Safety
// `domain` must be a live handle, `source` nul-terminated, `out_problem`
// writable.
enum NfStatus nf_problem_parse(const struct NfDomain *domain,
                               const char *source,
                               struct NfProblem **out_problem);

// Canonical text of a problem.
//
// # Safety
// `problem` must be a live handle; `out_text` must be writable.
enum NfStatus nf_problem_print(const struct NfProblem *problem, char **out_text);

// Releases a problem handle. Null is ignored.
//
// # Safety
// `problem` must come from [`nf_problem_parse`] and not have been freed.
void nf_problem_free(struct NfProblem *problem);

// Generates a batch of novelties. `config_json` is a generator config
// object (null or empty for defaults).
//
// # Safety
// Handles must be live; `config_json` null or nul-terminated; `out_batch`
// writable.
enum NfStatus nf_generate_batch(const struct NfDomain *domain,
                                const struct NfProblem *problem,
                                const char *config_json,
                                struct NfBatch **out_batch);

// Number of records in a batch, or 0 for null.
//
// # Safety
// `batch` must be null or a live handle.
size_t nf_batch_len(const struct NfBatch *batch);

// JSON of record `index`.
//
// # Safety
// `batch` must be a live handle; `out_json` must be writable.
enum NfStatus nf_batch_record_json(const struct NfBatch *batch, size_t index, char **out_json);

// Releases a batch handle. Null is ignored.
//
// # Safety
// `batch` must come from [`nf_generate_batch`] and not have been freed.
void nf_batch_free(struct NfBatch *batch);

// Scores a novel model pair against its base and writes the viability
// report as JSON. `config_json` is a filter config object (null or empty
// for defaults).
//
// # Safety
// Handles must be live; `config_json` null or nul-terminated; `out_json`
// writable.
enum NfStatus nf_filter(const struct NfDomain *base_domain,
                        const struct NfProblem *base_problem,
                        const struct NfDomain *novel_domain,
                        const struct NfProblem *novel_problem,
                        const char *config_json,
                        char **out_json);

// Viability level of a delta in percentage points under the default
// thresholds.
enum NfLevel nf_classify_viability(double delta_percent);

#endif  /* NOVELTYFORGE_H */
