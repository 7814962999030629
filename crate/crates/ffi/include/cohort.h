#ifndef COHORT_H
#define COHORT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum CohortStatus {
  COHORT_STATUS_OK = 0,
  COHORT_STATUS_NULL_ARGUMENT = 1,
  COHORT_STATUS_INVALID_UTF8 = 2,
  COHORT_STATUS_INVALID_ARGUMENT = 3,
  COHORT_STATUS_DATA_ERROR = 4,
  COHORT_STATUS_WRONG_STATUS = 5,
  COHORT_STATUS_INVALID_DECISIONS = 6,
  COHORT_STATUS_PANIC = 7,
} CohortStatus;

typedef enum CohortSessionStatus {
  COHORT_SESSION_STATUS_AWAITING_ITERATION = 0,
  COHORT_SESSION_STATUS_AWAITING_DECISIONS = 1,
  COHORT_SESSION_STATUS_CONVERGED = 2,
} CohortSessionStatus;

/**
 * A loaded index cache.
 */
typedef struct CohortIndex CohortIndex;

/**
 * An expansion session bound to the index it was created from. Keeps its
 * own reference to the index, so the index handle may be freed first.
 */
typedef struct CohortSession CohortSession;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or NULL. Valid until
 * the next call into this library on the same thread.
 */
const char *cohort_last_error(void);

/**
 * Releases a string returned by this library. NULL is ignored.
 *
 * # Safety
 * `s` must come from this library and not have been freed.
 */
void cohort_string_free(char *s);

/**
 * Opens an index cache file.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum CohortStatus cohort_index_open(const char *path, struct CohortIndex **out);

/**
 * # Safety
 * `index` must come from `cohort_index_open` and not have been freed. NULL is ignored.
 */
void cohort_index_free(struct CohortIndex *index);

/**
 * Documents, vocabulary terms and authors in the index.
 *
 * # Safety
 * `index` must be a live handle; the out-pointers must be writable.
 */
enum CohortStatus cohort_index_counts(const struct CohortIndex *index,
                                      uint64_t *documents,
                                      uint64_t *terms,
                                      uint64_t *authors);

/**
 * SHA-256 of the cache contents, as lowercase hex.
 *
 * # Safety
 * `index` must be a live handle; `out` must be writable.
 */
enum CohortStatus cohort_index_fingerprint(const struct CohortIndex *index, char **out);

/**
 * Ranks every document for a query given as a JSON array of terms.
 * Writes a JSON array of `{"document", "score", "total_words"}`.
 *
 * # Safety
 * `index` must be a live handle; `query_json` NUL-terminated; `out` writable.
 */
enum CohortStatus cohort_rank_documents(const struct CohortIndex *index,
                                        const char *query_json,
                                        double alpha,
                                        char **out);

/**
 * Starts a session from a JSON array of seed terms.
 *
 * # Safety
 * `index` must be a live handle; `seeds_json` NUL-terminated; `out` writable.
 */
enum CohortStatus cohort_session_create(const struct CohortIndex *index,
                                        const char *seeds_json,
                                        double alpha,
                                        size_t top_docs,
                                        size_t top_terms,
                                        struct CohortSession **out);

/**
 * Restores a session saved with `cohort_session_to_json`.
 *
 * # Safety
 * `index` must be a live handle; `json` NUL-terminated; `out` writable.
 */
enum CohortStatus cohort_session_from_json(const struct CohortIndex *index,
                                           const char *json,
                                           struct CohortSession **out);

/**
 * # Safety
 * `session` must come from this library and not have been freed. NULL is ignored.
 */
void cohort_session_free(struct CohortSession *session);

/**
 * Runs the next iteration. When `record_out` is not NULL it receives the
 * iteration record as JSON.
 *
 * # Safety
 * `session` must be a live handle; `record_out` NULL or writable.
 */
enum CohortStatus cohort_session_iterate(struct CohortSession *session, char **record_out);

/**
 * Submits decisions as a JSON object mapping every candidate to
 * `"accept"` or `"reject"`. `decided_by` may be NULL.
 *
 * # Safety
 * `session` must be a live handle; strings NUL-terminated.
 */
enum CohortStatus cohort_session_decide(struct CohortSession *session,
                                        const char *decisions_json,
                                        const char *decided_by);

/**
 * # Safety
 * `session` must be a live handle; `out` writable.
 */
enum CohortStatus cohort_session_status(const struct CohortSession *session,
                                        enum CohortSessionStatus *out);

/**
 * The full session document as JSON.
 *
 * # Safety
 * `session` must be a live handle; `out` writable.
 */
enum CohortStatus cohort_session_to_json(const struct CohortSession *session, char **out);

/**
 * Pearson correlation with its two-sided p-value.
 *
 * # Safety
 * `x` and `y` must point to `n` doubles each; `r` and `p_value` writable.
 */
enum CohortStatus cohort_pearson(const double *x,
                                 const double *y,
                                 size_t n,
                                 double *r,
                                 double *p_value);

/**
 * Cohort authors per 100,000 geolocated authors.
 *
 * # Safety
 * `out` must be writable.
 */
enum CohortStatus cohort_prevalence(uint64_t cohort, uint64_t geolocated, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* COHORT_H */
