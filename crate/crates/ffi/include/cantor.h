#ifndef CANTOR_H
#define CANTOR_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum CantorStatus {
  CANTOR_STATUS_OK = 0,
  /**
   * A required pointer argument was null or a string was not UTF-8.
   */
  CANTOR_STATUS_INVALID_ARGUMENT = 1,
  CANTOR_STATUS_DOMAIN = 2,
  CANTOR_STATUS_BUDGET = 3,
  CANTOR_STATUS_INTEGRITY = 4,
  CANTOR_STATUS_IO = 5,
  CANTOR_STATUS_PANIC = 6,
} CantorStatus;

typedef enum CantorMethod {
  CANTOR_METHOD_AUTO = 0,
  CANTOR_METHOD_ALGORITHM1 = 1,
  CANTOR_METHOD_WORDS = 2,
} CantorMethod;

typedef enum CantorModel {
  CANTOR_MODEL_STAR = 0,
  CANTOR_MODEL_DOUBLE_STAR = 1,
} CantorModel;

/**
 * Enumeration result for one denominator.
 */
typedef struct CantorRecord CantorRecord;

/**
 * Record store opened on a directory.
 */
typedef struct CantorStore CantorStore;

/**
 * Counts for one threshold `T` and window fraction `c`.
 */
typedef struct CantorCounts {
  uint64_t n_tilde;
  uint64_t n;
  uint64_t n_tilde_star;
  uint64_t n_star;
} CantorCounts;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread. Valid until the next
 * failing call on the same thread; empty if nothing failed yet.
 */
const char *cantor_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *cantor_version(void);

/**
 * Period length `l(q)` of base-3 expansions with denominator `q`.
 *
 * # Safety
 * `out` must be null or point to writable memory for one `uint64_t`.
 */
enum CantorStatus cantor_ell(uint64_t q, uint64_t *out);

/**
 * Euler's totient.
 *
 * # Safety
 * `out` must be null or point to writable memory for one `uint64_t`.
 */
enum CantorStatus cantor_phi(uint64_t q, uint64_t *out);

/**
 * Most likely outcome `MLO(q)`; `q` must not be divisible by 3.
 *
 * # Safety
 * `out` must be null or point to writable memory for one `uint64_t`.
 */
enum CantorStatus cantor_mlo(uint64_t q, uint64_t *out);

/**
 * Enumerate the Cantor rationals with denominator `q >= 2` using the default budget.
 *
 * # Safety
 * `out` must be null or point to writable memory for one pointer. On success
 * it receives a handle to release with [`cantor_record_free`].
 */
enum CantorStatus cantor_enumerate(uint64_t q, enum CantorMethod method, struct CantorRecord **out);

/**
 * [`cantor_enumerate`] with explicit limits.
 *
 * # Safety
 * As for [`cantor_enumerate`].
 */
enum CantorStatus cantor_enumerate_with_budget(uint64_t q,
                                               enum CantorMethod method,
                                               uint64_t max_words,
                                               uint64_t max_algorithm1_q,
                                               struct CantorRecord **out);

/**
 * # Safety
 * `record` must be null or a handle from this library not yet freed.
 */
void cantor_record_free(struct CantorRecord *record);

/**
 * # Safety
 * `record` must be a live handle.
 */
uint64_t cantor_record_q(const struct CantorRecord *record);

/**
 * # Safety
 * `record` must be a live handle.
 */
uint64_t cantor_record_ell(const struct CantorRecord *record);

/**
 * # Safety
 * `record` must be a live handle.
 */
uint64_t cantor_record_phi(const struct CantorRecord *record);

/**
 * Number of Cantor rationals `N_q`.
 *
 * # Safety
 * `record` must be a live handle.
 */
uint64_t cantor_record_n_q(const struct CantorRecord *record);

/**
 * Writes `MLO(q)` and returns true, or returns false when `3 | q`.
 *
 * # Safety
 * `record` must be a live handle; `out` must be null or writable.
 */
bool cantor_record_mlo(const struct CantorRecord *record, uint64_t *out);

/**
 * Sorted numerators, borrowed from the record. `*len` receives the count.
 * Returns null if the record carries no numerator list.
 *
 * # Safety
 * `record` must be a live handle and `len` writable. The returned pointer is
 * valid until the record is freed.
 */
const uint64_t *cantor_record_numerators(const struct CantorRecord *record, size_t *len);

/**
 * Open (creating if needed) the ternary record store rooted at `root`.
 *
 * # Safety
 * `root` must be a NUL-terminated UTF-8 path; `out` must be writable.
 */
enum CantorStatus cantor_store_open(const char *root, struct CantorStore **out);

/**
 * # Safety
 * `store` must be null or a handle from this library not yet freed.
 */
void cantor_store_free(struct CantorStore *store);

/**
 * Enumerate and persist every missing `q` in `lo..=hi`.
 *
 * # Safety
 * `store` must be a live handle; `enumerated` must be null or writable.
 */
enum CantorStatus cantor_store_scan(struct CantorStore *store,
                                    uint64_t lo,
                                    uint64_t hi,
                                    uint64_t *enumerated);

/**
 * Counts at threshold `t` with window fraction `c`, from stored records
 * (scanning whatever is missing first).
 *
 * # Safety
 * `store` must be a live handle; `out` must be writable.
 */
enum CantorStatus cantor_store_counts(struct CantorStore *store,
                                      uint64_t t,
                                      double c,
                                      bool include_unit,
                                      struct CantorCounts *out);

/**
 * Draw `trials` samples of the model count for denominator `q` into `values`.
 *
 * # Safety
 * `values` must point to writable memory for `trials` `uint64_t`s.
 */
enum CantorStatus cantor_simulate(enum CantorModel model,
                                  uint64_t q,
                                  uint64_t trials,
                                  uint64_t seed,
                                  uint64_t *values);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CANTOR_H */
