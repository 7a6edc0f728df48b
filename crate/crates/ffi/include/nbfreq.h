/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#ifndef NBFREQ_H
#define NBFREQ_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result of every fallible call.
typedef enum NbfStatus {
  NBF_STATUS_OK = 0,
  NBF_STATUS_NULL_POINTER = 1,
  NBF_STATUS_INVALID_ARGUMENT = 2,
  NBF_STATUS_IO = 3,
  NBF_STATUS_PARSE = 4,
  // The model could not be fitted to the data.
  NBF_STATUS_FIT_FAILED = 5,
  NBF_STATUS_LIMIT_EXCEEDED = 6,
  // A bug: the library panicked.
  NBF_STATUS_INTERNAL = 7,
} NbfStatus;

// A transaction database.
typedef struct NbfDatabase NbfDatabase;

// Mined itemsets, sorted by size and then lexicographically.
typedef struct NbfItemsets NbfItemsets;

// A fitted frequency model.
typedef struct NbfModel NbfModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread; empty after a success.
// The pointer stays valid until the next `nbf_*` call on the same thread.
const char *nbf_last_error_message(void);

// Loads a basket file (one transaction per line, item ids separated by
// whitespace).
//
// # Safety
// `path` must be a NUL-terminated string; `out` must be writable.
enum NbfStatus nbf_database_load(const char *path, struct NbfDatabase **out);

// Builds a database from a flat item array: transaction `t` holds
// `items[offsets[t] .. offsets[t + 1]]`, so `offsets` has
// `n_transactions + 1` entries.
//
// # Safety
// `offsets` must point to `n_transactions + 1` values and `items` to at
// least `offsets[n_transactions]` values.
enum NbfStatus nbf_database_from_arrays(const uint32_t *items,
                                        const size_t *offsets,
                                        size_t n_transactions,
                                        struct NbfDatabase **out);

// Number of transactions; 0 for a null handle.
//
// # Safety
// `db` must be null or a live database handle.
size_t nbf_database_transaction_count(const struct NbfDatabase *db);

// # Safety
// `db` must be null or a handle not yet freed.
void nbf_database_free(struct NbfDatabase *db);

// Fits the model. `trim` is the fraction of most frequent items left out;
// a negative `total_items` means the number of available items is unknown
// and is estimated.
//
// # Safety
// `db` must be a live database handle; `out` must be writable.
enum NbfStatus nbf_model_fit(const struct NbfDatabase *db,
                             double trim,
                             int64_t total_items,
                             struct NbfModel **out);

// # Safety
// `path` must be a NUL-terminated string; `out` must be writable.
enum NbfStatus nbf_model_load(const char *path, struct NbfModel **out);

// # Safety
// `model` must be a live model handle; `path` a NUL-terminated string.
enum NbfStatus nbf_model_save(const struct NbfModel *model, const char *path);

// Shape parameter; NaN for a null handle.
//
// # Safety
// `model` must be null or a live model handle.
double nbf_model_k(const struct NbfModel *model);

// Scale parameter; NaN for a null handle.
//
// # Safety
// `model` must be null or a live model handle.
double nbf_model_a(const struct NbfModel *model);

// Estimated number of available items; NaN for a null handle.
//
// # Safety
// `model` must be null or a live model handle.
double nbf_model_n_total(const struct NbfModel *model);

// # Safety
// `model` must be null or a handle not yet freed.
void nbf_model_free(struct NbfModel *model);

// Mines itemsets of size ≥ 2 at precision threshold `pi` and subset
// fraction `theta`. `max_size` of 0 means unbounded.
//
// # Safety
// `db` and `model` must be live handles; `out` must be writable.
enum NbfStatus nbf_mine(const struct NbfDatabase *db,
                        const struct NbfModel *model,
                        double pi,
                        double theta,
                        size_t max_size,
                        struct NbfItemsets **out);

// Number of itemsets; 0 for a null handle.
//
// # Safety
// `sets` must be null or a live itemsets handle.
size_t nbf_itemsets_count(const struct NbfItemsets *sets);

// Reads itemset `index`. `items` receives a pointer to `len` ascending
// item ids, owned by `sets`. Any of the output pointers may be null.
//
// # Safety
// `sets` must be a live itemsets handle; non-null outputs must be writable.
enum NbfStatus nbf_itemsets_get(const struct NbfItemsets *sets,
                                size_t index,
                                const uint32_t **items,
                                size_t *len,
                                uint64_t *freq,
                                uint64_t *sigma_freq,
                                double *precision);

// # Safety
// `sets` must be null or a handle not yet freed.
void nbf_itemsets_free(struct NbfItemsets *sets);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* NBFREQ_H */
