#ifndef EXSUFF_H
#define EXSUFF_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result code of every fallible call.
typedef enum ExsuffStatus {
  EXSUFF_STATUS_OK = 0,
  EXSUFF_STATUS_NULL_POINTER = 1,
  EXSUFF_STATUS_INVALID_UTF8 = 2,
  EXSUFF_STATUS_INVALID_ARGUMENT = 3,
  EXSUFF_STATUS_PARSE = 4,
  EXSUFF_STATUS_OUT_OF_RANGE = 5,
  EXSUFF_STATUS_DIMENSION_MISMATCH = 6,
  EXSUFF_STATUS_NULL_EVENT = 7,
  EXSUFF_STATUS_NUMERICAL = 8,
  EXSUFF_STATUS_PANIC = 9,
} ExsuffStatus;

// Opaque estimand g: R^n -> R.
typedef struct ExsuffEstimand ExsuffEstimand;

// Opaque finite pmf on R^n.
typedef struct ExsuffPmf ExsuffPmf;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *exsuff_version(void);

// Static description of a status code.
const char *exsuff_status_message(enum ExsuffStatus status);

// Message for the most recent failure on this thread, or NULL after a
// successful call. Valid until the next call into the library on the same
// thread.
const char *exsuff_last_error_message(void);

// Parses a pmf from the `dim n` text format.
//
// # Safety
// `text` must be a NUL-terminated string and `out` a valid pointer.
enum ExsuffStatus exsuff_pmf_from_text(const char *text, struct ExsuffPmf **out);

// Orbit average of `p`: an exchangeable pmf.
//
// # Safety
// `pmf` must be a live handle and `out` a valid pointer.
enum ExsuffStatus exsuff_pmf_symmetrize(const struct ExsuffPmf *pmf, struct ExsuffPmf **out);

// Releases a pmf handle. NULL is ignored.
//
// # Safety
// `pmf` must be NULL or a handle not yet freed.
void exsuff_pmf_free(struct ExsuffPmf *pmf);

// Dimension and atom count.
//
// # Safety
// `pmf` must be a live handle; the out pointers must be valid.
enum ExsuffStatus exsuff_pmf_shape(const struct ExsuffPmf *pmf, size_t *out_dim, size_t *out_atoms);

// Whether the pmf is invariant under coordinate swaps within `tol`.
//
// # Safety
// `pmf` must be a live handle and `out` a valid pointer.
enum ExsuffStatus exsuff_pmf_is_exchangeable(const struct ExsuffPmf *pmf, double tol, bool *out);

// Largest gap between the brute-force conditional law given the order
// statistics and the uniform-over-rearrangements formula.
//
// # Safety
// `pmf` must be a live handle and `out_max` a valid pointer.
enum ExsuffStatus exsuff_pmf_compare_conditional(const struct ExsuffPmf *pmf, double *out_max);

// `|E[g(X) 1_A] - E[symmetrized g(sort X) 1_A]|` where `A` is the event
// that the order statistics fall in `b`. `rows` holds `count` points of the
// pmf's dimension in row-major order.
//
// # Safety
// `pmf` and `estimand` must be live handles, `rows` must point to
// `count * dim` doubles (may be NULL when `count` is 0), `out` valid.
enum ExsuffStatus exsuff_pmf_identity_gap(const struct ExsuffPmf *pmf,
                                          const struct ExsuffEstimand *estimand,
                                          const double *rows,
                                          size_t count,
                                          double *out);

// Parses an estimand spec (`proj:k`, `wsum:w1,..`, `sum`, `product`, `max`,
// `threshold:t`, `constant:c`, `indicator:r1;r2`) for dimension `n`.
//
// # Safety
// `spec` must be a NUL-terminated string and `out` a valid pointer.
enum ExsuffStatus exsuff_estimand_parse(const char *spec, size_t n, struct ExsuffEstimand **out);

// Releases an estimand handle. NULL is ignored.
//
// # Safety
// `estimand` must be NULL or a handle not yet freed.
void exsuff_estimand_free(struct ExsuffEstimand *estimand);

// Exact average of g over all rearrangements of `y` (n <= 10).
//
// # Safety
// `estimand` must be a live handle, `y` must point to `n` doubles, `out`
// must be valid.
enum ExsuffStatus exsuff_symmetrize_exact(const struct ExsuffEstimand *estimand,
                                          const double *y,
                                          size_t n,
                                          double *out);

// Monte Carlo average over `draws` uniform permutations seeded by `seed`.
// `out_std_error` may be NULL.
//
// # Safety
// `estimand` must be a live handle, `y` must point to `n` doubles,
// `out_value` must be valid.
enum ExsuffStatus exsuff_symmetrize_mc(const struct ExsuffEstimand *estimand,
                                       const double *y,
                                       size_t n,
                                       uint64_t draws,
                                       uint64_t seed,
                                       double *out_value,
                                       double *out_std_error);

// Sorts `x` into nondecreasing order. `out_sorted` receives `n` doubles and
// `out_perm` (may be NULL) the stable sorting permutation, with
// `out_sorted[i] = x[out_perm[i]]`.
//
// # Safety
// `x` and `out_sorted` must point to `n` doubles; `out_perm` must be NULL
// or point to `n` writable `size_t`.
enum ExsuffStatus exsuff_sort_to_cone(const double *x,
                                      size_t n,
                                      double *out_sorted,
                                      size_t *out_perm);

// Upper tail of the chi-square distribution with `df` degrees of freedom.
//
// # Safety
// `out` must be a valid pointer.
enum ExsuffStatus exsuff_chi_square_sf(double x, uint64_t df, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* EXSUFF_H */
