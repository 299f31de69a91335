#ifndef COHSPACE_H
#define COHSPACE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes; one per library error kind.
 */
typedef enum CohStatus {
  COH_STATUS_OK = 0,
  COH_STATUS_NULL_POINTER = 1,
  COH_STATUS_INVALID_UTF8 = 2,
  COH_STATUS_PANIC = 3,
  COH_STATUS_INVALID_POINT = 10,
  COH_STATUS_COHERENCE_VIOLATION = 11,
  COH_STATUS_KERNEL_NOT_PSD = 12,
  COH_STATUS_NUMERICAL = 13,
  COH_STATUS_OUT_OF_SPAN = 14,
  COH_STATUS_SPAN_ESCAPE = 15,
  COH_STATUS_STEP_SIZE = 16,
  COH_STATUS_STIFFNESS = 17,
  COH_STATUS_DEGENERATE_METRIC = 18,
  COH_STATUS_INTEGRATOR_FAILURE = 19,
  COH_STATUS_TRUNCATION = 20,
  COH_STATUS_NORMALIZATION = 21,
  COH_STATUS_MODEL_DEGENERACY = 22,
  COH_STATUS_NON_CLOSING = 23,
  COH_STATUS_STATE_POSITIVITY = 24,
  COH_STATUS_PRECONDITION = 25,
  COH_STATUS_DOMAIN = 26,
  COH_STATUS_DIMENSION = 27,
  COH_STATUS_CHECK_FAILED = 28,
  COH_STATUS_CONFIG = 29,
  COH_STATUS_IO = 30,
  COH_STATUS_INDEX_OUT_OF_RANGE = 31,
} CohStatus;

/**
 * Opaque quantum basis built from sampled points.
 */
typedef struct CohBasis CohBasis;

/**
 * Opaque coherent space.
 */
typedef struct CohSpace CohSpace;

/**
 * Opaque solved spectrum.
 */
typedef struct CohSpectrum CohSpectrum;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the last error message of this thread into `buf` (NUL
 * terminated, truncated to `len`). Returns the full message length, 0 if
 * there is none.
 *
 * # Safety
 * `buf` must be null or point to `len` writable bytes.
 */
uintptr_t coh_last_error(char *buf, uintptr_t len);

/**
 * Library version as a static NUL-terminated string.
 */
const char *coh_version(void);

/**
 * Builds a space from its JSON descriptor, e.g. `{"kind":"spin","exponent":2}`.
 *
 * # Safety
 * `descriptor` must be a NUL-terminated string; `out` must be writable.
 */
enum CohStatus coh_space_new(const char *descriptor, struct CohSpace **out);

/**
 * # Safety
 * `space` must come from [`coh_space_new`] and not be used afterwards.
 */
void coh_space_free(struct CohSpace *space);

/**
 * Number of complex label coordinates, 0 for a null handle.
 *
 * # Safety
 * `space` must be null or a live handle.
 */
uintptr_t coh_space_label_dim(const struct CohSpace *space);

/**
 * `K(z, z2)`.
 *
 * # Safety
 * `z` and `z2` must hold `2 * dim` doubles each; `out_re`, `out_im` must be
 * writable.
 */
enum CohStatus coh_space_eval(const struct CohSpace *space,
                              const double *z,
                              const double *z2,
                              uintptr_t dim,
                              double *out_re,
                              double *out_im);

/**
 * Hermitian Gram matrix of `n_points` points, written row-major into
 * `out` (`2 * n_points * n_points` doubles).
 *
 * # Safety
 * `points` must hold `2 * n_points * dim` doubles and `out` must be
 * writable for the size above.
 */
enum CohStatus coh_space_gram(const struct CohSpace *space,
                              const double *points,
                              uintptr_t n_points,
                              uintptr_t dim,
                              double *out);

/**
 * Positive-semidefiniteness test of the Gram matrix at relative tolerance
 * `tol`. A failed test is not an error: `*out_passed` is set to 0.
 *
 * # Safety
 * As for [`coh_space_gram`]; the out pointers must be writable.
 */
enum CohStatus coh_space_check(const struct CohSpace *space,
                               const double *points,
                               uintptr_t n_points,
                               uintptr_t dim,
                               double tol,
                               double *out_min_eigenvalue,
                               int32_t *out_passed);

/**
 * Quantum space spanned by the given points.
 *
 * # Safety
 * As for [`coh_space_gram`]; `out` must be writable.
 */
enum CohStatus coh_basis_build(const struct CohSpace *space,
                               const double *points,
                               uintptr_t n_points,
                               uintptr_t dim,
                               double tol,
                               struct CohBasis **out);

/**
 * Rank of the basis, 0 for a null handle.
 *
 * # Safety
 * `basis` must be null or a live handle.
 */
uintptr_t coh_basis_rank(const struct CohBasis *basis);

/**
 * # Safety
 * `basis` must come from [`coh_basis_build`] and not be used afterwards.
 */
void coh_basis_free(struct CohBasis *basis);

/**
 * Discrete spectrum of a catalog model on `[lo, hi]`, e.g.
 * `{"model":"oscillator","hbar_omega":1}`.
 *
 * # Safety
 * `model` must be NUL-terminated; `out` must be writable.
 */
enum CohStatus coh_spectrum_solve(const char *model,
                                  double lo,
                                  double hi,
                                  double tol,
                                  struct CohSpectrum **out);

/**
 * Number of discrete levels, 0 for a null handle.
 *
 * # Safety
 * `spectrum` must be null or a live handle.
 */
uintptr_t coh_spectrum_len(const struct CohSpectrum *spectrum);

/**
 * Energy and quantum number of level `index`.
 *
 * # Safety
 * `spectrum` must be a live handle; the out pointers must be writable.
 */
enum CohStatus coh_spectrum_level(const struct CohSpectrum *spectrum,
                                  uintptr_t index,
                                  double *out_energy,
                                  uintptr_t *out_n);

/**
 * # Safety
 * `spectrum` must come from [`coh_spectrum_solve`] and not be used
 * afterwards.
 */
void coh_spectrum_free(struct CohSpectrum *spectrum);

/**
 * Runs a command-line config (see `formats.md`) and returns its payload
 * as a string to be released with [`coh_string_free`]. Output paths in
 * the config are ignored. A failed verification still yields the payload
 * together with [`CohStatus::CheckFailed`] or [`CohStatus::KernelNotPsd`].
 *
 * # Safety
 * `config` must be NUL-terminated; `out` must be writable.
 */
enum CohStatus coh_run(const char *config, char **out);

/**
 * # Safety
 * `s` must come from this library and not be used afterwards.
 */
void coh_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* COHSPACE_H */
