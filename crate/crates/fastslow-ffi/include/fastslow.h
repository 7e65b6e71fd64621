/* C interface for the fastslow toolkit. */

#ifndef FASTSLOW_H
#define FASTSLOW_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Bifurcation kinds of the normal-form catalog.
 */
typedef enum FsBifurcation {
  FS_BIFURCATION_FOLD = 0,
  FS_BIFURCATION_TRANSCRITICAL = 1,
  FS_BIFURCATION_PITCHFORK = 2,
  FS_BIFURCATION_CUSP = 3,
  FS_BIFURCATION_HOPF = 4,
  FS_BIFURCATION_BAUTIN = 5,
  FS_BIFURCATION_BOGDANOV_TAKENS = 6,
  FS_BIFURCATION_FOLD_HOPF = 7,
  FS_BIFURCATION_HOPF_HOPF = 8,
} FsBifurcation;

/**
 * Scaling laws for variance fits.
 */
typedef enum FsScalingLaw {
  FS_SCALING_LAW_INV_SQRT = 0,
  FS_SCALING_LAW_INV = 1,
  FS_SCALING_LAW_INV_SQRT_REV = 2,
  FS_SCALING_LAW_INV_REV = 3,
  FS_SCALING_LAW_LINEAR = 4,
} FsScalingLaw;

/**
 * Status codes returned by every fallible call.
 */
typedef enum FsStatus {
  FS_STATUS_OK = 0,
  FS_STATUS_NULL_POINTER = 1,
  FS_STATUS_INVALID_ARGUMENT = 2,
  FS_STATUS_DIMENSION_MISMATCH = 3,
  FS_STATUS_NOT_ATTRACTING = 4,
  FS_STATUS_NOT_HURWITZ = 5,
  FS_STATUS_NUMERICAL_FAILURE = 6,
  FS_STATUS_IO_FAILURE = 7,
} FsStatus;

/**
 * Classifier verdicts.
 */
typedef enum FsTransition {
  FS_TRANSITION_CRITICAL = 0,
  FS_TRANSITION_NOT_CRITICAL = 1,
  FS_TRANSITION_INDETERMINATE = 2,
} FsTransition;

/**
 * Opaque simulated ensemble.
 */
typedef struct FsEnsemble FsEnsemble;

/**
 * Opaque preset-backed fast-slow system.
 */
typedef struct FsSystem FsSystem;

/**
 * Slow-flow data and auxiliary normal-form parameters for classification.
 * `has_j2 = 0` marks the cycle blow-up tangent as unavailable.
 */
typedef struct FsSlowFlow {
  double g1;
  double g2;
  double dg2_dy2;
  double j2;
  int32_t has_j2;
  double s;
  double l1;
  double l2;
  double theta0;
} FsSlowFlow;

/**
 * Result of a scaling-law fit.
 */
typedef struct FsFit {
  double a;
  double y_c;
  double rss;
  int32_t converged;
  uint32_t iterations;
} FsFit;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static C string.
 */
const char *fs_version(void);

/**
 * Copies the current thread's last error message into `buf` (truncated to
 * `len - 1` bytes, always NUL-terminated). Returns the full message length.
 *
 * # Safety
 * `buf` must point to `len` writable bytes (or be null for a pure length
 * query).
 */
uintptr_t fs_last_error(char *buf, uintptr_t len);

/**
 * Classifies whether the bifurcation is a critical transition under the
 * given slow-flow data.
 *
 * # Safety
 * `params` and `verdict` must be valid pointers.
 */
enum FsStatus fs_classify(enum FsBifurcation kind,
                          const struct FsSlowFlow *params,
                          enum FsTransition *verdict);

/**
 * Solves `A X + X Aᵀ + N = 0` for Hurwitz `A`; all matrices are row-major
 * `dim × dim`, `x_out` receives the symmetric solution.
 *
 * # Safety
 * `a`, `n` and `x_out` must each point to `dim * dim` doubles.
 */
enum FsStatus fs_solve_lyapunov(uintptr_t dim, const double *a, const double *n, double *x_out);

/**
 * Fold slow-manifold expansion `h_ε(y)` through `ε^order` (order ≤ 4).
 * `toward_fold != 0` selects the approach orientation.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum FsStatus fs_fold_manifold_expansion(double y,
                                         double eps,
                                         uint32_t order,
                                         int32_t toward_fold,
                                         double *out);

/**
 * Fold variance expansion `H_ε(y)` through `ε^order` (order ≤ 4); multiply
 * by `σ²` for the physical variance.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum FsStatus fs_fold_variance_expansion(double y,
                                         double eps,
                                         uint32_t order,
                                         int32_t toward_fold,
                                         double *out);

/**
 * Goldbeter-Koshland switch response `G(u, v, J, K)`.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum FsStatus fs_goldbeter_koshland(double u, double v, double j, double k, double *out);

/**
 * Builds a preset system by name (stommel, sis, activator-inhibitor,
 * bazykin, buckling). `noise_shape` applies to the buckling preset
 * (0 const, 1 sqrt-gap, 2 linear-gap).
 *
 * # Safety
 * `name` must be a NUL-terminated string and `out` a valid pointer; the
 * returned handle must be released with [`fs_system_free`].
 */
enum FsStatus fs_system_preset(const char *name, int32_t noise_shape, struct FsSystem **out);

/**
 * Releases a system handle.
 *
 * # Safety
 * `system` must be a handle returned by [`fs_system_preset`], not yet freed.
 */
void fs_system_free(struct FsSystem *system);

/**
 * Fast/slow dimensions of a system handle.
 *
 * # Safety
 * All pointers must be valid.
 */
enum FsStatus fs_system_dims(const struct FsSystem *system,
                             uintptr_t *fast_dim,
                             uintptr_t *slow_dim);

/**
 * Simulates a seed-reproducible ensemble. `x0`/`y0` may be null to use the
 * preset's default initial state.
 *
 * # Safety
 * `system` must be a live handle; `x0`/`y0`, when non-null, must point to
 * `fast_dim`/`slow_dim` doubles; the returned handle must be released with
 * [`fs_ensemble_free`].
 */
enum FsStatus fs_simulate_ensemble(const struct FsSystem *system,
                                   double dt,
                                   double s_end,
                                   uintptr_t record_stride,
                                   uint64_t master_seed,
                                   uintptr_t n_paths,
                                   const double *x0,
                                   const double *y0,
                                   struct FsEnsemble **out);

/**
 * Releases an ensemble handle.
 *
 * # Safety
 * `ens` must be a handle returned by [`fs_simulate_ensemble`], not yet freed.
 */
void fs_ensemble_free(struct FsEnsemble *ens);

/**
 * Grid length of an ensemble (0 for a null handle).
 *
 * # Safety
 * `ens` must be a live handle or null.
 */
uintptr_t fs_ensemble_len(const struct FsEnsemble *ens);

/**
 * Pointwise ensemble variance of fast component `component`; fills `y_out`
 * and `var_out` with `fs_ensemble_len` values each.
 *
 * # Safety
 * Buffers must hold `fs_ensemble_len(ens)` doubles.
 */
enum FsStatus fs_ensemble_variance(const struct FsEnsemble *ens,
                                   uintptr_t component,
                                   double *y_out,
                                   double *var_out);

/**
 * Writes an ensemble to CSV at `path`.
 *
 * # Safety
 * `ens` must be live; `path` must be NUL-terminated.
 */
enum FsStatus fs_ensemble_write_csv(const struct FsEnsemble *ens, const char *path);

/**
 * Least-squares scaling-law fit of `(y, v)` data.
 *
 * # Safety
 * `y` and `v` must point to `len` doubles; `fit` must be valid.
 */
enum FsStatus fs_fit_scaling(const double *y,
                             const double *v,
                             uintptr_t len,
                             enum FsScalingLaw law,
                             struct FsFit *fit);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FASTSLOW_H */
