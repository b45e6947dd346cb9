#ifndef ROLLKIT_H
#define ROLLKIT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible call.
 */
typedef enum RkStatus {
  RK_STATUS_OK = 0,
  /**
   * The call succeeded and its verdict is negative.
   */
  RK_STATUS_REJECT = 1,
  RK_STATUS_INVALID_INPUT = 2,
  RK_STATUS_NUMERIC = 3,
  RK_STATUS_NULL_POINTER = 4,
  RK_STATUS_PANIC = 5,
} RkStatus;

/**
 * A sampled curve in chart coordinates.
 */
typedef struct RkCurve RkCurve;

/**
 * A manifold model.
 */
typedef struct RkManifold RkManifold;

/**
 * A rolling trajectory.
 */
typedef struct RkTrajectory RkTrajectory;

/**
 * Residuals of the rolling axioms.
 */
typedef struct RkRollingReport {
  double no_slip;
  double no_twist;
  double so_drift;
  double min_det;
  bool complete;
} RkRollingReport;

/**
 * Verdict of the general existence test.
 */
typedef struct RkVerdict {
  bool accepted;
  double residual;
  double tolerance;
  bool orientation_flag;
  bool degenerate;
} RkVerdict;

/**
 * Loop diagnostics on a surface.
 */
typedef struct RkLoopReport {
  bool closed;
  bool config_loop;
  bool c1_loop;
  double theta;
  double alpha;
  double closure_re;
  double closure_im;
  double length;
} RkLoopReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the last error message of this thread into `buf` (NUL-terminated,
 * truncated to `len`). Returns the full message length in bytes.
 *
 * # Safety
 * `buf` must be null or point to `len` writable bytes.
 */
size_t rk_last_error(char *buf, size_t len);

/**
 * Library version as a static NUL-terminated string.
 */
const char *rk_version(void);

/**
 * Creates a manifold from a builtin spec (`sphere_stereo:2`, `su2`, ...) or a spec file path.
 *
 * # Safety
 * `spec` must be a NUL-terminated string; `out` must be writable.
 */
enum RkStatus rk_manifold_new(const char *spec, struct RkManifold **out);

/**
 * # Safety
 * `m` must be null or a handle from [`rk_manifold_new`] not yet freed.
 */
void rk_manifold_free(struct RkManifold *m);

/**
 * Intrinsic dimension, or 0 for a null handle.
 *
 * # Safety
 * `m` must be null or a live handle.
 */
size_t rk_manifold_dim(const struct RkManifold *m);

/**
 * Number of chart coordinates, or 0 for a null handle.
 *
 * # Safety
 * `m` must be null or a live handle.
 */
size_t rk_manifold_coord_dim(const struct RkManifold *m);

/**
 * Creates a curve from a builtin spec (`circle:r=1`) or a CSV path.
 *
 * # Safety
 * `spec` must be a NUL-terminated string; `out` must be writable.
 */
enum RkStatus rk_curve_new(const char *spec, struct RkCurve **out);

/**
 * Creates a curve from `samples` points. `xi` and `dxi` hold `samples × coord_dim`
 * values row by row; a null `dxi` means derivatives are estimated by finite differences.
 *
 * # Safety
 * `t` must hold `samples` values, `xi` (and `dxi` if non-null) `samples * coord_dim`.
 */
enum RkStatus rk_curve_from_samples(size_t samples,
                                    size_t coord_dim,
                                    const double *t,
                                    const double *xi,
                                    const double *dxi,
                                    struct RkCurve **out);

/**
 * # Safety
 * `c` must be null or a live curve handle.
 */
void rk_curve_free(struct RkCurve *c);

/**
 * Number of samples, or 0 for a null handle.
 *
 * # Safety
 * `c` must be null or a live handle.
 */
size_t rk_curve_len(const struct RkCurve *c);

/**
 * Copies sample `i` of the curve into `out` (`coord_dim` values).
 *
 * # Safety
 * `out` must point to `len` writable doubles.
 */
enum RkStatus rk_curve_point(const struct RkCurve *c, size_t i, double *out, size_t len);

/**
 * Anti-develops `x` into ℝⁿ with the identity initial frame; `h <= 0` selects the default grid.
 *
 * # Safety
 * Handles must be live; `out` must be writable.
 */
enum RkStatus rk_antidevelop(const struct RkManifold *m,
                             const struct RkCurve *x,
                             double h,
                             struct RkCurve **out);

/**
 * Rolls `mh` along `x` on `m`. `q0` (n×n, row-major) and `xh0` (coord_dim of `mh`)
 * may be null for the identity and the chart's default base point. A chart exit
 * still yields a trajectory, with status [`RkStatus::Numeric`].
 *
 * # Safety
 * Handles must be live; non-null arrays must have the stated lengths.
 */
enum RkStatus rk_roll(const struct RkManifold *m,
                      const struct RkManifold *mh,
                      const struct RkCurve *x,
                      const double *q0,
                      const double *xh0,
                      double h,
                      struct RkTrajectory **out);

/**
 * # Safety
 * `t` must be null or a live trajectory handle.
 */
void rk_trajectory_free(struct RkTrajectory *t);

/**
 * Number of samples, or 0 for a null handle.
 *
 * # Safety
 * `t` must be null or a live handle.
 */
size_t rk_trajectory_len(const struct RkTrajectory *t);

/**
 * Copies time, contact point on M̂ and the row-major isometry `q` of sample `i`.
 * `xi_hat` needs the coordinate count of M̂, `q` needs n² values; either may be null.
 *
 * # Safety
 * `t_out` must be writable or null; buffers must hold the stated lengths.
 */
enum RkStatus rk_trajectory_sample(const struct RkTrajectory *t,
                                   size_t i,
                                   double *t_out,
                                   double *xi_hat,
                                   size_t xi_hat_len,
                                   double *q,
                                   size_t q_len);

/**
 * Measures the rolling axioms on a trajectory. Returns [`RkStatus::Reject`]
 * when a residual exceeds `tol`.
 *
 * # Safety
 * Handles must be live; `out` must be writable.
 */
enum RkStatus rk_verify(const struct RkManifold *m,
                        const struct RkManifold *mh,
                        const struct RkTrajectory *t,
                        size_t probes,
                        double tol,
                        struct RkRollingReport *out);

/**
 * General existence test. `iota` (n² values, row-major) receives the fitted
 * isometry when non-null. Returns [`RkStatus::Reject`] for a negative verdict.
 *
 * # Safety
 * Handles must be live; `out` must be writable; `iota` must hold `iota_len` doubles.
 */
enum RkStatus rk_exists_general(const struct RkManifold *m,
                                const struct RkManifold *mh,
                                const struct RkCurve *x,
                                const struct RkCurve *xh,
                                double tol,
                                double h,
                                struct RkVerdict *out,
                                double *iota,
                                size_t iota_len);

/**
 * Loop diagnostics of a curve on a surface. Returns [`RkStatus::Reject`]
 * when the rolling along the curve is not a loop.
 *
 * # Safety
 * Handles must be live; `out` must be writable.
 */
enum RkStatus rk_loop_check(const struct RkManifold *m,
                            const struct RkCurve *x,
                            double tol,
                            double h,
                            struct RkLoopReport *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ROLLKIT_H */
