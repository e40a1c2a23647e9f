#ifndef GRIDPLACE_H
#define GRIDPLACE_H

/* Generated by cbindgen from the gridplace-ffi crate; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status of an ABI call. Anything other than `Ok` leaves a thread-local
 * message retrievable with [`gp_last_error_message`].
 */
typedef enum GpStatus {
  /**
   * The call succeeded.
   */
  GP_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  GP_STATUS_NULL_ARGUMENT = 1,
  /**
   * A string argument was not valid UTF-8.
   */
  GP_STATUS_INVALID_UTF8 = 2,
  /**
   * The input was rejected: malformed JSON, inconsistent grid data, an
   * out-of-range index, or a mismatched buffer length.
   */
  GP_STATUS_INVALID_INPUT = 3,
  /**
   * The computation failed numerically (no power-flow convergence,
   * degenerate spectrum, unstable integration step, ...).
   */
  GP_STATUS_NUMERICAL = 4,
  /**
   * An output buffer was too small for the requested string.
   */
  GP_STATUS_BUFFER_TOO_SMALL = 5,
  /**
   * An internal invariant was violated; the library aborted the call.
   */
  GP_STATUS_PANIC = 6,
} GpStatus;

/**
 * Which budget a placement call should allocate.
 */
typedef enum GpTarget {
  /**
   * ±1 inertia deviations only.
   */
  GP_TARGET_INERTIA = 0,
  /**
   * ±1 damping-ratio deviations only.
   */
  GP_TARGET_DAMPING = 1,
  /**
   * Both budgets under the decoupling constraint Σ r·a = 0.
   */
  GP_TARGET_COMBINED = 2,
} GpTarget;

/**
 * Opaque handle to a validated grid with its operating point solved and its
 * network Laplacian assembled.
 */
typedef struct GpGrid GpGrid;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a NUL-terminated static string.
 */
const char *gp_version(void);

/**
 * Copies the message of the most recent failure on this thread into `buf`
 * and NUL-terminates it, truncating if necessary.
 *
 * Returns the size the full message needs, including the terminator; call
 * with a null `buf` (or `cap` 0) to query the size alone. The message is
 * empty after a successful call.
 *
 * # Safety
 *
 * `buf`, when non-null, must point to at least `cap` writable bytes.
 */
size_t gp_last_error_message(char *buf, size_t cap);

/**
 * Parses a JSON grid description, validates it, solves the lossless power
 * flow and assembles the network Laplacian.
 *
 * On success writes a handle to `*out`; release it with [`gp_grid_free`].
 *
 * # Safety
 *
 * `json` must be a NUL-terminated string valid for reads and `out` a valid
 * pointer to a `GpGrid*` slot.
 */
enum GpStatus gp_grid_load_json(const char *json, struct GpGrid **out);

/**
 * Builds a copy of the grid with inertia, damping and net injections
 * replaced by their bus averages (totals conserved) and its operating point
 * re-solved. The susceptibility and placement calls require such a uniform
 * baseline.
 *
 * # Safety
 *
 * `grid` must be a live handle from this library and `out` a valid pointer
 * to a `GpGrid*` slot.
 */
enum GpStatus gp_grid_homogenize(const struct GpGrid *grid, struct GpGrid **out);

/**
 * Releases a handle returned by [`gp_grid_load_json`] or
 * [`gp_grid_homogenize`]. Passing null is a no-op.
 *
 * # Safety
 *
 * `grid` must be null or a handle from this library that has not already
 * been freed; the handle must not be used afterwards.
 */
void gp_grid_free(struct GpGrid *grid);

/**
 * Writes the number of buses to `*out`.
 *
 * # Safety
 *
 * `grid` must be a live handle and `out` a valid pointer.
 */
enum GpStatus gp_grid_bus_count(const struct GpGrid *grid, size_t *out);

/**
 * Copies the NUL-terminated id of bus `index` into `buf`.
 *
 * Bus indices are the grid's declaration order, shared by every array in
 * this ABI. Fails with `BufferTooSmall` (and reports the required size in
 * the error message) if `cap` bytes cannot hold the id plus terminator.
 *
 * # Safety
 *
 * `grid` must be a live handle and `buf` must point to at least `cap`
 * writable bytes.
 */
enum GpStatus gp_grid_bus_id(const struct GpGrid *grid, size_t index, char *buf, size_t cap);

/**
 * Closed-form frequency-disturbance measure for an abrupt power loss
 * `delta_p` at bus `bus`, from the spectrum of the inertia-weighted
 * Laplacian.
 *
 * A `gamma` that is zero, negative or NaN means "use the grid's own damping
 * ratio", which must then be the same on every bus.
 *
 * # Safety
 *
 * `grid` must be a live handle and `out` a valid pointer.
 */
enum GpStatus gp_measure_closed_form(const struct GpGrid *grid,
                                     size_t bus,
                                     double gamma,
                                     double delta_p,
                                     double *out);

/**
 * Reference measure from direct integration of the swing dynamics with the
 * grid's own inertia and damping vectors. `dt` ≤ 0 picks a stable default;
 * the horizon grows until the energy tail is negligible.
 *
 * # Safety
 *
 * `grid` must be a live handle and `out` a valid pointer.
 */
enum GpStatus gp_measure_oracle(const struct GpGrid *grid,
                                size_t bus,
                                double delta_p,
                                double dt,
                                double *out);

/**
 * First-order susceptibilities of the measure for a fault of `delta_p` at
 * `fault_bus`: `rho[i]` is the sensitivity to a relative inertia deviation
 * of amplitude `mu` at bus `i`, `alpha[i]` to a relative damping-ratio
 * deviation of amplitude `g`. Both arrays receive one entry per bus and
 * `len` must equal the bus count.
 *
 * Requires a uniform-inertia baseline (see [`gp_grid_homogenize`]).
 *
 * # Safety
 *
 * `grid` must be a live handle; `rho` and `alpha` must point to `len`
 * writable doubles each.
 */
enum GpStatus gp_susceptibilities(const struct GpGrid *grid,
                                  size_t fault_bus,
                                  double gamma,
                                  double delta_p,
                                  double mu,
                                  double g,
                                  bool include_zero_mode,
                                  double *rho,
                                  double *alpha,
                                  size_t len);

/**
 * Optimal ±1 placement of the selected budget(s) against vulnerability to
 * faults weighted by `eta` and sized by `delta_p` (per-bus arrays of `len`
 * doubles; either may be null for "1.0 everywhere").
 *
 * Writes sign vectors to `r` (inertia) and `a` (damping ratio); the vector
 * of an unselected budget is zeroed. Requires a uniform-inertia baseline.
 *
 * # Safety
 *
 * `grid` must be a live handle; `eta` and `delta_p`, when non-null, must
 * point to `len` readable doubles; `r` and `a` must point to `len` writable
 * bytes each.
 */
enum GpStatus gp_optimize(const struct GpGrid *grid,
                          enum GpTarget target,
                          double gamma,
                          double mu,
                          double g,
                          const double *eta,
                          const double *delta_p,
                          int8_t *r,
                          int8_t *a,
                          size_t len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GRIDPLACE_H */
