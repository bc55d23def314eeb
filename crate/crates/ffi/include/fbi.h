#ifndef FBI_H
#define FBI_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result codes of the C API.
typedef enum FbiStatus {
  FBI_STATUS_OK = 0,
  FBI_STATUS_NULL_POINTER = 1,
  FBI_STATUS_INVALID_UTF8 = 2,
  FBI_STATUS_CONFIG = 3,
  FBI_STATUS_ELEMENT = 4,
  FBI_STATUS_CONVERGENCE = 5,
  FBI_STATUS_LINEAR_SOLVER = 6,
  FBI_STATUS_COUPLING = 7,
  FBI_STATUS_MESH_FILE = 8,
  FBI_STATUS_IO = 9,
  FBI_STATUS_FINISHED = 10,
  FBI_STATUS_BUFFER_TOO_SMALL = 11,
  FBI_STATUS_OUTSIDE_MESH = 12,
  FBI_STATUS_PANIC = 13,
} FbiStatus;

// Opaque simulation handle.
typedef struct FbiSimulation FbiSimulation;

// Diagnostics of one time step.
typedef struct FbiStepReport {
  double time;
  size_t outer_iters;
  double violation_unscaled;
  double violation_scaled;
  double f_f_norm;
  double f_b_norm;
  double omega_last;
  size_t fluid_newton;
  size_t beam_newton;
  double slip_max;
} FbiStepReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread; empty after a success.
// The pointer stays valid until the next API call on the same thread.
const char *fbi_last_error_message(void);

// Library version as a static NUL-terminated string.
const char *fbi_version(void);

// Creates a simulation from a config file path or preset name plus
// `n_overrides` `key=value` strings.
//
// # Safety
// `config` must be a NUL-terminated string, `overrides` an array of
// `n_overrides` NUL-terminated strings (may be null when `n_overrides` is 0),
// and `out` a valid pointer.
enum FbiStatus fbi_simulation_new(const char *config,
                                  const char *const *overrides,
                                  size_t n_overrides,
                                  struct FbiSimulation **out);

// Releases a simulation; null is ignored.
//
// # Safety
// `sim` must be null or a handle from [`fbi_simulation_new`] not yet freed.
void fbi_simulation_free(struct FbiSimulation *sim);

// Advances one time step; `report` may be null.
//
// # Safety
// `sim` must be a live handle, `report` null or valid.
enum FbiStatus fbi_simulation_step(struct FbiSimulation *sim, struct FbiStepReport *report);

// Runs the remaining steps; the last step's report goes to `report` if non-null.
//
// # Safety
// `sim` must be a live handle, `report` null or valid.
enum FbiStatus fbi_simulation_run(struct FbiSimulation *sim, struct FbiStepReport *report);

// Current simulation time, or NaN for a null handle.
//
// # Safety
// `sim` must be null or a live handle.
double fbi_simulation_time(const struct FbiSimulation *sim);

// Steps taken so far (0 for a null handle).
//
// # Safety
// `sim` must be null or a live handle.
size_t fbi_simulation_steps_done(const struct FbiSimulation *sim);

// Total number of steps to `time.t_end` (0 for a null handle).
//
// # Safety
// `sim` must be null or a live handle.
size_t fbi_simulation_num_steps(const struct FbiSimulation *sim);

// Number of beam nodes (0 for a null handle).
//
// # Safety
// `sim` must be null or a live handle.
size_t fbi_simulation_num_beam_nodes(const struct FbiSimulation *sim);

// Number of fluid mesh nodes (0 for a null handle).
//
// # Safety
// `sim` must be null or a live handle.
size_t fbi_simulation_num_fluid_nodes(const struct FbiSimulation *sim);

// Writes the beam node positions as `x0 y0 z0 x1 ...` into `buf` (capacity `len`, at least 3 per node).
//
// # Safety
// `sim` must be a live handle and `buf` valid for `len` doubles.
enum FbiStatus fbi_simulation_beam_positions(const struct FbiSimulation *sim,
                                             double *buf,
                                             size_t len);

// Writes the beam node velocities, laid out like [`fbi_simulation_beam_positions`].
//
// # Safety
// `sim` must be a live handle and `buf` valid for `len` doubles.
enum FbiStatus fbi_simulation_beam_velocities(const struct FbiSimulation *sim,
                                              double *buf,
                                              size_t len);

// Writes the fluid node velocities, 3 per node in node order.
//
// # Safety
// `sim` must be a live handle and `buf` valid for `len` doubles.
enum FbiStatus fbi_simulation_fluid_velocities(const struct FbiSimulation *sim,
                                               double *buf,
                                               size_t len);

// Samples the fluid velocity at point `x` (3 doubles) into `out` (3 doubles).
//
// # Safety
// `sim` must be a live handle, `x` and `out` valid for 3 doubles each.
enum FbiStatus fbi_simulation_sample_velocity(const struct FbiSimulation *sim,
                                              const double *x,
                                              double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FBI_H */
