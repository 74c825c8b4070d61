#ifndef CATBATTERY_H
#define CATBATTERY_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

// Result code of every fallible call.
typedef enum CbStatus {
  CB_STATUS_OK = 0,
  CB_STATUS_NULL_POINTER = 1,
  CB_STATUS_INVALID_ARGUMENT = 2,
  CB_STATUS_PHYSICS_ABORT = 3,
  CB_STATUS_SOLVER_FAILURE = 4,
  CB_STATUS_DEGENERATE_STEADY_STATE = 5,
  CB_STATUS_PANIC = 6,
} CbStatus;

// Model parameters.
typedef struct CbParams CbParams;

// Time series of a finished run.
typedef struct CbRun CbRun;

// Observables of one snapshot.
typedef struct CbRow {
  double t;
  double w_raw;
  double w_per_spin;
  double w_per_capacity;
  double e_batt;
  double e_cat;
  double e_cav;
  double trace_err;
  double min_eig;
  double purity;
  // `NaN` when the quasi-dark state is undefined.
  double dark_overlap;
} CbRow;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Copies the last error message of this thread into `buf` (NUL terminated,
// truncated to `len`). Returns the full message length excluding the NUL.
//
// # Safety
// `buf` must be null or point to `len` writable bytes.
uintptr_t cb_last_error(char *buf, uintptr_t len);

// Library version as a static NUL-terminated string.
const char *cb_version(void);

// Baseline catalyst-assisted parameters. Free with [`cb_params_free`].
struct CbParams *cb_params_default(void);

// # Safety
// `params` must be null or a handle from [`cb_params_default`] not yet freed.
void cb_params_free(struct CbParams *params);

// Sets a scalar parameter by field name (`"g"`, `"lambda"`, `"photon_cutoff"`, ...).
//
// # Safety
// `params` must be a live handle and `name` a NUL-terminated string.
enum CbStatus cb_params_set(struct CbParams *params, const char *name, double value);

// Reads a scalar parameter by field name.
//
// # Safety
// `params` must be a live handle, `name` a NUL-terminated string, `out` writable.
enum CbStatus cb_params_get(const struct CbParams *params, const char *name, double *out);

// Bose-Einstein occupation of the cavity mode.
//
// # Safety
// `out` must be writable.
enum CbStatus cb_thermal_occupation(double omega_c, double temperature, double k_b, double *out);

// Ergotropy of a `dim x dim` state against a Hamiltonian, both row-major with
// separate real and imaginary parts (`im` pointers may be null for real input).
//
// # Safety
// Non-null pointers must reference `dim * dim` readable values; `out` writable.
enum CbStatus cb_ergotropy(const double *rho_re,
                           const double *rho_im,
                           const double *h_re,
                           const double *h_im,
                           uintptr_t dim,
                           double *out);

// Propagates the default initial state with fixed-step RK4 (standard
// dissipator, battery Hamiltonian with exchange). Free the run with [`cb_run_free`].
//
// # Safety
// `params` must be a live handle and `out` writable.
enum CbStatus cb_simulate(const struct CbParams *params,
                          double dt,
                          uintptr_t snapshot_stride,
                          double t_end,
                          struct CbRun **out);

// Number of snapshots in a run (0 for null).
//
// # Safety
// `run` must be null or a live handle.
uintptr_t cb_run_len(const struct CbRun *run);

// Copies snapshot `index` into `out`.
//
// # Safety
// `run` must be a live handle and `out` writable.
enum CbStatus cb_run_row(const struct CbRun *run, uintptr_t index, struct CbRow *out);

// # Safety
// `run` must be null or a handle from [`cb_simulate`] not yet freed.
void cb_run_free(struct CbRun *run);

// Relaxation gap of the standard-mode Liouvillian.
//
// # Safety
// `params` must be a live handle and `out` writable.
enum CbStatus cb_spectral_gap(const struct CbParams *params, double *out);

// Ergotropy of the unique steady state (battery Hamiltonian with exchange).
//
// # Safety
// `params` must be a live handle and `out` writable.
enum CbStatus cb_steady_ergotropy(const struct CbParams *params, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CATBATTERY_H */
