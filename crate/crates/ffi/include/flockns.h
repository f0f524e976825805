#ifndef FLOCKNS_H
#define FLOCKNS_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible call.
 */
typedef enum FlnStatus {
  FLN_STATUS_OK = 0,
  FLN_STATUS_NULL_POINTER = 1,
  FLN_STATUS_CONFIG = 2,
  FLN_STATUS_NUMERICAL = 3,
  FLN_STATUS_IO = 4,
  FLN_STATUS_BUFFER_TOO_SMALL = 5,
  FLN_STATUS_PANIC = 6,
} FlnStatus;

/**
 * Parsed, validated configuration.
 */
typedef struct FlnConfig FlnConfig;

/**
 * A coupled simulation with its diagnostics.
 */
typedef struct FlnSim FlnSim;

/**
 * Latest diagnostics, in the column order of the time-series CSV.
 */
typedef struct FlnDiagnostics {
  double t;
  double mass_f;
  double mass_rho;
  double energy;
  double viscous_dissipation_cum;
  double friction_cum;
  double alignment_cum;
  double energy_residual;
  double support_radius;
  double support_ceiling;
  double f_l2w;
  double f_h1w;
  double rho_linf;
  double u_linf;
  double grad_u_linf;
  double blowup_monitor;
} FlnDiagnostics;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version, a static NUL-terminated string.
 */
const char *fln_version(void);

/**
 * Message of the last failed call on this thread ("" if none). Valid until
 * the next failing call on the same thread.
 */
const char *fln_last_error(void);

/**
 * Parses `key = value` configuration text.
 *
 * # Safety
 * `text` must be a NUL-terminated string and `out` a writable pointer.
 */
enum FlnStatus fln_config_parse(const char *text, struct FlnConfig **out);

/**
 * # Safety
 * `cfg` must be null or a handle from [`fln_config_parse`] not yet freed.
 */
void fln_config_free(struct FlnConfig *cfg);

/**
 * Builds the initial state described by `cfg`.
 *
 * # Safety
 * `cfg` must be a live config handle and `out` a writable pointer.
 */
enum FlnStatus fln_sim_new(const struct FlnConfig *cfg, struct FlnSim **out);

/**
 * Advances one CFL step; the step taken is written to `dt_out` if non-null.
 *
 * # Safety
 * `sim` must be a live handle; `dt_out` null or writable.
 */
enum FlnStatus fln_sim_step(struct FlnSim *sim, double *dt_out);

/**
 * Steps until the time reaches `t_end`, shortening the final step.
 *
 * # Safety
 * `sim` must be a live handle.
 */
enum FlnStatus fln_sim_run_until(struct FlnSim *sim, double t_end);

/**
 * Current time, or NaN for a null handle.
 *
 * # Safety
 * `sim` must be null or a live handle.
 */
double fln_sim_time(const struct FlnSim *sim);

/**
 * Number of spatial cells (length of the density array).
 *
 * # Safety
 * `sim` must be null or a live handle.
 */
size_t fln_sim_cells(const struct FlnSim *sim);

/**
 * Diagnostics of the current state.
 *
 * # Safety
 * `sim` must be a live handle and `out` writable.
 */
enum FlnStatus fln_sim_diagnostics(const struct FlnSim *sim, struct FlnDiagnostics *out);

/**
 * Copies the fluid density into `buf` (capacity `len`).
 *
 * # Safety
 * `sim` must be a live handle and `buf` valid for `len` writes.
 */
enum FlnStatus fln_sim_copy_density(const struct FlnSim *sim, double *buf, size_t len);

/**
 * Writes a binary snapshot of the current state.
 *
 * # Safety
 * `sim` must be a live handle and `path` a NUL-terminated string.
 */
enum FlnStatus fln_sim_write_snapshot(const struct FlnSim *sim, const char *path);

/**
 * # Safety
 * `sim` must be null or a handle from [`fln_sim_new`] not yet freed.
 */
void fln_sim_free(struct FlnSim *sim);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FLOCKNS_H */
