/* C interface for the nematic liquid-crystal simulator.
 *
 * Opaque handles + integer status codes. Regenerate with cbindgen when
 * available:  cbindgen --config cbindgen.toml --crate nematic-ffi -o include/nematic.h
 * The committed copy is kept in sync with src/lib.rs by the crate's tests.
 */

#ifndef NEMATIC_H
#define NEMATIC_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

/* Status codes returned by every fallible call. */
typedef enum NematicStatus {
  NEMATIC_STATUS_OK = 0,
  NEMATIC_STATUS_NULL_ARGUMENT = 1,
  NEMATIC_STATUS_CONFIG_ERROR = 2,
  NEMATIC_STATUS_BLOWUP = 3,
  NEMATIC_STATUS_IO_ERROR = 4,
  NEMATIC_STATUS_SOLVER_ERROR = 5,
  NEMATIC_STATUS_INVALID_UTF8 = 6,
  NEMATIC_STATUS_PANIC = 7,
} NematicStatus;

/* Per-step scalar diagnostics, mirroring one trajectory row. */
typedef struct NematicReport {
  double t;
  double dt;
  double total_energy;
  double kinetic;
  double elastic;
  double bulk;
  double dissipation;
  double budget_defect;
  double max_abs_d;
  double grad_u_norm;
  double residual_norm;
} NematicReport;

/* Summary of a stationary solve. classification: 0 constant unit, 1 zero,
 * 2 other. kernel_dim < 0 means the kernel probe was skipped. */
typedef struct NematicStationarySummary {
  double residual_norm;
  double energy;
  int32_t classification;
  int32_t converged;
  int64_t kernel_dim;
  double smallest_nonzero_eigenvalue;
} NematicStationarySummary;

/* Opaque simulation handle. */
typedef struct NematicSim NematicSim;

/* Library version as a static NUL-terminated string; never freed. */
const char *nematic_version(void);

/* Copies the calling thread's last error message into buf (truncated, always
 * NUL-terminated) and returns the full message length. buf may be NULL to
 * query the length. */
size_t nematic_last_error(char *buf, size_t len);

/* Creates a simulation from a config file. On success writes the handle to
 * out; free it with nematic_sim_free. */
NematicStatus nematic_sim_new(const char *config_path, NematicSim **out);

/* Advances n_steps CFL-limited steps from the current state; fills report
 * (when non-NULL) with the latest diagnostics. */
NematicStatus nematic_sim_step(NematicSim *sim, uint64_t n_steps, NematicReport *report);

/* Integrates the configured schedule from the current state. The handle keeps
 * the trajectory for nematic_sim_write_artifacts. */
NematicStatus nematic_sim_run(NematicSim *sim);

/* Reports on the current state (budget defect 0 by definition). */
NematicStatus nematic_sim_report(const NematicSim *sim, NematicReport *report);

/* Writes the artifacts of the last completed nematic_sim_run to dir. */
NematicStatus nematic_sim_write_artifacts(const NematicSim *sim, const char *dir);

/* Frees a handle; accepts NULL. */
void nematic_sim_free(NematicSim *sim);

/* Solves the stationary problem described by a config file and fills summary;
 * artifacts go to out_dir when non-NULL. */
NematicStatus nematic_stationary_solve(const char *config_path,
                                       const char *out_dir,
                                       NematicStationarySummary *summary);

/* Runs the theorem analysis over a completed run directory (equivalent to the
 * analyze subcommand, quiet). */
NematicStatus nematic_analyze(const char *run_dir);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* NEMATIC_H */
