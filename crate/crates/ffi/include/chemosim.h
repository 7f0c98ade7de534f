#ifndef CHEMOSIM_H
#define CHEMOSIM_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum ChemosimStatus {
  CHEMOSIM_STATUS_OK = 0,
  CHEMOSIM_STATUS_NULL_POINTER = 1,
  CHEMOSIM_STATUS_INVALID_ARGUMENT = 2,
  CHEMOSIM_STATUS_CONFIG_ERROR = 3,
  CHEMOSIM_STATUS_SOLVER_ERROR = 4,
  CHEMOSIM_STATUS_IO_ERROR = 5,
  CHEMOSIM_STATUS_PANIC = 6,
} ChemosimStatus;

typedef enum ChemosimVerdict {
  CHEMOSIM_VERDICT_CONVERGED = 0,
  CHEMOSIM_VERDICT_BOUNDED = 1,
  CHEMOSIM_VERDICT_AGGREGATING = 2,
  CHEMOSIM_VERDICT_DT_COLLAPSE = 3,
  CHEMOSIM_VERDICT_INCONCLUSIVE = 4,
} ChemosimVerdict;

typedef enum ChemosimField {
  CHEMOSIM_FIELD_U = 0,
  CHEMOSIM_FIELD_V = 1,
  CHEMOSIM_FIELD_N = 2,
} ChemosimField;

/**
 * Parsed experiment configuration.
 */
typedef struct ChemosimConfig ChemosimConfig;

/**
 * A simulation advanced step by step from the caller.
 */
typedef struct ChemosimSim ChemosimSim;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. The pointer
 * stays valid until the next call into this library on the same thread.
 */
const char *chemosim_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *chemosim_version(void);

/**
 * Parses configuration text. On success `*out` owns a new handle that must
 * be released with [`chemosim_config_free`].
 *
 * # Safety
 * `text` must be a NUL-terminated string and `out` a valid pointer.
 */
enum ChemosimStatus chemosim_config_parse(const char *text, struct ChemosimConfig **out);

/**
 * Copies the bundled scenario `name` into a new config handle.
 *
 * # Safety
 * `name` must be a NUL-terminated string and `out` a valid pointer.
 */
enum ChemosimStatus chemosim_config_preset(const char *name, struct ChemosimConfig **out);

/**
 * Overrides one `section.key` entry, revalidating the whole config. The
 * handle is unchanged on failure.
 *
 * # Safety
 * `config` must come from this library; `path` and `value` must be
 * NUL-terminated strings.
 */
enum ChemosimStatus chemosim_config_set(struct ChemosimConfig *config,
                                        const char *path,
                                        const char *value);

/**
 * # Safety
 * `config` must come from this library and not be used afterwards.
 */
void chemosim_config_free(struct ChemosimConfig *config);

/**
 * Runs the full experiment into `out_dir` (or the config's own directory
 * when `out_dir` is null) and reports the verdict. A solver failure still
 * writes artifacts and returns `SOLVER_ERROR` with `*verdict` set to
 * `DT_COLLAPSE`.
 *
 * # Safety
 * `config` must come from this library, `out_dir` must be null or a
 * NUL-terminated string, and `verdict` a valid pointer.
 */
enum ChemosimStatus chemosim_run_experiment(const struct ChemosimConfig *config,
                                            const char *out_dir,
                                            enum ChemosimVerdict *verdict);

/**
 * Creates a simulation at the initial state described by `config`.
 *
 * # Safety
 * `config` must come from this library and `out` be a valid pointer.
 */
enum ChemosimStatus chemosim_sim_new(const struct ChemosimConfig *config, struct ChemosimSim **out);

/**
 * # Safety
 * `sim` must come from this library and not be used afterwards.
 */
void chemosim_sim_free(struct ChemosimSim *sim);

/**
 * Advances the simulation to time `t`. On failure the simulation keeps the
 * last accepted state.
 *
 * # Safety
 * `sim` must come from this library.
 */
enum ChemosimStatus chemosim_sim_advance(struct ChemosimSim *sim, double t);

/**
 * # Safety
 * `sim` must come from this library and `t` be a valid pointer.
 */
enum ChemosimStatus chemosim_sim_time(const struct ChemosimSim *sim, double *t);

/**
 * Cell counts per axis; `ny` is 1 for one-dimensional grids.
 *
 * # Safety
 * `sim` must come from this library; `nx` and `ny` must be valid pointers.
 */
enum ChemosimStatus chemosim_sim_shape(const struct ChemosimSim *sim, size_t *nx, size_t *ny);

/**
 * `∫(u + n)` of the current state.
 *
 * # Safety
 * `sim` must come from this library and `mass` be a valid pointer.
 */
enum ChemosimStatus chemosim_sim_total_mass(const struct ChemosimSim *sim, double *mass);

/**
 * Copies one field, row-major, into `buf`, which must hold exactly
 * `nx·ny` values.
 *
 * # Safety
 * `sim` must come from this library and `buf` point to `len` writable
 * doubles.
 */
enum ChemosimStatus chemosim_sim_copy_field(const struct ChemosimSim *sim,
                                            enum ChemosimField field,
                                            double *buf,
                                            size_t len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CHEMOSIM_H */
