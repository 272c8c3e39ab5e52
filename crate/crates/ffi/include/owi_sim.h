#ifndef OWI_SIM_H
#define OWI_SIM_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every call.
 */
typedef enum OwiStatus {
  OWI_STATUS_OK = 0,
  OWI_STATUS_NULL_POINTER = 1,
  OWI_STATUS_INVALID_UTF8 = 2,
  OWI_STATUS_UNKNOWN_FIELD = 3,
  OWI_STATUS_INVALID_PARAM = 4,
  OWI_STATUS_CONFIG = 5,
  /**
   * The integrator could not reach the end time.
   */
  OWI_STATUS_INTEGRATION_FAILED = 6,
  /**
   * The steady-state system is singular or badly conditioned.
   */
  OWI_STATUS_DEGENERATE = 7,
  /**
   * The request is not defined for the chosen generator mode.
   */
  OWI_STATUS_UNSUPPORTED = 8,
  OWI_STATUS_SPECTRUM_FAILED = 9,
  OWI_STATUS_INDEX_OUT_OF_RANGE = 10,
  OWI_STATUS_PANIC = 11,
} OwiStatus;

/**
 * Generator used for time evolution.
 */
typedef enum OwiMode {
  OWI_MODE_TRACE_CONSERVING = 0,
  OWI_MODE_LITERAL = 1,
} OwiMode;

/**
 * Opaque computed spectrum.
 */
typedef struct OwiSpectrum OwiSpectrum;

/**
 * Opaque model parameters.
 */
typedef struct OwiSystem OwiSystem;

/**
 * Cell geometry in SI units.
 */
typedef struct OwiCell {
  double length;
  double width;
  double thickness;
  double temperature;
  double atom_mass;
} OwiCell;

/**
 * Buffer gas in SI units.
 */
typedef struct OwiBuffer {
  double number_density;
  double sigma1;
  double sigma2;
  double molecule_mass;
} OwiBuffer;

/**
 * Rates and speeds in rad/s and m/s.
 */
typedef struct OwiRates {
  double w12;
  double r34;
  double r43;
  double v_bar;
  double v_av;
} OwiRates;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *owi_version(void);

/**
 * Message of the last failed call on this thread, or "" after a success.
 * Valid until the next call on the same thread.
 */
const char *owi_last_error_message(void);

/**
 * Parses a config document (the same text the command-line tool reads) and
 * returns its model parameters.
 *
 * # Safety
 * `text` must be a NUL-terminated string and `out` a writable pointer.
 */
enum OwiStatus owi_system_from_config(const char *text, struct OwiSystem **out);

/**
 * Parameters of a named scenario such as "fig2" or "rb85_cell".
 *
 * # Safety
 * `name` must be a NUL-terminated string and `out` a writable pointer.
 */
enum OwiStatus owi_system_from_preset(const char *name, struct OwiSystem **out);

/**
 * Releases a handle. Null is ignored.
 *
 * # Safety
 * `system` must come from this library and not be used afterwards.
 */
void owi_system_free(struct OwiSystem *system);

/**
 * Sets a parameter by name (SI units, angular frequencies in rad/s).
 * The value is checked when the parameters are next used.
 *
 * # Safety
 * `system` must be a live handle and `name` a NUL-terminated string.
 */
enum OwiStatus owi_system_set(struct OwiSystem *system, const char *name, double value);

/**
 * Reads a parameter by name.
 *
 * # Safety
 * `system` must be a live handle, `name` a NUL-terminated string and `out`
 * writable.
 */
enum OwiStatus owi_system_get(const struct OwiSystem *system, const char *name, double *out);

/**
 * Stationary density matrix, written row-major into two arrays of 16.
 *
 * # Safety
 * `system` must be a live handle; `re` and `im` must hold 16 doubles each.
 */
enum OwiStatus owi_steady_state(const struct OwiSystem *system, double *re, double *im);

/**
 * Evolves diag(1/2, 1/2, 0, 0) for `t_end` seconds and writes the final
 * density matrix row-major.
 *
 * # Safety
 * `system` must be a live handle; `re` and `im` must hold 16 doubles each.
 */
enum OwiStatus owi_evolve_final(const struct OwiSystem *system,
                                enum OwiMode mode,
                                double t_end,
                                double *re,
                                double *im);

/**
 * Wall relaxation and buffer-gas transfer rates for a cell.
 *
 * # Safety
 * `cell`, `buffer` and `out` must be valid pointers.
 */
enum OwiStatus owi_rates(const struct OwiCell *cell,
                         const struct OwiBuffer *buffer,
                         struct OwiRates *out);

/**
 * Doppler-averaged spectrum on `points` detunings evenly spaced from
 * `start` to `end` (rad/s). `jobs` = 0 uses every core.
 *
 * # Safety
 * `system` must be a live handle and `out` writable.
 */
enum OwiStatus owi_spectrum_compute(const struct OwiSystem *system,
                                    double number_density,
                                    double path_length,
                                    double start,
                                    double end,
                                    size_t points,
                                    size_t jobs,
                                    struct OwiSpectrum **out);

/**
 * Number of grid points in a spectrum; 0 for null.
 *
 * # Safety
 * `spectrum` must be null or a live handle.
 */
size_t owi_spectrum_len(const struct OwiSpectrum *spectrum);

/**
 * Detuning (rad/s), gain and transmission at grid index `index`.
 *
 * # Safety
 * `spectrum` must be a live handle and the outputs writable.
 */
enum OwiStatus owi_spectrum_get(const struct OwiSpectrum *spectrum,
                                size_t index,
                                double *detuning,
                                double *gain,
                                double *transmission);

/**
 * Releases a spectrum. Null is ignored.
 *
 * # Safety
 * `spectrum` must come from this library and not be used afterwards.
 */
void owi_spectrum_free(struct OwiSpectrum *spectrum);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* OWI_SIM_H */
