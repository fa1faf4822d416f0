#ifndef FAULTID_H
#define FAULTID_H

/* Generated by cbindgen; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes for every fallible call.
 */
typedef enum FaultidStatus {
  FAULTID_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  FAULTID_STATUS_NULL_ARGUMENT = 1,
  /**
   * Arguments failed validation (bad dimension, range, or UTF-8).
   */
  FAULTID_STATUS_INVALID_ARGUMENT = 2,
  /**
   * The dynamic stiffness matrix was singular at the requested frequency.
   */
  FAULTID_STATUS_SINGULAR = 3,
  /**
   * JSON parsing or serialization failed.
   */
  FAULTID_STATUS_PARSE = 4,
  /**
   * The callee panicked; the handle state is unchanged.
   */
  FAULTID_STATUS_PANIC = 5,
} FaultidStatus;

/**
 * Scalar channel of the complex admittance change.
 */
typedef enum FaultidChannel {
  FAULTID_CHANNEL_MAGNITUDE = 0,
  FAULTID_CHANNEL_REAL = 1,
  FAULTID_CHANNEL_IMAGINARY = 2,
} FaultidChannel;

/**
 * Opaque structural model handle.
 */
typedef struct FaultidModel FaultidModel;

/**
 * Opaque fitted response-surface handle.
 */
typedef struct FaultidSurface FaultidSurface;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message describing the most recent failure on this thread. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *faultid_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *faultid_version(void);

/**
 * Build a uniform chain model. `coupling_segment` is 1-based.
 *
 * # Safety
 * `out` must point to writable storage for one pointer.
 */
enum FaultidStatus faultid_model_new_uniform(uintptr_t segments,
                                             double mass,
                                             double stiffness,
                                             double rayleigh_a,
                                             double rayleigh_b,
                                             uintptr_t coupling_segment,
                                             double coupling_strength,
                                             double k_c,
                                             struct FaultidModel **out);

/**
 * Deserialize a model from its JSON form (the same document the pipeline
 * writes as `model.json`).
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be writable.
 */
enum FaultidStatus faultid_model_from_json(const char *json, struct FaultidModel **out);

/**
 * Destroy a model handle; a null pointer is a no-op.
 *
 * # Safety
 * `model` must have been created by this library and not freed before.
 */
void faultid_model_free(struct FaultidModel *model);

/**
 * Number of segments, or 0 for a null handle.
 *
 * # Safety
 * `model` must be a live handle or null.
 */
uintptr_t faultid_model_segments(const struct FaultidModel *model);

/**
 * Complex admittance of the (possibly faulted) structure at `omega`.
 * A zero severity means the healthy structure regardless of `segment`.
 *
 * # Safety
 * `model` must be a live handle; `out_re`/`out_im` must be writable.
 */
enum FaultidStatus faultid_model_admittance(const struct FaultidModel *model,
                                            double omega,
                                            uintptr_t segment,
                                            double severity,
                                            double *out_re,
                                            double *out_im);

/**
 * Scalar admittance-change response for a single fault.
 *
 * # Safety
 * `model` must be a live handle; `out` must be writable.
 */
enum FaultidStatus faultid_model_admittance_change(const struct FaultidModel *model,
                                                   double omega,
                                                   uintptr_t segment,
                                                   double severity,
                                                   enum FaultidChannel channel,
                                                   double *out);

/**
 * Undamped natural frequencies (rad/s), ascending. Writes up to `capacity`
 * values into `out` and stores the full count in `out_len`; call with a null
 * `out` (capacity 0) to query the count.
 *
 * # Safety
 * `model` must be a live handle; `out` must have room for `capacity` values
 * when non-null; `out_len` must be writable.
 */
enum FaultidStatus faultid_model_natural_frequencies(const struct FaultidModel *model,
                                                     double *out,
                                                     uintptr_t capacity,
                                                     uintptr_t *out_len);

/**
 * Deserialize a fitted surface from its JSON form (a pipeline
 * `surfaces/surface_###.json` document).
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be writable.
 */
enum FaultidStatus faultid_surface_from_json(const char *json, struct FaultidSurface **out);

/**
 * Destroy a surface handle; a null pointer is a no-op.
 *
 * # Safety
 * `surface` must have been created by this library and not freed before.
 */
void faultid_surface_free(struct FaultidSurface *surface);

/**
 * Frequency index the surface calibrates, or 0 for a null handle.
 *
 * # Safety
 * `surface` must be a live handle or null.
 */
uintptr_t faultid_surface_frequency_index(const struct FaultidSurface *surface);

/**
 * Predictive mean and variance at (location, severity).
 *
 * # Safety
 * `surface` must be a live handle; `out_mean`/`out_variance` must be
 * writable.
 */
enum FaultidStatus faultid_surface_predict(const struct FaultidSurface *surface,
                                           double location,
                                           double severity,
                                           double *out_mean,
                                           double *out_variance);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FAULTID_H */
