#ifndef SWNET_H
#define SWNET_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes shared by every function.
 */
typedef enum SwnetStatus {
  SWNET_STATUS_OK = 0,
  SWNET_STATUS_NULL_POINTER = 1,
  SWNET_STATUS_INVALID_ARGUMENT = 2,
  SWNET_STATUS_SHAPE = 3,
  SWNET_STATUS_IO = 4,
  SWNET_STATUS_CHECKPOINT = 5,
  SWNET_STATUS_DATA = 6,
  SWNET_STATUS_CONFIG = 7,
  SWNET_STATUS_INTERNAL = 8,
} SwnetStatus;

/**
 * A trained network loaded from a checkpoint. Opaque to C.
 */
typedef struct SwnetModel SwnetModel;

/**
 * One row of the evaluation table.
 */
typedef struct SwnetMetricReport {
  double s_alpha;
  double f_w_beta;
  double mae;
  double e_adp;
  double e_mean;
  double e_max;
  double f_adp;
  double f_mean;
  double f_max;
} SwnetMetricReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the most recent failure on this thread, or NULL. The pointer
 * stays valid until the next call into this library on the same thread.
 */
const char *swnet_last_error(void);

/**
 * Loads a checkpoint file into a new model written to `*out`.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum SwnetStatus swnet_model_load(const char *path, struct SwnetModel **out);

/**
 * Releases a model; NULL is ignored.
 *
 * # Safety
 * `model` must come from [`swnet_model_load`] and not be used afterwards.
 */
void swnet_model_free(struct SwnetModel *model);

/**
 * Side length the network resamples inputs to.
 *
 * # Safety
 * `model` and `out` must be valid pointers.
 */
enum SwnetStatus swnet_model_input_side(const struct SwnetModel *model, size_t *out);

/**
 * Refined probability map for one image pair, written to `out` (`h × w`).
 *
 * # Safety
 * `rgb` must hold `3·h·w` values in `[0, 1]`, `nir` and `out` `h·w` each.
 */
enum SwnetStatus swnet_model_predict(const struct SwnetModel *model,
                                     const double *rgb,
                                     const double *nir,
                                     size_t height,
                                     size_t width,
                                     double *out);

/**
 * All nine metrics for one prediction (`h·w` values) against a 0/1 mask.
 *
 * # Safety
 * `pred` and `gt` must hold `h·w` values; `out` must be valid.
 */
enum SwnetStatus swnet_evaluate(const double *pred,
                                const uint8_t *gt,
                                size_t height,
                                size_t width,
                                struct SwnetMetricReport *out);

/**
 * Edge ground truth of a 0/1 mask with an odd window `k`, written to `out`.
 *
 * # Safety
 * `mask` and `out` must hold `h·w` bytes.
 */
enum SwnetStatus swnet_derive_edge_gt(const uint8_t *mask,
                                      size_t height,
                                      size_t width,
                                      size_t k,
                                      uint8_t *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SWNET_H */
