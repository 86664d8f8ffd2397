#ifndef PRISK_H
#define PRISK_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes of every fallible function.
 */
typedef enum PriskStatus {
  PRISK_STATUS_OK = 0,
  PRISK_STATUS_NULL_ARGUMENT = 1,
  PRISK_STATUS_INVALID_UTF8 = 2,
  PRISK_STATUS_IO = 3,
  PRISK_STATUS_PARSE = 4,
  PRISK_STATUS_VALIDATION = 5,
  PRISK_STATUS_CONFIG = 6,
  PRISK_STATUS_DATA = 7,
  PRISK_STATUS_SHAPE = 8,
  PRISK_STATUS_FORMAT = 9,
  PRISK_STATUS_RANGE = 10,
  PRISK_STATUS_BUFFER_TOO_SMALL = 11,
  PRISK_STATUS_PANIC = 99,
} PriskStatus;

/**
 * A trained risk model.
 */
typedef struct PriskModel PriskModel;

/**
 * A loaded or generated scenario log.
 */
typedef struct PriskScenario PriskScenario;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread; empty after a success.
 * The pointer stays valid until the next call on the same thread.
 */
const char *prisk_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *prisk_version(void);

/**
 * Number of risk levels (5).
 */
size_t prisk_num_levels(void);

/**
 * Number of risk features per frame (6).
 */
size_t prisk_feature_width(void);

/**
 * Loads a scenario file.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum PriskStatus prisk_scenario_load(const char *path, struct PriskScenario **out);

/**
 * Generates a synthetic scenario from a template name with default parameters.
 *
 * # Safety
 * `template` must be a NUL-terminated string and `out` a valid pointer.
 */
enum PriskStatus prisk_scenario_generate(const char *template_,
                                         uint64_t seed,
                                         struct PriskScenario **out);

/**
 * Frame count of a scenario; 0 for a null handle.
 *
 * # Safety
 * `scenario` must be null or a live handle.
 */
size_t prisk_scenario_frame_count(const struct PriskScenario *scenario);

/**
 * Releases a scenario handle. Null is ignored.
 *
 * # Safety
 * `scenario` must be null or a handle not yet freed.
 */
void prisk_scenario_free(struct PriskScenario *scenario);

/**
 * Writes the six risk features of every frame (row-major, frames × 6) with
 * the default PODAR configuration.
 *
 * `rows_out` always receives the frame count. Pass a null `buffer` to query
 * it; a buffer shorter than `frames × 6` yields `BUFFER_TOO_SMALL`.
 *
 * # Safety
 * `scenario` must be a live handle, `buffer` null or valid for `capacity`
 * writes, and `rows_out` a valid pointer.
 */
enum PriskStatus prisk_scenario_features(const struct PriskScenario *scenario,
                                         double *buffer,
                                         size_t capacity,
                                         size_t *rows_out);

/**
 * Loads a model checkpoint.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum PriskStatus prisk_model_load(const char *path, struct PriskModel **out);

/**
 * Window length in frames; 0 for a null handle.
 *
 * # Safety
 * `model` must be null or a live handle.
 */
size_t prisk_model_window(const struct PriskModel *model);

/**
 * Ego values per frame (6 reduced or 9 raw); 0 for a null handle.
 *
 * # Safety
 * `model` must be null or a live handle.
 */
size_t prisk_model_ego_width(const struct PriskModel *model);

/**
 * Predicts one window. `ego` holds `window × ego_width` values and `env`
 * `window × 6`, both row-major by frame. Writes 5 probabilities to `probs`
 * and the most probable level (ties to the lower level) to `level`.
 *
 * # Safety
 * All pointers must be valid for the stated lengths.
 */
enum PriskStatus prisk_model_predict(const struct PriskModel *model,
                                     const double *ego,
                                     const double *env,
                                     double *probs,
                                     uint8_t *level);

/**
 * Releases a model handle. Null is ignored.
 *
 * # Safety
 * `model` must be null or a handle not yet freed.
 */
void prisk_model_free(struct PriskModel *model);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PRISK_H */
