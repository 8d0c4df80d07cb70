/* SPDX-License-Identifier: Apache-2.0 */

#ifndef EEGAD_H
#define EEGAD_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible call.
 */
typedef enum EegadStatus {
  EEGAD_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  EEGAD_STATUS_NULL_POINTER = 1,
  /**
   * A configuration value was rejected.
   */
  EEGAD_STATUS_CONFIG = 2,
  /**
   * Input data was malformed, inconsistent or insufficient.
   */
  EEGAD_STATUS_DATA = 3,
  /**
   * Training diverged; same code as the command-line exit status.
   */
  EEGAD_STATUS_DIVERGENCE = 4,
  /**
   * A serialized model or detector could not be decoded.
   */
  EEGAD_STATUS_FORMAT = 5,
  /**
   * Internal failure; the message names the cause.
   */
  EEGAD_STATUS_PANIC = 6,
} EegadStatus;

/**
 * Fitted Gaussian detector.
 */
typedef struct EegadDetector EegadDetector;

/**
 * Trained two-branch feature extractor.
 */
typedef struct EegadModel EegadModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *eegad_version(void);

/**
 * Copies the calling thread's last error message into `buf` (truncated and
 * always NUL-terminated when `cap > 0`). Returns the full message length in
 * bytes excluding the terminator; 0 if there is no message.
 *
 * # Safety
 * `buf` must be null or valid for `cap` writes.
 */
size_t eegad_last_error_message(char *buf, size_t cap);

/**
 * Fits a detector to `n` row-major feature vectors of length `d` with the
 * default shrinkage.
 *
 * # Safety
 * `features` must be valid for `n * d` reads and `out` for one write.
 */
enum EegadStatus eegad_detector_fit(const double *features,
                                    size_t n,
                                    size_t d,
                                    struct EegadDetector **out_detector);

/**
 * Decodes a detector from GDT1 bytes.
 *
 * # Safety
 * `bytes` must be valid for `len` reads and `out_detector` for one write.
 */
enum EegadStatus eegad_detector_load(const uint8_t *bytes,
                                     size_t len,
                                     struct EegadDetector **out_detector);

/**
 * Serializes a detector as GDT1. With `buf` null or too small, only
 * `*out_len` is set (to the required size) and `EEGAD_STATUS_OK` returned
 * if `buf` is null, `EEGAD_STATUS_DATA` otherwise.
 *
 * # Safety
 * `detector` must be a live handle, `buf` null or valid for `cap` writes,
 * `out_len` valid for one write.
 */
enum EegadStatus eegad_detector_save(const struct EegadDetector *detector,
                                     uint8_t *buf,
                                     size_t cap,
                                     size_t *out_len);

/**
 * # Safety
 * `detector` must be a live handle and `out_dim` valid for one write.
 */
enum EegadStatus eegad_detector_dim(const struct EegadDetector *detector, size_t *out_dim);

/**
 * Mahalanobis distance of one feature vector of length `d`.
 *
 * # Safety
 * `detector` must be a live handle, `features` valid for `d` reads and
 * `out_score` for one write.
 */
enum EegadStatus eegad_detector_score(const struct EegadDetector *detector,
                                      const double *features,
                                      size_t d,
                                      double *out_score);

/**
 * Releases a detector; null is ignored.
 *
 * # Safety
 * `detector` must be null or a handle not yet freed.
 */
void eegad_detector_free(struct EegadDetector *detector);

/**
 * Decodes a model from TBM1 bytes.
 *
 * # Safety
 * `bytes` must be valid for `len` reads and `out_model` for one write.
 */
enum EegadStatus eegad_model_load(const uint8_t *bytes, size_t len, struct EegadModel **out_model);

/**
 * Input shape `(channels, length)` and feature length of a model.
 *
 * # Safety
 * `model` must be a live handle; each output pointer valid for one write.
 */
enum EegadStatus eegad_model_shape(const struct EegadModel *model,
                                   size_t *out_channels,
                                   size_t *out_length,
                                   size_t *out_feature_dim);

/**
 * Features of one normalized segment (`channels * length` values,
 * channel-major) written to `out_features`, which holds `out_cap` floats.
 *
 * # Safety
 * `model` must be a live handle, `data` valid for `channels * length`
 * reads and `out_features` for `out_cap` writes.
 */
enum EegadStatus eegad_model_extract_features(const struct EegadModel *model,
                                              const float *data,
                                              size_t channels,
                                              size_t length,
                                              float *out_features,
                                              size_t out_cap);

/**
 * Releases a model; null is ignored.
 *
 * # Safety
 * `model` must be null or a handle not yet freed.
 */
void eegad_model_free(struct EegadModel *model);

/**
 * AUC with abnormal as the positive class and half credit for ties.
 *
 * # Safety
 * Score arrays must be valid for their lengths; `out_auc` for one write.
 */
enum EegadStatus eegad_auc(const double *normals,
                           size_t n_normals,
                           const double *abnormals,
                           size_t n_abnormals,
                           double *out_auc);

/**
 * Equal error rate, its threshold and the F1 score at that threshold.
 *
 * # Safety
 * Score arrays must be valid for their lengths; each output for one write.
 */
enum EegadStatus eegad_eer(const double *normals,
                           size_t n_normals,
                           const double *abnormals,
                           size_t n_abnormals,
                           double *out_eer,
                           double *out_threshold,
                           double *out_f1);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* EEGAD_H */
