#ifndef HERDWATCH_H
#define HERDWATCH_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every `hw_*` call.
 */
typedef enum HwStatus {
  HW_STATUS_OK = 0,
  HW_STATUS_NULL_POINTER = 1,
  HW_STATUS_INVALID_ARGUMENT = 2,
  HW_STATUS_IO = 3,
  HW_STATUS_FORMAT = 4,
  HW_STATUS_MODEL = 5,
  HW_STATUS_PANIC = 6,
} HwStatus;

/**
 * A windowed feature table.
 */
typedef struct HwFeatureTable HwFeatureTable;

/**
 * A fitted classifier loaded from a model artifact.
 */
typedef struct HwModel HwModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null after a
 * successful call. Valid until the next `hw_*` call on this thread.
 */
const char *hw_last_error_message(void);

/**
 * Loads a JSON model artifact.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum HwStatus hw_model_load(const char *path, struct HwModel **out);

/**
 * Releases a model. Null is ignored.
 *
 * # Safety
 * `model` must come from [`hw_model_load`] and not be used afterwards.
 */
void hw_model_free(struct HwModel *model);

/**
 * # Safety
 * `model` must be a live handle; `out` must be writable.
 */
enum HwStatus hw_model_n_features(const struct HwModel *model, size_t *out);

/**
 * # Safety
 * `model` must be a live handle; `out` must be writable.
 */
enum HwStatus hw_model_n_classes(const struct HwModel *model, size_t *out);

/**
 * Class label at `index`, in probability order. The string is owned by
 * the model.
 *
 * # Safety
 * `model` must be a live handle; `out` must be writable.
 */
enum HwStatus hw_model_class_name(const struct HwModel *model, size_t index, const char **out);

/**
 * Feature column name at `index`. The string is owned by the model.
 *
 * # Safety
 * `model` must be a live handle; `out` must be writable.
 */
enum HwStatus hw_model_feature_name(const struct HwModel *model, size_t index, const char **out);

/**
 * Class probabilities for one feature row.
 *
 * # Safety
 * `row` must hold `n_features` values and `out` room for `n_classes`.
 */
enum HwStatus hw_model_predict_proba(const struct HwModel *model,
                                     const double *row,
                                     size_t n_features,
                                     double *out,
                                     size_t n_classes);

/**
 * Probabilities for every row of `table`, row-major into `out`
 * (`n_rows * n_classes` values). Columns are matched by name.
 *
 * # Safety
 * Both handles must be live; `out` must hold `len` values.
 */
enum HwStatus hw_model_predict_table(const struct HwModel *model,
                                     const struct HwFeatureTable *table,
                                     double *out,
                                     size_t len);

/**
 * Windowed features (with lag columns) for one device's stream. Timestamps
 * are milliseconds and must be strictly increasing.
 *
 * # Safety
 * `device_id` must be a NUL-terminated string, the four arrays must hold
 * `n` values each and `out` must be writable.
 */
enum HwStatus hw_extract_features(const char *device_id,
                                  const int64_t *timestamps_ms,
                                  const double *acc_x,
                                  const double *acc_y,
                                  const double *acc_z,
                                  size_t n,
                                  size_t window_length,
                                  size_t step_length,
                                  size_t max_lag,
                                  struct HwFeatureTable **out);

/**
 * Releases a feature table. Null is ignored.
 *
 * # Safety
 * `table` must come from [`hw_extract_features`] and not be used afterwards.
 */
void hw_table_free(struct HwFeatureTable *table);

/**
 * # Safety
 * `table` must be a live handle; `out` must be writable.
 */
enum HwStatus hw_table_n_rows(const struct HwFeatureTable *table, size_t *out);

/**
 * # Safety
 * `table` must be a live handle; `out` must be writable.
 */
enum HwStatus hw_table_n_cols(const struct HwFeatureTable *table, size_t *out);

/**
 * Column name at `index`. The string is owned by the table.
 *
 * # Safety
 * `table` must be a live handle; `out` must be writable.
 */
enum HwStatus hw_table_column_name(const struct HwFeatureTable *table,
                                   size_t index,
                                   const char **out);

/**
 * Copies row `index` into `out`, which must hold `n_cols` values.
 *
 * # Safety
 * `table` must be a live handle; `out` must hold `len` values.
 */
enum HwStatus hw_table_row(const struct HwFeatureTable *table,
                           size_t index,
                           double *out,
                           size_t len);

/**
 * Two-sample Kolmogorov-Smirnov statistic.
 *
 * # Safety
 * `a` and `b` must hold `na` and `nb` values; `out` must be writable.
 */
enum HwStatus hw_ks_statistic(const double *a, size_t na, const double *b, size_t nb, double *out);

/**
 * Savitzky-Golay smoothing of `n` values into `out` (also `n` values).
 *
 * # Safety
 * `series` and `out` must hold `n` values each.
 */
enum HwStatus hw_savitzky_golay(const double *series,
                                size_t n,
                                size_t window_length,
                                size_t polyorder,
                                double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HERDWATCH_H */
