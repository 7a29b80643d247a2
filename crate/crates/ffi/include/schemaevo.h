#ifndef SCHEMAEVO_H
#define SCHEMAEVO_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SeErrorCode {
  SE_ERROR_CODE_OK = 0,
  SE_ERROR_CODE_NULL_POINTER = 1,
  SE_ERROR_CODE_INVALID_ARGUMENT = 2,
  SE_ERROR_CODE_INVALID_CONFIG = 3,
  SE_ERROR_CODE_RUN_FAILED = 4,
  SE_ERROR_CODE_EMPTY_SAMPLE = 5,
  SE_ERROR_CODE_NOT_FOUND = 6,
  SE_ERROR_CODE_PANIC = 7,
} SeErrorCode;

typedef enum SeStrategy {
  SE_STRATEGY_EAGER = 0,
  SE_STRATEGY_INCREMENTAL = 1,
  SE_STRATEGY_PREDICTIVE = 2,
  SE_STRATEGY_LAZY = 3,
} SeStrategy;

typedef enum SeMetric {
  SE_METRIC_ON_READ_COST = 0,
  SE_METRIC_ON_RELEASE_COST = 1,
  SE_METRIC_CUMULATED_COST = 2,
  SE_METRIC_MEAN_LATENCY = 3,
} SeMetric;

/**
 * Opaque batch result.
 */
typedef struct SeBatch SeBatch;

/**
 * Opaque scenario configuration.
 */
typedef struct SeConfig SeConfig;

/**
 * Box-plot summary. Outlier values are not copied; only their count.
 */
typedef struct SeStats {
  size_t n;
  double mean;
  double median;
  double q1;
  double q3;
  double iqr;
  double whisker_lo;
  double whisker_hi;
  double min;
  double max;
  size_t outlier_count;
} SeStats;

/**
 * Exact amount in pico-USD split into two 64-bit halves, plus a rounded
 * dollar value.
 */
typedef struct SeMoney {
  uint64_t pico_hi;
  uint64_t pico_lo;
  double usd;
} SeMoney;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *se_version(void);

/**
 * Message of the last failed call on this thread, or NULL. Valid until the
 * next call into this library from the same thread.
 */
const char *se_last_error_message(void);

/**
 * # Safety
 * `s` must be NULL or a string returned by this library and not yet freed.
 */
void se_string_free(char *s);

/**
 * New config with default values. Never NULL.
 */
struct SeConfig *se_config_new_default(void);

/**
 * # Safety
 * `config` must be NULL or a handle from [`se_config_new_default`] not yet freed.
 */
void se_config_free(struct SeConfig *config);

/**
 * Sets one config key using the same syntax as config files
 * (`"distribution"`, `"uniform"`).
 *
 * # Safety
 * `config` must be a live handle; `key` and `value` NUL-terminated strings.
 */
enum SeErrorCode se_config_set(struct SeConfig *config, const char *key, const char *value);

/**
 * Lints the config. Returns `InvalidConfig` with all violations in the
 * error message when any rule fails.
 *
 * # Safety
 * `config` must be a live handle.
 */
enum SeErrorCode se_config_validate(const struct SeConfig *config, bool strict_grid);

/**
 * The config as JSON, or NULL on failure. Free with [`se_string_free`].
 *
 * # Safety
 * `config` must be a live handle.
 */
char *se_config_to_json(const struct SeConfig *config);

/**
 * Runs a batch of all four strategies. `runs == 0` uses the config's
 * effective run count. On success `*out` receives a new handle.
 *
 * # Safety
 * `config` must be a live handle and `out` a writable pointer.
 */
enum SeErrorCode se_batch_run(const struct SeConfig *config, uint32_t runs, struct SeBatch **out);

/**
 * # Safety
 * `batch` must be NULL or a handle from [`se_batch_run`] not yet freed.
 */
void se_batch_free(struct SeBatch *batch);

/**
 * Cross-run statistics of `metric` for `strategy` at `release_no`.
 *
 * # Safety
 * `batch` must be a live handle and `out` a writable pointer.
 */
enum SeErrorCode se_batch_stat(const struct SeBatch *batch,
                               enum SeStrategy strategy,
                               uint32_t release_no,
                               enum SeMetric metric,
                               struct SeStats *out);

/**
 * The batch summary as JSON, or NULL. Free with [`se_string_free`].
 *
 * # Safety
 * `batch` must be a live handle.
 */
char *se_batch_summary_json(const struct SeBatch *batch);

/**
 * Box-plot statistics of `len` doubles.
 *
 * # Safety
 * `values` must point to `len` readable doubles; `out` must be writable.
 */
enum SeErrorCode se_summarize(const double *values, size_t len, struct SeStats *out);

/**
 * Cost of `io_count` simulated operations upscaled by `scale_factor` at
 * `price_per_million_io` USD.
 *
 * # Safety
 * `out` must be a writable pointer.
 */
enum SeErrorCode se_money(uint64_t io_count,
                          double price_per_million_io,
                          uint64_t scale_factor,
                          struct SeMoney *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SCHEMAEVO_H */
