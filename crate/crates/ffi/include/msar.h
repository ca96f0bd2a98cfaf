#ifndef MSAR_H
#define MSAR_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum MsarStatus {
  MSAR_STATUS_OK = 0,
  MSAR_STATUS_NULL_POINTER = 1,
  MSAR_STATUS_INVALID_ARGUMENT = 2,
  MSAR_STATUS_INSUFFICIENT_DATA = 3,
  MSAR_STATUS_ESTIMATION_FAILED = 4,
  MSAR_STATUS_NUMERICAL_DEGENERACY = 5,
  MSAR_STATUS_BUFFER_TOO_SMALL = 6,
  // A Rust panic was caught at the boundary.
  MSAR_STATUS_INTERNAL = 7,
} MsarStatus;

// Opaque fitted MS-AR model with the smoothed regime probabilities of the
// series it was fitted to.
typedef struct MsarFit MsarFit;

// Opaque observation series.
typedef struct MsarSeries MsarSeries;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread; empty after success.
// The pointer stays valid until the next `msar_` call on this thread.
const char *msar_last_error(void);

// Copies `len` values into a new hourly series.
//
// # Safety
// `values` must point to `len` readable doubles; `out` must be writable.
enum MsarStatus msar_series_new(const double *values, size_t len, struct MsarSeries **out);

// # Safety
// `series` must come from [`msar_series_new`] and not be freed twice.
void msar_series_free(struct MsarSeries *series);

// Number of observations; 0 for a null handle.
//
// # Safety
// `series` must be null or a live handle.
size_t msar_series_len(const struct MsarSeries *series);

// EM fit of an MS(K)-AR(p) model. `shared_variance` non-zero ties the
// innovation variance across regimes. `restarts` = 0 uses the default.
//
// # Safety
// `series` must be a live handle; `out` must be writable.
enum MsarStatus msar_fit_em(const struct MsarSeries *series,
                            size_t n_regimes,
                            size_t ar_order,
                            int32_t shared_variance,
                            size_t restarts,
                            uint64_t seed,
                            struct MsarFit **out);

// # Safety
// `fit` must come from [`msar_fit_em`] and not be freed twice.
void msar_fit_free(struct MsarFit *fit);

// # Safety
// `fit` must be null or a live handle.
size_t msar_fit_n_regimes(const struct MsarFit *fit);

// # Safety
// `fit` must be null or a live handle.
size_t msar_fit_ar_order(const struct MsarFit *fit);

// Rows of smoothed probabilities: series length minus the AR order.
//
// # Safety
// `fit` must be null or a live handle.
size_t msar_fit_n_steps(const struct MsarFit *fit);

// # Safety
// `fit` must be a live handle and `out` writable.
enum MsarStatus msar_fit_loglik(const struct MsarFit *fit, double *out);

// Regime means, K values ordered ascending.
//
// # Safety
// `buf` must have room for `cap` doubles.
enum MsarStatus msar_fit_means(const struct MsarFit *fit, double *buf, size_t cap);

// AR coefficients, K×p row-major (row j: regime j, column i: lag i+1).
//
// # Safety
// `buf` must have room for `cap` doubles.
enum MsarStatus msar_fit_coefficients(const struct MsarFit *fit, double *buf, size_t cap);

// Innovation variance per regime, K values (repeated when shared).
//
// # Safety
// `buf` must have room for `cap` doubles.
enum MsarStatus msar_fit_variances(const struct MsarFit *fit, double *buf, size_t cap);

// Transition matrix, K×K row-major, `p_ij` at `i*K + j`.
//
// # Safety
// `buf` must have room for `cap` doubles.
enum MsarStatus msar_fit_transition(const struct MsarFit *fit, double *buf, size_t cap);

// Expected duration `1/(1 − p_jj)` per regime.
//
// # Safety
// `buf` must have room for `cap` doubles.
enum MsarStatus msar_fit_durations(const struct MsarFit *fit, double *buf, size_t cap);

// Smoothed regime probabilities, (T−p)×K row-major; row τ is observation p+τ.
//
// # Safety
// `buf` must have room for `cap` doubles.
enum MsarStatus msar_fit_smoothed_probabilities(const struct MsarFit *fit, double *buf, size_t cap);

// AIC, BIC and HQC for a log-likelihood with `k` parameters and `n`
// observations. Any output pointer may be null.
//
// # Safety
// Non-null outputs must be writable.
enum MsarStatus msar_info_criteria(double loglik,
                                   size_t k,
                                   size_t n,
                                   double *aic,
                                   double *bic,
                                   double *hqc);

// Expected durations for a K×K row-major transition matrix; writes K values.
//
// # Safety
// `transition` must hold `k*k` doubles and `out` room for `k`.
enum MsarStatus msar_expected_duration(const double *transition, size_t k, double *out);

// JSON rendering of the fit as in the report's `chosen_fit` section.
// Release with [`msar_string_free`].
//
// # Safety
// `fit` must be a live handle and `out` writable.
enum MsarStatus msar_fit_to_json(const struct MsarFit *fit, char **out);

// # Safety
// `s` must come from an `msar_` function returning an owned string.
void msar_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MSAR_H */
