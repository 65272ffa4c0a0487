#ifndef ACPS_H
#define ACPS_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stddef.h>
#include <stdint.h>

typedef enum AcpsFamily {
  ACPS_FAMILY_ACPS = 0,
  ACPS_FAMILY_CRPS = 1,
} AcpsFamily;

typedef enum AcpsOrientation {
  // Larger is better (ACPS).
  ACPS_ORIENTATION_POSITIVE = 0,
  // Smaller is better (CRPS).
  ACPS_ORIENTATION_NEGATIVE = 1,
} AcpsOrientation;

typedef enum AcpsScheme {
  ACPS_SCHEME_UNIFORM = 0,
  ACPS_SCHEME_CENTER = 1,
  ACPS_SCHEME_TAILS = 2,
  ACPS_SCHEME_RIGHT_TAIL = 3,
  ACPS_SCHEME_LEFT_TAIL = 4,
} AcpsScheme;

// Status codes returned by every fallible function.
typedef enum AcpsStatus {
  ACPS_STATUS_OK = 0,
  // A required pointer argument was null.
  ACPS_STATUS_ERR_NULL = 1,
  // An argument is outside its valid domain.
  ACPS_STATUS_ERR_DOMAIN = 2,
  // A numerical routine failed (e.g. a singular matrix).
  ACPS_STATUS_ERR_NUMERICAL = 3,
  // The requested model or option is not supported.
  ACPS_STATUS_ERR_UNSUPPORTED = 4,
  // Invalid input data or configuration.
  ACPS_STATUS_ERR_INPUT = 5,
  // An internal panic was caught.
  ACPS_STATUS_ERR_PANIC = 6,
} AcpsStatus;

typedef enum AcpsWeighting {
  ACPS_WEIGHTING_NONE = 0,
  ACPS_WEIGHTING_THRESHOLD = 1,
  ACPS_WEIGHTING_QUANTILE = 2,
} AcpsWeighting;

// Opaque probabilistic forecast (analytic or empirical).
typedef struct AcpsForecast AcpsForecast;

// Opaque posterior from one of the Bayesian AR samplers.
typedef struct AcpsPosterior AcpsPosterior;

// Truncation bounds and Gauss-Legendre nodes per side of the observation.
typedef struct AcpsGrid {
  double u_min;
  double u_max;
  size_t nodes_per_side;
} AcpsGrid;

// What to compute. `c` is ignored for CRPS and `scheme` when `weighting` is none.
typedef struct AcpsScoreKind {
  enum AcpsFamily family;
  double c;
  enum AcpsWeighting weighting;
  enum AcpsScheme scheme;
} AcpsScoreKind;

typedef struct AcpsScoreValue {
  double value;
  enum AcpsOrientation orientation;
  // Non-zero when the observation fell outside the grid.
  int32_t truncation_warning;
} AcpsScoreValue;

typedef struct AcpsDmResult {
  size_t t;
  double mean_diff;
  double lrv;
  double statistic;
  double p_value;
  size_t bandwidth;
  // Non-zero when the long-run variance is zero.
  int32_t degenerate;
} AcpsDmResult;

// MCMC budget and seed shared by the `acps_fit_*` functions.
typedef struct AcpsMcmc {
  size_t burn;
  size_t keep;
  uint64_t seed;
} AcpsMcmc;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failure on this thread, or an empty string. The
// pointer stays valid until the next failing call on the same thread.
const char *acps_last_error_message(void);

// Library version as a static NUL-terminated string.
const char *acps_version(void);

// Normal forecast N(mean, variance).
//
// # Safety
// `out` must be a valid pointer to writable storage for one handle.
enum AcpsStatus acps_forecast_normal(double mean, double variance, struct AcpsForecast **out);

// Location-scale Student-t forecast.
//
// # Safety
// `out` must be a valid pointer to writable storage for one handle.
enum AcpsStatus acps_forecast_student_t(double location,
                                        double scale,
                                        double dof,
                                        struct AcpsForecast **out);

// Gamma forecast with shape and rate.
//
// # Safety
// `out` must be a valid pointer to writable storage for one handle.
enum AcpsStatus acps_forecast_gamma(double shape, double rate, struct AcpsForecast **out);

// Beta forecast on [0, 1].
//
// # Safety
// `out` must be a valid pointer to writable storage for one handle.
enum AcpsStatus acps_forecast_beta(double a, double b, struct AcpsForecast **out);

// Empirical forecast from `n` Monte Carlo draws (copied).
//
// # Safety
// `draws` must point to `n` readable doubles; `out` must be writable.
enum AcpsStatus acps_forecast_empirical(const double *draws, size_t n, struct AcpsForecast **out);

// Releases a forecast. Null is ignored.
//
// # Safety
// `forecast` must come from an `acps_forecast_*` constructor and not be used afterwards.
void acps_forecast_free(struct AcpsForecast *forecast);

// Forecast CDF at `u`.
//
// # Safety
// `forecast` must be a live handle; `out` must be writable.
enum AcpsStatus acps_forecast_cdf(const struct AcpsForecast *forecast, double u, double *out);

// Forecast quantile at level `alpha` in (0, 1).
//
// # Safety
// `forecast` must be a live handle; `out` must be writable.
enum AcpsStatus acps_forecast_quantile(const struct AcpsForecast *forecast,
                                       double alpha,
                                       double *out);

// Probability integral transform `P(y)`.
//
// # Safety
// `forecast` must be a live handle; `out` must be writable.
enum AcpsStatus acps_pit(const struct AcpsForecast *forecast, double y, double *out);

// Default grid covering every forecast's central 99.8% range and every
// observation, with half that range added on each side.
//
// # Safety
// `forecasts` must point to `n_forecasts` live handles, `ys` to `n_ys`
// doubles; `out` must be writable.
enum AcpsStatus acps_default_grid(const struct AcpsForecast *const *forecasts,
                                  size_t n_forecasts,
                                  const double *ys,
                                  size_t n_ys,
                                  size_t nodes_per_side,
                                  struct AcpsGrid *out);

// Score of one forecast at one observation. A null `grid` selects the
// default grid for this forecast and observation with 128 nodes per side.
//
// # Safety
// `forecast` must be a live handle, `kind` valid, `grid` null or valid and
// `out` writable.
enum AcpsStatus acps_score(const struct AcpsForecast *forecast,
                           double y,
                           const struct AcpsScoreKind *kind,
                           const struct AcpsGrid *grid,
                           struct AcpsScoreValue *out);

// Mean score over `n_ys` observations. `n_forecasts` is either 1 (one
// forecast for every observation) or `n_ys` (paired). The grid is required
// so that averages of competing models are comparable.
//
// # Safety
// Pointers must reference `n_forecasts` live handles and `n_ys` doubles;
// `kind` and `grid` must be valid and `out` writable.
enum AcpsStatus acps_average_score(const struct AcpsForecast *const *forecasts,
                                   size_t n_forecasts,
                                   const double *ys,
                                   size_t n_ys,
                                   const struct AcpsScoreKind *kind,
                                   const struct AcpsGrid *grid,
                                   struct AcpsScoreValue *out);

// Diebold-Mariano test of equal expected scores for two aligned score
// series. `bandwidth < 0` selects the automatic Bartlett bandwidth.
//
// # Safety
// `scores_1` and `scores_2` must point to `n` doubles; `out` must be writable.
enum AcpsStatus acps_dm_test(const double *scores_1,
                             const double *scores_2,
                             size_t n,
                             enum AcpsOrientation orientation,
                             int64_t bandwidth,
                             struct AcpsDmResult *out);

// Conjugate AR(order) with intercept and default priors; `order == 0` fits white noise.
//
// # Safety
// `y` must point to `n` doubles, `mcmc` must be valid and `out` writable.
enum AcpsStatus acps_fit_ar(const double *y,
                            size_t n,
                            size_t order,
                            const struct AcpsMcmc *mcmc,
                            struct AcpsPosterior **out);

// Two-regime Markov-switching AR(1) with default priors.
//
// # Safety
// `y` must point to `n` doubles, `mcmc` must be valid and `out` writable.
enum AcpsStatus acps_fit_msar(const double *y,
                              size_t n,
                              const struct AcpsMcmc *mcmc,
                              struct AcpsPosterior **out);

// Time-varying parameter AR with 1 or 2 lags and default priors.
//
// # Safety
// `y` must point to `n` doubles, `mcmc` must be valid and `out` writable.
enum AcpsStatus acps_fit_tvpar(const double *y,
                               size_t n,
                               size_t lags,
                               const struct AcpsMcmc *mcmc,
                               struct AcpsPosterior **out);

// Releases a posterior. Null is ignored.
//
// # Safety
// `posterior` must come from an `acps_fit_*` function and not be used afterwards.
void acps_posterior_free(struct AcpsPosterior *posterior);

// Writes `m` predictive draws of `y_{T+h}` into `out`, where `y_hist` ends at `y_T`.
//
// # Safety
// `posterior` must be a live handle, `y_hist` must point to `n` doubles and
// `out` to `m` writable doubles.
enum AcpsStatus acps_predictive_draws(const struct AcpsPosterior *posterior,
                                      const double *y_hist,
                                      size_t n,
                                      size_t h,
                                      size_t m,
                                      uint64_t seed,
                                      double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ACPS_H */
