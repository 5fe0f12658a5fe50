#pragma once

#include <span>
#include <string>
#include <vector>

#include "dsoft/forest.hpp"
#include "dsoft/tree.hpp"

namespace dsoft {

/// Lagged-feature layout: monthly lags plus annual lags (years into the
/// past, i.e. multiples of 12 months).  Defaults follow the sunspot setup:
/// 24 monthly lags and annual lags 3..35 years, 57 features in total.
struct LagSpec {
  std::vector<int> monthly_lags;
  std::vector<int> annual_years;

  static LagSpec defaults();
  /// Expanded lag list in column order (monthly first, then annual);
  /// throws std::invalid_argument unless all positive and distinct.
  std::vector<int> lags() const;
  int max_lag() const;
};

/// Response transform for the non-negative sunspot counts.
double transform_value(double y);          // sqrt(y + 0.001); y < 0 -> domain error
double inverse_transform_value(double t);  // max(t,0)^2 - 0.001, clamped at 0
std::vector<double> transform_series(std::span<const double> y);

/// One row per usable time point: features are the lagged (already
/// transformed, if the caller transformed) series values, response the
/// current value.  Column names encode the lag ("lag_12").
Dataset build_lag_matrix(std::span<const double> series, const LagSpec& spec);

struct ForecastResult {
  std::vector<ParamVec> theta;     // transformed-scale parameters per step
  std::vector<double> point_transformed;
  std::vector<double> point;       // original scale, >= 0
  std::vector<double> probs;
  std::vector<std::vector<double>> quantiles;  // [step][prob], original scale
};

/// Iterate one-step-ahead predictions `horizon` times on the transformed
/// scale, feeding the predictive location parameter back as the next lag
/// input; quantiles map back through the inverse transform.  `history` is on
/// the original scale.  Throws on a non-finite feedback value (with the step
/// index) and when history is shorter than the maximum lag.
ForecastResult recursive_forecast(const DistModel& model,
                                  std::span<const double> history, int horizon,
                                  const LagSpec& spec,
                                  const std::vector<double>& probs);
ForecastResult recursive_forecast(const ForestModel& forest,
                                  std::span<const double> history, int horizon,
                                  const LagSpec& spec,
                                  const std::vector<double>& probs);

/// CRPS of the original-scale forecast distribution (the transformed-scale
/// distribution pushed through the inverse transform) at an original-scale
/// observation, by change of variables inside the quadrature.
double crps_original_scale(const Family& fam, const ParamVec& theta_transformed,
                           double y_original);

/// Horizon bucket labels: steps 0-99 "short", 100-199 "medium", >= 200 "long".
std::string horizon_bucket(std::size_t step);

/// Chronological evaluation window: train on series[0, train_end), forecast
/// the next `horizon` points.
struct EvalWindow {
  std::size_t train_end = 0;
  std::size_t horizon = 0;
};

struct GridCell {
  double lambda = 0.0;
  std::string bucket;
  double median_crps = 0.0;
  double median_mse = 0.0;
  std::size_t n_steps = 0;
};

/// For every lambda and window: fit on the transformed series strictly before
/// the window, recursive-forecast it, and report per-bucket medians of the
/// original-scale CRPS and squared point error.  Windows violating
/// chronology are rejected upfront.
std::vector<GridCell> lambda_grid_search(std::span<const double> series,
                                         const Family& fam,
                                         const FitConfig& base,
                                         const std::vector<double>& grid,
                                         const std::vector<EvalWindow>& windows,
                                         const LagSpec& spec);

/// Calendar helper for labeling forecast steps.
struct MonthDate {
  int year = 0;
  int month = 1;  // 1..12
};
MonthDate advance_month(MonthDate d, int steps);

}  // namespace dsoft
