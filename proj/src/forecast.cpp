#include "dsoft/forecast.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <stdexcept>

#include "dsoft/scoring.hpp"

namespace dsoft {

LagSpec LagSpec::defaults() {
  LagSpec s;
  s.monthly_lags.resize(24);
  std::iota(s.monthly_lags.begin(), s.monthly_lags.end(), 1);
  s.annual_years.resize(33);
  std::iota(s.annual_years.begin(), s.annual_years.end(), 3);
  return s;
}

std::vector<int> LagSpec::lags() const {
  std::vector<int> out = monthly_lags;
  for (int j : annual_years) out.push_back(12 * j);
  if (out.empty()) throw std::invalid_argument("lag spec: no lags");
  std::set<int> seen;
  for (int lag : out) {
    if (lag <= 0) throw std::invalid_argument("lag spec: lags must be positive");
    if (!seen.insert(lag).second)
      throw std::invalid_argument("lag spec: duplicate lag " +
                                  std::to_string(lag));
  }
  return out;
}

int LagSpec::max_lag() const {
  const auto all = lags();
  return *std::max_element(all.begin(), all.end());
}

double transform_value(double y) {
  if (!(y >= 0.0))
    throw std::domain_error("transform: response must be >= 0");
  return std::sqrt(y + 0.001);
}

double inverse_transform_value(double t) {
  const double tp = std::max(t, 0.0);
  return std::max(tp * tp - 0.001, 0.0);
}

std::vector<double> transform_series(std::span<const double> y) {
  std::vector<double> out(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) out[i] = transform_value(y[i]);
  return out;
}

Dataset build_lag_matrix(std::span<const double> series, const LagSpec& spec) {
  const auto all = spec.lags();
  const auto max_lag = static_cast<std::size_t>(spec.max_lag());
  if (series.size() <= max_lag)
    throw std::invalid_argument(
        "build_lag_matrix: series too short, need at least " +
        std::to_string(max_lag + 1) + " points, got " +
        std::to_string(series.size()));
  const std::size_t n = series.size() - max_lag;
  Dataset d;
  d.X = Matrix(n, all.size());
  d.y.resize(n);
  for (int lag : all) d.feature_names.push_back("lag_" + std::to_string(lag));
  for (std::size_t r = 0; r < n; ++r) {
    const std::size_t t = max_lag + r;
    for (std::size_t j = 0; j < all.size(); ++j)
      d.X(r, j) = series[t - static_cast<std::size_t>(all[j])];
    d.y[r] = series[t];
  }
  return d;
}

namespace {

template <typename PredictTheta>
ForecastResult recursive_forecast_impl(const Family& fam,
                                       PredictTheta&& predict_one,
                                       std::span<const double> history,
                                       int horizon, const LagSpec& spec,
                                       const std::vector<double>& probs) {
  if (horizon < 1)
    throw std::invalid_argument("recursive_forecast: horizon must be >= 1");
  const auto all = spec.lags();
  const auto max_lag = static_cast<std::size_t>(spec.max_lag());
  if (history.size() < max_lag)
    throw std::invalid_argument(
        "recursive_forecast: history shorter than the maximum lag (" +
        std::to_string(max_lag) + ")");
  for (double p : probs)
    if (!(p > 0.0 && p < 1.0))
      throw std::invalid_argument(
          "recursive_forecast: quantile levels must lie in (0, 1)");

  std::vector<double> w = transform_series(history);
  ForecastResult out;
  out.probs = probs;
  Matrix row(1, all.size());
  for (int h = 0; h < horizon; ++h) {
    const std::size_t t = w.size();
    for (std::size_t j = 0; j < all.size(); ++j)
      row(0, j) = w[t - static_cast<std::size_t>(all[j])];
    const ParamVec theta = predict_one(row);
    const double feedback = theta[0];
    if (!std::isfinite(feedback))
      throw std::runtime_error(
          "recursive_forecast: non-finite feedback value at step " +
          std::to_string(h));
    w.push_back(feedback);
    out.theta.push_back(theta);
    out.point_transformed.push_back(feedback);
    out.point.push_back(inverse_transform_value(feedback));
    std::vector<double> qs(probs.size());
    for (std::size_t qi = 0; qi < probs.size(); ++qi)
      qs[qi] = inverse_transform_value(fam.quantile(probs[qi], theta));
    out.quantiles.push_back(std::move(qs));
  }
  return out;
}

}  // namespace

ForecastResult recursive_forecast(const DistModel& model,
                                  std::span<const double> history, int horizon,
                                  const LagSpec& spec,
                                  const std::vector<double>& probs) {
  return recursive_forecast_impl(
      model.family,
      [&](const Matrix& row) {
        return predict_theta(model, row, Exec::serial)[0];
      },
      history, horizon, spec, probs);
}

ForecastResult recursive_forecast(const ForestModel& forest,
                                  std::span<const double> history, int horizon,
                                  const LagSpec& spec,
                                  const std::vector<double>& probs) {
  return recursive_forecast_impl(
      forest.family(),
      [&](const Matrix& row) {
        return predict_theta_forest(forest, row, Exec::serial)[0];
      },
      history, horizon, spec, probs);
}

double crps_original_scale(const Family& fam,
                           const ParamVec& theta_transformed,
                           double y_original) {
  if (!(y_original >= 0.0))
    throw std::domain_error("crps_original_scale: observation must be >= 0");
  fam.validate_theta(theta_transformed);
  // CRPS on the original scale by the substitution t = s^2 - 0.001:
  //   integral (F(s) - 1{s >= sy})^2 * 2s ds over s >= sqrt(0.001)
  const double s0 = std::sqrt(0.001);
  const double sy = transform_value(y_original);
  constexpr double kTail = 1e-12;
  const double shi =
      std::max(fam.quantile(1.0 - kTail, theta_transformed), sy);
  const auto cdf = [&](double s) {
    return fam.in_support(s) ? fam.cdf(s, theta_transformed) : 0.0;
  };
  const auto below = [&](double s) {
    const double v = cdf(s);
    return v * v * 2.0 * s;
  };
  const auto above = [&](double s) {
    const double v = 1.0 - cdf(s);
    return v * v * 2.0 * s;
  };
  return adaptive_simpson(below, s0, sy, 5e-7) +
         adaptive_simpson(above, sy, shi, 5e-7);
}

std::string horizon_bucket(std::size_t step) {
  if (step < 100) return "short";
  if (step < 200) return "medium";
  return "long";
}

std::vector<GridCell> lambda_grid_search(std::span<const double> series,
                                         const Family& fam,
                                         const FitConfig& base,
                                         const std::vector<double>& grid,
                                         const std::vector<EvalWindow>& windows,
                                         const LagSpec& spec) {
  if (grid.empty())
    throw std::invalid_argument("lambda_grid_search: empty lambda grid");
  if (windows.empty())
    throw std::invalid_argument("lambda_grid_search: no evaluation windows");
  const auto max_lag = static_cast<std::size_t>(spec.max_lag());
  for (const auto& w : windows) {
    if (w.horizon < 1)
      throw std::invalid_argument("lambda_grid_search: window horizon < 1");
    if (w.train_end <= max_lag)
      throw std::invalid_argument(
          "lambda_grid_search: training segment shorter than the lag window");
    if (w.train_end + w.horizon > series.size())
      throw std::invalid_argument(
          "lambda_grid_search: window extends past the series end");
  }

  struct CellSamples {
    std::vector<double> crps;
    std::vector<double> se;
  };
  const std::size_t cells = grid.size() * windows.size();
  std::vector<std::map<std::string, CellSamples>> partial(cells);

  parallel_for_jobs(cells, 0, [&](std::size_t c) {
    const std::size_t li = c / windows.size();
    const std::size_t wi = c % windows.size();
    const EvalWindow& w = windows[wi];
    FitConfig cfg = base;
    cfg.shrinkage.lambda = {grid[li]};
    const std::vector<double> train(series.begin(),
                                    series.begin() +
                                        static_cast<std::ptrdiff_t>(w.train_end));
    const Dataset lagged = build_lag_matrix(transform_series(train), spec);
    const DistModel model = fit(lagged, fam, cfg);
    const ForecastResult fc = recursive_forecast(
        model, train, static_cast<int>(w.horizon), spec, {});
    for (std::size_t h = 0; h < w.horizon; ++h) {
      const double actual = series[w.train_end + h];
      auto& cell = partial[c][horizon_bucket(h)];
      cell.crps.push_back(crps_original_scale(fam, fc.theta[h], actual));
      const double err = fc.point[h] - actual;
      cell.se.push_back(err * err);
    }
  });

  std::vector<GridCell> out;
  const std::array<std::string, 3> buckets{"short", "medium", "long"};
  for (std::size_t li = 0; li < grid.size(); ++li) {
    std::map<std::string, CellSamples> merged;
    for (std::size_t wi = 0; wi < windows.size(); ++wi) {
      for (auto& [bucket, cell] : partial[li * windows.size() + wi]) {
        auto& m = merged[bucket];
        m.crps.insert(m.crps.end(), cell.crps.begin(), cell.crps.end());
        m.se.insert(m.se.end(), cell.se.begin(), cell.se.end());
      }
    }
    for (const auto& bucket : buckets) {
      const auto it = merged.find(bucket);
      if (it == merged.end()) continue;
      GridCell cell;
      cell.lambda = grid[li];
      cell.bucket = bucket;
      cell.median_crps = median_of(it->second.crps);
      cell.median_mse = median_of(it->second.se);
      cell.n_steps = it->second.crps.size();
      out.push_back(std::move(cell));
    }
  }
  return out;
}

MonthDate advance_month(MonthDate d, int steps) {
  const int zero = d.year * 12 + (d.month - 1) + steps;
  MonthDate out;
  out.year = zero >= 0 ? zero / 12 : -((-zero + 11) / 12);
  out.month = zero - out.year * 12 + 1;
  return out;
}

}  // namespace dsoft
