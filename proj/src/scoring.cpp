#include "dsoft/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dsoft {

namespace {

constexpr double kInvSqrtPi = 0.5641895835477562869;  // 1/sqrt(pi)

double std_normal_pdf(double z) {
  return 0.3989422804014326779 * std::exp(-0.5 * z * z);
}
double std_normal_cdf(double z) {
  return 0.5 * std::erfc(-z * 0.7071067811865475244);
}

double simpson_recurse(const std::function<double(double)>& f, double a,
                       double fa, double m, double fm, double b, double fb,
                       double whole, double tol, int depth) {
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::fabs(delta) <= 15.0 * tol)
    return left + right + delta / 15.0;
  return simpson_recurse(f, a, fa, lm, flm, m, fm, left, 0.5 * tol,
                         depth - 1) +
         simpson_recurse(f, m, fm, rm, frm, b, fb, right, 0.5 * tol,
                         depth - 1);
}

}  // namespace

double adaptive_simpson(const std::function<double(double)>& f, double a,
                        double b, double tol) {
  if (!(b > a)) return 0.0;
  const double m = 0.5 * (a + b);
  const double fa = f(a);
  const double fb = f(b);
  const double fm = f(m);
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return simpson_recurse(f, a, fa, m, fm, b, fb, whole, tol, 30);
}

double log_score(const Family& fam, double y, const ParamVec& theta) {
  return -fam.log_density(y, theta);
}

double crps_from_cdf(const std::function<double(double)>& cdf, double y,
                     double lo, double hi, double abs_tol) {
  const double yc = std::clamp(y, lo, hi);
  const auto below = [&](double t) {
    const double v = cdf(t);
    return v * v;
  };
  const auto above = [&](double t) {
    const double v = 1.0 - cdf(t);
    return v * v;
  };
  return adaptive_simpson(below, lo, yc, 0.5 * abs_tol) +
         adaptive_simpson(above, yc, hi, 0.5 * abs_tol);
}

double crps(const Family& fam, double y, const ParamVec& theta) {
  fam.validate_theta(theta);
  if (!std::isfinite(y)) throw std::domain_error("crps: non-finite y");
  if (fam.discrete())
    throw std::invalid_argument(
        "crps: unsupported for discrete families, use log_score");

  if (fam.code() == FamilyCode::NO) {
    const double mu = theta[0];
    const double sigma = theta[1];
    const double z = (y - mu) / sigma;
    return sigma * (z * (2.0 * std_normal_cdf(z) - 1.0) +
                    2.0 * std_normal_pdf(z) - kInvSqrtPi);
  }

  constexpr double kTail = 1e-12;
  const double lo_tail =
      fam.code() == FamilyCode::GA ? 0.0 : fam.quantile(kTail, theta);
  const double hi_tail = fam.quantile(1.0 - kTail, theta);
  const double lo = std::min(lo_tail, y);
  const double hi = std::max(hi_tail, y);
  // total cdf: zero below the support so the window may touch its boundary
  const auto cdf = [&](double t) {
    return fam.in_support(t) ? fam.cdf(t, theta) : 0.0;
  };
  return crps_from_cdf(cdf, y, lo, hi, 1e-6);
}

double predictor_rmse(std::span<const double> eta_hat,
                      std::span<const double> eta_true) {
  if (eta_hat.size() != eta_true.size())
    throw std::invalid_argument("predictor_rmse: length mismatch");
  if (eta_hat.empty()) return 0.0;
  double s = 0.0;
  for (std::size_t i = 0; i < eta_hat.size(); ++i) {
    const double d = eta_hat[i] - eta_true[i];
    s += d * d;
  }
  return std::sqrt(s / static_cast<double>(eta_hat.size()));
}

double mean_of(std::span<const double> v) {
  if (v.empty()) return 0.0;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double median_of(std::vector<double> v) {
  if (v.empty()) throw std::invalid_argument("median of empty vector");
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid),
                   v.end());
  const double hi = v[mid];
  if (v.size() % 2 == 1) return hi;
  std::nth_element(v.begin(),
                   v.begin() + static_cast<std::ptrdiff_t>(mid - 1),
                   v.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (v[mid - 1] + hi);
}

}  // namespace dsoft
