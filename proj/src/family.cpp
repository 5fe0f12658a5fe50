#include "dsoft/family.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <boost/math/distributions/students_t.hpp>
#include <boost/math/special_functions/digamma.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <boost/math/special_functions/trigamma.hpp>

namespace dsoft {

namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;
constexpr double kHalfLog2Pi = 0.91893853320467274178032973640561764;
constexpr double kEulerGamma = 0.57721566490153286060651209008240243;
constexpr double kEtaClamp = 700.0;

double exp_clamped(double eta) {
  return std::exp(std::clamp(eta, -kEtaClamp, kEtaClamp));
}

[[noreturn]] void domain_fail(const char* what) {
  throw std::domain_error(std::string("family: ") + what);
}

double mean_of(std::span<const double> y) {
  double m = 0.0;
  for (double v : y) m += v;
  return y.empty() ? 0.0 : m / static_cast<double>(y.size());
}

double sd_of(std::span<const double> y, double m) {
  if (y.size() < 2) return 0.0;
  double s = 0.0;
  for (double v : y) s += (v - m) * (v - m);
  return std::sqrt(s / static_cast<double>(y.size()));
}

// ---- NBI helpers: pmf recurrence ------------------------------------------
//
// pmf(0) = (1 + s*mu)^(-1/s), pmf(y+1) = pmf(y) * (y + 1/s)/(y + 1) * c with
// c = s*mu/(1 + s*mu).  digamma/trigamma values at y + 1/s advance with the
// one-term recurrences psi(x+1) = psi(x) + 1/x, psi1(x+1) = psi1(x) - 1/x^2.

struct NbiIter {
  double r, c, pmf, psi_yr, psi1_yr;
  long long y = 0;

  NbiIter(double mu, double sigma) {
    r = 1.0 / sigma;
    const double l1p = std::log1p(sigma * mu);
    c = sigma * mu / (1.0 + sigma * mu);
    pmf = std::exp(-r * l1p);
    psi_yr = boost::math::digamma(r);
    psi1_yr = boost::math::trigamma(r);
  }

  void advance() {
    pmf *= (static_cast<double>(y) + r) * c / (static_cast<double>(y) + 1.0);
    psi1_yr -= 1.0 / ((static_cast<double>(y) + r) * (static_cast<double>(y) + r));
    psi_yr += 1.0 / (static_cast<double>(y) + r);
    ++y;
  }
};

double nbi_log_pmf(double y, double mu, double sigma) {
  const double r = 1.0 / sigma;
  const double l1p = std::log1p(sigma * mu);
  return std::lgamma(y + r) - std::lgamma(r) - std::lgamma(y + 1.0) -
         r * l1p + y * (std::log(sigma) + std::log(mu) - l1p);
}

// Observed -d2 log f / d eta_sigma^2 given precomputed digamma/trigamma at
// y + r (r = 1/sigma).
double nbi_sigma_curv(double y, double mu, double sigma, double psi_r,
                      double psi1_r, double psi_yr, double psi1_yr) {
  const double r = 1.0 / sigma;
  const double l1p = std::log1p(sigma * mu);
  const double om = 1.0 + sigma * mu;
  return r * (psi_r - psi_yr) + r * r * (psi1_r - psi1_yr) + r * l1p -
         mu / om + sigma * mu * (y - mu) / (om * om);
}

// Fisher weight for eta_sigma: expectation of the observed curvature under
// the model, accumulated over the pmf until all but 1e-12 of the mass is
// covered.
double nbi_sigma_fisher(double mu, double sigma) {
  NbiIter it(mu, sigma);
  const double psi_r = it.psi_yr;
  const double psi1_r = it.psi1_yr;
  if (!(it.pmf > 0.0)) {
    // Underflowed head: fall back to direct log-pmf evaluation around the
    // bulk of the distribution.
    const double sd = std::sqrt(mu + sigma * mu * mu);
    const long long lo =
        std::max(0LL, static_cast<long long>(mu - 12.0 * sd - 10.0));
    const long long hi = static_cast<long long>(mu + 20.0 * sd + 100.0);
    double acc = 0.0;
    for (long long yy = lo; yy <= hi; ++yy) {
      const double yd = static_cast<double>(yy);
      const double p = std::exp(nbi_log_pmf(yd, mu, sigma));
      const double r = 1.0 / sigma;
      acc += p * nbi_sigma_curv(yd, mu, sigma, psi_r, psi1_r,
                                boost::math::digamma(yd + r),
                                boost::math::trigamma(yd + r));
    }
    return acc;
  }
  double cum = 0.0;
  double acc = 0.0;
  const double sd = std::sqrt(mu + sigma * mu * mu);
  const long long cap =
      static_cast<long long>(mu + 200.0 * sd + 10000.0);
  while (cum < 1.0 - 1e-12 && it.y <= cap) {
    const double yd = static_cast<double>(it.y);
    cum += it.pmf;
    acc += it.pmf *
           nbi_sigma_curv(yd, mu, sigma, psi_r, psi1_r, it.psi_yr, it.psi1_yr);
    it.advance();
  }
  return acc;
}

// ---- generic quantile bisection --------------------------------------------

template <typename Cdf>
double bisect_quantile(Cdf&& cdf, double p, double lo, double hi,
                       bool lo_is_bound) {
  // expand the bracket until it contains p
  double width = std::max(1.0, hi - lo);
  for (int i = 0; i < 200 && cdf(hi) < p; ++i) {
    hi += width;
    width *= 2.0;
  }
  if (!lo_is_bound) {
    width = std::max(1.0, hi - lo);
    for (int i = 0; i < 200 && cdf(lo) > p; ++i) {
      lo -= width;
      width *= 2.0;
    }
  }
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    const double tol =
        1e-10 * std::max({1.0, std::fabs(lo), std::fabs(hi)});
    if (hi - lo <= tol) break;
    if (cdf(mid) < p)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

// ---- Link ------------------------------------------------------------------

double Link::forward(double theta) const {
  switch (kind) {
    case LinkKind::identity:
      return theta;
    case LinkKind::log:
      if (!(theta > 0.0)) domain_fail("log link needs a positive parameter");
      return std::log(theta);
  }
  return theta;
}

double Link::inverse(double eta) const {
  switch (kind) {
    case LinkKind::identity:
      return eta;
    case LinkKind::log:
      return exp_clamped(eta);
  }
  return eta;
}

std::string_view Link::name() const {
  return kind == LinkKind::identity ? "identity" : "log";
}

// ---- Family ----------------------------------------------------------------

Family Family::from_code(std::string_view code) {
  if (code == "NO") return Family(FamilyCode::NO);
  if (code == "GU") return Family(FamilyCode::GU);
  if (code == "NBI") return Family(FamilyCode::NBI);
  if (code == "GA") return Family(FamilyCode::GA);
  if (code == "TF") return Family(FamilyCode::TF);
  throw std::invalid_argument("unknown family code: " + std::string(code));
}

std::string_view Family::name() const {
  switch (code_) {
    case FamilyCode::NO: return "NO";
    case FamilyCode::GU: return "GU";
    case FamilyCode::NBI: return "NBI";
    case FamilyCode::GA: return "GA";
    case FamilyCode::TF: return "TF";
  }
  return "NO";
}

int Family::n_params() const { return code_ == FamilyCode::TF ? 3 : 2; }

std::string_view Family::param_name(int k) const {
  switch (k) {
    case 0: return "mu";
    case 1: return "sigma";
    case 2: return "nu";
  }
  throw std::invalid_argument("family: bad parameter index");
}

Link Family::link(int k) const {
  if (k < 0 || k >= n_params())
    throw std::invalid_argument("family: bad parameter index");
  switch (code_) {
    case FamilyCode::NO:
    case FamilyCode::GU:
    case FamilyCode::TF:
      return Link{k == 0 ? LinkKind::identity : LinkKind::log};
    case FamilyCode::NBI:
    case FamilyCode::GA:
      return Link{LinkKind::log};
  }
  return Link{};
}

bool Family::in_support(double y) const {
  if (!std::isfinite(y)) return false;
  switch (code_) {
    case FamilyCode::NO:
    case FamilyCode::GU:
    case FamilyCode::TF:
      return true;
    case FamilyCode::GA:
      return y > 0.0;
    case FamilyCode::NBI:
      return y >= 0.0 && std::fabs(y - std::nearbyint(y)) <= 1e-9;
  }
  return false;
}

void Family::validate_theta(const ParamVec& theta) const {
  const double mu = theta[0];
  const double sigma = theta[1];
  if (!std::isfinite(mu) || !std::isfinite(sigma) || sigma <= 0.0)
    domain_fail("invalid (mu, sigma)");
  if ((code_ == FamilyCode::NBI || code_ == FamilyCode::GA) && mu <= 0.0)
    domain_fail("mu must be positive");
  if (code_ == FamilyCode::TF) {
    const double nu = theta[2];
    if (!std::isfinite(nu) || nu <= 0.0) domain_fail("nu must be positive");
  }
}

void Family::validate(double y, const ParamVec& theta) const {
  if (!in_support(y)) domain_fail("response outside the support");
  validate_theta(theta);
}

double Family::log_density(double y, const ParamVec& theta) const {
  validate(y, theta);
  const double mu = theta[0];
  const double sigma = theta[1];
  switch (code_) {
    case FamilyCode::NO: {
      const double z = (y - mu) / sigma;
      return -kHalfLog2Pi - std::log(sigma) - 0.5 * z * z;
    }
    case FamilyCode::GU: {
      const double z = (y - mu) / sigma;
      return -std::log(sigma) + z - std::exp(z);
    }
    case FamilyCode::NBI:
      return nbi_log_pmf(std::nearbyint(y), mu, sigma);
    case FamilyCode::GA: {
      const double a = 1.0 / (sigma * sigma);
      return (a - 1.0) * std::log(y) - a * y / mu +
             a * (std::log(a) - std::log(mu)) - std::lgamma(a);
    }
    case FamilyCode::TF: {
      const double nu = theta[2];
      const double z = (y - mu) / sigma;
      return std::lgamma(0.5 * (nu + 1.0)) - std::lgamma(0.5 * nu) -
             0.5 * std::log(nu * kPi) - std::log(sigma) -
             0.5 * (nu + 1.0) * std::log1p(z * z / nu);
    }
  }
  return 0.0;
}

double Family::score(double y, const ParamVec& theta, int k) const {
  validate(y, theta);
  if (k < 0 || k >= n_params())
    throw std::invalid_argument("family: bad parameter index");
  const double mu = theta[0];
  const double sigma = theta[1];
  switch (code_) {
    case FamilyCode::NO: {
      const double z = (y - mu) / sigma;
      return k == 0 ? z / sigma : z * z - 1.0;
    }
    case FamilyCode::GU: {
      const double z = (y - mu) / sigma;
      const double ez = std::exp(z);
      return k == 0 ? (ez - 1.0) / sigma : -1.0 + z * (ez - 1.0);
    }
    case FamilyCode::NBI: {
      const double om = 1.0 + sigma * mu;
      if (k == 0) return y - mu * (1.0 + sigma * y) / om;
      const double r = 1.0 / sigma;
      return r * (boost::math::digamma(r) - boost::math::digamma(y + r)) +
             r * std::log1p(sigma * mu) - mu / om + y - sigma * y * mu / om;
    }
    case FamilyCode::GA: {
      const double a = 1.0 / (sigma * sigma);
      if (k == 0) return a * (y / mu - 1.0);
      const double dlda = std::log(y) - y / mu - std::log(mu) + std::log(a) +
                          1.0 - boost::math::digamma(a);
      return -2.0 * a * dlda;
    }
    case FamilyCode::TF: {
      const double nu = theta[2];
      const double z = (y - mu) / sigma;
      const double d = nu + z * z;
      if (k == 0) return (nu + 1.0) * z / (sigma * d);
      if (k == 1) return -1.0 + (nu + 1.0) * z * z / d;
      const double dldnu = 0.5 * (boost::math::digamma(0.5 * (nu + 1.0)) -
                                  boost::math::digamma(0.5 * nu)) -
                           0.5 / nu - 0.5 * std::log1p(z * z / nu) +
                           (nu + 1.0) * z * z / (2.0 * nu * d);
      return nu * dldnu;
    }
  }
  return 0.0;
}

double Family::curvature(double y, const ParamVec& theta, int k) const {
  validate(y, theta);
  if (k < 0 || k >= n_params())
    throw std::invalid_argument("family: bad parameter index");
  const double mu = theta[0];
  const double sigma = theta[1];
  switch (code_) {
    case FamilyCode::NO: {
      const double z = (y - mu) / sigma;
      return k == 0 ? 1.0 / (sigma * sigma) : 2.0 * z * z;
    }
    case FamilyCode::GU: {
      const double z = (y - mu) / sigma;
      const double ez = std::exp(z);
      return k == 0 ? ez / (sigma * sigma) : z * (ez - 1.0) + z * z * ez;
    }
    case FamilyCode::NBI: {
      const double om = 1.0 + sigma * mu;
      if (k == 0) return mu * (1.0 + sigma * y) / (om * om);
      const double r = 1.0 / sigma;
      return nbi_sigma_curv(y, mu, sigma, boost::math::digamma(r),
                            boost::math::trigamma(r),
                            boost::math::digamma(y + r),
                            boost::math::trigamma(y + r));
    }
    case FamilyCode::GA: {
      const double a = 1.0 / (sigma * sigma);
      if (k == 0) return a * y / mu;
      const double dlda = std::log(y) - y / mu - std::log(mu) + std::log(a) +
                          1.0 - boost::math::digamma(a);
      return -4.0 * a * dlda - 4.0 * a +
             4.0 * a * a * boost::math::trigamma(a);
    }
    case FamilyCode::TF: {
      const double nu = theta[2];
      const double z = (y - mu) / sigma;
      const double d = nu + z * z;
      if (k == 0) return (nu + 1.0) * (nu - z * z) / (sigma * sigma * d * d);
      if (k == 1) return 2.0 * nu * (nu + 1.0) * z * z / (d * d);
      const double dldnu = 0.5 * (boost::math::digamma(0.5 * (nu + 1.0)) -
                                  boost::math::digamma(0.5 * nu)) -
                           0.5 / nu - 0.5 * std::log1p(z * z / nu) +
                           (nu + 1.0) * z * z / (2.0 * nu * d);
      const double d2ldnu2 =
          0.25 * (boost::math::trigamma(0.5 * (nu + 1.0)) -
                  boost::math::trigamma(0.5 * nu)) +
          0.5 / (nu * nu) + z * z / (2.0 * nu * d) -
          z * z * (nu * nu + 2.0 * nu + z * z) / (2.0 * nu * nu * d * d);
      return -(nu * dldnu + nu * nu * d2ldnu2);
    }
  }
  return 0.0;
}

WeightKind Family::weight_kind(int k) const {
  switch (code_) {
    case FamilyCode::NO:
      return k == 0 ? WeightKind::observed : WeightKind::fisher;
    case FamilyCode::GU:
      return WeightKind::observed;
    case FamilyCode::NBI:
      return k == 0 ? WeightKind::observed : WeightKind::fisher;
    case FamilyCode::GA:
      return k == 0 ? WeightKind::observed : WeightKind::fisher;
    case FamilyCode::TF:
      return k == 1 ? WeightKind::observed : WeightKind::fisher;
  }
  return WeightKind::observed;
}

double Family::working_weight(double y, const ParamVec& theta, int k) const {
  if (weight_kind(k) == WeightKind::observed) return curvature(y, theta, k);
  validate(y, theta);
  const double mu = theta[0];
  const double sigma = theta[1];
  switch (code_) {
    case FamilyCode::NO:
      return 2.0;
    case FamilyCode::NBI:
      return nbi_sigma_fisher(mu, sigma);
    case FamilyCode::GA: {
      const double a = 1.0 / (sigma * sigma);
      return 4.0 * a * (a * boost::math::trigamma(a) - 1.0);
    }
    case FamilyCode::TF: {
      const double nu = theta[2];
      if (k == 0) return (nu + 1.0) / ((nu + 3.0) * sigma * sigma);
      const double innu =
          0.25 * (boost::math::trigamma(0.5 * nu) -
                  boost::math::trigamma(0.5 * (nu + 1.0))) -
          (nu + 5.0) / (2.0 * nu * (nu + 1.0) * (nu + 3.0));
      return nu * nu * innu;
    }
    default:
      return curvature(y, theta, k);
  }
}

double Family::cdf(double y, const ParamVec& theta) const {
  validate(y, theta);
  const double mu = theta[0];
  const double sigma = theta[1];
  switch (code_) {
    case FamilyCode::NO: {
      const double z = (y - mu) / sigma;
      return 0.5 * std::erfc(-z / std::sqrt(2.0));
    }
    case FamilyCode::GU: {
      const double z = (y - mu) / sigma;
      return -std::expm1(-std::exp(z));
    }
    case FamilyCode::NBI: {
      const long long yy = static_cast<long long>(std::nearbyint(y));
      NbiIter it(mu, sigma);
      double cum = 0.0;
      while (it.y <= yy) {
        cum += it.pmf;
        it.advance();
      }
      return std::min(cum, 1.0);
    }
    case FamilyCode::GA: {
      const double a = 1.0 / (sigma * sigma);
      return boost::math::gamma_p(a, a * y / mu);
    }
    case FamilyCode::TF: {
      const double nu = theta[2];
      boost::math::students_t_distribution<double> t(nu);
      return boost::math::cdf(t, (y - mu) / sigma);
    }
  }
  return 0.0;
}

double Family::quantile(double p, const ParamVec& theta) const {
  validate_theta(theta);
  if (!(p > 0.0 && p < 1.0)) domain_fail("quantile needs p in (0, 1)");
  const double mu = theta[0];
  const double sigma = theta[1];
  auto F = [&](double t) { return cdf(t, theta); };
  switch (code_) {
    case FamilyCode::NBI: {
      NbiIter it(mu, sigma);
      double cum = 0.0;
      const double sd = std::sqrt(mu + sigma * mu * mu);
      const long long cap =
          static_cast<long long>(mu + 500.0 * sd + 1000000.0);
      while (it.y <= cap) {
        cum += it.pmf;
        if (cum >= p) return static_cast<double>(it.y);
        it.advance();
      }
      return static_cast<double>(cap);
    }
    case FamilyCode::GA:
      return bisect_quantile(F, p, 0.0, std::max(mu, 1e-8), true);
    default:
      return bisect_quantile(F, p, mu - sigma, mu + sigma, false);
  }
}

double Family::sample(const ParamVec& theta, Rng& rng) const {
  validate_theta(theta);
  const double mu = theta[0];
  const double sigma = theta[1];
  switch (code_) {
    case FamilyCode::NO:
      return mu + sigma * rng.normal();
    case FamilyCode::GU: {
      const double u = std::clamp(rng.uniform(), 0x1.0p-53, 1.0 - 0x1.0p-53);
      return mu + sigma * std::log(-std::log1p(-u));
    }
    case FamilyCode::NBI:
    case FamilyCode::GA:
    case FamilyCode::TF: {
      const double u = std::clamp(rng.uniform(), 1e-15, 1.0 - 1e-15);
      return quantile(u, theta);
    }
  }
  return mu;
}

ParamVec Family::initial_theta(std::span<const double> y) const {
  const double m = mean_of(y);
  const double s = std::max(sd_of(y, m), 1e-4);
  ParamVec th{};
  switch (code_) {
    case FamilyCode::NO:
      th = {m, s, 0.0};
      break;
    case FamilyCode::GU: {
      const double scale = s * std::sqrt(6.0) / kPi;
      th = {m + kEulerGamma * scale, scale, 0.0};
      break;
    }
    case FamilyCode::NBI: {
      const double mu = std::max(m, 0.05);
      const double disp = (s * s - mu) / (mu * mu);
      th = {mu, std::clamp(disp, 1e-3, 10.0), 0.0};
      break;
    }
    case FamilyCode::GA: {
      const double mu = std::max(m, 1e-8);
      th = {mu, std::clamp(s / mu, 1e-3, 10.0), 0.0};
      break;
    }
    case FamilyCode::TF:
      th = {m, std::max(s * std::sqrt(3.0 / 5.0), 1e-4), 5.0};
      break;
  }
  return th;
}

// ---- batch kernels ----------------------------------------------------------

ParamVec theta_from_eta(const Family& fam, const EtaBlock& eta, std::size_t i) {
  ParamVec th{};
  for (int k = 0; k < fam.n_params(); ++k)
    th[k] = fam.link(k).inverse(eta[k][i]);
  return th;
}

void fill_log_density(const Family& fam, std::span<const double> y,
                      const EtaBlock& eta, std::vector<double>& out,
                      Exec exec) {
  out.resize(y.size());
  parallel_for(y.size(), exec, [&](std::size_t i) {
    out[i] = fam.log_density(y[i], theta_from_eta(fam, eta, i));
  });
}

void fill_score_weight(const Family& fam, std::span<const double> y,
                       const EtaBlock& eta, int k, std::vector<double>& u_out,
                       std::vector<double>& w_out, Exec exec) {
  u_out.resize(y.size());
  w_out.resize(y.size());
  parallel_for(y.size(), exec, [&](std::size_t i) {
    const ParamVec th = theta_from_eta(fam, eta, i);
    u_out[i] = fam.score(y[i], th, k);
    w_out[i] = fam.working_weight(y[i], th, k);
  });
}

double total_log_density(const Family& fam, std::span<const double> y,
                         const EtaBlock& eta, Exec exec) {
  std::vector<double> ll;
  fill_log_density(fam, y, eta, ll, exec);
  double acc = 0.0;
  for (double v : ll) acc += v;
  return acc;
}

}  // namespace dsoft
