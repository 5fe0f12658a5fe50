// Shared independent oracles for the test suite: finite differences,
// brute-force pmf summation, high-precision linear algebra, quadrature and
// Monte-Carlo CRPS. Everything here is implemented from scratch on purpose so
// the library is checked against code that shares none of its internals.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/multiprecision/cpp_bin_float.hpp>

#include "dsoft/family.hpp"

namespace oracles {

// ---------------------------------------------------------------------------
// finite differences

inline double fd1(const std::function<double(double)>& f, double x,
                  double h = 1e-6) {
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

inline double fd2(const std::function<double(double)>& f, double x,
                  double h = 1e-4) {
  return (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h);
}

inline double rel_err(double got, double want) {
  return std::abs(got - want) / std::max(1.0, std::abs(want));
}

// log-density of family `fam` as a function of the k-th linked predictor,
// other parameters held at theta
inline std::function<double(double)> loglik_of_eta(const dsoft::Family& fam,
                                                   double y,
                                                   dsoft::ParamVec theta,
                                                   int k) {
  return [fam, y, theta, k](double eta) {
    dsoft::ParamVec th = theta;
    th[static_cast<std::size_t>(k)] = fam.link(k).inverse(eta);
    return fam.log_density(y, th);
  };
}

inline std::function<double(double)> score_of_eta(const dsoft::Family& fam,
                                                  double y,
                                                  dsoft::ParamVec theta,
                                                  int k) {
  return [fam, y, theta, k](double eta) {
    dsoft::ParamVec th = theta;
    th[static_cast<std::size_t>(k)] = fam.link(k).inverse(eta);
    return fam.score(y, th, k);
  };
}

// ---------------------------------------------------------------------------
// negative binomial mass function, written directly from the mean/dispersion
// definition: r = 1/sigma, p = r/(r+mu), P(Y=y) = C(y+r-1, y) p^r (1-p)^y

inline double nbi_log_pmf(double y, double mu, double sigma) {
  const double r = 1.0 / sigma;
  const double logp = std::log(r) - std::log(r + mu);
  const double log1mp = std::log(mu) - std::log(r + mu);
  return std::lgamma(y + r) - std::lgamma(r) - std::lgamma(y + 1.0) +
         r * logp + y * log1mp;
}

inline double nbi_pmf(double y, double mu, double sigma) {
  return std::exp(nbi_log_pmf(y, mu, sigma));
}

inline double nbi_cdf_bruteforce(double y, double mu, double sigma) {
  double acc = 0.0;
  for (double k = 0.0; k <= y + 0.5; k += 1.0) acc += nbi_pmf(k, mu, sigma);
  return std::min(acc, 1.0);
}

// ---------------------------------------------------------------------------
// 50-digit solve of the 2x2 ridge-stabilized normal equations
// (N^T W N + zeta I) beta = N^T u

struct IwlsOracleResult {
  double b0, b1;
};

inline IwlsOracleResult iwls_oracle(const std::vector<double>& n1,
                                    const std::vector<double>& n2,
                                    const std::vector<double>& u,
                                    const std::vector<double>& w,
                                    double zeta) {
  using mp = boost::multiprecision::cpp_bin_float_50;
  mp a11 = 0, a12 = 0, a22 = 0, b1 = 0, b2 = 0;
  for (std::size_t i = 0; i < n1.size(); ++i) {
    const mp wi = w[i];
    const mp x1 = n1[i];
    const mp x2 = n2[i];
    a11 += wi * x1 * x1;
    a12 += wi * x1 * x2;
    a22 += wi * x2 * x2;
    b1 += x1 * mp(u[i]);
    b2 += x2 * mp(u[i]);
  }
  a11 += mp(zeta);
  a22 += mp(zeta);
  const mp det = a11 * a22 - a12 * a12;
  if (det == 0) throw std::runtime_error("iwls_oracle: singular");
  const mp s0 = (a22 * b1 - a12 * b2) / det;
  const mp s1 = (a11 * b2 - a12 * b1) / det;
  return {s0.convert_to<double>(), s1.convert_to<double>()};
}

// ---------------------------------------------------------------------------
// CRPS oracles

// integral of (F - 1{t >= y})^2 over [lo, hi] via Gauss-Kronrod
inline double crps_quadrature(const std::function<double(double)>& cdf,
                              double y, double lo, double hi) {
  using boost::math::quadrature::gauss_kronrod;
  const auto below = [&](double t) {
    const double v = cdf(t);
    return v * v;
  };
  const auto above = [&](double t) {
    const double v = 1.0 - cdf(t);
    return v * v;
  };
  const double yc = std::clamp(y, lo, hi);
  double left = 0.0, right = 0.0;
  if (yc > lo)
    left = gauss_kronrod<double, 61>::integrate(below, lo, yc, 12, 1e-10);
  if (hi > yc)
    right = gauss_kronrod<double, 61>::integrate(above, yc, hi, 12, 1e-10);
  return left + right;
}

struct McCrps {
  double estimate;
  double se;
};

// energy form E|X - y| - 0.5 E|X - X'| with batch-replicate standard error;
// draws use the family sampler under an independent std RNG stream
inline McCrps crps_energy_mc(const dsoft::Family& fam,
                             const dsoft::ParamVec& theta, double y,
                             int batches, int per_batch, std::uint64_t seed) {
  std::vector<double> means(static_cast<std::size_t>(batches));
  dsoft::Rng rng(seed);
  for (int b = 0; b < batches; ++b) {
    double acc = 0.0;
    for (int i = 0; i < per_batch; ++i) {
      const double x1 = fam.sample(theta, rng);
      const double x2 = fam.sample(theta, rng);
      acc += std::abs(x1 - y) - 0.5 * std::abs(x1 - x2);
    }
    means[static_cast<std::size_t>(b)] = acc / per_batch;
  }
  double m = 0.0;
  for (double v : means) m += v;
  m /= batches;
  double var = 0.0;
  for (double v : means) var += (v - m) * (v - m);
  var /= (batches - 1);
  return {m, std::sqrt(var / batches)};
}

// ---------------------------------------------------------------------------
// misc statistics

inline double mean(const std::vector<double>& v) {
  double acc = 0.0;
  for (double x : v) acc += x;
  return acc / static_cast<double>(v.size());
}

inline double median(std::vector<double> v) {
  const std::size_t m = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(m),
                   v.end());
  double hi = v[m];
  if (v.size() % 2 == 0) {
    std::nth_element(v.begin(),
                     v.begin() + static_cast<std::ptrdiff_t>(m) - 1,
                     v.begin() + static_cast<std::ptrdiff_t>(m));
    return 0.5 * (v[m - 1] + hi);
  }
  return hi;
}

// total variation of a 1-d curve sampled on a grid
inline double total_variation(const std::vector<double>& curve) {
  double tv = 0.0;
  for (std::size_t i = 1; i < curve.size(); ++i)
    tv += std::abs(curve[i] - curve[i - 1]);
  return tv;
}

// random draws for property tests (independent of the library RNG)
struct TestRng {
  std::mt19937_64 gen;
  explicit TestRng(std::uint64_t seed) : gen(seed) {}
  double uniform(double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(gen);
  }
  double normal(double m = 0.0, double sd = 1.0) {
    return std::normal_distribution<double>(m, sd)(gen);
  }
  int integer(int lo, int hi) {
    return std::uniform_int_distribution<int>(lo, hi)(gen);
  }
};

// a random valid (y, theta) state for each family, kept away from parameter
// space boundaries so finite differences stay inside the domain
inline void random_state(const dsoft::Family& fam, TestRng& rng, double& y,
                         dsoft::ParamVec& theta) {
  using dsoft::FamilyCode;
  theta = {0.0, 0.0, 0.0};
  switch (fam.code()) {
    case FamilyCode::NO:
      theta[0] = rng.uniform(-5.0, 5.0);
      theta[1] = rng.uniform(0.3, 4.0);
      y = theta[0] + theta[1] * rng.normal() * 1.5;
      break;
    case FamilyCode::GU:
      theta[0] = rng.uniform(-5.0, 5.0);
      theta[1] = rng.uniform(0.3, 4.0);
      y = theta[0] + theta[1] * rng.uniform(-3.0, 1.5);
      break;
    case FamilyCode::NBI:
      theta[0] = rng.uniform(0.5, 15.0);
      theta[1] = rng.uniform(0.1, 2.0);
      y = rng.integer(0, 30);
      break;
    case FamilyCode::GA:
      theta[0] = rng.uniform(0.5, 10.0);
      theta[1] = rng.uniform(0.2, 1.5);
      y = theta[0] * rng.uniform(0.2, 2.5);
      break;
    case FamilyCode::TF:
      theta[0] = rng.uniform(-5.0, 5.0);
      theta[1] = rng.uniform(0.3, 4.0);
      theta[2] = rng.uniform(2.5, 20.0);
      y = theta[0] + theta[1] * rng.uniform(-4.0, 4.0);
      break;
  }
}

inline const std::vector<dsoft::Family>& all_families() {
  static const std::vector<dsoft::Family> fams{
      dsoft::Family(dsoft::FamilyCode::NO), dsoft::Family(dsoft::FamilyCode::GU),
      dsoft::Family(dsoft::FamilyCode::NBI),
      dsoft::Family(dsoft::FamilyCode::GA),
      dsoft::Family(dsoft::FamilyCode::TF)};
  return fams;
}

}  // namespace oracles
