#include "dsoft/datagen.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace dsoft {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kMuScale = 2.0 / 26.48;
constexpr double kSigmaScale = 2.0 / 1736.85;

double uniform_in(Rng& rng, double lo, double hi) {
  return lo + (hi - lo) * rng.uniform();
}

}  // namespace

std::pair<double, double> friedman_predictors(const std::array<double, 5>& x,
                                              const std::array<double, 4>& z) {
  const double f1 = 10.0 * std::sin(kPi * x[0] * x[1]) +
                    20.0 * (x[2] - 0.5) * (x[2] - 0.5) + 10.0 * x[3] +
                    5.0 * x[4];
  const double eta_mu = (f1 - 1.5) * kMuScale + 1.0;
  const double r = z[1] * z[2] - 1.0 / (z[1] * z[3]);
  const double f2 = std::sqrt(z[0] * z[0] + r * r);
  const double eta_sigma = (f2 - 7.96) * kSigmaScale - 2.5;
  return {eta_mu, eta_sigma};
}

std::pair<double, double> friedman_eta_mu_bounds() {
  // inner function ranges over [0, 10 + 20*0.25 + 10 + 5] = [0, 30]
  return {(0.0 - 1.5) * kMuScale + 1.0, (30.0 - 1.5) * kMuScale + 1.0};
}

Dataset simulate_dataset(const Family& family, std::size_t n,
                         std::uint64_t seed) {
  const FamilyCode code = family.code();
  if (code != FamilyCode::NO && code != FamilyCode::GU &&
      code != FamilyCode::NBI)
    throw std::invalid_argument(
        "simulate_dataset: supported families are NO, GU, NBI");
  if (n == 0) throw std::invalid_argument("simulate_dataset: n must be >= 1");

  Dataset d;
  d.X = Matrix(n, 9);
  d.y.resize(n);
  d.feature_names = {"x1", "x2", "x3", "x4", "x5", "z1", "z2", "z3", "z4"};
  d.eta_mu_true.resize(n);
  d.eta_sigma_true.resize(n);

  Rng rng(seed);
  for (std::size_t i = 0; i < n; ++i) {
    std::array<double, 5> x{};
    for (double& v : x) v = rng.uniform();
    std::array<double, 4> z{};
    z[0] = uniform_in(rng, 0.0, 100.0);
    z[1] = uniform_in(rng, 40.0, 560.0 * kPi);
    z[2] = rng.uniform();
    z[3] = uniform_in(rng, 1.0, 11.0);
    const auto [eta_mu, eta_sigma] = friedman_predictors(x, z);
    for (std::size_t j = 0; j < 5; ++j) d.X(i, j) = x[j];
    for (std::size_t j = 0; j < 4; ++j) d.X(i, 5 + j) = z[j];
    d.eta_mu_true[i] = eta_mu;
    d.eta_sigma_true[i] = eta_sigma;
    ParamVec theta{};
    theta[0] = family.link(0).inverse(eta_mu);
    theta[1] = family.link(1).inverse(eta_sigma);
    d.y[i] = family.sample(theta, rng);
  }
  return d;
}

Dataset toy_surface(ToyKind kind, std::size_t n, double noise_sd,
                    std::uint64_t seed) {
  if (n == 0) throw std::invalid_argument("toy_surface: n must be >= 1");
  if (!(noise_sd >= 0.0))
    throw std::invalid_argument("toy_surface: noise_sd must be >= 0");
  Dataset d;
  Rng rng(seed);
  const double log_sd = noise_sd > 0.0 ? std::log(noise_sd) : -30.0;

  if (kind == ToyKind::sine2d) {
    const auto g = static_cast<std::size_t>(
        std::llround(std::sqrt(static_cast<double>(n))));
    if (g < 2) throw std::invalid_argument("toy_surface: grid too small");
    const std::size_t m = g * g;
    d.X = Matrix(m, 2);
    d.y.resize(m);
    d.feature_names = {"x", "z"};
    d.eta_mu_true.resize(m);
    d.eta_sigma_true.assign(m, log_sd);
    const double lo = -kPi / 2.0, hi = kPi / 2.0;
    const double step = (hi - lo) / static_cast<double>(g - 1);
    std::size_t r = 0;
    for (std::size_t a = 0; a < g; ++a) {
      const double xa = lo + step * static_cast<double>(a);
      for (std::size_t b = 0; b < g; ++b, ++r) {
        const double zb = lo + step * static_cast<double>(b);
        const double f = std::sin(xa) * std::sin(zb);
        d.X(r, 0) = xa;
        d.X(r, 1) = zb;
        d.eta_mu_true[r] = f;
        d.y[r] = f + noise_sd * rng.normal();
      }
    }
    return d;
  }

  // step_oscillation
  d.X = Matrix(n, 1);
  d.y.resize(n);
  d.feature_names = {"x"};
  d.eta_mu_true.resize(n);
  d.eta_sigma_true.assign(n, log_sd);
  const double lo = -5.0, hi = 5.0;
  const double step =
      n > 1 ? (hi - lo) / static_cast<double>(n - 1) : 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = lo + step * static_cast<double>(i);
    const double f = x > -1.0 ? 1.5 + 0.4 * std::sin(6.0 * x) : 0.0;
    d.X(i, 0) = x;
    d.eta_mu_true[i] = f;
    d.y[i] = f + noise_sd * rng.normal();
  }
  return d;
}

}  // namespace dsoft
