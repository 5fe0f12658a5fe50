#pragma once

#include <array>
#include <cstdint>
#include <utility>

#include "dsoft/dataset.hpp"
#include "dsoft/family.hpp"

namespace dsoft {

/// Scaled Friedman-style predictor pair: eta_mu from the smooth 5-input
/// benchmark function of x, eta_sigma from the radical benchmark function of
/// z.  Total formulas; the stated input ranges are x in [0,1]^5,
/// z1 in [0,100], z2 in [40, 560*pi], z3 in [0,1], z4 in [1,11].
std::pair<double, double> friedman_predictors(const std::array<double, 5>& x,
                                              const std::array<double, 4>& z);

/// Analytic range of eta_mu over the stated input box.
std::pair<double, double> friedman_eta_mu_bounds();

/// Draw n rows: x and z uniform over their ranges, response sampled from the
/// family at the inverse-linked predictors (mu from eta_mu, sigma from
/// eta_sigma).  Supported families: NO, GU, NBI.  True predictors are stored
/// alongside for later RMSE evaluation.
Dataset simulate_dataset(const Family& family, std::size_t n,
                         std::uint64_t seed);

enum class ToyKind { sine2d, step_oscillation };

/// Deterministic toy fixtures:
///   sine2d           g x g grid (g = round(sqrt(n))) on [-pi/2, pi/2]^2,
///                    y = sin(x) sin(z) + noise
///   step_oscillation n equidistant x in [-5, 5],
///                    y = 1{x > -1} * (1.5 + 0.4 sin(6x)) + noise
/// The true mean is stored in eta_mu_true, log(noise_sd) in eta_sigma_true.
Dataset toy_surface(ToyKind kind, std::size_t n, double noise_sd,
                    std::uint64_t seed);

}  // namespace dsoft
