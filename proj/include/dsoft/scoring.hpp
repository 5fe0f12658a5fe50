#pragma once

#include <functional>
#include <span>

#include "dsoft/family.hpp"

namespace dsoft {

/// Negatively oriented logarithmic score: -log f(y; theta).
double log_score(const Family& fam, double y, const ParamVec& theta);

/// Adaptive Simpson quadrature of f over [a, b] to absolute tolerance tol.
double adaptive_simpson(const std::function<double(double)>& f, double a,
                        double b, double tol);

/// CRPS(F, y) = integral of (F(t) - 1{t >= y})^2 dt for a cdf given as a
/// callable, integrating [lo, y] and [y, hi] separately (y is clamped into
/// [lo, hi] internally when outside).
double crps_from_cdf(const std::function<double(double)>& cdf, double y,
                     double lo, double hi, double abs_tol = 1e-6);

/// CRPS for a continuous family: closed form for the normal, otherwise
/// adaptive quadrature over the essential support window split at y,
/// absolute tolerance 1e-6.  Discrete families are unsupported (use
/// log_score) and throw std::invalid_argument.
double crps(const Family& fam, double y, const ParamVec& theta);

/// Root mean squared difference between two equally long vectors.
double predictor_rmse(std::span<const double> eta_hat,
                      std::span<const double> eta_true);

double mean_of(std::span<const double> v);
double median_of(std::vector<double> v);  // by value: partially sorts a copy

}  // namespace dsoft
