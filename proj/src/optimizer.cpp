#include "dsoft/optimizer.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace dsoft {

IwlsResult iwls_update(std::span<const double> n1, std::span<const double> n2,
                       std::span<const double> u, std::span<const double> w,
                       double zeta) {
  const std::size_t n = n1.size();
  if (n2.size() != n || u.size() != n || w.size() != n)
    throw std::invalid_argument("iwls: length mismatch");
  long double a11 = 0, a12 = 0, a22 = 0, b1 = 0, b2 = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const long double c1 = n1[i];
    const long double c2 = n2[i];
    const long double wi = w[i];
    a11 += wi * c1 * c1;
    a12 += wi * c1 * c2;
    a22 += wi * c2 * c2;
    b1 += c1 * static_cast<long double>(u[i]);
    b2 += c2 * static_cast<long double>(u[i]);
  }
  a11 += zeta;
  a22 += zeta;
  const long double det = a11 * a22 - a12 * a12;
  IwlsResult out;
  if (!(det > 0.0L) || !std::isfinite(static_cast<double>(det))) {
    out.singular = true;
    return out;
  }
  const long double x1 = (a22 * b1 - a12 * b2) / det;
  const long double x2 = (a11 * b2 - a12 * b1) / det;
  if (!std::isfinite(static_cast<double>(x1)) ||
      !std::isfinite(static_cast<double>(x2))) {
    out.singular = true;
    return out;
  }
  out.beta = {static_cast<double>(x1), static_cast<double>(x2)};
  return out;
}

namespace {

bool neg_definite_solve(const Eigen::MatrixXd& hess, const Eigen::VectorXd& g,
                        Eigen::VectorXd& step) {
  // Newton ascent step: solve (-H) d = g; valid only when -H is positive
  // definite.
  Eigen::LDLT<Eigen::MatrixXd> ldlt(-hess);
  if (ldlt.info() != Eigen::Success) return false;
  if (!(ldlt.vectorD().array() > 0.0).all()) return false;
  step = ldlt.solve(g);
  return step.allFinite();
}

}  // namespace

GateOptResult optimize_gate(const GateObjective& objective,
                            const Eigen::VectorXd& omega_init,
                            const ShrinkageConfig& cfg) {
  constexpr double kArmijo = 1e-4;
  constexpr double kMinStep = 1e-12;

  GateOptResult res;
  res.omega = omega_init;

  const auto dim = omega_init.size();
  Eigen::VectorXd grad(dim);
  Eigen::MatrixXd hess(dim, dim);
  double value = 0.0;
  objective.derivatives(res.omega, value, grad, hess);
  res.value = value;
  if (!std::isfinite(value))
    throw std::runtime_error("gate optimizer: non-finite objective at start");
  if (grad.lpNorm<Eigen::Infinity>() < cfg.grad_tol) {
    res.converged = true;
    return res;
  }

  for (int iter = 0; iter < cfg.max_inner_iters; ++iter) {
    res.iterations = iter + 1;

    Eigen::VectorXd step;
    bool newton = neg_definite_solve(hess, grad, step);
    if (!newton) {
      const double gnorm = grad.norm();
      step = grad / std::max(gnorm, 1e-8);
    }

    const double slope = grad.dot(step);
    double t = 1.0;
    double new_value = -std::numeric_limits<double>::infinity();
    Eigen::VectorXd trial;
    bool improved = false;
    while (t >= kMinStep) {
      trial = res.omega + t * step;
      new_value = objective.value(trial);
      if (std::isfinite(new_value) &&
          new_value >= value + kArmijo * t * slope) {
        improved = true;
        break;
      }
      t *= 0.5;
    }
    if (!improved && newton) {
      // Newton direction failed to make progress; retry along the gradient.
      const double gnorm = grad.norm();
      step = grad / std::max(gnorm, 1e-8);
      t = 1.0;
      while (t >= kMinStep) {
        trial = res.omega + t * step;
        new_value = objective.value(trial);
        if (std::isfinite(new_value) &&
            new_value >= value + kArmijo * t * grad.dot(step)) {
          improved = true;
          break;
        }
        t *= 0.5;
      }
    }
    if (!improved) break;  // numerically stuck; keep the best point seen

    res.omega = trial;
    value = new_value;
    objective.derivatives(res.omega, value, grad, hess);
    res.value = value;
    if (grad.lpNorm<Eigen::Infinity>() < cfg.grad_tol) {
      res.converged = true;
      break;
    }
  }
  return res;
}

}  // namespace dsoft
