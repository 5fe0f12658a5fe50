#pragma once

#include <Eigen/Dense>
#include <array>
#include <span>
#include <vector>

namespace dsoft {

/// Shrinkage and inner-optimizer settings.  lambda holds one value per
/// distribution parameter (a single entry broadcasts to all).
struct ShrinkageConfig {
  std::vector<double> lambda{10.0};
  double ridge_zeta = 1e-5;
  int max_inner_iters = 100;
  double grad_tol = 1e-6;
  bool penalize_bias = true;

  double lambda_for(std::size_t k) const {
    if (lambda.empty()) return 0.0;
    return k < lambda.size() ? lambda[k] : lambda.back();
  }
};

struct IwlsResult {
  std::array<double, 2> beta{0.0, 0.0};
  bool singular = false;
};

/// Ridge-stabilized coefficient update for one two-column block:
///   beta = (N' W N + zeta I)^{-1} N' u
/// Accumulation and the closed-form 2x2 solve run in long double; with the
/// ridge active the determinant is dominated by zeta terms that cancel
/// catastrophically in double when the block is nearly rank-deficient.
/// A numerically singular system yields a zero update with `singular` set.
IwlsResult iwls_update(std::span<const double> n1, std::span<const double> n2,
                       std::span<const double> u, std::span<const double> w,
                       double zeta);

/// Objective for one gate's weights (penalty already included): callers
/// provide the value and, together, the gradient and Hessian.
class GateObjective {
 public:
  virtual ~GateObjective() = default;
  virtual double value(const Eigen::VectorXd& omega) const = 0;
  virtual void derivatives(const Eigen::VectorXd& omega, double& val,
                           Eigen::VectorXd& grad,
                           Eigen::MatrixXd& hess) const = 0;
};

struct GateOptResult {
  Eigen::VectorXd omega;
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Maximize a penalized gate objective by damped Newton with a backtracking
/// (Armijo) line search, falling back to gradient ascent whenever the Hessian
/// is not negative-definite.  Returns omega_init untouched when the gradient
/// is already below grad_tol.  The objective value never decreases.
GateOptResult optimize_gate(const GateObjective& objective,
                            const Eigen::VectorXd& omega_init,
                            const ShrinkageConfig& cfg);

}  // namespace dsoft
