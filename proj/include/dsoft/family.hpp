#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dsoft/exec.hpp"
#include "dsoft/rng.hpp"

namespace dsoft {

inline constexpr int kMaxParams = 3;

/// Distribution parameters on the natural scale (mu, sigma[, nu]); slots past
/// the family's parameter count are unused.
using ParamVec = std::array<double, kMaxParams>;

enum class FamilyCode { NO, GU, NBI, GA, TF };

enum class LinkKind { identity, log };

/// Monotone link h mapping a natural parameter to its unconstrained predictor
/// eta = h(theta).
struct Link {
  LinkKind kind = LinkKind::identity;
  double forward(double theta) const;
  double inverse(double eta) const;
  std::string_view name() const;
};

/// Whether the IWLS weight for a parameter is the observed negative second
/// derivative or its expectation under the model (used when the observed
/// curvature can be non-positive).
enum class WeightKind { observed, fisher };

/// Two-parameter (plus optional dof) response distributions with per-parameter
/// links, derivatives taken with respect to the linked predictors, and
/// cdf/quantile/sampling support.
///
/// Parameterizations (mean/dispersion, matching common distributional
/// regression conventions):
///   NO  normal(mu, sigma)                        links: identity, log
///   GU  min-Gumbel, log f = -log s + z - e^z     links: identity, log
///   NBI negative binomial, var = mu + s*mu^2     links: log, log
///   GA  gamma, shape 1/s^2, mean mu              links: log, log
///   TF  t location-scale with dof nu             links: identity, log, log
class Family {
 public:
  static Family from_code(std::string_view code);  // throws invalid_argument
  explicit Family(FamilyCode c = FamilyCode::NO) : code_(c) {}

  FamilyCode code() const { return code_; }
  std::string_view name() const;
  int n_params() const;
  std::string_view param_name(int k) const;  // "mu", "sigma", "nu"
  Link link(int k) const;
  bool discrete() const { return code_ == FamilyCode::NBI; }
  /// Parameters beyond this index are fitted intercept-only (TF's nu).
  int n_tree_params() const { return code_ == FamilyCode::TF ? 2 : n_params(); }

  bool in_support(double y) const;
  /// Throws std::domain_error when theta is outside the parameter space.
  void validate_theta(const ParamVec& theta) const;
  /// Throws std::domain_error when y is outside the support or theta outside
  /// the parameter space.
  void validate(double y, const ParamVec& theta) const;

  double log_density(double y, const ParamVec& theta) const;
  /// d log f / d eta_k.
  double score(double y, const ParamVec& theta, int k) const;
  /// Observed curvature -d2 log f / d eta_k^2 (exact, finite-difference
  /// checkable for every parameter).
  double curvature(double y, const ParamVec& theta, int k) const;
  WeightKind weight_kind(int k) const;
  /// IWLS weight: observed curvature, or the Fisher expectation where the
  /// observed value can be non-positive.
  double working_weight(double y, const ParamVec& theta, int k) const;

  double cdf(double y, const ParamVec& theta) const;
  /// Inverse cdf. Continuous families use monotone bisection on the cdf to
  /// 1e-10; NBI returns the smallest integer with cdf >= p.
  double quantile(double p, const ParamVec& theta) const;
  double sample(const ParamVec& theta, Rng& rng) const;

  /// Moment-based starting values for intercept-only fitting.
  ParamVec initial_theta(std::span<const double> y) const;

 private:
  FamilyCode code_;
};

/// Per-parameter predictors for a batch of rows; eta[k][i] is row i's linked
/// predictor for parameter k.
using EtaBlock = std::array<std::vector<double>, kMaxParams>;

ParamVec theta_from_eta(const Family& fam, const EtaBlock& eta, std::size_t i);

/// Batch kernels (row-parallel under Exec::parallel, bitwise identical to the
/// serial reference path).
void fill_log_density(const Family& fam, std::span<const double> y,
                      const EtaBlock& eta, std::vector<double>& out, Exec exec);
void fill_score_weight(const Family& fam, std::span<const double> y,
                       const EtaBlock& eta, int k, std::vector<double>& u_out,
                       std::vector<double>& w_out, Exec exec);
/// Deterministic total: parallel per-row fill, then a serial left-to-right sum
/// so the result does not depend on thread count.
double total_log_density(const Family& fam, std::span<const double> y,
                         const EtaBlock& eta, Exec exec);

}  // namespace dsoft
