#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "dsoft/dataset.hpp"
#include "dsoft/family.hpp"
#include "dsoft/gating.hpp"
#include "dsoft/optimizer.hpp"

namespace dsoft {

enum class Criterion { AIC, BIC };
enum class GrowthMode { per_param, best_param };
enum class RefineMode { all, new_only };

/// AIC = -2 ll + 2 df, BIC = -2 ll + log(n) df.
double information_criterion(double loglik, int df, std::size_t n, Criterion c);

struct FitConfig {
  ShrinkageConfig shrinkage;
  Criterion criterion = Criterion::AIC;
  /// Cap on non-root nodes per tree (each split adds two).
  int max_nodes = 64;
  /// Random gate initializations per candidate, in addition to the zero
  /// vector.
  int candidate_restarts = 5;
  std::uint64_t seed = kDefaultSeed;
  GrowthMode growth = GrowthMode::per_param;
  RefineMode refine = RefineMode::all;
  /// Gate-optimization / coefficient-solve alternations per candidate.
  int candidate_cycles = 2;
  int max_outer_iters = 500;
};

/// One soft regression tree: every node (interior and leaf) carries a
/// coefficient, every split node a gate; the linear predictor is
/// beta[0] + sum_j path_prob(j, x) * beta[j].
struct SoftTree {
  TreeTopology topo;
  std::vector<GateNode> gates;  // by node id; empty entry for leaves
  std::vector<double> beta;     // by node id; beta[0] is the intercept

  SoftTree() : gates(1), beta(1, 0.0) {}
  int n_coefficients() const { return static_cast<int>(beta.size()); }
};

struct FitStep {
  int iteration = 0;
  int param = -1;
  std::string action;  // "split", "reject", "skip", "stop"
  int node = -1;
  double gain = 0.0;
  double loglik = 0.0;
  int df = 0;
  double criterion = 0.0;
};

struct FitReport {
  std::vector<FitStep> steps;
  /// Criterion after the intercept-only init and after each accepted split
  /// (post refine); strictly decreasing by construction of the stopping rule.
  std::vector<double> criterion_trace;
  std::vector<double> loglik_trace;
  double final_loglik = 0.0;
  int final_df = 0;
  double final_criterion = 0.0;
  std::string criterion_name = "AIC";
  std::size_t n_train = 0;
  std::string stop_reason;
  std::string warning;
};

/// Snapshot handed to the on_accept hook right after a split is applied and
/// before any refinement pass.
struct SplitAcceptEvent {
  int tree_index = -1;
  int parent_node = -1;
  int left_id = -1;
  int right_id = -1;
  std::array<double, 2> beta_children{0.0, 0.0};
  std::vector<double> beta_before;
  std::vector<double> eta_before;
  std::vector<double> eta_after;
  std::vector<double> col_left;
  std::vector<double> col_right;
};

struct FitHooks {
  std::function<void(const SplitAcceptEvent&)> on_accept;
};

/// Distributional model: one soft tree per tree-modeled parameter plus
/// intercept-only parameters (TF's nu) on the linked scale.
struct DistModel {
  Family family;
  std::vector<SoftTree> trees;
  std::vector<double> fixed_eta;
  Standardizer standardizer;
  FitConfig config;
  std::uint64_t seed = kDefaultSeed;
  FitReport report;

  /// Coefficient count plus intercept-only parameters; gate weights are not
  /// counted.
  int df() const {
    int d = static_cast<int>(fixed_eta.size());
    for (const auto& t : trees) d += t.n_coefficients();
    return d;
  }
};

class FitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Grow one adaptive soft tree per distribution parameter: intercept-only
/// init, then per outer iteration candidate soft splits at every leaf
/// (shrinkage-penalized gate ML + ridge-stabilized coefficient updates),
/// accepting the best likelihood gain while the information criterion
/// improves, with a gate refinement pass after each accepted split.
DistModel fit(const Dataset& data, const Family& family, const FitConfig& cfg,
              const FitHooks& hooks = {});

/// Degenerate fit: intercept-only maximum likelihood for every parameter.
DistModel fit_intercept_only(const Dataset& data, const Family& family,
                             FitConfig cfg = {});

/// One gate-refinement pass over the given tree's gates in creation order,
/// re-solving the gate's child coefficients after each gate update; the
/// penalized log-likelihood never decreases.  Refreshes the model's report
/// likelihood figures.
void refine_all_gates(DistModel& model, const Dataset& data, int tree_index);

/// Linked predictors for (raw, unstandardized) features.
void predict_eta(const DistModel& model, const Matrix& X, EtaBlock& eta,
                 Exec exec = Exec::parallel);
/// Natural-scale distribution parameters per row.
std::vector<ParamVec> predict_theta(const DistModel& model, const Matrix& X,
                                    Exec exec = Exec::parallel);
/// Sum of log densities of `data` under the model's predictions.
double model_log_likelihood(const DistModel& model, const Dataset& data,
                            Exec exec = Exec::parallel);

}  // namespace dsoft
