#pragma once

#include <cstdint>
#include <vector>

#include "dsoft/tree.hpp"

namespace dsoft {

/// Bagged ensemble of distributional tree models.  All members share the
/// family, links and feature layout; aggregation averages the linked
/// predictors, then applies the inverse links.
struct ForestModel {
  std::vector<DistModel> members;
  double bag_fraction = 0.63;
  int n_trees = 0;
  std::uint64_t seed = kDefaultSeed;

  const Family& family() const { return members.front().family; }
};

/// Fit `n_trees` members, each on an independent seeded subsample without
/// replacement of ceil(bag_fraction * n) rows.  Member seeds and subsamples
/// derive deterministically from `seed`; with n_trees = 1 and
/// bag_fraction = 1 the single member equals fit() with the same seed.
ForestModel fit_forest(const Dataset& data, const Family& family,
                       const FitConfig& config, int n_trees,
                       double bag_fraction, std::uint64_t seed);

/// The subsample row indices member `member` would train on (sorted).
std::vector<std::size_t> forest_subsample(std::size_t n, double bag_fraction,
                                          std::uint64_t seed, int member);

/// Per-parameter mean of member predictors on the linked scale.
void predict_eta_forest(const ForestModel& forest, const Matrix& X,
                        EtaBlock& eta, Exec exec = Exec::parallel);
/// Natural-scale parameters from the linked-scale mean.
std::vector<ParamVec> predict_theta_forest(const ForestModel& forest,
                                           const Matrix& X,
                                           Exec exec = Exec::parallel);

}  // namespace dsoft
