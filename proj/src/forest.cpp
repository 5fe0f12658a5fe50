#include "dsoft/forest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>
#include <utility>

namespace dsoft {

std::vector<std::size_t> forest_subsample(std::size_t n, double bag_fraction,
                                          std::uint64_t seed, int member) {
  const auto m = static_cast<std::size_t>(
      std::ceil(bag_fraction * static_cast<double>(n)));
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  if (m < n) {
    Rng rng(derive_seed(seed, {0xba66ULL, static_cast<std::uint64_t>(member)}));
    for (std::size_t i = 0; i < m; ++i) {
      const std::size_t j =
          i + static_cast<std::size_t>(rng.uniform() *
                                       static_cast<double>(n - i));
      std::swap(idx[i], idx[std::min(j, n - 1)]);
    }
    idx.resize(m);
  }
  std::sort(idx.begin(), idx.end());
  return idx;
}

ForestModel fit_forest(const Dataset& data, const Family& family,
                       const FitConfig& config, int n_trees,
                       double bag_fraction, std::uint64_t seed) {
  if (n_trees < 1)
    throw std::invalid_argument("fit_forest: n_trees must be >= 1");
  if (!(bag_fraction > 0.0) || bag_fraction > 1.0)
    throw std::invalid_argument("fit_forest: bag_fraction must be in (0, 1]");

  ForestModel forest;
  forest.bag_fraction = bag_fraction;
  forest.n_trees = n_trees;
  forest.seed = seed;
  forest.members.resize(static_cast<std::size_t>(n_trees));

  std::vector<std::string> errors(static_cast<std::size_t>(n_trees));
  parallel_for_jobs(static_cast<std::size_t>(n_trees), 0, [&](std::size_t t) {
    const auto rows =
        forest_subsample(data.n(), bag_fraction, seed, static_cast<int>(t));
    const Dataset sub = rows.size() == data.n() ? data : data.subset(rows);
    FitConfig cfg = config;
    // member 0 keeps the forest seed so a one-member full-bag forest equals
    // a plain fit with the same seed
    cfg.seed = seed + t;
    try {
      forest.members[t] = fit(sub, family, cfg);
    } catch (const std::exception& ex) {
      errors[t] = ex.what();
      if (errors[t].empty()) errors[t] = "unknown error";
    }
  });
  for (std::size_t t = 0; t < errors.size(); ++t)
    if (!errors[t].empty())
      throw FitError("fit_forest: member " + std::to_string(t) +
                     " failed: " + errors[t]);
  return forest;
}

void predict_eta_forest(const ForestModel& forest, const Matrix& X,
                        EtaBlock& eta, Exec exec) {
  if (forest.members.empty())
    throw std::invalid_argument("predict_eta_forest: empty forest");
  const std::size_t m = forest.members.size();
  const int K = forest.family().n_params();
  std::vector<EtaBlock> per_member(m);
  parallel_for_jobs(m, 0, [&](std::size_t t) {
    predict_eta(forest.members[t], X, per_member[t], Exec::serial);
  });
  // Summing member contributions in value order makes the mean independent
  // of member ordering (bitwise), not just up to rounding.
  const std::size_t n = X.n;
  const double inv_m = 1.0 / static_cast<double>(m);
  for (int k = 0; k < K; ++k) eta[k].assign(n, 0.0);
  parallel_for(n, exec, [&](std::size_t i) {
    std::vector<double> vals(m);
    for (int k = 0; k < K; ++k) {
      for (std::size_t t = 0; t < m; ++t) vals[t] = per_member[t][k][i];
      std::sort(vals.begin(), vals.end());
      double acc = 0.0;
      for (double v : vals) acc += v;
      eta[k][i] = acc * inv_m;
    }
  });
}

std::vector<ParamVec> predict_theta_forest(const ForestModel& forest,
                                           const Matrix& X, Exec exec) {
  EtaBlock eta;
  predict_eta_forest(forest, X, eta, exec);
  const Family& fam = forest.family();
  const int K = fam.n_params();
  std::vector<ParamVec> theta(X.n, ParamVec{});
  parallel_for(X.n, exec, [&](std::size_t i) {
    ParamVec th{};
    for (int k = 0; k < K; ++k) th[k] = fam.link(k).inverse(eta[k][i]);
    theta[i] = th;
  });
  return theta;
}

}  // namespace dsoft
