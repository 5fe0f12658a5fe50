#include "dsoft/benchmark.hpp"

#include <stdexcept>

#include "dsoft/scoring.hpp"

namespace dsoft {

namespace {

struct RepTask {
  std::size_t n = 0;
  int rep = 0;
};

struct RepMetrics {
  double rmse_tree = 0.0, rmse_base = 0.0;
  double crps_tree = 0.0, crps_base = 0.0;
  double ls_tree = 0.0, ls_base = 0.0;
  bool has_crps = false;
};

RepMetrics evaluate_one(const Family& fam, const FitConfig& fit_cfg,
                        const Dataset& test, std::size_t n, int rep,
                        std::uint64_t seed) {
  const Dataset train = simulate_dataset(
      fam, n,
      derive_seed(seed, {0x7261ULL, static_cast<std::uint64_t>(n),
                         static_cast<std::uint64_t>(rep)}));
  FitConfig cfg = fit_cfg;
  cfg.seed = derive_seed(seed, {0xf17ULL, static_cast<std::uint64_t>(n),
                                static_cast<std::uint64_t>(rep)});
  const DistModel tree = fit(train, fam, cfg);
  const DistModel base = fit_intercept_only(train, fam, cfg);

  RepMetrics m;
  m.has_crps = !fam.discrete();
  EtaBlock eta_tree, eta_base;
  predict_eta(tree, test.X, eta_tree, Exec::serial);
  predict_eta(base, test.X, eta_base, Exec::serial);
  m.rmse_tree = predictor_rmse(eta_tree[0], test.eta_mu_true);
  m.rmse_base = predictor_rmse(eta_base[0], test.eta_mu_true);

  const std::size_t tn = test.n();
  double ls_t = 0.0, ls_b = 0.0, cr_t = 0.0, cr_b = 0.0;
  for (std::size_t i = 0; i < tn; ++i) {
    const ParamVec th_t = theta_from_eta(fam, eta_tree, i);
    const ParamVec th_b = theta_from_eta(fam, eta_base, i);
    ls_t += log_score(fam, test.y[i], th_t);
    ls_b += log_score(fam, test.y[i], th_b);
    if (m.has_crps) {
      cr_t += crps(fam, test.y[i], th_t);
      cr_b += crps(fam, test.y[i], th_b);
    }
  }
  const double inv = 1.0 / static_cast<double>(tn);
  m.ls_tree = ls_t * inv;
  m.ls_base = ls_b * inv;
  m.crps_tree = cr_t * inv;
  m.crps_base = cr_b * inv;
  return m;
}

}  // namespace

std::vector<BenchmarkRow> run_benchmark(const BenchmarkConfig& bench,
                                        const FitConfig& fit_cfg) {
  if (bench.replications < 1)
    throw std::invalid_argument("benchmark: replications must be >= 1");
  if (bench.sizes.empty())
    throw std::invalid_argument("benchmark: no training sizes");
  const Family fam = Family::from_code(bench.family);

  const Dataset test = simulate_dataset(
      fam, bench.test_n, derive_seed(bench.seed, {0x7e57ULL}));

  std::vector<RepTask> tasks;
  for (std::size_t n : bench.sizes)
    for (int rep = 0; rep < bench.replications; ++rep)
      tasks.push_back({n, rep});

  std::vector<RepMetrics> metrics(tasks.size());
  std::vector<std::string> errors(tasks.size());
  parallel_for_jobs(tasks.size(), bench.jobs, [&](std::size_t t) {
    try {
      metrics[t] = evaluate_one(fam, fit_cfg, test, tasks[t].n, tasks[t].rep,
                                bench.seed);
    } catch (const std::exception& ex) {
      errors[t] = ex.what();
      if (errors[t].empty()) errors[t] = "unknown error";
    }
  });
  for (std::size_t t = 0; t < tasks.size(); ++t)
    if (!errors[t].empty())
      throw FitError("benchmark: replication (n=" + std::to_string(tasks[t].n) +
                     ", rep=" + std::to_string(tasks[t].rep) +
                     ") failed: " + errors[t]);

  std::vector<BenchmarkRow> rows;
  for (std::size_t t = 0; t < tasks.size(); ++t) {
    const auto& m = metrics[t];
    const auto add = [&](const char* model, const char* metric, double value) {
      rows.push_back({bench.family, tasks[t].n, tasks[t].rep, model, metric,
                      value});
    };
    add("tree", "rmse_eta_mu", m.rmse_tree);
    add("intercept", "rmse_eta_mu", m.rmse_base);
    if (m.has_crps) {
      add("tree", "crps", m.crps_tree);
      add("intercept", "crps", m.crps_base);
    }
    add("tree", "log_score", m.ls_tree);
    add("intercept", "log_score", m.ls_base);
  }
  return rows;
}

double benchmark_median(const std::vector<BenchmarkRow>& rows, std::size_t n,
                        const std::string& model, const std::string& metric) {
  std::vector<double> v;
  for (const auto& r : rows)
    if (r.n == n && r.model == model && r.metric == metric)
      v.push_back(r.value);
  return median_of(std::move(v));
}

}  // namespace dsoft
