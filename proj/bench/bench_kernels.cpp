// Timing harness comparing the serial reference kernels against the OpenMP
// row-parallel ones, and asserting they agree bitwise. Build target only;
// not part of the test suite.
#include <chrono>
#include <cstdio>
#include <string>
#include <vector>

#include "dsoft/datagen.hpp"
#include "dsoft/exec.hpp"
#include "dsoft/family.hpp"
#include "dsoft/gating.hpp"
#include "dsoft/rng.hpp"
#include "dsoft/tree.hpp"

namespace {

using namespace dsoft;
using clock_type = std::chrono::steady_clock;

// warm-up once, then best-of-reps
template <typename F>
double best_of(F&& op, int reps = 5) {
  op();
  double best = 1e300;
  for (int r = 0; r < reps; ++r) {
    const auto t0 = clock_type::now();
    op();
    const auto t1 = clock_type::now();
    best = std::min(best,
                    std::chrono::duration<double, std::milli>(t1 - t0).count());
  }
  return best;
}

bool equal_bits(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i] != b[i]) return false;
  return true;
}

void report(const std::string& name, double serial_ms, double parallel_ms,
            bool identical) {
  std::printf("%-22s serial %9.3f ms   parallel %9.3f ms   speedup %5.2fx   %s\n",
              name.c_str(), serial_ms, parallel_ms, serial_ms / parallel_ms,
              identical ? "bitwise-equal" : "MISMATCH");
}

}  // namespace

int main() {
  const std::size_t n = 200000;
  std::printf("rows: %zu, threads: %d\n\n", n, hardware_threads());

  const Dataset data = simulate_dataset(Family(FamilyCode::NO), n, 19);

  // a depth-4 complete tree over the 9 features
  TreeTopology topo;
  std::vector<GateNode> gates(1);
  Rng rng(7);
  const auto grow = [&](int node) {
    gates[static_cast<std::size_t>(node)].omega.resize(data.q() + 1);
    for (auto& v : gates[static_cast<std::size_t>(node)].omega)
      v = 0.5 * rng.normal();
    const int left = topo.add_children(node);
    gates.resize(topo.n_nodes());
    return left;
  };
  std::vector<int> frontier{0};
  for (int depth = 0; depth < 4; ++depth) {
    std::vector<int> next;
    for (int node : frontier) {
      const int left = grow(node);
      next.push_back(left);
      next.push_back(left + 1);
    }
    frontier = std::move(next);
  }

  // design matrix construction
  DesignMatrix ds, dp;
  const double t_design_s =
      best_of([&] { design_matrix(topo, gates, data.X, ds, Exec::serial); });
  const double t_design_p =
      best_of([&] { design_matrix(topo, gates, data.X, dp, Exec::parallel); });
  bool same = ds.cols.size() == dp.cols.size();
  for (std::size_t j = 0; same && j < ds.cols.size(); ++j)
    same = equal_bits(ds.cols[j], dp.cols[j]);
  report("design_matrix", t_design_s, t_design_p, same);

  // score/weight fill
  const Family fam(FamilyCode::NO);
  EtaBlock eta;
  eta[0].assign(n, 1.0);
  eta[1].assign(n, -0.5);
  std::vector<double> us(n), ws(n), up(n), wp(n);
  const double t_fill_s = best_of(
      [&] { fill_score_weight(fam, data.y, eta, 0, us, ws, Exec::serial); });
  const double t_fill_p = best_of(
      [&] { fill_score_weight(fam, data.y, eta, 0, up, wp, Exec::parallel); });
  report("fill_score_weight", t_fill_s, t_fill_p,
         equal_bits(us, up) && equal_bits(ws, wp));

  // end-to-end model prediction
  FitConfig cfg;
  cfg.max_nodes = 8;
  cfg.candidate_restarts = 1;
  cfg.max_outer_iters = 4;
  const Dataset small = simulate_dataset(fam, 2000, 23);
  const DistModel model = fit(small, fam, cfg);
  EtaBlock es, ep;
  const double t_pred_s =
      best_of([&] { predict_eta(model, data.X, es, Exec::serial); });
  const double t_pred_p =
      best_of([&] { predict_eta(model, data.X, ep, Exec::parallel); });
  report("predict_eta", t_pred_s, t_pred_p,
         equal_bits(es[0], ep[0]) && equal_bits(es[1], ep[1]));

  return 0;
}
