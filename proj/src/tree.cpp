#include "dsoft/tree.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dsoft/rng.hpp"

namespace dsoft {

double information_criterion(double loglik, int df, std::size_t n,
                             Criterion c) {
  const double pen =
      c == Criterion::AIC ? 2.0 : std::log(static_cast<double>(n));
  return -2.0 * loglik + pen * static_cast<double>(df);
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kInterceptEtaBound = 30.0;

double sigmoid_clamped(double t) {
  const double p = 1.0 / (1.0 + std::exp(-t));
  return std::clamp(p, 1e-15, 1.0 - 1e-15);
}

double penalty_norm(const Eigen::VectorXd& omega, bool penalize_bias) {
  double s = 0.0;
  for (Eigen::Index j = penalize_bias ? 0 : 1; j < omega.size(); ++j)
    s += omega[j] * omega[j];
  return s;
}

// ---------------------------------------------------------------------------
// Fit engine: standardized features, per-parameter linked predictors, one
// design matrix per tree-modeled parameter, all kept incrementally in sync
// with the trees.

struct Engine {
  const Dataset* data = nullptr;
  Family fam;
  FitConfig cfg;
  FitHooks hooks;

  Matrix Xs;
  Standardizer standardizer;
  int K = 0;   // distribution parameters
  int KT = 0;  // tree-modeled parameters
  EtaBlock eta;
  std::vector<SoftTree> trees;
  std::vector<DesignMatrix> design;
  std::vector<double> fixed_eta;

  std::size_t n() const { return data->n(); }

  double total_ll() const {
    return total_log_density(fam, data->y, eta, Exec::parallel);
  }

  void rebuild_design(int k) {
    design_matrix(trees[k].topo, trees[k].gates, Xs, design[k]);
  }

  void recompute_eta_from_design(int k) {
    auto& e = eta[k];
    const auto& D = design[k];
    const auto& beta = trees[k].beta;
    parallel_for(n(), Exec::parallel, [&](std::size_t i) {
      double s = 0.0;
      for (std::size_t j = 0; j < D.cols.size(); ++j)
        s += beta[j] * D.cols[j][i];
      e[i] = s;
    });
  }

  void refresh_all(int k) {
    rebuild_design(k);
    recompute_eta_from_design(k);
  }
};

// Exact penalized log-likelihood in one gate's weights.  The predictor for
// parameter k decomposes as eta_i = base_i + p_i * A_i + (1 - p_i) * B_i
// where p is the gate probability and A/B collect the coefficient-weighted
// path probabilities of the left/right branches hanging off the gate.
class SubtreeGateObjective : public GateObjective {
 public:
  SubtreeGateObjective(const Engine& e, int k, double lambda,
                       bool penalize_bias, std::vector<double> base,
                       std::vector<double> a, std::vector<double> b)
      : e_(e),
        k_(k),
        lambda_(lambda),
        penalize_bias_(penalize_bias),
        base_(std::move(base)),
        a_(std::move(a)),
        b_(std::move(b)) {
    const std::size_t n = e_.n();
    th_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      ParamVec th{};
      for (int kk = 0; kk < e_.fam.n_params(); ++kk)
        if (kk != k_) th[kk] = e_.fam.link(kk).inverse(e_.eta[kk][i]);
      th_[i] = th;
    }
  }

  double value(const Eigen::VectorXd& omega) const override {
    const std::size_t n = e_.n();
    buf_.resize(n);
    const Link link = e_.fam.link(k_);
    parallel_for(n, Exec::parallel, [&](std::size_t i) {
      ParamVec th = th_[i];
      th[k_] = link.inverse(eta_at(omega, i));
      buf_[i] = e_.fam.log_density(e_.data->y[i], th);
    });
    double ll = 0.0;
    for (double v : buf_) ll += v;
    return ll - lambda_ * penalty_norm(omega, penalize_bias_);
  }

  void derivatives(const Eigen::VectorXd& omega, double& val,
                   Eigen::VectorXd& grad,
                   Eigen::MatrixXd& hess) const override {
    const std::size_t n = e_.n();
    const Eigen::Index dim = omega.size();
    const Link link = e_.fam.link(k_);
    grad.setZero(dim);
    hess.setZero(dim, dim);
    double ll = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const auto x = e_.Xs.row(i);
      double t = omega[0];
      for (std::size_t j = 0; j < x.size(); ++j) t += omega[j + 1] * x[j];
      const double p = sigmoid_clamped(t);
      const double etai = base_[i] + p * a_[i] + (1.0 - p) * b_[i];
      ParamVec th = th_[i];
      th[k_] = link.inverse(etai);
      ll += e_.fam.log_density(e_.data->y[i], th);
      const double u = e_.fam.score(e_.data->y[i], th, k_);
      const double curv = e_.fam.curvature(e_.data->y[i], th, k_);
      const double g = p * (1.0 - p) * (a_[i] - b_[i]);
      const double c1 = u * g;
      const double c2 = u * (1.0 - 2.0 * p) * g - curv * g * g;
      grad[0] += c1;
      hess(0, 0) += c2;
      for (std::size_t ja = 0; ja < x.size(); ++ja) {
        const Eigen::Index ia = static_cast<Eigen::Index>(ja) + 1;
        grad[ia] += c1 * x[ja];
        hess(0, ia) += c2 * x[ja];
        for (std::size_t jb = ja; jb < x.size(); ++jb)
          hess(ia, static_cast<Eigen::Index>(jb) + 1) += c2 * x[ja] * x[jb];
      }
    }
    for (Eigen::Index ja = 0; ja < dim; ++ja)
      for (Eigen::Index jb = ja + 1; jb < dim; ++jb) hess(jb, ja) = hess(ja, jb);
    for (Eigen::Index j = penalize_bias_ ? 0 : 1; j < dim; ++j) {
      grad[j] -= 2.0 * lambda_ * omega[j];
      hess(j, j) -= 2.0 * lambda_;
    }
    val = ll - lambda_ * penalty_norm(omega, penalize_bias_);
  }

 private:
  double eta_at(const Eigen::VectorXd& omega, std::size_t i) const {
    const auto x = e_.Xs.row(i);
    double t = omega[0];
    for (std::size_t j = 0; j < x.size(); ++j) t += omega[j + 1] * x[j];
    const double p = sigmoid_clamped(t);
    return base_[i] + p * a_[i] + (1.0 - p) * b_[i];
  }

  const Engine& e_;
  int k_;
  double lambda_;
  bool penalize_bias_;
  std::vector<double> base_, a_, b_;
  std::vector<ParamVec> th_;
  mutable std::vector<double> buf_;
};

// Coefficient-weighted path probabilities of the branch rooted at `child`,
// entered with the parent's own path probability (the parent's gate factor
// excluded): out_i = sum over nodes j in subtree(child) of beta_j times the
// path probability of j with the gate at `parent` replaced by 1.
void weighted_subtree(const Engine& e, int k, int parent, int child,
                      std::vector<double>& out) {
  const auto& tree = e.trees[k];
  const auto& D = e.design[k];
  const std::size_t n = e.n();
  const auto ids = tree.topo.subtree(child);
  std::vector<std::vector<double>> q(tree.topo.n_nodes());
  q[child] = D.cols[parent];
  out.assign(n, 0.0);
  for (int id : ids) {
    auto& qi = q[id];
    const double b = tree.beta[id];
    for (std::size_t i = 0; i < n; ++i) out[i] += b * qi[i];
    if (!tree.topo.is_leaf(id)) {
      const int l = tree.topo.nodes[id].left;
      const int r = tree.topo.nodes[id].right;
      auto& ql = q[l];
      auto& qr = q[r];
      ql.resize(n);
      qr.resize(n);
      for (std::size_t i = 0; i < n; ++i) {
        const double p = gate_prob(tree.gates[id], e.Xs.row(i));
        ql[i] = qi[i] * p;
        qr[i] = qi[i] * (1.0 - p);
      }
    }
    qi.clear();
    qi.shrink_to_fit();
  }
}

// Resync the stored design columns strictly below `node` (its own column is
// unaffected) after the gate at `node` or below changed.
void recompute_design_below(Engine& e, int k, int node) {
  auto& tree = e.trees[k];
  auto& D = e.design[k];
  const std::size_t n = e.n();
  for (int id : tree.topo.subtree(node)) {
    if (tree.topo.is_leaf(id)) continue;
    const int l = tree.topo.nodes[id].left;
    const int r = tree.topo.nodes[id].right;
    auto& cl = D.cols[l];
    auto& cr = D.cols[r];
    const auto& cp = D.cols[id];
    const auto& gate = tree.gates[id];
    parallel_for(n, Exec::parallel, [&](std::size_t i) {
      const double p = gate_prob(gate, e.Xs.row(i));
      cl[i] = cp[i] * p;
      cr[i] = cp[i] * (1.0 - p);
    });
  }
}

// One safeguarded Newton step on an intercept: the root coefficient for a
// tree-modeled parameter, otherwise the fixed linked parameter.  Returns the
// log-likelihood improvement; the step is discarded if none is reachable.
double intercept_step(Engine& e, int k, double ll_cur, double* ll_out) {
  const std::size_t n = e.n();
  std::vector<double> u, w;
  fill_score_weight(e.fam, e.data->y, e.eta, k, u, w, Exec::parallel);
  double su = 0.0, sw = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    su += u[i];
    sw += w[i];
  }
  sw += e.cfg.shrinkage.ridge_zeta;
  *ll_out = ll_cur;
  if (!(sw > 0.0) || !std::isfinite(su)) return 0.0;
  double delta = std::clamp(su / sw, -10.0, 10.0);
  if (e.fam.link(k).kind == LinkKind::log) {
    const double eta0 = e.eta[k][0];
    delta = std::clamp(eta0 + delta, -kInterceptEtaBound, kInterceptEtaBound) -
            eta0;
  }
  auto& ek = e.eta[k];
  for (int half = 0; half < 40 && delta != 0.0; ++half) {
    for (std::size_t i = 0; i < n; ++i) ek[i] += delta;
    const double ll_new = e.total_ll();
    if (std::isfinite(ll_new) && ll_new >= ll_cur) {
      if (k < e.KT)
        e.trees[k].beta[0] += delta;
      else
        e.fixed_eta[k - e.KT] += delta;
      *ll_out = ll_new;
      return ll_new - ll_cur;
    }
    for (std::size_t i = 0; i < n; ++i) ek[i] -= delta;
    delta *= 0.5;
  }
  return 0.0;
}

// Intercept-only maximum likelihood for every parameter (the initialization
// step); cycles safeguarded Newton updates until the likelihood stabilizes.
double init_intercepts(Engine& e) {
  const ParamVec th0 = e.fam.initial_theta(e.data->y);
  for (int k = 0; k < e.K; ++k) {
    double eta0 = e.fam.link(k).forward(th0[k]);
    if (e.fam.link(k).kind == LinkKind::log)
      eta0 = std::clamp(eta0, -kInterceptEtaBound, kInterceptEtaBound);
    e.eta[k].assign(e.n(), eta0);
    if (k < e.KT)
      e.trees[k].beta[0] = eta0;
    else
      e.fixed_eta[k - e.KT] = eta0;
  }
  double ll = e.total_ll();
  if (!std::isfinite(ll))
    throw FitError("fit: non-finite likelihood at initialization");
  for (int cycle = 0; cycle < 300; ++cycle) {
    double gain = 0.0;
    for (int k = 0; k < e.K; ++k) gain += intercept_step(e, k, ll, &ll);
    if (gain < 1e-10 * (1.0 + std::fabs(ll))) break;
  }
  return ll;
}

// ---------------------------------------------------------------------------
// Candidate soft splits

struct CandidateResult {
  bool valid = false;
  int leaf = -1;
  double gain = -kInf;
  double ll_new = -kInf;
  Eigen::VectorXd omega;
  std::array<double, 2> b{0.0, 0.0};
};

// Evaluate one candidate split of `leaf`: alternate ridge-stabilized child
// coefficient solves against the scores/weights frozen at the current
// predictor with penalized gate optimization, then measure the exact
// likelihood gain with step halving.
CandidateResult evaluate_candidate(const Engine& e, int k, int leaf,
                                   const Eigen::VectorXd& omega_init,
                                   const std::vector<double>& u0,
                                   const std::vector<double>& w0,
                                   double ll_base) {
  const std::size_t n = e.n();
  const auto& pl = e.design[k].cols[leaf];
  const double zeta = e.cfg.shrinkage.ridge_zeta;
  const double lambda = e.cfg.shrinkage.lambda_for(static_cast<std::size_t>(k));

  CandidateResult out;
  out.leaf = leaf;
  out.omega = omega_init;

  std::vector<double> n1(n), n2(n);
  auto make_columns = [&](const Eigen::VectorXd& omega) {
    for (std::size_t i = 0; i < n; ++i) {
      const auto x = e.Xs.row(i);
      double t = omega[0];
      for (std::size_t j = 0; j < x.size(); ++j) t += omega[j + 1] * x[j];
      const double p = sigmoid_clamped(t);
      n1[i] = pl[i] * p;
      n2[i] = pl[i] * (1.0 - p);
    }
  };

  std::array<double, 2> b{0.0, 0.0};
  for (int cycle = 0; cycle <= e.cfg.candidate_cycles; ++cycle) {
    make_columns(out.omega);
    const IwlsResult r = iwls_update(n1, n2, u0, w0, zeta);
    if (r.singular) {
      if (cycle == 0) return out;  // nothing to work with at this leaf
      break;
    }
    b = r.beta;
    if (cycle == e.cfg.candidate_cycles) break;
    std::vector<double> a_vec(n), b_vec(n);
    for (std::size_t i = 0; i < n; ++i) {
      a_vec[i] = pl[i] * b[0];
      b_vec[i] = pl[i] * b[1];
    }
    SubtreeGateObjective obj(e, k, lambda, e.cfg.shrinkage.penalize_bias,
                             std::vector<double>(e.eta[k]), std::move(a_vec),
                             std::move(b_vec));
    out.omega = optimize_gate(obj, out.omega, e.cfg.shrinkage).omega;
  }

  make_columns(out.omega);
  EtaBlock trial = e.eta;
  auto ll_with = [&](const std::array<double, 2>& bb) {
    auto& tk = trial[k];
    for (std::size_t i = 0; i < n; ++i)
      tk[i] = e.eta[k][i] + n1[i] * bb[0] + n2[i] * bb[1];
    return total_log_density(e.fam, e.data->y, trial, Exec::serial);
  };
  double ll_new = ll_with(b);
  for (int half = 0;
       half < 40 && !(std::isfinite(ll_new) && ll_new >= ll_base); ++half) {
    b[0] *= 0.5;
    b[1] *= 0.5;
    ll_new = ll_with(b);
  }
  if (!std::isfinite(ll_new) || ll_new < ll_base) {
    b = {0.0, 0.0};
    ll_new = ll_base;
  }
  out.valid = true;
  out.b = b;
  out.ll_new = ll_new;
  out.gain = ll_new - ll_base;
  return out;
}

// Apply an accepted split: append the two children (creation order), attach
// the gate, extend the coefficient vector and update the predictor by the
// new block only.
void apply_split(Engine& e, int k, const CandidateResult& c) {
  auto& tree = e.trees[k];
  SplitAcceptEvent ev;
  const bool want_event = static_cast<bool>(e.hooks.on_accept);
  if (want_event) {
    ev.tree_index = k;
    ev.parent_node = c.leaf;
    ev.beta_children = c.b;
    ev.beta_before = tree.beta;
    ev.eta_before = e.eta[k];
  }
  const int left = tree.topo.add_children(c.leaf);
  const int right = left + 1;
  tree.gates.resize(tree.topo.n_nodes());
  tree.gates[c.leaf].omega.assign(c.omega.data(),
                                  c.omega.data() + c.omega.size());
  tree.beta.push_back(c.b[0]);
  tree.beta.push_back(c.b[1]);

  auto& D = e.design[k];
  const std::size_t n = e.n();
  D.n = n;
  D.cols.emplace_back(n);
  D.cols.emplace_back(n);
  auto& cl = D.cols[left];
  auto& cr = D.cols[right];
  const auto& cp = D.cols[c.leaf];
  const auto& gate = tree.gates[c.leaf];
  parallel_for(n, Exec::parallel, [&](std::size_t i) {
    const double p = gate_prob(gate, e.Xs.row(i));
    cl[i] = cp[i] * p;
    cr[i] = cp[i] * (1.0 - p);
  });
  auto& ek = e.eta[k];
  for (std::size_t i = 0; i < n; ++i)
    ek[i] += cl[i] * c.b[0] + cr[i] * c.b[1];

  if (want_event) {
    ev.left_id = left;
    ev.right_id = right;
    ev.eta_after = e.eta[k];
    ev.col_left = cl;
    ev.col_right = cr;
    e.hooks.on_accept(ev);
  }
}

// One gate refinement: re-estimate the gate by penalized ML with all
// coefficients held fixed, then re-solve its two child coefficients (ridge
// block update at the refreshed scores) with step halving so the exact
// likelihood never decreases.
void refine_one_gate(Engine& e, int k, int node) {
  auto& tree = e.trees[k];
  if (tree.topo.is_leaf(node)) return;
  const std::size_t n = e.n();
  const int c1 = tree.topo.nodes[node].left;
  const int c2 = tree.topo.nodes[node].right;
  const double lambda = e.cfg.shrinkage.lambda_for(static_cast<std::size_t>(k));

  std::vector<double> a_vec, b_vec;
  weighted_subtree(e, k, node, c1, a_vec);
  weighted_subtree(e, k, node, c2, b_vec);
  std::vector<double> base(n);
  auto& gate = tree.gates[node];
  for (std::size_t i = 0; i < n; ++i) {
    const double p = gate_prob(gate, e.Xs.row(i));
    base[i] = e.eta[k][i] - p * a_vec[i] - (1.0 - p) * b_vec[i];
  }

  const Eigen::VectorXd omega0 = Eigen::Map<const Eigen::VectorXd>(
      gate.omega.data(), static_cast<Eigen::Index>(gate.omega.size()));
  SubtreeGateObjective obj(e, k, lambda, e.cfg.shrinkage.penalize_bias, base,
                           a_vec, b_vec);
  const GateOptResult res = optimize_gate(obj, omega0, e.cfg.shrinkage);
  gate.omega.assign(res.omega.data(), res.omega.data() + res.omega.size());

  // exact predictor update under the new gate, then resync the columns below
  auto& ek = e.eta[k];
  for (std::size_t i = 0; i < n; ++i) {
    const double p = gate_prob(gate, e.Xs.row(i));
    ek[i] = base[i] + p * a_vec[i] + (1.0 - p) * b_vec[i];
  }
  recompute_design_below(e, k, node);

  std::vector<double> u, w;
  fill_score_weight(e.fam, e.data->y, e.eta, k, u, w, Exec::parallel);
  const auto& col1 = e.design[k].cols[c1];
  const auto& col2 = e.design[k].cols[c2];
  const IwlsResult r = iwls_update(col1, col2, u, w, e.cfg.shrinkage.ridge_zeta);
  if (r.singular) return;
  std::array<double, 2> d = r.beta;
  const double ll_cur = e.total_ll();
  for (int half = 0; half < 40 && (d[0] != 0.0 || d[1] != 0.0); ++half) {
    for (std::size_t i = 0; i < n; ++i)
      ek[i] += col1[i] * d[0] + col2[i] * d[1];
    const double ll_new = e.total_ll();
    if (std::isfinite(ll_new) && ll_new >= ll_cur) {
      tree.beta[c1] += d[0];
      tree.beta[c2] += d[1];
      return;
    }
    for (std::size_t i = 0; i < n; ++i)
      ek[i] -= col1[i] * d[0] + col2[i] * d[1];
    d[0] *= 0.5;
    d[1] *= 0.5;
  }
}

void refine_pass(Engine& e, int k, const std::vector<int>& nodes) {
  for (int node : nodes) refine_one_gate(e, k, node);
  e.refresh_all(k);  // squash incremental drift before the next bookkeeping
}

std::vector<int> gate_nodes_in_order(const SoftTree& tree) {
  std::vector<int> out;
  for (int id = 0; id < tree.topo.n_nodes(); ++id)
    if (!tree.topo.is_leaf(id)) out.push_back(id);
  return out;
}

Eigen::VectorXd candidate_init(const Engine& e, int iteration, int k, int leaf,
                               int restart) {
  Eigen::VectorXd omega =
      Eigen::VectorXd::Zero(static_cast<Eigen::Index>(e.Xs.q) + 1);
  if (restart > 0) {
    Rng rng(derive_seed(e.cfg.seed,
                        {0x5eedULL, static_cast<std::uint64_t>(iteration),
                         static_cast<std::uint64_t>(k),
                         static_cast<std::uint64_t>(leaf),
                         static_cast<std::uint64_t>(restart)}));
    for (Eigen::Index j = 0; j < omega.size(); ++j)
      omega[j] = 0.5 * rng.normal();
  }
  return omega;
}

// Best candidate across all leaves and restarts of one parameter; candidates
// are independent given the frozen predictor, so they evaluate in parallel
// with deterministic slot-based selection (ties resolved by task order).
CandidateResult best_candidate(const Engine& e, int k, int iteration,
                               double ll_base) {
  std::vector<double> u0, w0;
  fill_score_weight(e.fam, e.data->y, e.eta, k, u0, w0, Exec::parallel);
  const std::vector<int> leaves = e.trees[k].topo.leaves();
  const std::size_t restarts =
      static_cast<std::size_t>(std::max(0, e.cfg.candidate_restarts)) + 1;
  const std::size_t tasks = leaves.size() * restarts;
  std::vector<CandidateResult> results(tasks);
  parallel_for_jobs(tasks, 0, [&](std::size_t t) {
    const int leaf = leaves[t / restarts];
    const int restart = static_cast<int>(t % restarts);
    results[t] = evaluate_candidate(
        e, k, leaf, candidate_init(e, iteration, k, leaf, restart), u0, w0,
        ll_base);
  });
  CandidateResult best;
  for (const auto& r : results) {
    if (!r.valid) continue;
    if (!best.valid || r.gain > best.gain) best = r;
  }
  return best;
}

void validate_inputs(const Dataset& data, const Family& fam,
                     const FitConfig& cfg) {
  if (data.n() == 0) throw std::invalid_argument("fit: empty dataset");
  if (data.y.size() != data.n())
    throw std::invalid_argument("fit: response/feature length mismatch");
  if (cfg.max_nodes < 2 || cfg.max_nodes % 2 != 0)
    throw std::invalid_argument("fit: max_nodes must be even and >= 2");
  if (cfg.shrinkage.lambda.empty())
    throw std::invalid_argument("fit: at least one lambda is required");
  for (double l : cfg.shrinkage.lambda)
    if (!(l >= 0.0)) throw std::invalid_argument("fit: lambda must be >= 0");
  for (double v : data.X.v)
    if (!std::isfinite(v))
      throw std::invalid_argument("fit: non-finite feature value");
  for (double y : data.y)
    if (!fam.in_support(y))
      throw std::domain_error("fit: response outside the family support");
}

Engine make_engine(const Dataset& data, const Family& fam,
                   const FitConfig& cfg, const FitHooks& hooks) {
  Engine e;
  e.data = &data;
  e.fam = fam;
  e.cfg = cfg;
  e.hooks = hooks;
  e.K = fam.n_params();
  e.KT = fam.n_tree_params();
  e.standardizer.fit(data.X);
  e.Xs = e.standardizer.apply(data.X);
  e.trees.assign(e.KT, SoftTree{});
  e.design.assign(e.KT, DesignMatrix{});
  e.fixed_eta.assign(e.K - e.KT, 0.0);
  for (int k = 0; k < e.K; ++k) e.eta[k].assign(data.n(), 0.0);
  for (int k = 0; k < e.KT; ++k) e.rebuild_design(k);
  return e;
}

// Rebuild the fitted state of an existing model against a dataset (used by
// standalone refinement).
Engine engine_from_model(const DistModel& m, const Dataset& data) {
  Engine e;
  e.data = &data;
  e.fam = m.family;
  e.cfg = m.config;
  e.K = m.family.n_params();
  e.KT = m.family.n_tree_params();
  e.standardizer = m.standardizer;
  e.Xs = e.standardizer.apply(data.X);
  e.trees = m.trees;
  e.fixed_eta = m.fixed_eta;
  e.design.assign(e.KT, DesignMatrix{});
  for (int k = 0; k < e.KT; ++k) {
    e.eta[k].assign(data.n(), 0.0);
    e.refresh_all(k);
  }
  for (int k = e.KT; k < e.K; ++k)
    e.eta[k].assign(data.n(), e.fixed_eta[k - e.KT]);
  return e;
}

int model_df(const Engine& e) {
  int df = static_cast<int>(e.fixed_eta.size());
  for (const auto& t : e.trees) df += t.n_coefficients();
  return df;
}

DistModel finish_model(Engine& e, FitReport report) {
  for (int k = 0; k < e.KT; ++k) e.refresh_all(k);
  const double ll = e.total_ll();
  const int df = model_df(e);
  report.final_loglik = ll;
  report.final_df = df;
  report.final_criterion = information_criterion(ll, df, e.n(), e.cfg.criterion);
  report.criterion_name = e.cfg.criterion == Criterion::AIC ? "AIC" : "BIC";
  report.n_train = e.n();

  DistModel m;
  m.family = e.fam;
  m.trees = std::move(e.trees);
  m.fixed_eta = std::move(e.fixed_eta);
  m.standardizer = e.standardizer;
  m.config = e.cfg;
  m.seed = e.cfg.seed;
  m.report = std::move(report);
  return m;
}

}  // namespace

DistModel fit(const Dataset& data, const Family& family, const FitConfig& cfg,
              const FitHooks& hooks) {
  validate_inputs(data, family, cfg);
  Engine e = make_engine(data, family, cfg, hooks);

  double ll = init_intercepts(e);
  int df = e.K;
  double crit = information_criterion(ll, df, e.n(), cfg.criterion);

  FitReport report;
  report.criterion_trace.push_back(crit);
  report.loglik_trace.push_back(ll);

  std::string stop_reason = "max_iterations";
  bool stopped = false;

  auto accept = [&](int iter, int k, const CandidateResult& best) {
    apply_split(e, k, best);
    df += 2;
    const std::vector<int> nodes =
        cfg.refine == RefineMode::all ? gate_nodes_in_order(e.trees[k])
                                      : std::vector<int>{best.leaf};
    refine_pass(e, k, nodes);
    ll = e.total_ll();
    crit = information_criterion(ll, df, e.n(), cfg.criterion);
    report.steps.push_back(
        {iter, k, "split", best.leaf, best.gain, ll, df, crit});
    report.criterion_trace.push_back(crit);
    report.loglik_trace.push_back(ll);
  };

  auto has_capacity = [&](int k) {
    return e.trees[k].topo.n_nodes() + 2 <= cfg.max_nodes;
  };

  for (int iter = 1; iter <= cfg.max_outer_iters && !stopped; ++iter) {
    bool improved = false;
    double best_rejected_crit = kInf;

    if (cfg.growth == GrowthMode::per_param) {
      for (int k = 0; k < e.KT; ++k) {
        if (!has_capacity(k)) {
          report.steps.push_back({iter, k, "skip", -1, 0.0, ll, df, crit});
          continue;
        }
        const CandidateResult best = best_candidate(e, k, iter, ll);
        if (!best.valid) {
          report.steps.push_back({iter, k, "skip", -1, 0.0, ll, df, crit});
          continue;
        }
        const double cand_crit =
            information_criterion(best.ll_new, df + 2, e.n(), cfg.criterion);
        if (cand_crit < crit) {
          accept(iter, k, best);
          improved = true;
        } else {
          best_rejected_crit = std::min(best_rejected_crit, cand_crit);
          report.steps.push_back(
              {iter, k, "reject", best.leaf, best.gain, ll, df, cand_crit});
        }
      }
    } else {
      int best_k = -1;
      CandidateResult global;
      for (int k = 0; k < e.KT; ++k) {
        if (!has_capacity(k)) continue;
        CandidateResult c = best_candidate(e, k, iter, ll);
        if (c.valid && (!global.valid || c.gain > global.gain)) {
          global = c;
          best_k = k;
        }
      }
      if (global.valid) {
        const double cand_crit =
            information_criterion(global.ll_new, df + 2, e.n(), cfg.criterion);
        if (cand_crit < crit) {
          accept(iter, best_k, global);
          improved = true;
        } else {
          best_rejected_crit = cand_crit;
          report.steps.push_back({iter, best_k, "reject", global.leaf,
                                  global.gain, ll, df, cand_crit});
        }
      }
    }

    // keep intercept-only parameters (e.g. the degrees of freedom) in step
    if (e.K > e.KT) {
      for (int k = e.KT; k < e.K; ++k) intercept_step(e, k, ll, &ll);
      crit = information_criterion(ll, df, e.n(), cfg.criterion);
    }

    if (!improved) {
      bool all_at_capacity = true;
      for (int k = 0; k < e.KT; ++k)
        if (has_capacity(k)) all_at_capacity = false;
      if (all_at_capacity) {
        stop_reason = "no_expandable_nodes";
        report.warning = "growth stopped: no expandable nodes left";
      } else {
        stop_reason = "criterion";
      }
      report.steps.push_back(
          {iter, -1, "stop", -1, 0.0, ll, df,
           std::isfinite(best_rejected_crit) ? best_rejected_crit : crit});
      stopped = true;
    }
  }

  report.stop_reason = stop_reason;
  return finish_model(e, std::move(report));
}

DistModel fit_intercept_only(const Dataset& data, const Family& family,
                             FitConfig cfg) {
  validate_inputs(data, family, cfg);
  Engine e = make_engine(data, family, cfg, {});
  const double ll = init_intercepts(e);
  FitReport report;
  report.criterion_trace.push_back(
      information_criterion(ll, e.K, e.n(), cfg.criterion));
  report.loglik_trace.push_back(ll);
  report.stop_reason = "intercept_only";
  return finish_model(e, std::move(report));
}

void refine_all_gates(DistModel& model, const Dataset& data, int tree_index) {
  if (tree_index < 0 || tree_index >= static_cast<int>(model.trees.size()))
    throw std::invalid_argument("refine_all_gates: tree index out of range");
  Engine e = engine_from_model(model, data);
  refine_pass(e, tree_index, gate_nodes_in_order(e.trees[tree_index]));
  const double ll = e.total_ll();
  model.trees = e.trees;
  model.report.final_loglik = ll;
  model.report.final_criterion =
      information_criterion(ll, model.df(), e.n(), model.config.criterion);
}

void predict_eta(const DistModel& model, const Matrix& X, EtaBlock& eta,
                 Exec exec) {
  const Matrix Xs = model.standardizer.apply(X);
  const std::size_t n = Xs.n;
  const int KT = static_cast<int>(model.trees.size());
  for (int k = 0; k < KT; ++k) {
    const auto& tree = model.trees[k];
    DesignMatrix D;
    design_matrix(tree.topo, tree.gates, Xs, D, exec);
    auto& ek = eta[k];
    ek.assign(n, 0.0);
    parallel_for(n, exec, [&](std::size_t i) {
      double s = 0.0;
      for (std::size_t j = 0; j < D.cols.size(); ++j)
        s += tree.beta[j] * D.cols[j][i];
      ek[i] = s;
    });
  }
  for (std::size_t f = 0; f < model.fixed_eta.size(); ++f)
    eta[KT + f].assign(n, model.fixed_eta[f]);
}

std::vector<ParamVec> predict_theta(const DistModel& model, const Matrix& X,
                                    Exec exec) {
  EtaBlock eta;
  predict_eta(model, X, eta, exec);
  const std::size_t n = X.n;
  const int K = model.family.n_params();
  std::vector<ParamVec> theta(n, ParamVec{});
  parallel_for(n, exec, [&](std::size_t i) {
    ParamVec th{};
    for (int k = 0; k < K; ++k)
      th[k] = model.family.link(k).inverse(eta[k][i]);
    theta[i] = th;
  });
  return theta;
}

double model_log_likelihood(const DistModel& model, const Dataset& data,
                            Exec exec) {
  EtaBlock eta;
  predict_eta(model, data.X, eta, exec);
  return total_log_density(model.family, data.y, eta, exec);
}

}  // namespace dsoft
