#include "dsoft/gating.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace dsoft {

namespace {
constexpr double kProbClamp = 1e-15;
}

int TreeTopology::add_children(int parent) {
  check(parent);
  if (!is_leaf(parent))
    throw std::invalid_argument("tree: node already has children");
  const int left = n_nodes();
  nodes[parent].left = left;
  nodes[parent].right = left + 1;
  nodes.push_back(Node{parent, -1, -1});
  nodes.push_back(Node{parent, -1, -1});
  return left;
}

std::vector<int> TreeTopology::subtree(int id) const {
  check(id);
  std::vector<int> out;
  std::vector<int> stack{id};
  while (!stack.empty()) {
    const int v = stack.back();
    stack.pop_back();
    out.push_back(v);
    if (!is_leaf(v)) {
      stack.push_back(nodes[v].right);
      stack.push_back(nodes[v].left);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<int> TreeTopology::leaves() const {
  std::vector<int> out;
  for (int i = 0; i < n_nodes(); ++i)
    if (is_leaf(i)) out.push_back(i);
  return out;
}

int TreeTopology::depth(int id) const {
  check(id);
  int d = 0;
  while (nodes[id].parent >= 0) {
    id = nodes[id].parent;
    ++d;
  }
  return d;
}

void TreeTopology::check(int id) const {
  if (id < 0 || id >= n_nodes())
    throw std::invalid_argument("tree: unknown node id " + std::to_string(id));
}

double gate_prob(const GateNode& gate, std::span<const double> x) {
  if (gate.omega.size() != x.size() + 1)
    throw std::invalid_argument("gate: weight/feature dimension mismatch");
  double t = gate.omega[0];
  for (std::size_t j = 0; j < x.size(); ++j) t += gate.omega[j + 1] * x[j];
  const double p = 1.0 / (1.0 + std::exp(-t));
  return std::clamp(p, kProbClamp, 1.0 - kProbClamp);
}

double path_prob(const TreeTopology& topo, const std::vector<GateNode>& gates,
                 int node, std::span<const double> x) {
  topo.check(node);
  double prob = 1.0;
  int v = node;
  while (topo.nodes[v].parent >= 0) {
    const int parent = topo.nodes[v].parent;
    if (parent >= static_cast<int>(gates.size()) || gates[parent].empty())
      throw std::invalid_argument("gate: split node has no gate weights");
    const double p = gate_prob(gates[parent], x);
    prob *= topo.nodes[parent].left == v ? p : 1.0 - p;
    v = parent;
  }
  return prob;
}

std::vector<double> path_prob_grad(const TreeTopology& topo,
                                   const std::vector<GateNode>& gates,
                                   int node, int gate_id,
                                   std::span<const double> x) {
  topo.check(node);
  topo.check(gate_id);
  std::vector<double> grad(x.size() + 1, 0.0);
  // find whether gate_id is an ancestor and which side the path takes there
  int v = node;
  int side = -1;  // 1 = left, 0 = right
  while (topo.nodes[v].parent >= 0) {
    const int parent = topo.nodes[v].parent;
    if (parent == gate_id) {
      side = topo.nodes[parent].left == v ? 1 : 0;
      break;
    }
    v = parent;
  }
  if (side < 0) return grad;
  const double prob = path_prob(topo, gates, node, x);
  const double p = gate_prob(gates[gate_id], x);
  // d log(path) / dt = (1 - p) on the left branch, -p on the right; the
  // logistic derivative p(1-p) is already folded in through prob/p terms.
  const double dlogdt = side == 1 ? 1.0 - p : -p;
  const double scale = prob * dlogdt;
  grad[0] = scale;
  for (std::size_t j = 0; j < x.size(); ++j) grad[j + 1] = scale * x[j];
  return grad;
}

void design_matrix(const TreeTopology& topo, const std::vector<GateNode>& gates,
                   const Matrix& X, DesignMatrix& out, Exec exec) {
  const int J = topo.n_nodes();
  for (int id = 0; id < J; ++id)
    if (!topo.is_leaf(id) &&
        (id >= static_cast<int>(gates.size()) || gates[id].empty()))
      throw std::invalid_argument("design: split node has no gate weights");
  out.n = X.n;
  out.cols.assign(static_cast<std::size_t>(J), {});
  for (auto& c : out.cols) c.resize(X.n);
  parallel_for(X.n, exec, [&](std::size_t i) {
    const auto x = X.row(i);
    out.cols[0][i] = 1.0;
    for (int id = 0; id < J; ++id) {
      if (topo.is_leaf(id)) continue;
      const double p = gate_prob(gates[id], x);
      out.cols[topo.nodes[id].left][i] = out.cols[id][i] * p;
      out.cols[topo.nodes[id].right][i] = out.cols[id][i] * (1.0 - p);
    }
  });
}

}  // namespace dsoft
