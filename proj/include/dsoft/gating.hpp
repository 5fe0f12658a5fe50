#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "dsoft/dataset.hpp"
#include "dsoft/exec.hpp"

namespace dsoft {

/// Soft gate attached to a split node: a logistic in the standardized
/// features, weight 0 is the bias.  p(x) = 1 / (1 + exp(-(w0 + x.w))).
struct GateNode {
  std::vector<double> omega;
  bool empty() const { return omega.empty(); }
};

/// Binary tree stored in creation order: node 0 is the root, every split
/// appends its two children (left then right) after all existing nodes, so
/// parents always precede children.
struct TreeTopology {
  struct Node {
    int parent = -1;
    int left = -1;
    int right = -1;
  };
  std::vector<Node> nodes{Node{}};

  int n_nodes() const { return static_cast<int>(nodes.size()); }
  bool is_leaf(int id) const { return nodes[id].left < 0; }
  bool is_left_child(int id) const {
    const int p = nodes[id].parent;
    return p >= 0 && nodes[p].left == id;
  }
  /// Split a leaf; returns the id of the new left child (right is left + 1).
  int add_children(int parent);
  /// Node ids of the subtree rooted at id, inclusive, in creation order.
  std::vector<int> subtree(int id) const;
  std::vector<int> leaves() const;
  int depth(int id) const;
  void check(int id) const;  // throws std::invalid_argument on unknown id
};

/// Gate probability for the standardized feature row x (without bias slot);
/// clamped to [1e-15, 1 - 1e-15].
double gate_prob(const GateNode& gate, std::span<const double> x);

/// Probability of reaching `node` from the root: the product over ancestor
/// gates of p or (1 - p) depending on the side taken.  `gates` is indexed by
/// node id; every ancestor of `node` must carry a gate.
double path_prob(const TreeTopology& topo, const std::vector<GateNode>& gates,
                 int node, std::span<const double> x);

/// Gradient of path_prob(node, x) with respect to gate `gate_id`'s weights
/// (bias first).  Zero when gate_id is not an ancestor of node.
std::vector<double> path_prob_grad(const TreeTopology& topo,
                                   const std::vector<GateNode>& gates,
                                   int node, int gate_id,
                                   std::span<const double> x);

/// Design matrix with one column per node in creation order: column 0 is the
/// all-ones root column, column j the path probability of node j.  Stored
/// column-major (cols[node][row]).
struct DesignMatrix {
  std::size_t n = 0;
  std::vector<std::vector<double>> cols;
  std::size_t n_cols() const { return cols.size(); }
};

/// Evaluate all path-probability columns for standardized features X.
/// Row-parallel under Exec::parallel; bitwise identical to serial.
void design_matrix(const TreeTopology& topo, const std::vector<GateNode>& gates,
                   const Matrix& X, DesignMatrix& out,
                   Exec exec = Exec::parallel);

}  // namespace dsoft
