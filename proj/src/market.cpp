#include "nsdual/market.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace nsdual {

namespace {

void validate(const std::vector<TreeNode>& nodes) {
  if (nodes.empty()) throw std::invalid_argument("tree: empty");
  if (nodes[0].parent != -1 || nodes[0].time != 0)
    throw std::invalid_argument("tree: node 0 must be the root at time 0");
  const size_t d = nodes[0].prices.size();
  if (d == 0) throw std::invalid_argument("tree: root needs at least one asset price");
  for (size_t i = 0; i < nodes.size(); ++i) {
    const TreeNode& n = nodes[i];
    if (i > 0) {
      if (n.parent < 0 || n.parent >= static_cast<int>(i))
        throw std::invalid_argument("tree: nodes must come after their parent");
      if (n.time != nodes[n.parent].time + 1)
        throw std::invalid_argument("tree: child time must be parent time + 1");
      if (!(n.branch_prob > 0.0) || n.branch_prob > 1.0)
        throw std::invalid_argument("tree: branch probabilities must lie in (0, 1]");
    }
    if (n.prices.size() != d) throw std::invalid_argument("tree: inconsistent asset count");
    for (double s : n.prices)
      if (!std::isfinite(s) || !(s > 0.0))
        throw std::invalid_argument("tree: prices must be finite and strictly positive");
  }
}

}  // namespace

MarketTree MarketTree::from_nodes(std::vector<TreeNode> nodes) {
  validate(nodes);
  MarketTree t;
  t.assets_ = static_cast<int>(nodes[0].prices.size());
  for (auto& n : nodes) n.children.clear();
  for (size_t i = 1; i < nodes.size(); ++i) nodes[nodes[i].parent].children.push_back(static_cast<int>(i));
  t.nodes_ = std::move(nodes);

  int depth = 0;
  for (const auto& n : t.nodes_) depth = std::max(depth, n.time);
  t.periods_ = depth;
  for (size_t i = 0; i < t.nodes_.size(); ++i) {
    const TreeNode& n = t.nodes_[i];
    if (n.children.empty()) {
      if (n.time != depth)
        throw std::invalid_argument("tree: all terminal nodes must sit at the final time");
      t.atoms_.push_back(static_cast<int>(i));
    } else {
      double mass = 0.0;
      for (int c : n.children) mass += t.nodes_[c].branch_prob;
      if (std::abs(mass - 1.0) > 1e-9)
        throw std::invalid_argument("tree: child branch probabilities must sum to 1");
      t.decision_nodes_.push_back(static_cast<int>(i));
    }
  }

  const int m = static_cast<int>(t.atoms_.size());
  t.atom_prob_.resize(m);
  for (int a = 0; a < m; ++a) {
    double p = 1.0;
    for (int id = t.atoms_[a]; id != 0; id = t.nodes_[id].parent) p *= t.nodes_[id].branch_prob;
    t.atom_prob_[a] = p;
  }
  t.atom_prob_vec_ = Eigen::Map<const Eigen::VectorXd>(t.atom_prob_.data(), m);

  // Contiguous atom ranges per node.  Atoms are in storage order; within a
  // parent-before-child layout a node's subtree atoms need not be contiguous
  // in general, so compute ranges from atom paths and verify contiguity.
  t.atom_range_.assign(t.nodes_.size(), {m, 0});
  for (int a = 0; a < m; ++a) {
    for (int id = t.atoms_[a]; id != -1; id = t.nodes_[id].parent) {
      auto& r = t.atom_range_[id];
      r.first = std::min(r.first, a);
      r.second = std::max(r.second, a + 1);
    }
  }
  for (size_t i = 0; i < t.nodes_.size(); ++i) {
    int count = 0;
    for (int a = 0; a < m; ++a) {
      int id = t.atoms_[a];
      while (id != -1 && id != static_cast<int>(i)) id = t.nodes_[id].parent;
      if (id == static_cast<int>(i)) ++count;
    }
    if (count != t.atom_range_[i].second - t.atom_range_[i].first)
      throw std::invalid_argument(
          "tree: subtree atoms must be contiguous (list children depth-first)");
  }

  // Wealth matrix: for each atom, walk the path and accumulate increments.
  const int k = t.num_strategy_coords();
  std::vector<int> col_of_node(t.nodes_.size(), -1);
  for (size_t j = 0; j < t.decision_nodes_.size(); ++j)
    col_of_node[t.decision_nodes_[j]] = static_cast<int>(j) * t.assets_;
  t.wealth_ = Eigen::MatrixXd::Zero(m, k);
  for (int a = 0; a < m; ++a) {
    int id = t.atoms_[a];
    while (id != 0) {
      int parent = t.nodes_[id].parent;
      int col = col_of_node[parent];
      for (int i = 0; i < t.assets_; ++i)
        t.wealth_(a, col + i) = t.nodes_[id].prices[i] - t.nodes_[parent].prices[i];
      id = parent;
    }
  }
  return t;
}

MarketTree MarketTree::binomial(double s0, double up, double down, double p_up, int periods) {
  if (periods < 1) throw std::invalid_argument("binomial: periods must be >= 1");
  std::vector<TreeNode> nodes;
  nodes.push_back(TreeNode{-1, 0, 1.0, {s0}, {}});
  // Depth-first so subtree atoms stay contiguous.
  struct Frame {
    int id;
    int time;
    double price;
  };
  std::vector<Frame> stack{{0, 0, s0}};
  while (!stack.empty()) {
    Frame f = stack.back();
    stack.pop_back();
    if (f.time == periods) continue;
    for (int b = 0; b < 2; ++b) {
      double factor = b == 0 ? down : up;
      double prob = b == 0 ? 1.0 - p_up : p_up;
      TreeNode n;
      n.parent = f.id;
      n.time = f.time + 1;
      n.branch_prob = prob;
      n.prices = {f.price * factor};
      nodes.push_back(n);
      stack.push_back({static_cast<int>(nodes.size()) - 1, n.time, n.prices[0]});
    }
  }
  return from_nodes(std::move(nodes));
}

MarketTree MarketTree::one_period(double s0, const std::vector<double>& factors,
                                  const std::vector<double>& probs) {
  if (factors.size() != probs.size() || factors.size() < 2)
    throw std::invalid_argument("one_period: need matching factor/probability lists, >= 2 branches");
  std::vector<TreeNode> nodes;
  nodes.push_back(TreeNode{-1, 0, 1.0, {s0}, {}});
  for (size_t i = 0; i < factors.size(); ++i)
    nodes.push_back(TreeNode{0, 1, probs[i], {s0 * factors[i]}, {}});
  return from_nodes(std::move(nodes));
}

Eigen::VectorXd MarketTree::terminal_wealth(double x, const Strategy& theta) const {
  if (theta.size() != wealth_.cols())
    throw std::invalid_argument("terminal_wealth: strategy length mismatch");
  return Eigen::VectorXd::Constant(num_atoms(), x) + wealth_ * theta;
}

std::string MarketTree::to_csv() const {
  std::string out = "node,time,parent,branch_prob";
  for (int i = 0; i < assets_; ++i) out += ",price_" + std::to_string(i);
  out += "\n";
  char buf[64];
  for (size_t i = 0; i < nodes_.size(); ++i) {
    const TreeNode& n = nodes_[i];
    out += std::to_string(i) + "," + std::to_string(n.time) + "," + std::to_string(n.parent);
    std::snprintf(buf, sizeof buf, ",%.17g", n.branch_prob);
    out += buf;
    for (double s : n.prices) {
      std::snprintf(buf, sizeof buf, ",%.17g", s);
      out += buf;
    }
    out += "\n";
  }
  return out;
}

}  // namespace nsdual
