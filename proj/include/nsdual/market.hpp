#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace nsdual {

/// Terminal payoff per atom, in atom order.
using Claim = Eigen::VectorXd;
/// Holdings per (nonterminal node, asset) column, in wealth_matrix order.
using Strategy = Eigen::VectorXd;
/// Radon-Nikodym density dQ/dP per atom.
using MartingaleDensity = Eigen::VectorXd;

struct ArbitrageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct SolverError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct TreeNode {
  int parent = -1;                // -1 at the root
  int time = 0;
  double branch_prob = 1.0;       // P(node | parent); 1 at the root
  std::vector<double> prices;     // one per asset
  std::vector<int> children;      // filled by from_nodes
};

/// Finite event tree with strictly positive branch probabilities and one
/// price vector per node.  Nodes are stored parent-before-child; terminal
/// nodes (the atoms) all sit at the same final time.
class MarketTree {
 public:
  static MarketTree from_nodes(std::vector<TreeNode> nodes);
  static MarketTree binomial(double s0, double up, double down, double p_up, int periods);
  /// One period, one asset, children in the given order (canonically
  /// ascending price factor).
  static MarketTree one_period(double s0, const std::vector<double>& factors,
                               const std::vector<double>& probs);

  int num_nodes() const { return static_cast<int>(nodes_.size()); }
  int num_assets() const { return assets_; }
  int periods() const { return periods_; }
  const TreeNode& node(int id) const { return nodes_[id]; }

  int num_atoms() const { return static_cast<int>(atoms_.size()); }
  int atom_node(int atom) const { return atoms_[atom]; }
  /// P(atom): product of branch probabilities along the path.
  double atom_prob(int atom) const { return atom_prob_[atom]; }
  const Eigen::VectorXd& atom_probs() const { return atom_prob_vec_; }
  /// Atom indices below a node, as a contiguous [first, last) range.
  std::pair<int, int> atom_range(int node_id) const { return atom_range_[node_id]; }

  /// Nonterminal node ids in storage order; strategy columns are grouped as
  /// (nonterminal node, asset) in this order.
  const std::vector<int>& decision_nodes() const { return decision_nodes_; }
  int num_strategy_coords() const { return static_cast<int>(decision_nodes_.size()) * assets_; }
  /// G with X = x * 1 + G theta: per atom, the accumulated price increments
  /// of the path for each strategy column.
  const Eigen::MatrixXd& wealth_matrix() const { return wealth_; }
  Eigen::VectorXd terminal_wealth(double x, const Strategy& theta) const;

  /// Flat debugging dump: node id, time, parent, branch probability, prices.
  std::string to_csv() const;

 private:
  std::vector<TreeNode> nodes_;
  std::vector<int> atoms_;
  std::vector<double> atom_prob_;
  Eigen::VectorXd atom_prob_vec_;
  std::vector<std::pair<int, int>> atom_range_;
  std::vector<int> decision_nodes_;
  Eigen::MatrixXd wealth_;
  int assets_ = 0;
  int periods_ = 0;
};

}  // namespace nsdual
