#pragma once

#include <cstdint>

#include "nsdual/interval.hpp"
#include "nsdual/market.hpp"

namespace nsdual {

/// Polytope of martingale densities {Z >= 0 : E[Z] = 1, prices are
/// Q-martingales between consecutive times}, in density coordinates over
/// atoms.  Equality rows are one per (decision node, asset) plus the
/// normalization row.
struct MartingalePolytope {
  Eigen::MatrixXd a_eq;  // rows x atoms
  Eigen::VectorXd b_eq;  // zeros, then 1 for the normalization row
  int rank = 0;
  std::vector<MartingaleDensity> vertices;
  bool vertices_complete = false;
  /// Density maximizing the minimum atom measure mass; empty when even the
  /// closed polytope is empty.
  MartingaleDensity interior;
  /// min_atom p*Z of the interior point; > 0 iff an equivalent martingale
  /// density exists.
  double interior_margin = -kInf;
};

struct PolytopeOptions {
  int vertex_cap = 10000;
  double feas_tol = 1e-9;
};

MartingalePolytope martingale_polytope(const MarketTree& tree, PolytopeOptions opts = {});

/// sup_Z E[Z X] over the polytope: the superreplication price of the claim.
/// Throws ArbitrageError when the polytope is empty.
double superreplication_price(const MarketTree& tree, const MartingalePolytope& poly,
                              const Claim& x);

/// Minimal-capital superhedge: value process u with u(atom) >= X, each node
/// priced as the worst one-step martingale expectation, plus a strategy
/// attaining the dominance node by node.  u(root) equals the
/// superreplication price on arbitrage-free trees.
struct SuperhedgeResult {
  double cost = 0.0;
  Strategy theta;
  Eigen::VectorXd terminal;  // x = cost wealth of theta; >= X up to tolerance
};
SuperhedgeResult superhedge(const MarketTree& tree, const Claim& x);

/// Backward induction of E_Q[X | node] and the least-squares hedge at every
/// decision node.  Q must be equivalent (all atom masses positive).
struct ReplicationResult {
  double cost = 0.0;             // E_Q[X]
  Strategy theta;
  Eigen::VectorXd node_values;   // per node id
  Eigen::VectorXd terminal;      // wealth of (cost, theta)
  double residual = 0.0;         // max one-step hedge mismatch
};
ReplicationResult replicate(const MarketTree& tree, const MartingaleDensity& q, const Claim& x);

struct RandomTreeParams {
  int periods_min = 1, periods_max = 2;
  int branch_min = 2, branch_max = 4;
  int assets_min = 1, assets_max = 2;
  double s0 = 1.0;
  double interior_margin = 1e-4;  // required min atom mass of some martingale measure
  int max_attempts = 500;
};

/// Seeded random tree, resampled until an equivalent martingale density with
/// the requested interior margin exists.
MarketTree random_arbitrage_free_tree(std::uint64_t seed, const RandomTreeParams& params = {});

}  // namespace nsdual
