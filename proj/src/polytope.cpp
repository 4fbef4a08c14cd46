#include "nsdual/polytope.hpp"

#include <cmath>
#include <functional>
#include <random>

#include "nsdual/simplex.hpp"

namespace nsdual {

namespace {

double log_choose(int n, int k) {
  return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

}  // namespace

MartingalePolytope martingale_polytope(const MarketTree& tree, PolytopeOptions opts) {
  const int m = tree.num_atoms();
  const int d = tree.num_assets();
  const auto& decisions = tree.decision_nodes();
  const int rows = static_cast<int>(decisions.size()) * d + 1;

  MartingalePolytope poly;
  poly.a_eq = Eigen::MatrixXd::Zero(rows, m);
  poly.b_eq = Eigen::VectorXd::Zero(rows);
  int row = 0;
  for (int nu : decisions) {
    for (int i = 0; i < d; ++i, ++row) {
      for (int c : tree.node(nu).children) {
        double ds = tree.node(c).prices[i] - tree.node(nu).prices[i];
        auto [lo, hi] = tree.atom_range(c);
        for (int a = lo; a < hi; ++a) poly.a_eq(row, a) = tree.atom_prob(a) * ds;
      }
    }
  }
  for (int a = 0; a < m; ++a) poly.a_eq(row, a) = tree.atom_prob(a);
  poly.b_eq[row] = 1.0;

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(poly.a_eq);
  qr.setThreshold(1e-10);
  poly.rank = static_cast<int>(qr.rank());

  // Interior point: maximize the minimum atom measure mass t with
  // p_a Z_a = u_a + t, u >= 0, t free.
  {
    LpProblem lp;
    lp.a_eq.resize(rows, m + 1);
    lp.b_eq = poly.b_eq;
    for (int r = 0; r < rows; ++r) {
      double tcoef = 0.0;
      for (int a = 0; a < m; ++a) {
        double coef = poly.a_eq(r, a) / tree.atom_prob(a);
        lp.a_eq(r, a) = coef;
        tcoef += coef;
      }
      lp.a_eq(r, m) = tcoef;
    }
    lp.c = Eigen::VectorXd::Zero(m + 1);
    lp.c[m] = 1.0;
    lp.free_var.assign(m + 1, false);
    lp.free_var[m] = true;
    LpResult res = maximize_lp(lp);
    if (res.status == LpResult::Status::Optimal) {
      poly.interior_margin = res.objective;
      if (poly.interior_margin > 0.0) {
        poly.interior.resize(m);
        for (int a = 0; a < m; ++a)
          poly.interior[a] = (res.x[a] + res.x[m]) / tree.atom_prob(a);
      }
    }
  }

  // Vertices: basic feasible solutions over column subsets of size rank.
  if (log_choose(m, poly.rank) <= std::log(2e6)) {
    std::vector<int> comb(poly.rank);
    for (int i = 0; i < poly.rank; ++i) comb[i] = i;
    poly.vertices_complete = true;
    const double scale = 1.0 + poly.a_eq.cwiseAbs().maxCoeff();
    while (true) {
      Eigen::MatrixXd sub(rows, poly.rank);
      for (int j = 0; j < poly.rank; ++j) sub.col(j) = poly.a_eq.col(comb[j]);
      Eigen::ColPivHouseholderQR<Eigen::MatrixXd> sqr(sub);
      sqr.setThreshold(1e-10);
      if (static_cast<int>(sqr.rank()) == poly.rank) {
        Eigen::VectorXd zs = sqr.solve(poly.b_eq);
        if ((sub * zs - poly.b_eq).cwiseAbs().maxCoeff() <= opts.feas_tol * scale &&
            zs.minCoeff() >= -opts.feas_tol) {
          Eigen::VectorXd z = Eigen::VectorXd::Zero(m);
          for (int j = 0; j < poly.rank; ++j) z[comb[j]] = std::max(zs[j], 0.0);
          bool dup = false;
          for (const auto& v : poly.vertices)
            if ((v - z).cwiseAbs().maxCoeff() <= 1e-8) {
              dup = true;
              break;
            }
          if (!dup) {
            if (static_cast<int>(poly.vertices.size()) >= opts.vertex_cap) {
              poly.vertices_complete = false;
              break;
            }
            poly.vertices.push_back(std::move(z));
          }
        }
      }
      // next combination
      int i = poly.rank - 1;
      while (i >= 0 && comb[i] == m - poly.rank + i) --i;
      if (i < 0) break;
      ++comb[i];
      for (int j = i + 1; j < poly.rank; ++j) comb[j] = comb[j - 1] + 1;
    }
  }
  return poly;
}

double superreplication_price(const MarketTree& tree, const MartingalePolytope& poly,
                              const Claim& x) {
  if (x.size() != tree.num_atoms())
    throw std::invalid_argument("superreplication_price: claim length mismatch");
  LpProblem lp;
  lp.a_eq = poly.a_eq;
  lp.b_eq = poly.b_eq;
  lp.c = tree.atom_probs().cwiseProduct(x);
  LpResult res = maximize_lp(lp);
  if (res.status != LpResult::Status::Optimal)
    throw ArbitrageError("superreplication: no martingale density (market has arbitrage)");
  return res.objective;
}

SuperhedgeResult superhedge(const MarketTree& tree, const Claim& x) {
  const int d = tree.num_assets();
  Eigen::VectorXd u = Eigen::VectorXd::Zero(tree.num_nodes());
  for (int a = 0; a < tree.num_atoms(); ++a) u[tree.atom_node(a)] = x[a];

  SuperhedgeResult out;
  out.theta = Strategy::Zero(tree.num_strategy_coords());
  const auto& decisions = tree.decision_nodes();
  // Decision nodes in reverse storage order: children before parents.
  for (int j = static_cast<int>(decisions.size()) - 1; j >= 0; --j) {
    int nu = decisions[j];
    const auto& children = tree.node(nu).children;
    const int nc = static_cast<int>(children.size());
    // min c  s.t.  c + theta . (S_c - S_nu) >= u(c)  for every child.
    LpProblem lp;
    lp.a_le.resize(nc, d + 1);
    lp.b_le.resize(nc);
    for (int r = 0; r < nc; ++r) {
      lp.a_le(r, 0) = -1.0;
      for (int i = 0; i < d; ++i)
        lp.a_le(r, 1 + i) = -(tree.node(children[r]).prices[i] - tree.node(nu).prices[i]);
      lp.b_le[r] = -u[children[r]];
    }
    lp.c = Eigen::VectorXd::Zero(d + 1);
    lp.c[0] = 1.0;
    lp.free_var.assign(d + 1, true);
    LpResult res = solve_lp(lp);
    if (res.status != LpResult::Status::Optimal)
      throw ArbitrageError("superhedge: one-step hedge problem unbounded (arbitrage)");
    u[nu] = res.x[0];
    for (int i = 0; i < d; ++i) out.theta[j * d + i] = res.x[1 + i];
  }
  out.cost = u[0];
  out.terminal = tree.terminal_wealth(out.cost, out.theta);
  return out;
}

ReplicationResult replicate(const MarketTree& tree, const MartingaleDensity& q, const Claim& x) {
  const int m = tree.num_atoms();
  if (q.size() != m || x.size() != m)
    throw std::invalid_argument("replicate: vector length mismatch");
  Eigen::VectorXd mass(m);
  for (int a = 0; a < m; ++a) {
    mass[a] = tree.atom_prob(a) * q[a];
    if (!(mass[a] > 0.0))
      throw std::invalid_argument("replicate: density must be strictly positive");
  }

  ReplicationResult out;
  out.node_values = Eigen::VectorXd::Zero(tree.num_nodes());
  Eigen::VectorXd node_mass = Eigen::VectorXd::Zero(tree.num_nodes());
  for (int id = 0; id < tree.num_nodes(); ++id) {
    auto [lo, hi] = tree.atom_range(id);
    double mq = 0.0, mv = 0.0;
    for (int a = lo; a < hi; ++a) {
      mq += mass[a];
      mv += mass[a] * x[a];
    }
    node_mass[id] = mq;
    out.node_values[id] = mv / mq;
  }
  out.cost = out.node_values[0];

  const int d = tree.num_assets();
  const auto& decisions = tree.decision_nodes();
  out.theta = Strategy::Zero(tree.num_strategy_coords());
  out.residual = 0.0;
  for (size_t j = 0; j < decisions.size(); ++j) {
    int nu = decisions[j];
    const auto& children = tree.node(nu).children;
    const int nc = static_cast<int>(children.size());
    Eigen::MatrixXd a(nc, d);
    Eigen::VectorXd rhs(nc);
    for (int r = 0; r < nc; ++r) {
      for (int i = 0; i < d; ++i)
        a(r, i) = tree.node(children[r]).prices[i] - tree.node(nu).prices[i];
      rhs[r] = out.node_values[children[r]] - out.node_values[nu];
    }
    Eigen::VectorXd th = a.completeOrthogonalDecomposition().solve(rhs);
    for (int i = 0; i < d; ++i) out.theta[j * d + i] = th[i];
    out.residual = std::max(out.residual, (a * th - rhs).cwiseAbs().maxCoeff());
  }
  out.terminal = tree.terminal_wealth(out.cost, out.theta);
  return out;
}

namespace {

double urand(std::mt19937_64& rng) { return (rng() >> 11) * 0x1.0p-53; }
double urange(std::mt19937_64& rng, double lo, double hi) { return lo + (hi - lo) * urand(rng); }
int irange(std::mt19937_64& rng, int lo, int hi) {
  return lo + static_cast<int>(urand(rng) * (hi - lo + 1)) % (hi - lo + 1);
}

}  // namespace

MarketTree random_arbitrage_free_tree(std::uint64_t seed, const RandomTreeParams& params) {
  std::mt19937_64 rng(seed);
  for (int attempt = 0; attempt < params.max_attempts; ++attempt) {
    const int periods = irange(rng, params.periods_min, params.periods_max);
    const int assets = irange(rng, params.assets_min, params.assets_max);
    const int bmin = std::max(params.branch_min, assets + 1);
    std::vector<TreeNode> nodes;
    TreeNode root;
    root.prices.assign(assets, params.s0);
    nodes.push_back(root);

    // Depth-first expansion keeps subtree atoms contiguous.
    std::function<void(int)> expand = [&](int id) {
      if (nodes[id].time == periods) return;
      const int nb = irange(rng, bmin, std::max(bmin, params.branch_max));
      std::vector<double> probs(nb);
      double psum = 0.0;
      for (double& p : probs) psum += (p = urange(rng, 0.2, 1.0));
      // Per-asset factors with a guaranteed straddle around 1.
      std::vector<std::vector<double>> factors(assets, std::vector<double>(nb));
      for (int i = 0; i < assets; ++i) {
        for (int b = 0; b < nb; ++b) factors[i][b] = urange(rng, 0.6, 1.6);
        int lo_slot = irange(rng, 0, nb - 1);
        int hi_slot = (lo_slot + 1 + irange(rng, 0, nb - 2)) % nb;
        factors[i][lo_slot] = urange(rng, 0.5, 0.9);
        factors[i][hi_slot] = urange(rng, 1.1, 1.9);
      }
      std::vector<int> ids;
      for (int b = 0; b < nb; ++b) {
        TreeNode n;
        n.parent = id;
        n.time = nodes[id].time + 1;
        n.branch_prob = probs[b] / psum;
        n.prices.resize(assets);
        for (int i = 0; i < assets; ++i) n.prices[i] = nodes[id].prices[i] * factors[i][b];
        nodes.push_back(n);
        ids.push_back(static_cast<int>(nodes.size()) - 1);
      }
      for (int c : ids) expand(c);
    };
    expand(0);

    MarketTree tree = MarketTree::from_nodes(std::move(nodes));
    MartingalePolytope poly = martingale_polytope(tree);
    if (poly.interior_margin >= params.interior_margin) return tree;
  }
  throw SolverError("random tree: no arbitrage-free sample within the attempt budget");
}

}  // namespace nsdual
