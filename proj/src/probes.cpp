#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "nsdual/probes.hpp"
#include "nsdual/simplex.hpp"

namespace nsdual {

namespace {

struct Rng {
  std::mt19937_64 gen;
  explicit Rng(std::uint64_t seed) : gen(seed ^ 0x9e3779b97f4a7c15ull) {}
  double uniform() { return static_cast<double>(gen() >> 11) * 0x1.0p-53; }
  double normal() {  // Irwin-Hall: platform-independent determinism
    double s = 0.0;
    for (int i = 0; i < 12; ++i) s += uniform();
    return s - 6.0;
  }
};

double spread_of(const std::vector<Eigen::VectorXd>& pts) {
  double s = 0.0, mag = 1.0;
  for (const auto& v : pts) mag = std::max(mag, 1.0 + v.lpNorm<Eigen::Infinity>());
  for (size_t i = 0; i < pts.size(); ++i)
    for (size_t j = i + 1; j < pts.size(); ++j)
      s = std::max(s, (pts[i] - pts[j]).lpNorm<Eigen::Infinity>());
  return s / mag;
}

// Base LP feasibility rows of {Z in polytope, epigraph u, objective <= cut}:
// variable layout [Z (m, >= 0), u (m, free)].
LpProblem face_lp(const MarketTree& tree, const MartingalePolytope& poly, const Conjugate& conj,
                  const Claim& b, double y, double cut) {
  const int m = tree.num_atoms();
  const auto segs = conj.affine_segments();
  const int ns = static_cast<int>(segs.size());
  const bool cap = std::isfinite(conj.r());
  const int rows = m * ns + (cap ? m : 0) + 1;

  LpProblem lp;
  lp.a_eq = Eigen::MatrixXd::Zero(poly.a_eq.rows(), 2 * m);
  lp.a_eq.leftCols(m) = poly.a_eq;
  lp.b_eq = poly.b_eq;
  lp.a_le = Eigen::MatrixXd::Zero(rows, 2 * m);
  lp.b_le = Eigen::VectorXd::Zero(rows);
  lp.free_var.assign(2 * m, false);
  int row = 0;
  for (int i = 0; i < m; ++i) {
    lp.free_var[m + i] = true;
    for (const AffineSegment& s : segs) {
      lp.a_le(row, i) = (s.b - b[i]) * y;
      lp.a_le(row, m + i) = -1.0;
      lp.b_le[row] = -s.a;
      ++row;
    }
    if (cap) {
      lp.a_le(row, i) = y;
      lp.b_le[row] = conj.r();
      ++row;
    }
  }
  for (int i = 0; i < m; ++i) lp.a_le(row, m + i) = tree.atom_prob(i);
  lp.b_le[row] = cut;
  lp.c = Eigen::VectorXd::Zero(2 * m);
  return lp;
}

}  // namespace

UniquenessReport uniqueness_probe(const MarketTree& tree, const MartingalePolytope& poly,
                                  const Utility& u, const Claim& b, double x, std::uint64_t seed,
                                  const Tolerances& tol) {
  UniquenessReport rep;
  Rng rng(seed);
  const int m = tree.num_atoms();
  Conjugate conj = u.conjugate();
  const bool dynamic = !std::isfinite(u.domain_left());

  std::vector<Eigen::VectorXd> wealths;
  if (dynamic) {
    const int k = tree.num_strategy_coords();
    for (int t = 0; t < 3; ++t) {
      Eigen::VectorXd th0 = Eigen::VectorXd::Zero(k);
      if (t > 0)
        for (int j = 0; j < k; ++j) th0[j] = 0.5 * rng.normal();
      wealths.push_back(solve_primal_dynamic(tree, u, b, x, tol, nullptr, &th0).wealth);
    }
  } else {
    PrimalSolveResult base = solve_primal_static(tree, poly, u, b, x, tol, true);
    wealths.push_back(base.wealth);
    double slack = kInf;
    if (std::isfinite(u.domain_left()))
      slack = (base.wealth - b).minCoeff() - u.domain_left();
    double delta = std::min(0.01, 0.25 * slack);
    Eigen::VectorXd start = base.wealth.array() - delta;
    wealths.push_back(solve_primal_static(tree, poly, u, b, x, tol, true, &start).wealth);
  }
  rep.primal_spread = spread_of(wealths);
  rep.primal_unique = rep.primal_spread <= 1e-6;

  if (conj.affine_segments().empty()) {
    DualSolveResult base = solve_dual(tree, poly, conj, b, x, tol);
    std::vector<Eigen::VectorXd> duals{base.point.density};
    for (int t = 0; t < 2; ++t) {
      Eigen::VectorXd w0 = base.point.density;
      for (int i = 0; i < m; ++i) w0[i] = std::max(0.0, w0[i] * (1.0 + 0.3 * rng.normal()) + 0.05 * rng.uniform());
      duals.push_back(solve_dual(tree, poly, conj, b, x, tol, nullptr, &w0).point.density);
    }
    rep.dual_face_diameter = spread_of(duals);
    rep.dual_unique = rep.dual_face_diameter <= 1e-6;
    rep.dual_face_dim = 0;
    rep.dual_face_center = base.point.density;
    return rep;
  }

  // Piecewise-affine conjugate: probe the optimal face of the inner LP at the
  // oracle's y*.
  MeasureOracleResult mo = dual_over_measures(tree, poly, conj, b, x, tol);
  const double ys = mo.point.y;
  if (ys <= 0.0) {  // satiated regime: the zero measure is the only optimum
    rep.dual_unique = true;
    rep.dual_face_diameter = 0.0;
    rep.dual_face_center = Eigen::VectorXd::Zero(m);
    return rep;
  }
  const double psi = mo.value - x * ys;
  const double cut = psi + 1e-9 * (1.0 + std::abs(psi));
  LpProblem lp = face_lp(tree, poly, conj, b, ys, cut);

  std::vector<Eigen::VectorXd> pts;
  double diameter = 0.0;
  for (int t = 0; t < 8; ++t) {
    Eigen::VectorXd c = Eigen::VectorXd::Zero(2 * m);
    for (int i = 0; i < m; ++i) c[i] = rng.normal();
    double cn = c.norm();
    lp.c = c;
    LpResult lo = solve_lp(lp);
    LpResult hi = maximize_lp(lp);
    if (lo.status != LpResult::Status::Optimal || hi.status != LpResult::Status::Optimal) continue;
    pts.push_back(lo.x.head(m));
    pts.push_back(hi.x.head(m));
    diameter = std::max(diameter, (hi.objective - lo.objective) / std::max(cn, 1e-300));
  }
  rep.dual_face_diameter = diameter;
  rep.dual_unique = diameter <= 1e-7;

  if (pts.size() > 1) {
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(m);
    for (const auto& z : pts) mean += z;
    mean /= static_cast<double>(pts.size());
    Eigen::MatrixXd dev(static_cast<int>(pts.size()), m);
    for (int i = 0; i < dev.rows(); ++i) dev.row(i) = (pts[i] - mean).transpose();
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(dev);
    qr.setThreshold(1e-6);
    rep.dual_face_dim = static_cast<int>(qr.rank());

    // Multiplicity should live inside affine pieces of the conjugate: the
    // spanned values y*Z per varying atom must fit one closed segment.
    for (int i = 0; i < m && rep.face_within_affine_pieces; ++i) {
      double lo = kInf, hi = -kInf;
      for (const auto& z : pts) {
        lo = std::min(lo, ys * z[i]);
        hi = std::max(hi, ys * z[i]);
      }
      if (hi - lo <= 1e-8) continue;
      bool inside = false;
      for (const AffineSegment& s : conj.affine_segments())
        if (lo >= s.y_lo - 1e-7 && hi <= s.y_hi + 1e-7) inside = true;
      rep.face_within_affine_pieces = inside;
    }
  }

  // A canonical face point: Chebyshev center (max inscribed-ball radius over
  // the inequality rows, equalities held exactly).
  {
    LpProblem cheb = lp;
    const int rows = static_cast<int>(cheb.a_le.rows());
    cheb.a_le.conservativeResize(rows + m, 2 * m + 1);
    cheb.a_le.rightCols(1).setZero();
    cheb.a_le.block(rows, 0, m, 2 * m + 1).setZero();
    cheb.b_le.conservativeResize(rows + m);
    for (int r = 0; r < rows; ++r) cheb.a_le(r, 2 * m) = cheb.a_le.row(r).head(2 * m).norm();
    for (int i = 0; i < m; ++i) {  // keep the ball inside Z >= 0
      cheb.a_le(rows + i, i) = -1.0;
      cheb.a_le(rows + i, 2 * m) = 1.0;
      cheb.b_le[rows + i] = 0.0;
    }
    cheb.a_eq.conservativeResize(Eigen::NoChange, 2 * m + 1);
    cheb.a_eq.rightCols(1).setZero();
    cheb.c = Eigen::VectorXd::Zero(2 * m + 1);
    cheb.c[2 * m] = 1.0;
    cheb.free_var.assign(2 * m + 1, false);
    for (int i = 0; i < m; ++i) cheb.free_var[m + i] = true;
    LpResult center = maximize_lp(cheb);
    if (center.status == LpResult::Status::Optimal)
      rep.dual_face_center = center.x.head(m);
    else if (!pts.empty())
      rep.dual_face_center = pts.front();
  }
  return rep;
}

ClassAuditReport admissible_class_audit(const MarketTree& tree, const MartingalePolytope& poly,
                                        const Utility& u, const Claim& b, double x,
                                        const SolveReport& rep, const Tolerances& tol) {
  (void)tol;
  if (!rep.diag.equivalent_regime)
    throw SolverError("admissible_class_audit: requires a strictly positive dual optimizer");
  ClassAuditReport out;
  Conjugate conj = u.conjugate();
  const int m = tree.num_atoms();
  const double yt = rep.dual.point.y;
  Eigen::VectorXd q = rep.dual.point.density / yt;

  Strategy th = rep.primal.theta;
  if (th.size() == 0) th = replicate(tree, q, rep.primal.wealth).theta;

  // Wealth process of the strategy, node by node.
  const int d = tree.num_assets();
  std::vector<int> block(tree.num_nodes(), -1);
  {
    int idx = 0;
    for (int node : tree.decision_nodes()) block[node] = d * idx++;
  }
  Eigen::VectorXd wealth(tree.num_nodes());
  wealth[0] = x;
  auto at = [&](const std::vector<double>& s) {
    return Eigen::Map<const Eigen::VectorXd>(s.data(), d);
  };
  for (int id = 1; id < tree.num_nodes(); ++id) {
    const TreeNode& nd = tree.node(id);
    int off = block[nd.parent];
    wealth[id] = wealth[nd.parent] +
                 th.segment(off, d).dot(at(nd.prices) - at(tree.node(nd.parent).prices));
  }

  auto node_mass = [&](const Eigen::VectorXd& density, int node) {
    auto [lo, hi] = tree.atom_range(node);
    double s = 0.0;
    for (int a = lo; a < hi; ++a) s += tree.atom_prob(a) * density[a];
    return s;
  };

  out.q_mart_resid = 0.0;
  for (int node : tree.decision_nodes()) {
    double mn = node_mass(q, node);
    if (mn <= 0.0) continue;
    double ev = 0.0;
    for (int c : tree.node(node).children) ev += node_mass(q, c) / mn * wealth[c];
    out.q_mart_resid =
        std::max(out.q_mart_resid, std::abs(ev - wealth[node]) / (1.0 + std::abs(wealth[node])));
  }

  out.supermart_worst = 0.0;
  for (const Eigen::VectorXd& zv : poly.vertices) {
    double moment = 0.0;
    for (int i = 0; i < m; ++i) moment += tree.atom_prob(i) * conj.value(zv[i]);
    if (!std::isfinite(moment)) continue;
    ++out.vertices_checked;
    for (int node : tree.decision_nodes()) {
      double mn = node_mass(zv, node);
      if (mn <= 1e-14) continue;
      double ev = 0.0;
      for (int c : tree.node(node).children) ev += node_mass(zv, c) / mn * wealth[c];
      out.supermart_worst =
          std::max(out.supermart_worst, (ev - wealth[node]) / (1.0 + std::abs(wealth[node])));
      ++out.nodes_checked;
    }
  }

  for (int k = -3; k <= 3; ++k) {
    double y = yt * std::pow(2.0, k);
    out.grid_y.push_back(y);
    out.grid_value.push_back(dual_curve_value(tree, poly, conj, b, y));
  }
  double vmin = kInf;
  for (double v : out.grid_value)
    if (std::isfinite(v)) vmin = std::min(vmin, v);
  out.shift_k2 = vmin <= 0.0 ? 1.0 - vmin : 0.0;
  double c = 0.0;
  bool all_ok = true;
  for (size_t i = 0; i < out.grid_y.size(); ++i) {
    for (size_t j = 0; j < out.grid_y.size(); ++j) {
      if (i == j) continue;
      double ratio = out.grid_y[j] / out.grid_y[i];
      if (ratio < 0.5 - 1e-12 || ratio > 2.0 + 1e-12) continue;
      double fi = out.grid_value[i] + out.shift_k2;
      double fj = out.grid_value[j] + out.shift_k2;
      if (!std::isfinite(fi) || !std::isfinite(fj)) {
        all_ok = false;
        continue;
      }
      c = std::max(c, fj / fi);
    }
  }
  out.growth_c = c;
  out.growth_ok = all_ok && c < 1e6;
  return out;
}

}  // namespace nsdual
