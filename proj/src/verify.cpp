#include <algorithm>
#include <cmath>

#include "nsdual/solvers.hpp"

namespace nsdual {

namespace {

// Conditional one-step means of the price increments under a density q;
// returns max_nodes |theta_node . E_q[dS | node]| as the martingale residual
// of the strategy's wealth process.
double strategy_martingale_residual(const MarketTree& tree, const Eigen::VectorXd& q,
                                    const Strategy& theta) {
  const int d = tree.num_assets();
  double worst = 0.0;
  int coord = 0;
  for (int node : tree.decision_nodes()) {
    auto [lo, hi] = tree.atom_range(node);
    double mass = 0.0;
    for (int a = lo; a < hi; ++a) mass += tree.atom_prob(a) * q[a];
    Eigen::VectorXd drift = Eigen::VectorXd::Zero(d);
    if (mass > 0.0) {
      auto at = [&](const std::vector<double>& s) {
        return Eigen::Map<const Eigen::VectorXd>(s.data(), d);
      };
      for (int child : tree.node(node).children) {
        auto [clo, chi] = tree.atom_range(child);
        double cm = 0.0;
        for (int a = clo; a < chi; ++a) cm += tree.atom_prob(a) * q[a];
        drift += (cm / mass) * (at(tree.node(child).prices) - at(tree.node(node).prices));
      }
      worst = std::max(worst, std::abs(theta.segment(coord, d).dot(drift)));
    }
    coord += d;
  }
  return worst;
}

}  // namespace

DualityDiagnostics verify_duality(const MarketTree& tree, const MartingalePolytope& poly,
                                  const Utility& u, const Conjugate& conj, const Claim& b,
                                  double x, const PrimalSolveResult& primal,
                                  const DualSolveResult& dual, const Tolerances& tol) {
  DualityDiagnostics d;
  const int m = tree.num_atoms();
  const Eigen::VectorXd& xw = primal.wealth;
  const Eigen::VectorXd& yv = dual.point.density;
  const double yt = dual.point.y;

  const double scale = std::max({1.0, std::abs(primal.value), std::abs(dual.value)});
  d.gap_rel = std::abs(primal.value - dual.value) / scale;
  d.weak_duality_ok = primal.value <= dual.value + 1e-9 * scale;

  // The solvers report arguments only to tolerance.  A hair away from a kink
  // (or from the domain edge) the pointwise subdifferential collapses to one
  // side, so hull it over an argument window of the verification width; by
  // monotonicity of the subdifferential the hull covers every point between.
  auto conj_window = [&](double y) {
    const double dy = tol.kkt * (1.0 + std::abs(y));
    double ylo = std::max(y - dy, 0.0);
    double yhi = y + dy;
    if (std::isfinite(conj.r()))
      yhi = std::min(yhi, conj.r_in_domain() ? conj.r() : std::max(y, conj.r() - dy));
    Interval s = conj.subdiff(ylo);
    return Interval{s.lo, std::max(s.hi, conj.subdiff(yhi).hi)};
  };
  auto util_window = [&](double w) {
    const double dw = tol.kkt * (1.0 + std::abs(w));
    double wlo = std::max(w - dw, u.domain_left());
    Interval s = u.superdiff(w + dw);
    Interval l = u.superdiff(wlo);
    return Interval{std::min(s.lo, l.lo), l.hi};
  };

  double incl = 0.0, kkt = 0.0, exy = 0.0;
  for (int i = 0; i < m; ++i) {
    double target = b[i] - xw[i];
    Interval sub = conj_window(yv[i]);
    incl = std::max(incl, sub.distance(target) / (1.0 + std::abs(target)));
    Interval sup = util_window(xw[i] - b[i]);
    kkt = std::max(kkt, sup.distance(yv[i]) / (1.0 + std::abs(yv[i])));
    exy += tree.atom_prob(i) * xw[i] * yv[i];
  }
  d.inclusion_resid = incl;
  d.kkt_resid = kkt;
  d.budget_resid = std::abs(exy - x * yt) / (1.0 + std::abs(x * yt));

  d.min_density = m ? yv.minCoeff() : 0.0;
  d.equivalent_regime = yt > 0.0 && d.min_density >= tol.positivity * yt;

  d.positivity_expected = false;
  if (u.satiation() == kInf && poly.interior.size() == m) {
    double probe_y = yt > 0.0 ? yt : 1.0;
    double ev = 0.0;
    for (int i = 0; i < m; ++i) ev += tree.atom_prob(i) * conj.value(probe_y * poly.interior[i]);
    d.positivity_expected = std::isfinite(ev);
  }
  d.positivity_ok = !d.positivity_expected || d.equivalent_regime;

  if (d.equivalent_regime) {
    Eigen::VectorXd q = yv / yt;
    ReplicationResult rep = replicate(tree, q, xw);
    const double xs = 1.0 + xw.lpNorm<Eigen::Infinity>();
    d.replication_resid = rep.residual / xs;
    d.terminal_match_resid = (rep.terminal - xw).lpNorm<Eigen::Infinity>() / xs;
    d.wealth_mart_resid = strategy_martingale_residual(tree, q, rep.theta) / xs;
  }

  const double dl = u.domain_left();
  if (std::isfinite(dl)) {
    double worst = 0.0;
    for (int i = 0; i < m; ++i) worst = std::max(worst, (b[i] + dl) - xw[i]);
    d.domain_floor_resid = std::max(worst, 0.0) / (1.0 + std::abs(dl));
  }

  const double xs = 1.0 + xw.lpNorm<Eigen::Infinity>();
  d.nonneg_wealth = m ? xw.minCoeff() >= -1e-10 * xs : false;
  if (d.nonneg_wealth) {
    SuperhedgeResult sh = superhedge(tree, xw);
    double dom = 0.0;
    for (int i = 0; i < m; ++i) dom = std::max(dom, xw[i] - sh.terminal[i]);
    d.attain_resid = (std::max(sh.cost - x, 0.0) + std::max(dom, 0.0)) / xs;
  }
  return d;
}

SolveReport solve_duality(const MarketTree& tree, const MartingalePolytope& poly,
                          const Utility& u, const Claim& b, double x, const SolveOptions& opts) {
  if (!(poly.interior_margin > 0.0))
    throw ArbitrageError("solve_duality: martingale polytope has no interior point");
  SolveReport rep;
  Conjugate conj = u.conjugate();
  rep.route = std::isfinite(u.domain_left()) ? "static" : "dynamic";
  rep.primal = rep.route == "dynamic"
                   ? solve_primal_dynamic(tree, u, b, x, opts.tol)
                   : solve_primal_static(tree, poly, u, b, x, opts.tol);
  rep.dual = solve_dual(tree, poly, conj, b, x, opts.tol);
  if (opts.run_oracle) {
    rep.oracle = dual_over_measures(tree, poly, conj, b, x, opts.tol);
    rep.oracle_run = true;
  }
  rep.primal_value = rep.primal.value;
  rep.dual_value = rep.dual.value;
  rep.diag = verify_duality(tree, poly, u, conj, b, x, rep.primal, rep.dual, opts.tol);
  rep.admissibility = validate_admissibility(u);
  double u0 = u.value(0.0);
  rep.normalization_k2 = std::isfinite(u0) ? std::max(0.0, 1.0 - u0) : 0.0;
  rep.superrep_claim = superreplication_price(tree, poly, b);
  return rep;
}

}  // namespace nsdual
