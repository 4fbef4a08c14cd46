#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <utility>

#include "nsdual/simplex.hpp"
#include "nsdual/solvers.hpp"

namespace nsdual {

namespace {

double mid(const Interval& i) { return 0.5 * (i.lo + i.hi); }

// Supporting lines (slope, intercept) of a piecewise-linear concave utility,
// so that U(v) = min over lines of (intercept + slope * v).
std::vector<std::pair<double, double>> concave_lines(const Utility& u) {
  std::vector<std::pair<double, double>> lines;
  for (double k : u.kinks()) {
    double uv = u.value(k);
    Interval s = u.superdiff(k);
    lines.emplace_back(s.hi, uv - s.hi * k);
    lines.emplace_back(s.lo, uv - s.lo * k);
  }
  std::sort(lines.begin(), lines.end());
  lines.erase(std::unique(lines.begin(), lines.end(),
                          [](const auto& a, const auto& b) {
                            return std::abs(a.first - b.first) < 1e-14 &&
                                   std::abs(a.second - b.second) < 1e-12;
                          }),
              lines.end());
  return lines;
}

// 1-d concave maximization: slide uphill to bracket, then golden section.
double maximize_1d(const std::function<double(double)>& f, double t0, double h0) {
  double a = t0 - h0, c = t0 + h0;
  double fa = f(a), fc = f(c), f0 = f(t0);
  for (int g = 0; fc > f0 && g < 120; ++g) {
    a = t0;
    fa = f0;
    t0 = c;
    f0 = fc;
    h0 *= 2.0;
    c = t0 + h0;
    fc = f(c);
  }
  for (int g = 0; fa > f0 && g < 120; ++g) {
    c = t0;
    fc = f0;
    t0 = a;
    f0 = fa;
    h0 *= 2.0;
    a = t0 - h0;
    fa = f(a);
  }
  const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = c - gr * (c - a), x2 = a + gr * (c - a);
  double f1 = f(x1), f2 = f(x2);
  int guard = 0;
  while (c - a > 1e-13 * (1.0 + std::abs(a) + std::abs(c)) && ++guard < 400) {
    if (f1 >= f2) {
      c = x2;
      x2 = x1;
      f2 = f1;
      x1 = c - gr * (c - a);
      f1 = f(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + gr * (c - a);
      f2 = f(x2);
    }
  }
  return 0.5 * (a + c);
}

PrimalSolveResult dynamic_lp(const MarketTree& tree, const Utility& u, const Claim& b, double x) {
  const Eigen::MatrixXd g = tree.wealth_matrix();
  const int m = tree.num_atoms();
  const int k = static_cast<int>(g.cols());
  auto lines = concave_lines(u);
  if (lines.empty()) throw SolverError("dynamic_lp: utility has no kinks");

  LpProblem lp;
  const int nl = static_cast<int>(lines.size());
  lp.a_le = Eigen::MatrixXd::Zero(m * nl, k + m);
  lp.b_le = Eigen::VectorXd::Zero(m * nl);
  lp.c = Eigen::VectorXd::Zero(k + m);
  lp.free_var.assign(k + m, true);
  int row = 0;
  for (int i = 0; i < m; ++i) {
    lp.c[k + i] = tree.atom_prob(i);
    for (const auto& [slope, icept] : lines) {
      for (int j = 0; j < k; ++j) lp.a_le(row, j) = -slope * g(i, j);
      lp.a_le(row, k + i) = 1.0;
      lp.b_le[row] = icept + slope * (x - b[i]);
      ++row;
    }
  }
  LpResult sol = maximize_lp(lp);
  if (sol.status != LpResult::Status::Optimal)
    throw SolverError("dynamic_lp: simplex did not reach an optimum");
  PrimalSolveResult res;
  res.value = sol.objective;
  res.theta = sol.x.head(k);
  res.wealth = Eigen::VectorXd::Constant(m, x) + g * res.theta;
  res.via_lp = true;
  res.iterations = sol.iterations;
  res.converged = true;
  return res;
}

PrimalSolveResult static_lp(const MarketTree& tree, const MartingalePolytope& poly,
                            const Utility& u, const Claim& b, double x) {
  const int m = tree.num_atoms();
  auto lines = concave_lines(u);
  if (lines.empty()) throw SolverError("static_lp: utility has no kinks");
  const int nl = static_cast<int>(lines.size());
  const int nv = static_cast<int>(poly.vertices.size());

  LpProblem lp;
  lp.a_le = Eigen::MatrixXd::Zero(m * nl + nv, 2 * m);
  lp.b_le = Eigen::VectorXd::Zero(m * nl + nv);
  lp.c = Eigen::VectorXd::Zero(2 * m);
  lp.free_var.assign(2 * m, true);
  int row = 0;
  for (int i = 0; i < m; ++i) {
    lp.c[m + i] = tree.atom_prob(i);
    for (const auto& [slope, icept] : lines) {
      lp.a_le(row, i) = -slope;
      lp.a_le(row, m + i) = 1.0;
      lp.b_le[row] = icept - slope * b[i];
      ++row;
    }
  }
  for (int v = 0; v < nv; ++v) {
    for (int i = 0; i < m; ++i) lp.a_le(row, i) = tree.atom_prob(i) * poly.vertices[v][i];
    lp.b_le[row] = x;
    ++row;
  }
  LpResult sol = maximize_lp(lp);
  if (sol.status != LpResult::Status::Optimal)
    throw SolverError("static_lp: simplex did not reach an optimum");
  PrimalSolveResult res;
  res.value = sol.objective;
  res.wealth = sol.x.head(m);
  res.via_lp = true;
  res.iterations = sol.iterations;
  res.converged = true;
  return res;
}

}  // namespace

PrimalSolveResult solve_primal_dynamic(const MarketTree& tree, const Utility& u, const Claim& b,
                                       double x, const Tolerances& tol, const SolveHooks* hooks,
                                       const Strategy* start) {
  const int m = tree.num_atoms();
  if (b.size() != m) throw std::invalid_argument("solve_primal_dynamic: claim size mismatch");
  if (std::isfinite(u.domain_left()))
    throw std::invalid_argument("solve_primal_dynamic: utility must be finite on the whole line");

  if (!u.conjugate().affine_segments().empty()) {
    PrimalSolveResult res = dynamic_lp(tree, u, b, x);
    if (hooks && hooks->on_primal_iterate) hooks->on_primal_iterate(res.theta);
    return res;
  }

  const Eigen::MatrixXd g = tree.wealth_matrix();
  const int k = static_cast<int>(g.cols());
  const Eigen::VectorXd p = tree.atom_probs();

  Eigen::VectorXd th = (start && start->size() == k) ? *start : Eigen::VectorXd::Zero(k);
  auto value_at = [&](const Eigen::VectorXd& t) {
    Eigen::VectorXd w = Eigen::VectorXd::Constant(m, x) + g * t - b;
    double s = 0.0;
    for (int i = 0; i < m; ++i) s += p[i] * u.value(w[i]);
    return s;
  };
  auto grad_at = [&](const Eigen::VectorXd& t) {
    Eigen::VectorXd w = Eigen::VectorXd::Constant(m, x) + g * t - b;
    Eigen::VectorXd d(m);
    for (int i = 0; i < m; ++i) d[i] = p[i] * mid(u.superdiff(w[i]));
    return Eigen::VectorXd(g.transpose() * d);
  };

  PrimalSolveResult res;
  double f = value_at(th);
  double step = 1.0;
  int iters = 0;

  // Stage 1: monotone gradient ascent with backtracking.
  for (int it = 0; it < 600; ++it, ++iters) {
    Eigen::VectorXd gr = grad_at(th);
    if (gr.lpNorm<Eigen::Infinity>() <= 1e-13 * (1.0 + std::abs(f))) break;
    double a = step;
    bool moved = false;
    for (int ls = 0; ls < 40; ++ls) {
      double fn = value_at(th + a * gr);
      if (fn >= f + 1e-4 * a * gr.squaredNorm()) {
        th += a * gr;
        f = fn;
        step = a * 1.3;
        moved = true;
        break;
      }
      a *= 0.5;
    }
    if (!moved) break;
    if (th.lpNorm<Eigen::Infinity>() > 1e10) {
      res.diverged_to_satiation = true;
      res.value = u.sup_value();
      res.theta = th;
      res.wealth = Eigen::VectorXd::Constant(m, x) + g * th;
      res.iterations = iters;
      return res;
    }
  }
  if (hooks && hooks->on_primal_iterate) hooks->on_primal_iterate(th);

  // Stage 2: cyclic coordinate polish by exact line search.
  for (int cycle = 0; cycle < 200; ++cycle, ++iters) {
    double fb = f;
    for (int j = 0; j < k; ++j) {
      auto fj = [&](double t) {
        Eigen::VectorXd t2 = th;
        t2[j] = t;
        return value_at(t2);
      };
      th[j] = maximize_1d(fj, th[j], std::max(1e-6, 1e-3 * (1.0 + std::abs(th[j]))));
    }
    f = value_at(th);
    if (f - fb <= 1e-15 * (1.0 + std::abs(f))) break;
  }
  if (hooks && hooks->on_primal_iterate) hooks->on_primal_iterate(th);

  // Stage 3: guarded Newton polish with finite-difference curvature.
  for (int nw = 0; nw < 12; ++nw, ++iters) {
    Eigen::VectorXd gr = grad_at(th);
    if (gr.lpNorm<Eigen::Infinity>() <= 1e-14 * (1.0 + std::abs(f))) break;
    Eigen::MatrixXd h(k, k);
    for (int j = 0; j < k; ++j) {
      double hj = 1e-5 * (1.0 + std::abs(th[j]));
      Eigen::VectorXd tp = th, tm = th;
      tp[j] += hj;
      tm[j] -= hj;
      h.col(j) = (grad_at(tp) - grad_at(tm)) / (2.0 * hj);
    }
    h = 0.5 * (h + h.transpose()).eval();
    Eigen::LDLT<Eigen::MatrixXd> ldlt(Eigen::MatrixXd(-h));
    if (ldlt.info() != Eigen::Success) break;
    Eigen::VectorXd d = ldlt.solve(gr);
    if (!d.allFinite()) break;
    double a = 1.0;
    bool moved = false;
    for (int ls = 0; ls < 30; ++ls) {
      double fn = value_at(th + a * d);
      if (fn > f) {
        th += a * d;
        f = fn;
        moved = true;
        break;
      }
      a *= 0.5;
    }
    if (!moved) break;
  }
  if (hooks && hooks->on_primal_iterate) hooks->on_primal_iterate(th);

  res.value = f;
  res.theta = th;
  res.wealth = Eigen::VectorXd::Constant(m, x) + g * th;
  res.iterations = iters;
  res.converged = grad_at(th).lpNorm<Eigen::Infinity>() <= 1e-7 * (1.0 + std::abs(f));
  return res;
}

PrimalSolveResult solve_primal_static(const MarketTree& tree, const MartingalePolytope& poly,
                                      const Utility& u, const Claim& b, double x,
                                      const Tolerances& tol, bool relax_capital_check,
                                      const Eigen::VectorXd* start) {
  const int m = tree.num_atoms();
  if (b.size() != m) throw std::invalid_argument("solve_primal_static: claim size mismatch");
  if (!poly.vertices_complete)
    throw SolverError("solve_primal_static: martingale vertex enumeration incomplete");
  const double dl = u.domain_left();
  if (std::isfinite(dl) && !relax_capital_check && !(x > 0.0))
    throw std::invalid_argument(
        "solve_primal_static: capital must be positive when the utility domain is bounded below");

  if (!u.conjugate().affine_segments().empty()) return static_lp(tree, poly, u, b, x);

  const int nv = static_cast<int>(poly.vertices.size());
  const Eigen::VectorXd p = tree.atom_probs();
  Eigen::MatrixXd cv(nv, m);  // budget rows: cv * X <= x
  for (int v = 0; v < nv; ++v)
    for (int i = 0; i < m; ++i) cv(v, i) = p[i] * poly.vertices[v][i];

  // Strictly feasible start: a constant when possible, else a max-margin LP.
  Eigen::VectorXd xw;
  bool have_start = false;
  if (start && start->size() == m) {
    Eigen::VectorXd s = Eigen::VectorXd::Constant(nv, x) - cv * (*start);
    bool floor_ok = !std::isfinite(dl) || ((*start - b).minCoeff() > dl + 1e-12);
    if (s.minCoeff() > 0.0 && floor_ok) {
      xw = *start;
      have_start = true;
    }
  }
  if (!have_start) {
    double c0 = x - std::max(1.0, 0.1 * std::abs(x));
    if (!std::isfinite(dl) || c0 > b.maxCoeff() + dl + 1e-6) {
      xw = Eigen::VectorXd::Constant(m, c0);
      have_start = true;
    }
  }
  if (!have_start) {
    LpProblem lp;  // max s  s.t.  cv X + s <= x,  -X_i + s <= -(B_i + dl)
    lp.a_le = Eigen::MatrixXd::Zero(nv + m, m + 1);
    lp.b_le = Eigen::VectorXd::Zero(nv + m);
    lp.a_le.block(0, 0, nv, m) = cv;
    lp.a_le.block(0, m, nv, 1).setOnes();
    lp.b_le.head(nv).setConstant(x);
    for (int i = 0; i < m; ++i) {
      lp.a_le(nv + i, i) = -1.0;
      lp.a_le(nv + i, m) = 1.0;
      lp.b_le[nv + i] = -(b[i] + dl);
    }
    lp.c = Eigen::VectorXd::Zero(m + 1);
    lp.c[m] = 1.0;
    lp.free_var.assign(m + 1, true);
    LpResult sol = maximize_lp(lp);
    if (sol.status != LpResult::Status::Optimal || sol.objective <= 1e-10)
      throw SolverError("solve_primal_static: no wealth dominates the utility domain floor");
    xw = sol.x.head(m);
  }

  auto floor_slack = [&](const Eigen::VectorXd& w, int i) { return w[i] - b[i] - dl; };
  auto barrier_value = [&](const Eigen::VectorXd& w, double mu) {
    Eigen::VectorXd s = Eigen::VectorXd::Constant(nv, x) - cv * w;
    if (nv > 0 && s.minCoeff() <= 0.0) return kInf;
    double val = 0.0;
    for (int i = 0; i < m; ++i) {
      double v = w[i] - b[i];
      if (std::isfinite(dl)) {
        if (v <= dl) return kInf;
        val -= mu * std::log(v - dl);
      }
      val -= p[i] * u.value(v);
    }
    for (int v = 0; v < nv; ++v) val -= mu * std::log(s[v]);
    return val;
  };

  int iters = 0;
  for (double mu = 1.0; mu >= 0.99e-12; mu *= 0.1) {
    for (int it = 0; it < 60; ++it, ++iters) {
      Eigen::VectorXd slack = Eigen::VectorXd::Constant(nv, x) - cv * xw;
      Eigen::VectorXd grad(m);
      Eigen::MatrixXd h = Eigen::MatrixXd::Zero(m, m);
      for (int i = 0; i < m; ++i) {
        double v = xw[i] - b[i];
        double hi_fd = 1e-6 * (1.0 + std::abs(v));
        double lo_pt = std::isfinite(dl) ? std::max(v - hi_fd, dl + 0.25 * (v - dl)) : v - hi_fd;
        double d2 = (mid(u.superdiff(v + hi_fd)) - mid(u.superdiff(lo_pt))) / (v + hi_fd - lo_pt);
        grad[i] = -p[i] * mid(u.superdiff(v));
        h(i, i) = p[i] * std::max(-d2, 0.0) + 1e-11;
        if (std::isfinite(dl)) {
          grad[i] -= mu / (v - dl);
          h(i, i) += mu / ((v - dl) * (v - dl));
        }
      }
      for (int v = 0; v < nv; ++v) {
        grad += (mu / slack[v]) * cv.row(v).transpose();
        h += (mu / (slack[v] * slack[v])) * (cv.row(v).transpose() * cv.row(v));
      }
      Eigen::VectorXd d = Eigen::LDLT<Eigen::MatrixXd>(h).solve(-grad);
      if (!d.allFinite()) break;
      if (d.lpNorm<Eigen::Infinity>() <= 1e-13 * (1.0 + xw.lpNorm<Eigen::Infinity>())) break;
      double amax = 1.0;
      Eigen::VectorXd dd = cv * d;
      for (int v = 0; v < nv; ++v)
        if (dd[v] > 0.0) amax = std::min(amax, 0.995 * slack[v] / dd[v]);
      if (std::isfinite(dl))
        for (int i = 0; i < m; ++i)
          if (d[i] < 0.0) amax = std::min(amax, 0.995 * floor_slack(xw, i) / (-d[i]));
      double f0 = barrier_value(xw, mu);
      double slope = grad.dot(d);
      double a = amax;
      bool moved = false;
      for (int ls = 0; ls < 50; ++ls) {
        if (barrier_value(xw + a * d, mu) <= f0 + 1e-4 * a * slope) {
          xw += a * d;
          moved = true;
          break;
        }
        a *= 0.5;
      }
      if (!moved) break;
    }
  }
  (void)tol;

  PrimalSolveResult res;
  double val = 0.0;
  for (int i = 0; i < m; ++i) val += p[i] * u.value(xw[i] - b[i]);
  res.value = val;
  res.wealth = xw;
  res.iterations = iters;
  res.converged = true;
  return res;
}

}  // namespace nsdual
