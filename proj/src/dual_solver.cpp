#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "nsdual/kernels.hpp"
#include "nsdual/moreau.hpp"
#include "nsdual/projection.hpp"
#include "nsdual/simplex.hpp"
#include "nsdual/solvers.hpp"

namespace nsdual {

namespace {

// One-sided-safe finite-difference curvature of the conjugate.
double conj_curvature(const Conjugate& conj, double v) {
  double h = 1e-6 * (1.0 + std::abs(v));
  double vl = std::max(v - h, 1e-300);
  double vr = v + h;
  if (std::isfinite(conj.r())) vr = std::min(vr, conj.r() * (1.0 - 1e-12));
  if (vr <= vl) return 0.0;
  Interval sl = conj.subdiff(vl), sr = conj.subdiff(vr);
  return std::max((0.5 * (sr.lo + sr.hi) - 0.5 * (sl.lo + sl.hi)) / (vr - vl), 0.0);
}

// Accelerated projected gradient descent on the smoothed dual objective at a
// fixed smoothing level.  Monotone through adaptive restarts; `step` is shared
// across levels so the backtracked estimate carries over.
struct LevelOptimizer {
  const BoxEqProjector& proj;
  Eigen::VectorXd& lambda;
  const Claim& b;
  const Eigen::VectorXd& p;
  double x;
  int m;
  Eigen::VectorXd vbuf, gbuf;

  double eval(const InfConvolution& f, const Eigen::VectorXd& v, Eigen::VectorXd* g) {
    AtomBatch d{v.data(), b.data(), p.data(), m, x};
    smoothed_map(f, d, vbuf.data(), g ? g->data() : gbuf.data());
    return sum_ordered(vbuf.data(), m);
  }

  // Returns the objective at the final iterate; updates w in place.
  double run(const InfConvolution& f, Eigen::VectorXd& w, double& step, double step_cap,
             int max_iter, int* iters_used, bool* converged) {
    Eigen::VectorXd wprev = w, y, gy(m), wn;
    double fw = eval(f, w, nullptr);
    const double f_first = fw;
    double fcheck = fw;
    double tk = 1.0;
    int calm = 0, flat = 0;
    bool ok = false;
    int it = 0;
    for (; it < max_iter; ++it) {
      // Micro-progress through momentum restarts can dodge the per-iterate
      // tests forever; if a whole window of sweeps barely moves the
      // objective, the level is done at working precision.
      if ((it & 255) == 255) {
        if (fcheck - fw <= 1e-13 * (1.0 + std::abs(fw))) {
          ok = true;
          break;
        }
        fcheck = fw;
      }
      double tnext = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * tk * tk));
      double mom = (tk - 1.0) / tnext;
      y = w + mom * (w - wprev);
      double fy = eval(f, y, &gy);
      double fn = 0.0;
      for (;;) {
        wn = proj.project(y - step * gy, &lambda);
        Eigen::VectorXd d = wn - y;
        fn = eval(f, wn, nullptr);
        // At a restart y = w is feasible, so a defeated projection cannot pass
        // the plain non-ascent check there.  Momentum points may sit outside
        // the box where the smoothed map dips below every feasible value, so
        // holding fn to fy would wedge the step; uphill momentum steps are
        // discarded by the restart below instead.
        if ((fn <= fy + gy.dot(d) + d.squaredNorm() / (2.0 * step) +
                       1e-14 * (1.0 + std::abs(fy)) &&
             (mom > 0.0 || fn <= fy + 1e-12 * (1.0 + std::abs(fy)))) ||
            step < 1e-18)
          break;
        step *= 0.5;
      }
      if (fn > fw + 1e-15 * (1.0 + std::abs(fw)) && mom > 0.0) {
        // Momentum overshoot: restart from w.
        tk = 1.0;
        wprev = w;
        continue;
      }
      double move = (wn - w).lpNorm<Eigen::Infinity>();
      double drop = fw - fn;
      wprev = w;
      w = wn;
      fw = fn;
      tk = tnext;
      step = std::min(step * 1.25, step_cap);
      // Converged once both the objective and the iterate flatline: the
      // momentum jitter keeps single-iterate moves above machine precision.
      if (drop <= 1e-14 * (1.0 + std::abs(fw)) &&
          move <= 1e-9 * (1.0 + w.lpNorm<Eigen::Infinity>())) {
        if (++calm >= 5) {
          ok = true;
          ++it;
          break;
        }
      } else {
        calm = 0;
      }
      // Along a flat optimal face the iterate may keep sliding with zero
      // objective change; a long run of improvement-free accepted steps is
      // just as much a stall certificate as a calm iterate.
      flat = drop <= 1e-15 * (1.0 + std::abs(fw)) ? flat + 1 : 0;
      if (flat >= 40) {
        ok = true;
        ++it;
        break;
      }
    }
    if (!ok) ok = f_first - fw <= 1e-11 * (1.0 + std::abs(fw));
    *iters_used += it;
    *converged = ok;
    return fw;
  }
};

}  // namespace

DualSolveResult solve_dual(const MarketTree& tree, const MartingalePolytope& poly,
                           const Conjugate& conj, const Claim& b, double x,
                           const Tolerances& tol, const SolveHooks* hooks,
                           const Eigen::VectorXd* start) {
  const int m = tree.num_atoms();
  if (b.size() != m) throw std::invalid_argument("solve_dual: claim size mismatch");
  if (!(poly.interior_margin > 0.0))
    throw ArbitrageError("solve_dual: martingale polytope has no interior point");

  const Eigen::VectorXd p = tree.atom_probs();
  double hi = kInf;
  if (std::isfinite(conj.r())) hi = conj.r_in_domain() ? conj.r() : conj.r() * (1.0 - 1e-12);

  const int mart_rows = static_cast<int>(poly.a_eq.rows()) - 1;
  BoxEqProjector proj(poly.a_eq.topRows(mart_rows), 0.0, hi);
  Eigen::VectorXd lambda = Eigen::VectorXd::Zero(mart_rows);

  Eigen::VectorXd w;
  if (start && start->size() == m) {
    w = start->cwiseMax(0.0);
  } else {
    w = poly.interior;
    if (std::isfinite(hi) && w.size() == m && w.maxCoeff() > hi) w *= 0.5 * hi / w.maxCoeff();
  }
  w = proj.project(w, &lambda);

  DualSolveResult res;
  LevelOptimizer opt{proj, lambda, b, p, x, m, Eigen::VectorXd(m), Eigen::VectorXd(m)};

  auto exact_objective = [&](const Eigen::VectorXd& v) {
    AtomBatch d{v.data(), b.data(), p.data(), m, x};
    conjugate_map(conj, d, opt.vbuf.data());
    return sum_ordered(opt.vbuf.data(), m);
  };

  // Smooth conjugates get a Newton polish and kinked ones an exact LP
  // endgame below, so the ladder only needs to deliver a good warm start.
  const double level_cap = conj.affine_segments().empty() ? 1e9 : 1e8;
  double step = 1.0;
  double prev_exact = kInf;
  bool last_converged = false;
  for (double level = 10.0; level <= level_cap; level *= 10.0) {
    InfConvolution smooth(conj, level, 0.0, tol.prox);
    const double curvature_step = 1.0 / (level * std::max(p.maxCoeff(), 1e-300));
    step = std::min(step, curvature_step);
    double fsm = opt.run(smooth, w, step, 1e3 * curvature_step, tol.max_iter, &res.iterations,
                         &last_converged);
    res.trace.push_back({level, fsm});
    if (hooks && hooks->on_dual_iterate) hooks->on_dual_iterate(w);
    if (level >= 1e6) {
      double exact = exact_objective(w);
      if (std::abs(exact - prev_exact) <= 1e-12 * (1.0 + std::abs(exact))) break;
      prev_exact = exact;
    }
  }

  w = proj.project(w, &lambda, 1e-13);

  if (conj.affine_segments().empty() && mart_rows > 0) {
    // The accelerated sweeps pin the optimal value far more tightly than the
    // optimal point (a value gap eps leaves a smooth argument ~sqrt(eps)
    // away).  A few equality-constrained Newton rounds on the exact
    // objective close that gap; steps live in the null space of the
    // martingale rows restricted to the unpinned coordinates, so feasibility
    // is preserved to round-off and pinned coordinates move only when the
    // gradient pulls them off their bound.
    const double wscale = 1.0 + w.lpNorm<Eigen::Infinity>();
    const double act_tol = 1e-10 * wscale;
    Eigen::VectorXd g(m), hd(m);
    for (int round = 0; round < 12; ++round) {
      std::vector<int> free_ix;
      for (int i = 0; i < m; ++i) {
        double vp = std::max(w[i], 1e-12 * wscale);
        if (std::isfinite(hi)) vp = std::min(vp, hi);
        Interval s = conj.subdiff(vp);
        g[i] = p[i] * (0.5 * (s.lo + s.hi) - b[i] + x);
        hd[i] = p[i] * conj_curvature(conj, vp) + 1e-12;
        if (w[i] <= act_tol && g[i] >= 0.0) continue;
        if (std::isfinite(hi) && w[i] >= hi - act_tol && g[i] <= 0.0) continue;
        free_ix.push_back(i);
      }
      Eigen::VectorXd df, gf;
      bool stationary = false, degenerate = false;
      // A released bound coordinate can still be pushed outward by the
      // coupled step; re-pin those and re-solve before taking the step.
      for (int rep = 0; rep < 4 && !free_ix.empty(); ++rep) {
        const int nf = static_cast<int>(free_ix.size());
        Eigen::MatrixXd af(mart_rows, nf);
        for (int j = 0; j < nf; ++j) af.col(j) = poly.a_eq.topRows(mart_rows).col(free_ix[j]);
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(af.transpose());
        const int nullity = nf - static_cast<int>(qr.rank());
        if (nullity <= 0) {
          degenerate = true;
          break;
        }
        const Eigen::MatrixXd nmat = Eigen::MatrixXd(qr.householderQ()).rightCols(nullity);
        gf.resize(nf);
        Eigen::VectorXd hf(nf);
        for (int j = 0; j < nf; ++j) {
          gf[j] = g[free_ix[j]];
          hf[j] = hd[free_ix[j]];
        }
        const Eigen::VectorXd rg = nmat.transpose() * gf;
        if (rg.lpNorm<Eigen::Infinity>() <= 1e-13 * (1.0 + gf.lpNorm<Eigen::Infinity>())) {
          stationary = true;
          break;
        }
        Eigen::MatrixXd hred = nmat.transpose() * hf.asDiagonal() * nmat;
        df = nmat * hred.ldlt().solve((-rg).eval());
        if (!df.allFinite()) {
          degenerate = true;
          break;
        }
        std::vector<int> keep;
        for (int j = 0; j < nf; ++j) {
          double wi = w[free_ix[j]];
          bool out = (wi <= act_tol && df[j] < 0.0) ||
                     (std::isfinite(hi) && wi >= hi - act_tol && df[j] > 0.0);
          if (!out) keep.push_back(free_ix[j]);
        }
        if (static_cast<int>(keep.size()) == nf) break;
        free_ix.swap(keep);
      }
      if (stationary || degenerate || free_ix.empty()) break;
      const int nf = static_cast<int>(free_ix.size());
      double amax = 1.0;
      for (int j = 0; j < nf; ++j) {
        double wi = w[free_ix[j]], di = df[j];
        if (di < 0.0) amax = std::min(amax, -wi / di);
        if (std::isfinite(hi) && di > 0.0) amax = std::min(amax, (hi - wi) / di);
      }
      const double f0 = exact_objective(w);
      const double slope = gf.dot(df);
      Eigen::VectorXd wc = w;
      double a = amax;
      bool accepted = false;
      for (int ls = 0; ls < 50 && a * df.lpNorm<Eigen::Infinity>() > 1e-17 * wscale; ++ls) {
        for (int j = 0; j < nf; ++j) wc[free_ix[j]] = w[free_ix[j]] + a * df[j];
        if (exact_objective(wc) <= f0 + 1e-4 * a * slope + 1e-15 * (1.0 + std::abs(f0))) {
          accepted = true;
          break;
        }
        a *= 0.5;
      }
      if (!accepted) break;
      for (int j = 0; j < nf; ++j) {
        double wi = std::max(0.0, w[free_ix[j]] + a * df[j]);
        w[free_ix[j]] = std::isfinite(hi) ? std::min(wi, hi) : wi;
      }
    }
    w = proj.project(w, &lambda, 1e-13);
  } else if (!conj.affine_segments().empty()) {
    // With a kinked conjugate the exact objective is piecewise affine, so the
    // endpoint the smoothing only approaches is one simplex solve away:
    // minimize sum_i p_i (t_i + x w_i) with t_i epigraphing the kinked map.
    const auto segs = conj.affine_segments();
    const int ns = static_cast<int>(segs.size());
    const bool cap = std::isfinite(hi);
    LpProblem lp;
    lp.a_eq = Eigen::MatrixXd::Zero(mart_rows, 2 * m);
    lp.a_eq.leftCols(m) = poly.a_eq.topRows(mart_rows);
    lp.b_eq = Eigen::VectorXd::Zero(mart_rows);
    lp.a_le = Eigen::MatrixXd::Zero(m * ns + (cap ? m : 0), 2 * m);
    lp.b_le = Eigen::VectorXd::Zero(lp.a_le.rows());
    lp.c = Eigen::VectorXd::Zero(2 * m);
    lp.free_var.assign(2 * m, false);
    int row = 0;
    for (int i = 0; i < m; ++i) {
      lp.free_var[m + i] = true;
      lp.c[i] = p[i] * x;
      lp.c[m + i] = p[i];
      for (const AffineSegment& s : segs) {
        lp.a_le(row, i) = s.b - b[i];
        lp.a_le(row, m + i) = -1.0;
        lp.b_le[row] = -s.a;
        ++row;
      }
      if (cap) {
        lp.a_le(row, i) = 1.0;
        lp.b_le[row] = hi;
        ++row;
      }
    }
    LpResult sol = solve_lp(lp);
    if (sol.status == LpResult::Status::Optimal) {
      Eigen::VectorXd wlp = proj.project(sol.x.head(m), &lambda, 1e-13);
      if (exact_objective(wlp) <= exact_objective(w)) w = wlp;
      // An exact vertex optimum certifies the endpoint even when some ladder
      // rung ran out of budget on the way up.
      last_converged = true;
    }
  }

  res.value = exact_objective(w);
  res.point.density = w;
  for (int i = 0; i < m; ++i) opt.vbuf[i] = p[i] * w[i];
  res.point.y = sum_ordered(opt.vbuf.data(), m);
  res.constraint_residual =
      mart_rows > 0 ? (poly.a_eq.topRows(mart_rows) * w).cwiseAbs().maxCoeff() : 0.0;
  res.converged = last_converged &&
                  res.constraint_residual <= 1e-9 * (1.0 + w.lpNorm<Eigen::Infinity>());
  return res;
}

}  // namespace nsdual
