#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "nsdual/simplex.hpp"
#include "nsdual/solvers.hpp"

namespace nsdual {

namespace {

double mid(const Interval& i) { return 0.5 * (i.lo + i.hi); }

// One-sided-safe finite-difference curvature of the conjugate.
double fd_second(const Conjugate& conj, double v) {
  double h = 1e-6 * (1.0 + std::abs(v));
  double vl = std::max(v - h, 1e-300);
  double vr = v + h;
  if (std::isfinite(conj.r())) vr = std::min(vr, conj.r() * (1.0 - 1e-12));
  if (vr <= vl) return 0.0;
  double d = (mid(conj.subdiff(vr)) - mid(conj.subdiff(vl))) / (vr - vl);
  return std::max(d, 0.0);
}

// Piecewise-affine conjugate: the inner minimization is an exact LP in
// (Z, epigraph) variables.
double curve_pw(const MarketTree& tree, const MartingalePolytope& poly, const Conjugate& conj,
                const Claim& b, double y, Eigen::VectorXd* density) {
  const int m = tree.num_atoms();
  const auto segs = conj.affine_segments();
  const int r_eq = static_cast<int>(poly.a_eq.rows());
  const int ns = static_cast<int>(segs.size());
  const bool cap = std::isfinite(conj.r());
  const int rows = m * ns + (cap ? m : 0);

  LpProblem lp;
  lp.a_eq = Eigen::MatrixXd::Zero(r_eq, 2 * m);
  lp.a_eq.leftCols(m) = poly.a_eq;
  lp.b_eq = poly.b_eq;
  lp.a_le = Eigen::MatrixXd::Zero(rows, 2 * m);
  lp.b_le = Eigen::VectorXd::Zero(rows);
  lp.c = Eigen::VectorXd::Zero(2 * m);
  lp.free_var.assign(2 * m, false);
  int row = 0;
  for (int i = 0; i < m; ++i) {
    lp.c[m + i] = tree.atom_prob(i);
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
  LpResult sol = solve_lp(lp);
  if (sol.status != LpResult::Status::Optimal) return kInf;
  if (density) *density = sol.x.head(m);
  return sol.objective;
}

// Smooth conjugate: equality-constrained barrier Newton in the per-atom
// values V = y Z > 0 (with an upper barrier when the conjugate domain has a
// finite open end).  Working at the conjugate's natural scale keeps the
// Newton system conditioned uniformly in y; in Z coordinates the Hessian
// blocks carry a y^2 factor that swamps the constraint rows for large y and
// lets the iterates drift off the martingale manifold.
double curve_smooth(const MarketTree& tree, const MartingalePolytope& poly, const Conjugate& conj,
                    const Claim& b, double y, Eigen::VectorXd* density,
                    const Eigen::VectorXd* warm) {
  const int m = tree.num_atoms();
  const int r_eq = static_cast<int>(poly.a_eq.rows());
  const double rr = conj.r();
  const bool cap = std::isfinite(rr);

  Eigen::VectorXd z = poly.interior;
  bool warmed = false;
  if (warm && warm->size() == m && warm->minCoeff() > 0.0 &&
      (!cap || y * warm->maxCoeff() < rr * (1.0 - 1e-10))) {
    z = *warm;
    warmed = true;
  }
  if (cap && y * z.maxCoeff() >= rr * (1.0 - 1e-10)) {
    // Max-margin density for the domain cap: max t s.t. y Z + t <= r on the polytope.
    LpProblem lp;
    lp.a_eq = Eigen::MatrixXd::Zero(r_eq, m + 1);
    lp.a_eq.leftCols(m) = poly.a_eq;
    lp.b_eq = poly.b_eq;
    lp.a_le = Eigen::MatrixXd::Zero(m, m + 1);
    lp.b_le = Eigen::VectorXd::Constant(m, rr);
    for (int i = 0; i < m; ++i) {
      lp.a_le(i, i) = y;
      lp.a_le(i, m) = 1.0;
    }
    lp.c = Eigen::VectorXd::Zero(m + 1);
    lp.c[m] = 1.0;
    lp.free_var.assign(m + 1, false);
    lp.free_var[m] = true;
    LpResult sol = maximize_lp(lp);
    if (sol.status != LpResult::Status::Optimal || sol.objective <= 1e-11) return kInf;
    double margin = sol.objective;
    double eps = std::min(0.1, 0.4 * margin / std::max(1e-12, y * poly.interior.maxCoeff() + 1.0));
    z = (1.0 - eps) * sol.x.head(m) + eps * poly.interior;
  }

  Eigen::VectorXd vv = y * z;
  auto barrier_value = [&](const Eigen::VectorXd& vz, double mu) {
    double s = 0.0;
    for (int i = 0; i < m; ++i) {
      if (vz[i] <= 0.0 || (cap && vz[i] >= rr)) return kInf;
      s += tree.atom_prob(i) * (conj.value(vz[i]) - vz[i] * b[i]) - mu * std::log(vz[i]);
      if (cap) s -= mu * std::log(rr - vz[i]);
    }
    return s;
  };

  // Null-space reduction: steps dv = N du with A N = 0 by construction, so
  // the iterates stay on the martingale manifold to machine precision no
  // matter how badly the barrier Hessian is scaled.  (A saddle-point solve
  // drifts with the worst Hessian entry, and off-manifold evaluations can
  // fall below the true constrained minimum, breaking weak duality
  // downstream.)
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(poly.a_eq.transpose());
  const int nullity = m - static_cast<int>(qr.rank());
  if (nullity <= 0) {
    if (density) *density = vv / y;
    double s0 = 0.0;
    for (int i = 0; i < m; ++i) s0 += tree.atom_prob(i) * (conj.value(vv[i]) - vv[i] * b[i]);
    return s0;
  }
  const Eigen::MatrixXd nmat =
      Eigen::MatrixXd(qr.householderQ()).rightCols(nullity);

  for (double mu = warmed ? 1e-4 : 1.0; mu >= 0.99e-12; mu *= 0.1) {
    for (int it = 0; it < 60; ++it) {
      Eigen::VectorXd grad(m), hdiag(m);
      for (int i = 0; i < m; ++i) {
        double p = tree.atom_prob(i);
        grad[i] = p * (mid(conj.subdiff(vv[i])) - b[i]) - mu / vv[i];
        double h = p * fd_second(conj, vv[i]) + mu / (vv[i] * vv[i]) + 1e-12;
        if (cap) {
          grad[i] += mu / (rr - vv[i]);
          h += mu / ((rr - vv[i]) * (rr - vv[i]));
        }
        hdiag[i] = h;
      }
      Eigen::MatrixXd hred = nmat.transpose() * hdiag.asDiagonal() * nmat;
      Eigen::VectorXd dv = nmat * hred.ldlt().solve((-nmat.transpose() * grad).eval());
      if (!dv.allFinite()) break;
      if (dv.lpNorm<Eigen::Infinity>() <= 1e-13 * (1.0 + vv.lpNorm<Eigen::Infinity>())) break;
      double amax = 1.0;
      for (int i = 0; i < m; ++i) {
        if (dv[i] < 0.0) amax = std::min(amax, -0.995 * vv[i] / dv[i]);
        if (cap && dv[i] > 0.0) amax = std::min(amax, 0.995 * (rr - vv[i]) / dv[i]);
      }
      double f0 = barrier_value(vv, mu);
      double slope = grad.dot(dv);
      double a = amax;
      bool moved = false;
      for (int ls = 0; ls < 50; ++ls) {
        double f1 = barrier_value(vv + a * dv, mu);
        if (f1 <= f0 + 1e-4 * a * slope) {
          vv += a * dv;
          moved = true;
          break;
        }
        a *= 0.5;
      }
      if (!moved) break;
    }
  }

  if (density) *density = vv / y;
  double s = 0.0;
  for (int i = 0; i < m; ++i) s += tree.atom_prob(i) * (conj.value(vv[i]) - vv[i] * b[i]);
  return s;
}

double curve_impl(const MarketTree& tree, const MartingalePolytope& poly, const Conjugate& conj,
                  const Claim& b, double y, Eigen::VectorXd* density,
                  const Eigen::VectorXd* warm) {
  if (y <= 0.0) {
    if (density) *density = poly.interior;
    return conj.value_at_zero();
  }
  if (!conj.affine_segments().empty()) return curve_pw(tree, poly, conj, b, y, density);
  return curve_smooth(tree, poly, conj, b, y, density, warm);
}

}  // namespace

double dual_curve_value(const MarketTree& tree, const MartingalePolytope& poly,
                        const Conjugate& conj, const Claim& b, double y,
                        Eigen::VectorXd* density) {
  if (tree.num_atoms() != b.size()) throw std::invalid_argument("dual_curve_value: claim size");
  return curve_impl(tree, poly, conj, b, y, density, nullptr);
}

MeasureOracleResult dual_over_measures(const MarketTree& tree, const MartingalePolytope& poly,
                                       const Conjugate& conj, const Claim& b, double x,
                                       const Tolerances& tol) {
  if (tree.num_atoms() != b.size()) throw std::invalid_argument("dual_over_measures: claim size");
  if (!(poly.interior_margin > 0.0))
    throw ArbitrageError("dual_over_measures: martingale polytope has no interior point");
  (void)tol;

  MeasureOracleResult res;
  Eigen::VectorXd zwarm;
  auto phi = [&](double yv, Eigen::VectorXd* zz) {
    ++res.evaluations;
    Eigen::VectorXd zt;
    double v = curve_impl(tree, poly, conj, b, yv, &zt, zwarm.size() ? &zwarm : nullptr);
    if (std::isfinite(v) && zt.size()) zwarm = zt;
    if (zz) *zz = zt;
    return x * yv + v;
  };

  const double f0 = phi(0.0, nullptr);
  double probe = 1.0;
  while (!std::isfinite(phi(probe, nullptr)) && probe > 1e-12) probe *= 0.25;
  double hi = probe, fhi = phi(hi, nullptr);
  for (int k = 0; k < 60; ++k) {
    double h2 = 2.0 * hi;
    double f2 = phi(h2, nullptr);
    bool better = std::isfinite(f2) && f2 < fhi - 1e-15 * (1.0 + std::abs(fhi));
    hi = h2;
    fhi = f2;
    if (!better) break;
  }

  const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
  double a = 0.0, c = hi;
  double x1 = c - gr * (c - a), x2 = a + gr * (c - a);
  double f1 = phi(x1, nullptr), f2 = phi(x2, nullptr);
  int guard = 0;
  while (c - a > 1e-8 * (1.0 + c) && ++guard < 260) {
    if (f1 <= f2) {
      c = x2;
      x2 = x1;
      f2 = f1;
      x1 = c - gr * (c - a);
      f1 = phi(x1, nullptr);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + gr * (c - a);
      f2 = phi(x2, nullptr);
    }
  }
  double ystar = 0.5 * (a + c);
  Eigen::VectorXd z;
  double fv = phi(ystar, &z);
  if (f0 <= fv || !std::isfinite(fv)) {
    res.value = f0;
    res.point.y = 0.0;
    res.point.density = Eigen::VectorXd::Zero(tree.num_atoms());
    return res;
  }
  res.value = fv;
  res.point.y = ystar;
  res.point.density = ystar * z;
  return res;
}

}  // namespace nsdual
