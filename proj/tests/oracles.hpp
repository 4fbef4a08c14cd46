#pragma once

// Independent reference computations for the test suite.  Everything here is
// deliberately brute-force (grid search, finite differences, golden section)
// and shares no code with the solvers it is used to check.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include "nsdual/convex.hpp"
#include "nsdual/market.hpp"

namespace oracle {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// sup_x U(x) - x*y by coarse-to-fine grid search over x in [-30, 30].
inline double grid_conjugate(const nsdual::Utility& u, double y) {
  auto f = [&](double x) { return u.value(x) - x * y; };
  double lo = -30.0, hi = 30.0, step = 0.01;
  double best = -kInf, bx = 0.0;
  for (int round = 0; round < 3; ++round) {
    for (double x = lo; x <= hi + 0.5 * step; x += step) {
      double v = f(x);
      if (v > best) best = v, bx = x;
    }
    lo = std::max(-30.0, bx - 2.0 * step);
    hi = std::min(30.0, bx + 2.0 * step);
    step *= 0.01;
  }
  return best;
}

/// One-sided difference quotients bracketing the sub/superdifferential.
struct FdSlopes {
  double left, right;
};

inline FdSlopes fd_slopes(const std::function<double(double)>& f, double x, double h = 1e-6) {
  return {(f(x) - f(x - h)) / h, (f(x + h) - f(x)) / h};
}

/// min_{z>=0} g(z) - beta*z + (n/2)(y-z)^2 by grid + refinement; returns the
/// minimum value and the minimizing z.
struct ProxGrid {
  double value, z;
};

inline ProxGrid grid_prox(const nsdual::Conjugate& g, double n, double beta, double y,
                          double zmax) {
  auto f = [&](double z) {
    if (z > g.r() || (z == g.r() && !g.r_in_domain())) return kInf;
    return g.value(z) - beta * z + 0.5 * n * (y - z) * (y - z);
  };
  double lo = 0.0, hi = zmax, best = kInf, bz = 0.0;
  for (int round = 0; round < 4; ++round) {
    const double step = (hi - lo) / 4000.0;
    for (int i = 0; i <= 4000; ++i) {
      const double z = std::min(lo + i * step, hi);
      const double v = f(z);
      if (v < best) best = v, bz = z;
    }
    lo = std::max(0.0, bz - 2.0 * step);
    hi = std::min(zmax, bz + 2.0 * step);
  }
  return {best, bz};
}

/// E[U(x + G(theta) - B)] for a flat strategy vector.
inline double expected_utility(const nsdual::MarketTree& tree, const nsdual::Utility& u,
                               const nsdual::Claim& b, double x, const Eigen::VectorXd& theta) {
  Eigen::VectorXd g = tree.wealth_matrix() * theta;
  double total = 0.0;
  for (int a = 0; a < tree.num_atoms(); ++a)
    total += tree.atom_prob(a) * u.value(x + g[a] - b[a]);
  return total;
}

/// sup_theta E[U(x + G - B)] by multiresolution grid search: a 9-point lattice
/// per coordinate, recentered on the incumbent and shrunk until the effective
/// step is below 1e-5.  Independent of every solver code path.
inline double strategy_grid_value(const nsdual::MarketTree& tree, const nsdual::Utility& u,
                                  const nsdual::Claim& b, double x, double radius = 12.0) {
  const int k = tree.num_strategy_coords();
  Eigen::VectorXd center = Eigen::VectorXd::Zero(k);
  double best = expected_utility(tree, u, b, x, center);
  Eigen::VectorXd bestp = center;
  double r = radius;
  const int pts = 9;
  while (r / pts > 2.5e-6) {
    std::vector<int> idx(k, 0);
    Eigen::VectorXd p(k);
    bool done = false;
    while (!done) {
      for (int j = 0; j < k; ++j) p[j] = center[j] + r * (2.0 * idx[j] / (pts - 1) - 1.0);
      double v = expected_utility(tree, u, b, x, p);
      if (v > best) best = v, bestp = p;
      int j = 0;
      while (j < k && ++idx[j] == pts) idx[j++] = 0;
      done = j == k;
    }
    center = bestp;
    r *= 2.5 / (pts - 1);  // new lattice comfortably covers one old cell
  }
  return best;
}

/// Golden-section maximum of a scalar concave function on [lo, hi].
inline double golden_max(const std::function<double(double)>& f, double lo, double hi,
                         double tol = 1e-12) {
  const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, c = hi;
  double b1 = c - gr * (c - a), b2 = a + gr * (c - a);
  double f1 = f(b1), f2 = f(b2);
  while (c - a > tol * (1.0 + std::abs(a) + std::abs(c))) {
    if (f1 < f2) {
      a = b1, b1 = b2, f1 = f2;
      b2 = a + gr * (c - a), f2 = f(b2);
    } else {
      c = b2, b2 = b1, f2 = f1;
      b1 = c - gr * (c - a), f1 = f(b1);
    }
  }
  return std::max(f1, f2);
}

}  // namespace oracle
