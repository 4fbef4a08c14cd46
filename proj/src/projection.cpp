#include "nsdual/projection.hpp"

#include <cmath>
#include <stdexcept>

namespace nsdual {

BoxEqProjector::BoxEqProjector(Eigen::MatrixXd a, double lo, double hi)
    : a_(std::move(a)), lo_(lo), hi_(hi) {
  if (!(lo_ < hi_)) throw std::invalid_argument("projector: need lo < hi");
  // Unit row scaling keeps the Newton system well conditioned.
  for (int r = 0; r < a_.rows(); ++r) {
    double nrm = a_.row(r).norm();
    if (nrm > 0.0) a_.row(r) /= nrm;
  }
}

Eigen::VectorXd BoxEqProjector::project(const Eigen::VectorXd& v, Eigen::VectorXd* lambda_ws,
                                        double tol) const {
  const int r = static_cast<int>(a_.rows());
  const int m = static_cast<int>(v.size());
  if (r == 0) return v.cwiseMax(lo_).cwiseMin(hi_);

  Eigen::VectorXd lambda = (lambda_ws && lambda_ws->size() == r)
                               ? *lambda_ws
                               : Eigen::VectorXd::Zero(r);
  const double scale = 1.0 + v.cwiseAbs().maxCoeff();

  auto clipped = [&](const Eigen::VectorXd& lam) {
    Eigen::VectorXd w = v - a_.transpose() * lam;
    return w.cwiseMax(lo_).cwiseMin(hi_).eval();
  };

  // Lagrange dual of the projection: maximize the concave piecewise-quadratic
  // q(lam) with gradient A w(lam).  Along any ascent ray the derivative
  // phi(t) is nonincreasing and piecewise linear, so its first zero is the
  // exact ray maximum; landing there every iteration cannot stall across
  // active-set changes the way a backtracked step can.
  Eigen::VectorXd w = clipped(lambda);
  Eigen::VectorXd g = a_ * w;
  for (int it = 0; it < 600 && g.cwiseAbs().maxCoeff() > tol * scale; ++it) {
    // Semismooth Newton direction: J = a D a', D = diag(1{lo < w_i < hi}).
    Eigen::VectorXd raw = v - a_.transpose() * lambda;
    Eigen::MatrixXd ad(r, m);
    for (int i = 0; i < m; ++i) {
      bool free = raw[i] > lo_ && raw[i] < hi_;
      ad.col(i) = free ? Eigen::VectorXd(a_.col(i)) : Eigen::VectorXd::Zero(r);
    }
    Eigen::MatrixXd j = ad * a_.transpose();
    j.diagonal().array() += 1e-12;
    Eigen::VectorXd step = j.ldlt().solve(g);
    // Fall back to steepest ascent when the active-set Jacobian degenerates.
    if (!step.allFinite() || step.dot(g) <= 0.0 || step.norm() > 1e8 * (1.0 + g.norm()))
      step = g;

    const Eigen::VectorXd s = a_.transpose() * step;
    auto phi = [&](double t) {
      double acc = 0.0;
      for (int i = 0; i < m; ++i)
        acc += s[i] * std::min(std::max(raw[i] - t * s[i], lo_), hi_);
      return acc;
    };
    if (phi(0.0) <= 0.0) break;  // not an ascent direction at working precision
    double thi = 1.0;
    int grow = 0;
    for (; grow < 200 && phi(thi) > 0.0; ++grow) thi *= 4.0;
    if (grow == 200) break;  // dual ray unbounded: numerically degenerate
    double tlo = thi > 1.0 ? thi / 4.0 : 0.0;
    for (int bs = 0; bs < 120 && thi - tlo > 1e-14 * (1.0 + thi); ++bs) {
      double tm = 0.5 * (tlo + thi);
      (phi(tm) > 0.0 ? tlo : thi) = tm;
    }
    lambda += 0.5 * (tlo + thi) * step;
    w = clipped(lambda);
    g = a_ * w;
  }
  if (lambda_ws) *lambda_ws = lambda;
  return clipped(lambda);
}

}  // namespace nsdual
