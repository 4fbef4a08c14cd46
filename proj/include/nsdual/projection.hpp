#pragma once

#include <Eigen/Dense>

namespace nsdual {

/// Euclidean projection onto {w : a w = 0, lo <= w_i <= hi}, solved through
/// the dual: w(lambda) = clip(v - a' lambda, lo, hi) with a semismooth Newton
/// iteration on g(lambda) = a w(lambda) = 0.  The multiplier can be warm
/// started across nearby projections.
class BoxEqProjector {
 public:
  BoxEqProjector(Eigen::MatrixXd a, double lo, double hi);

  Eigen::VectorXd project(const Eigen::VectorXd& v, Eigen::VectorXd* lambda_ws = nullptr,
                          double tol = 1e-12) const;

  int rows() const { return static_cast<int>(a_.rows()); }

 private:
  Eigen::MatrixXd a_;
  double lo_, hi_;
};

}  // namespace nsdual
