#pragma once

#include <vector>

#include "nsdual/convex.hpp"

namespace nsdual {

/// Quadratic inf-convolution smoothing of a conjugate function:
///   value(y) = beta*y + inf_{z >= 0} { conj(z) - beta*z + (n/2)(z - y)^2 }.
/// The smoothed function is C^1 with derivative n*(y - prox(y)) + beta, which
/// lies in the subdifferential of conj at prox(y).  Monotone increasing in n
/// toward beta*y + conj(y) restricted to z >= 0.
class InfConvolution {
 public:
  InfConvolution(Conjugate conj, double n, double beta = 0.0, double tol = 1e-10);

  /// The unique minimizer z_n(y) >= 0 of the inf-convolution objective.
  /// Exact segment scan for piecewise-affine conjugates, bisection otherwise.
  double prox(double y) const;
  double value(double y) const;
  double deriv(double y) const;

  double level() const { return n_; }
  double slack_slope() const { return beta_; }
  const Conjugate& base() const { return conj_; }

 private:
  double prox_affine(double y) const;
  double prox_bisect(double y) const;

  Conjugate conj_;
  double n_;
  double beta_;
  double tol_;
  double z_max_;  // right end of the conjugate domain (may be +inf)
};

struct TransferCheckResult {
  bool ok = false;
  double c = kInf;       // max of F_n(mu*y)/F_n(y) over the sweep
  double gamma = 0.0;    // max implied growth exponent log(ratio)/log(mu)
  double shift_k2 = 0.0; // shift applied when F_n was nonpositive on the grid
  double base_c = kInf;  // same certificate for the unsmoothed conjugate
};

/// Sweeps levels n, factors mu in [1/2, 1], and y in (0, y0], checking that
/// the shifted smoothed conjugates F_n(y) = value_n(y) - 2*beta*y satisfy
/// F_n(mu*y) <= C * F_n(y) with one C uniform over the sweep, i.e. that the
/// zero-end elasticity bound survives smoothing uniformly in n.
TransferCheckResult elasticity_transfer_check(const Conjugate& conj, double beta,
                                              const std::vector<double>& levels,
                                              double y0 = 1.0, int y_count = 24,
                                              int mu_count = 5);

}  // namespace nsdual
