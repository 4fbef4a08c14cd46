#pragma once

#include "nsdual/solvers.hpp"

namespace nsdual {

/// Convex nondecreasing loss on [0, +inf) with loss(0) = 0.
struct LossFunction {
  std::string name;
  std::function<double(double)> value;
  std::function<Interval(double)> subdiff;
  double slope_sup = kInf;
  bool slope_sup_attained = false;
  std::function<Utility()> closed_form;  // optional fast path for the solvers
};

/// loss(t) = t^2.
LossFunction quadratic_loss();
/// loss(t) = t^p, p > 1.
LossFunction power_loss(double p);
/// loss(t) = r t - log(1 + t): slope increases to r without attaining it.
LossFunction capped_slope_loss(double r);

/// U(x) = -loss(max(-x, 0)): flat at zero and beyond, penalizing shortfall.
/// With use_closed_form the built-in conjugates are used when available;
/// otherwise the conjugate is computed numerically from the evaluators.
Utility shortfall_utility(const LossFunction& loss, bool use_closed_form = true);

struct ShortfallResult {
  double risk = kInf;  // inf over strategies of E[loss((X - B)^-)]
  double normalization_shift = 0.0;
  SolveReport report;
};

ShortfallResult shortfall_risk(const MarketTree& tree, const MartingalePolytope& poly,
                               const LossFunction& loss, const Claim& b, double x,
                               const SolveOptions& opts = {});

struct IndifferenceResult {
  double price = 0.0;
  double lower_bound = 0.0;  // subreplication price of the claim
  double upper_bound = 0.0;  // superreplication price of the claim
  double base_value = 0.0;   // optimal value without the claim
  int iterations = 0;
};

/// Smallest premium p with V(x + p; claim) >= V(x; 0), located by bisection
/// between the replication price bounds.  For satiable utilities the value
/// function can be flat; the reported price is the left edge of the flat set.
IndifferenceResult indifference_price(const MarketTree& tree, const MartingalePolytope& poly,
                                      const Utility& u, const Claim& b, double x,
                                      const Tolerances& tol = {});

}  // namespace nsdual
