#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "nsdual/applications.hpp"

namespace nsdual {

LossFunction quadratic_loss() {
  LossFunction l;
  l.name = "quadratic";
  l.value = [](double t) { return t * t; };
  l.subdiff = [](double t) { return Interval{2.0 * t, 2.0 * t}; };
  l.slope_sup = kInf;
  l.closed_form = [] { return Utility::quadratic_shortfall(); };
  return l;
}

LossFunction power_loss(double p) {
  if (!(p > 1.0)) throw std::invalid_argument("power_loss: exponent must exceed 1");
  LossFunction l;
  l.name = "power";
  l.value = [p](double t) { return std::pow(t, p); };
  l.subdiff = [p](double t) {
    double d = p * std::pow(t, p - 1.0);
    return Interval{d, d};
  };
  l.slope_sup = kInf;
  l.closed_form = [p] { return Utility::power_shortfall(p); };
  return l;
}

LossFunction capped_slope_loss(double r) {
  if (!(r >= 1.0)) throw std::invalid_argument("capped_slope_loss: slope cap must be >= 1");
  LossFunction l;
  l.name = "capped_slope";
  l.value = [r](double t) { return r * t - std::log1p(t); };
  l.subdiff = [r](double t) {
    double d = r - 1.0 / (1.0 + t);
    return Interval{d, d};
  };
  l.slope_sup = r;
  l.slope_sup_attained = false;
  return l;
}

Utility shortfall_utility(const LossFunction& loss, bool use_closed_form) {
  if (use_closed_form && loss.closed_form) return loss.closed_form();
  Utility::CustomSpec cs;
  cs.name = "shortfall(" + loss.name + ")";
  cs.value = [lv = loss.value](double v) { return v >= 0.0 ? 0.0 : -lv(-v); };
  cs.superdiff = [ls = loss.subdiff](double v) {
    if (v > 0.0) return Interval{0.0, 0.0};
    Interval s = ls(-v);
    if (v == 0.0) return Interval{0.0, s.hi};
    return s;
  };
  cs.domain_left = -kInf;
  cs.slope_sup = loss.slope_sup;
  cs.slope_sup_attained = loss.slope_sup_attained;
  cs.slope_inf = 0.0;
  cs.satiation = 0.0;
  cs.sup_value = 0.0;
  if (loss.subdiff(0.0).hi > 0.0) cs.kinks = {0.0};
  return Utility::custom(std::move(cs));
}

ShortfallResult shortfall_risk(const MarketTree& tree, const MartingalePolytope& poly,
                               const LossFunction& loss, const Claim& b, double x,
                               const SolveOptions& opts) {
  Utility u = shortfall_utility(loss);
  ShortfallResult res;
  res.report = solve_duality(tree, poly, u, b, x, opts);
  res.risk = -res.report.primal_value;
  res.normalization_shift = res.report.normalization_k2;
  return res;
}

IndifferenceResult indifference_price(const MarketTree& tree, const MartingalePolytope& poly,
                                      const Utility& u, const Claim& b, double x,
                                      const Tolerances& tol) {
  const int m = tree.num_atoms();
  if (b.size() != m) throw std::invalid_argument("indifference_price: claim size mismatch");

  IndifferenceResult res;
  res.upper_bound = superreplication_price(tree, poly, b);
  res.lower_bound = -superreplication_price(tree, poly, Claim(-b));

  const bool dynamic = !std::isfinite(u.domain_left());
  const Claim zero = Claim::Zero(m);
  auto value_with = [&](double capital, bool with_claim) {
    const Claim& claim = with_claim ? b : zero;
    return dynamic ? solve_primal_dynamic(tree, u, claim, capital, tol).value
                   : solve_primal_static(tree, poly, u, claim, capital, tol, true).value;
  };

  res.base_value = value_with(x, false);
  const double slack = 1e-11 * (1.0 + std::abs(res.base_value));
  auto covered = [&](double p) { return value_with(x + p, true) >= res.base_value - slack; };

  double lo = res.lower_bound, hi = res.upper_bound;
  if (covered(lo)) {
    res.price = lo;
    return res;
  }
  if (!covered(hi)) {  // only solver noise can cause this; the bound is exact
    res.price = hi;
    return res;
  }
  int it = 0;
  while (hi - lo > 1e-8 * (1.0 + std::abs(hi)) && ++it < 200)
    (covered(0.5 * (lo + hi)) ? hi : lo) = 0.5 * (lo + hi);
  res.price = hi;
  res.iterations = it;
  return res;
}

}  // namespace nsdual
