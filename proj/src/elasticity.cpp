#include "nsdual/elasticity.hpp"

#include <algorithm>
#include <cmath>

namespace nsdual {

namespace {

double abs_sup(const Interval& iv) { return std::max(std::abs(iv.lo), std::abs(iv.hi)); }

}  // namespace

ElasticityEstimate estimate_asymptotic_elasticity(const Conjugate& c, DomainEnd end,
                                                  ElasticityOptions opts) {
  ElasticityEstimate out;
  const double r = c.r();
  out.finite_r = end == DomainEnd::SlopeSup && std::isfinite(r);
  out.r_closed = out.finite_r && c.r_in_domain();

  for (int k = 1; k <= opts.depth; ++k) {
    double y;
    if (end == DomainEnd::Zero)
      y = std::exp2(-k);
    else if (out.finite_r)
      y = r * (1.0 - std::exp2(-k - 1));
    else
      y = std::exp2(k);
    out.probe_y.push_back(y);
  }

  double vmin = kInf;
  for (double y : out.probe_y) vmin = std::min(vmin, c.value(y));
  if (!(vmin > 0.0)) out.shift_k2 = 1.0 - vmin;

  auto val = [&](double y) { return c.value(y) + out.shift_k2; };

  for (double y : out.probe_y)
    out.probe_ratio.push_back(abs_sup(c.subdiff(y)) * y / val(y));

  const int n = static_cast<int>(out.probe_ratio.size());
  const int tail = std::min(opts.tail, n);
  out.estimate = 0.0;
  for (int i = n - tail; i < n; ++i) out.estimate = std::max(out.estimate, out.probe_ratio[i]);

  bool monotone = true;
  for (int i = n - tail + 1; i < n; ++i)
    if (out.probe_ratio[i] < out.probe_ratio[i - 1]) monotone = false;
  out.diverging = monotone && out.probe_ratio[n - 1] > opts.divergence_cap;

  // Growth certificate: value at a probe moved further toward the end,
  // relative to the value at the probe.
  double big = 1.0;
  for (double y : out.probe_y) {
    for (double mu : {1.5, 2.0}) {
      double y2;
      if (end == DomainEnd::Zero)
        y2 = y / mu;
      else if (out.finite_r)
        y2 = r - (r - y) / mu;
      else
        y2 = y * mu;
      double a = val(y2), b = val(y);
      if (std::isfinite(a) && std::isfinite(b) && b > 0.0) big = std::max(big, a / b);
    }
  }
  out.growth_c = big;
  return out;
}

AdmissibilityReport validate_admissibility(const Utility& u) {
  AdmissibilityReport rep;
  Conjugate c = u.conjugate();

  rep.slope_inf = u.slope_inf();
  rep.slope_inf_zero = rep.slope_inf == 0.0;
  rep.r = u.slope_sup();
  rep.r_attained = u.slope_sup_attained();
  rep.r_closed = std::isfinite(rep.r) && c.r_in_domain();
  rep.ae_zero = estimate_asymptotic_elasticity(c, DomainEnd::Zero);
  rep.ae_sup = estimate_asymptotic_elasticity(c, DomainEnd::SlopeSup);

  if (!rep.slope_inf_zero)
    rep.reasons.push_back("slopes do not flatten to zero (inf slope = " +
                          std::to_string(rep.slope_inf) + ")");
  if (rep.r_attained)
    rep.reasons.push_back("slope supremum is attained at some point");
  if (rep.r_closed)
    rep.reasons.push_back("conjugate domain is closed at its finite right end");
  if (rep.ae_zero.diverging)
    rep.reasons.push_back("asymptotic elasticity estimate diverges at the zero end");
  if (rep.ae_sup.diverging)
    rep.reasons.push_back("asymptotic elasticity estimate diverges at the slope-sup end");

  const bool upper_ok = !rep.r_attained && !rep.r_closed;
  const bool zero_ok = rep.slope_inf_zero && !rep.ae_zero.diverging;
  if (u.domain_left() == -kInf) {
    if (zero_ok && upper_ok && !rep.ae_sup.diverging) {
      rep.route = AdmissibilityReport::Route::FullDomain;
      rep.admissible = true;
    }
  } else if (zero_ok && upper_ok) {
    rep.route = AdmissibilityReport::Route::BoundedDomain;
    rep.admissible = true;
  }
  return rep;
}

}  // namespace nsdual
