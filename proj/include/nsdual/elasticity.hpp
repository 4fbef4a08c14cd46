#pragma once

#include <string>
#include <vector>

#include "nsdual/convex.hpp"

namespace nsdual {

/// Which end of the conjugate's domain the asymptotic elasticity probes
/// approach: y -> 0+, or y -> slope_sup (from below when it is finite).
enum class DomainEnd { Zero, SlopeSup };

struct ElasticityOptions {
  int depth = 40;              // geometric probe count
  int tail = 6;                // probes used for the reported estimate
  double divergence_cap = 1e6;
};

struct ElasticityEstimate {
  double estimate = 0.0;   // max of sup|subdiff|*y / value over the tail probes
  bool diverging = false;  // ratio climbs monotonically past the cap
  double shift_k2 = 0.0;   // additive shift applied to keep value > 0 on probes
  double growth_c = 1.0;   // certificate: max value(probe')/value(probe) moving toward the end
  bool finite_r = false;   // probing toward a finite slope_sup
  bool r_closed = false;   // finite slope_sup with finite conjugate value there
  std::vector<double> probe_y;
  std::vector<double> probe_ratio;
};

/// Grid estimate of the asymptotic elasticity of a conjugate at one domain
/// end: limsup of sup{|q| : q in subdiff(y)} * y / value(y).  When the value
/// is nonpositive somewhere on the probe grid, a constant shift (valid by
/// conjugacy of U + k2) is applied first and reported.
ElasticityEstimate estimate_asymptotic_elasticity(const Conjugate& c, DomainEnd end,
                                                  ElasticityOptions opts = {});

struct AdmissibilityReport {
  enum class Route {
    FullDomain,        // U finite on all of R, both asymptotic checks pass
    BoundedDomain,     // domain bounded below, zero-end check passes
    FiniteMarketOnly,  // fails the continuous-space conditions; finite-tree
                       // solvers still apply
  };

  double slope_inf = 0.0;
  bool slope_inf_zero = false;
  double r = kInf;           // sup of slopes
  bool r_attained = false;   // r is itself a slope somewhere
  bool r_closed = false;     // finite r with finite conjugate value at r
  ElasticityEstimate ae_zero;
  ElasticityEstimate ae_sup;
  Route route = Route::FiniteMarketOnly;
  bool admissible = false;   // admissible for the continuous-space theory
  std::vector<std::string> reasons;
};

/// Checks the structural conditions for the continuous-space duality theory:
/// slopes flatten to 0, the slope supremum is not attained nor a closed
/// conjugate-domain endpoint, and the asymptotic elasticity estimates are
/// finite at both ends.  Failures downgrade the route; they do not prevent
/// the finite-market solvers from running.
AdmissibilityReport validate_admissibility(const Utility& u);

}  // namespace nsdual
