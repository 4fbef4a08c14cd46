#pragma once

#include <cstdint>
#include <functional>
#include <optional>

#include "nsdual/convex.hpp"
#include "nsdual/elasticity.hpp"
#include "nsdual/market.hpp"
#include "nsdual/polytope.hpp"

namespace nsdual {

struct Tolerances {
  double solve = 1e-6;        // duality-gap scale target
  double prox = 1e-10;
  double kkt = 1e-6;
  double positivity = 1e-8;   // min-density floor for the equivalent regime
  double replication = 1e-8;  // scaled by (1 + |X|_inf)
  double mass = 1e-12;
  int max_iter = 5000;        // per smoothing level / per solver stage
  int vertex_cap = 10000;
};

/// Dual variable: total mass y = E[Y] and the per-atom values Y.
struct DualPoint {
  double y = 0.0;
  Eigen::VectorXd density;
};

struct SolveHooks {
  // Called with feasible iterates; used by the cross-checking tests.
  std::function<void(const Eigen::VectorXd&)> on_dual_iterate;
  std::function<void(const Strategy&)> on_primal_iterate;
};

struct SmoothingRung {
  double level;
  double value;  // optimal smoothed dual objective at this level
};

struct DualSolveResult {
  double value = kInf;  // unsmoothed dual objective at the reported point
  DualPoint point;
  std::vector<SmoothingRung> trace;  // nondecreasing level values
  double constraint_residual = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Minimizes E[conj(W) - W B] + x E[W] over the cone {W >= 0 on the
/// conjugate domain, price increments orthogonal under W dP} by a smoothing
/// ladder: inf-convolution levels n = 10^1..10^6 (extended adaptively) each
/// solved by projected accelerated gradient descent with warm starts.
DualSolveResult solve_dual(const MarketTree& tree, const MartingalePolytope& poly,
                           const Conjugate& conj, const Claim& b, double x,
                           const Tolerances& tol = {}, const SolveHooks* hooks = nullptr,
                           const Eigen::VectorXd* start = nullptr);

/// Value of the inner minimization inf_Z E[conj(y Z) - y Z B] over the
/// martingale polytope at a fixed scale y (an LP for piecewise-affine
/// conjugates, an equality-constrained barrier Newton otherwise).
double dual_curve_value(const MarketTree& tree, const MartingalePolytope& poly,
                        const Conjugate& conj, const Claim& b, double y,
                        Eigen::VectorXd* density = nullptr);

struct MeasureOracleResult {
  double value = kInf;
  DualPoint point;
  int evaluations = 0;
};

/// Independent route to the dual value: golden-section over the scale y of
/// x*y + dual_curve_value(y).  Shares no iterates with solve_dual.
MeasureOracleResult dual_over_measures(const MarketTree& tree, const MartingalePolytope& poly,
                                       const Conjugate& conj, const Claim& b, double x,
                                       const Tolerances& tol = {});

struct PrimalSolveResult {
  double value = -kInf;
  Strategy theta;            // empty for the static route
  Eigen::VectorXd wealth;    // terminal X*
  bool via_lp = false;
  bool diverged_to_satiation = false;
  int iterations = 0;
  bool converged = false;
};

/// Maximizes E[U(x + (G theta) - B)] over unconstrained strategies.  Exact LP
/// for piecewise-linear utilities; otherwise supergradient ascent, cyclic
/// coordinate polish, then a guarded Newton polish.  Requires U finite on R.
PrimalSolveResult solve_primal_dynamic(const MarketTree& tree, const Utility& u, const Claim& b,
                                       double x, const Tolerances& tol = {},
                                       const SolveHooks* hooks = nullptr,
                                       const Strategy* start = nullptr);

/// Maximizes E[U(X - B)] over terminal wealths X with E[Z_v X] <= x at every
/// polytope vertex and X - B right of the utility domain.  Exact LP for
/// piecewise-linear utilities, barrier Newton otherwise.  When the utility
/// domain is bounded below, the capital must be positive unless the caller
/// certifies the shifted-instance check itself (relax_capital_check).
PrimalSolveResult solve_primal_static(const MarketTree& tree, const MartingalePolytope& poly,
                                      const Utility& u, const Claim& b, double x,
                                      const Tolerances& tol = {},
                                      bool relax_capital_check = false,
                                      const Eigen::VectorXd* start = nullptr);

struct LadderRung {
  double level;         // truncation level n
  double primal;        // V_n
  double dual;          // W_n
  double shifted_x;     // x + n/2
  double shifted_beta;  // n/2
};

struct LadderResult {
  std::vector<LadderRung> rungs;
  double primal_limit = -kInf;  // untruncated V
  double dual_limit = kInf;     // untruncated W
};

/// Truncates the utility at each level n (>= twice the claim bound, with
/// x + n/2 > 0), solves both sides of the shifted instances in their
/// capital-reduced form, and reports the untruncated values as limits.
LadderResult truncation_ladder(const MarketTree& tree, const MartingalePolytope& poly,
                               const Utility& u, const Claim& b, double x,
                               const std::vector<double>& levels, const Tolerances& tol = {});

struct DualityDiagnostics {
  double gap_rel = kInf;
  bool weak_duality_ok = false;
  double inclusion_resid = kInf;   // B - X* inside the conjugate subdifferential at Y*
  double kkt_resid = kInf;         // Y* inside the utility superdifferential at X* - B
  double budget_resid = kInf;      // |E[X* Y*] - x y*|
  double min_density = 0.0;        // min Y*
  bool equivalent_regime = false;  // min Y* above the positivity floor
  bool positivity_expected = false;
  bool positivity_ok = true;
  double replication_resid = kInf;     // hedge mismatch under Q* (equivalent regime)
  double wealth_mart_resid = kInf;     // one-step martingale residual of the wealth process
  double terminal_match_resid = kInf;  // |replicated terminal - X*|
  double domain_floor_resid = 0.0;     // bounded-domain route: X* - B vs domain left end
  bool nonneg_wealth = false;          // X* >= 0 held atomwise
  double attain_resid = kInf;          // superhedge of X* from capital x (when X* >= 0)
};

DualityDiagnostics verify_duality(const MarketTree& tree, const MartingalePolytope& poly,
                                  const Utility& u, const Conjugate& conj, const Claim& b,
                                  double x, const PrimalSolveResult& primal,
                                  const DualSolveResult& dual, const Tolerances& tol = {});

struct SolveReport {
  double primal_value = -kInf;
  double dual_value = kInf;
  PrimalSolveResult primal;
  DualSolveResult dual;
  MeasureOracleResult oracle;
  bool oracle_run = false;
  DualityDiagnostics diag;
  AdmissibilityReport admissibility;
  double normalization_k2 = 0.0;  // minimal shift giving U(0) = 1, recorded only
  double superrep_claim = kInf;   // superreplication price of the claim
  std::string route;              // "dynamic" or "static"
};

struct SolveOptions {
  bool run_oracle = true;
  Tolerances tol;
};

/// End-to-end duality solve: routes the primal by the utility domain, runs
/// the smoothing-ladder dual and (optionally) the measure-space oracle, and
/// verifies the optimality system.
SolveReport solve_duality(const MarketTree& tree, const MartingalePolytope& poly,
                          const Utility& u, const Claim& b, double x,
                          const SolveOptions& opts = {});

}  // namespace nsdual
