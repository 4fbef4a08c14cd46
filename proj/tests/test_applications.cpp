#include <doctest.h>

#include <cmath>

#include "nsdual/applications.hpp"
#include "nsdual/elasticity.hpp"
#include "oracles.hpp"

using namespace nsdual;

namespace {

MarketTree trinomial() {
  return MarketTree::one_period(1.0, {0.5, 1.0, 2.0}, {1.0 / 3, 1.0 / 3, 1.0 / 3});
}

Claim trinomial_call() {
  Claim b(3);
  b << 0.0, 0.0, 1.0;
  return b;
}

}  // namespace

TEST_CASE("shortfall risk vanishes once the claim is fully superhedgeable") {
  MarketTree tree = trinomial();
  MartingalePolytope poly = martingale_polytope(tree);
  Claim b = trinomial_call();
  const double sup = superreplication_price(tree, poly, b);
  CHECK(sup == doctest::Approx(1.0 / 3.0).epsilon(1e-12));

  double prev = oracle::kInf;
  for (double x : {-0.2, 0.0, 0.2, sup, 0.45}) {
    INFO("x ", x);
    ShortfallResult s = shortfall_risk(tree, poly, quadratic_loss(), b, x);
    CHECK(s.report.dual.converged);
    CHECK(s.report.diag.gap_rel <= 1e-6);
    CHECK(s.risk <= prev + 1e-10);
    CHECK(s.risk >= -1e-10);
    if (x >= sup) CHECK(std::abs(s.risk) <= 1e-9);
    prev = s.risk;
  }
}

TEST_CASE("quadratic shortfall matches the closed form and the generic route") {
  MarketTree tree = trinomial();
  MartingalePolytope poly = martingale_polytope(tree);
  Claim b = trinomial_call();

  ShortfallResult closed = shortfall_risk(tree, poly, quadratic_loss(), b, 0.2);
  CHECK(closed.risk == doctest::Approx(4.0 / 375.0).epsilon(1e-9));

  // Same instance through the generic evaluator path: the conjugate is
  // rebuilt numerically from the loss callbacks instead of the closed form.
  LossFunction generic = quadratic_loss();
  generic.closed_form = nullptr;
  ShortfallResult numeric = shortfall_risk(tree, poly, generic, b, 0.2);
  CHECK(numeric.risk == doctest::Approx(closed.risk).epsilon(1e-7));

  // Both risks match an exhaustive strategy-grid search on the primal side.
  Utility u = shortfall_utility(quadratic_loss());
  const double grid = oracle::strategy_grid_value(tree, u, b, 0.2);
  CHECK(std::abs(-closed.risk - grid) <= 1e-4);
}

TEST_CASE("generic-route conjugate of the quadratic loss matches its grid supremum") {
  LossFunction generic = quadratic_loss();
  generic.closed_form = nullptr;
  Utility u = shortfall_utility(generic, false);
  Conjugate c = u.conjugate();
  for (double y : {0.1, 0.5, 1.0, 1.7, 3.0}) {
    INFO("y ", y);
    CHECK(c.value(y) == doctest::Approx(y * y / 4.0).epsilon(1e-7));
    CHECK(c.value(y) == doctest::Approx(oracle::grid_conjugate(u, y)).epsilon(1e-6));
  }
}

TEST_CASE("loss admissibility: linear losses rejected, capped slopes downgraded") {
  CHECK_THROWS_AS(power_loss(1.0), std::invalid_argument);
  CHECK_THROWS_AS(power_loss(0.5), std::invalid_argument);
  CHECK_THROWS_AS(capped_slope_loss(0.5), std::invalid_argument);

  AdmissibilityReport quad = validate_admissibility(shortfall_utility(quadratic_loss()));
  CHECK(quad.admissible);
  CHECK(quad.route == AdmissibilityReport::Route::FullDomain);

  AdmissibilityReport pow3 = validate_admissibility(shortfall_utility(power_loss(3.0), false));
  CHECK(pow3.admissible);

  // The slope of r*t - log(1+t) climbs to r without attaining it; the
  // elasticity estimate at the slope-sup end diverges and the utility is
  // usable on finite trees only.
  AdmissibilityReport capped =
      validate_admissibility(shortfall_utility(capped_slope_loss(1.0), false));
  CHECK_FALSE(capped.admissible);
  CHECK(capped.route == AdmissibilityReport::Route::FiniteMarketOnly);
  CHECK(capped.r == doctest::Approx(1.0));
  CHECK_FALSE(capped.r_attained);
  REQUIRE(!capped.reasons.empty());

  // Finite-tree solves still go through for the downgraded loss.
  MarketTree tree = trinomial();
  MartingalePolytope poly = martingale_polytope(tree);
  ShortfallResult s = shortfall_risk(tree, poly, capped_slope_loss(2.0), trinomial_call(), 0.1);
  CHECK(s.report.dual.converged);
  CHECK(s.report.diag.gap_rel <= 1e-6);
  CHECK(s.risk >= -1e-10);
  CHECK_FALSE(s.report.admissibility.admissible);
}

TEST_CASE("constant claims are indifference-priced at face value") {
  MarketTree tree = trinomial();
  MartingalePolytope poly = martingale_polytope(tree);
  const double c = 0.35;
  IndifferenceResult r =
      indifference_price(tree, poly, Utility::exponential(1.0), Claim::Constant(3, c), 0.1);
  CHECK(r.price == doctest::Approx(c).epsilon(1e-9));
  CHECK(r.lower_bound == doctest::Approx(c).epsilon(1e-9));
  CHECK(r.upper_bound == doctest::Approx(c).epsilon(1e-9));
}

TEST_CASE("complete binomial call is priced by replication for every utility family") {
  MarketTree tree = MarketTree::binomial(1.0, 2.0, 0.5, 0.5, 1);
  MartingalePolytope poly = martingale_polytope(tree);
  Claim call(2);
  call << 0.0, 1.0;  // atom order (down, up); unique pricing weight 1/3 on up

  Utility families[] = {Utility::exponential(1.0), Utility::quadratic_shortfall(),
                        Utility::piecewise_linear({-0.5, 0.0, 0.5}, {3.0, 1.5, 0.5}, 0.0)};
  for (const Utility& u : families) {
    INFO(u.name());
    IndifferenceResult r = indifference_price(tree, poly, u, call, 0.4);
    CHECK(r.price == doctest::Approx(1.0 / 3.0).epsilon(1e-6));
    // In a complete market both replication bounds pin the price exactly.
    CHECK(r.lower_bound == doctest::Approx(1.0 / 3.0).epsilon(1e-9));
    CHECK(r.upper_bound == doctest::Approx(1.0 / 3.0).epsilon(1e-9));
  }
}

TEST_CASE("incomplete trinomial call is priced strictly inside the arbitrage band") {
  MarketTree tree = trinomial();
  MartingalePolytope poly = martingale_polytope(tree);
  Claim b = trinomial_call();

  IndifferenceResult r = indifference_price(tree, poly, Utility::exponential(1.0), b, 0.2);
  CHECK(r.lower_bound == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(r.upper_bound == doctest::Approx(1.0 / 3.0).epsilon(1e-9));
  CHECK(r.price >= 0.01);
  CHECK(r.price <= 1.0 / 3.0 - 0.01);
  CHECK(r.iterations > 0);
}

TEST_CASE("indifference price is claim-monotone, cash-translating, and band-bounded") {
  MarketTree tree = trinomial();
  MartingalePolytope poly = martingale_polytope(tree);
  Utility u = Utility::exponential(1.0);
  Claim lo = trinomial_call();
  Claim hi(3);
  hi << 0.05, 0.1, 1.2;  // dominates the call atomwise

  IndifferenceResult rl = indifference_price(tree, poly, u, lo, 0.2);
  IndifferenceResult rh = indifference_price(tree, poly, u, hi, 0.2);
  const double tol_p = 1e-6;
  CHECK(rl.price <= rh.price + tol_p);

  for (const auto& r : {rl, rh}) {
    CHECK(r.price >= r.lower_bound - tol_p);
    CHECK(r.price <= r.upper_bound + tol_p);
  }

  const double c = 0.2;
  IndifferenceResult rt = indifference_price(tree, poly, u, Claim(lo.array() + c), 0.2);
  CHECK(rt.price == doctest::Approx(rl.price + c).epsilon(1e-6));
}
