#include <doctest.h>

#include <cmath>
#include <string>
#include <vector>

#include "corpus.hpp"
#include "nsdual/probes.hpp"
#include "nsdual/solvers.hpp"
#include "oracles.hpp"

using namespace nsdual;

namespace {

MarketTree trinomial() {
  return MarketTree::one_period(1.0, {0.5, 1.0, 2.0}, {1.0 / 3, 1.0 / 3, 1.0 / 3});
}

// Value of the dual objective at a per-atom density vector (+inf allowed).
double dual_objective(const MarketTree& tree, const Conjugate& conj, const Claim& b, double x,
                      const Eigen::VectorXd& w) {
  double total = 0.0;
  for (int a = 0; a < tree.num_atoms(); ++a)
    total += tree.atom_prob(a) * (conj.value(w[a]) - w[a] * b[a] + x * w[a]);
  return total;
}

struct Solved {
  const corpus::Instance* inst;
  SolveReport rep;
};

// One end-to-end solve per corpus instance, shared across the test cases.
const std::vector<Solved>& solved_corpus() {
  static const std::vector<Solved> all = [] {
    std::vector<Solved> out;
    for (const auto& inst : corpus::instances())
      out.push_back({&inst, solve_duality(inst.tree, inst.poly, inst.utility, inst.claim, inst.x)});
    return out;
  }();
  return all;
}

const corpus::Instance& instance_by_label(const std::string& label) {
  for (const auto& inst : corpus::instances())
    if (inst.label == label) return inst;
  REQUIRE(false);
  static const corpus::Instance* none = nullptr;
  return *none;  // unreachable
}

}  // namespace

TEST_CASE("end-to-end solve: gap, subdifferential inclusion and budget on the corpus") {
  for (const auto& s : solved_corpus()) {
    INFO(s.inst->label);
    const SolveReport& rep = s.rep;
    CHECK(rep.primal.converged);
    CHECK(rep.dual.converged);
    CHECK(rep.diag.weak_duality_ok);
    CHECK(rep.dual_value >= rep.primal_value - 1e-9 * (1.0 + std::abs(rep.primal_value)));
    CHECK(rep.diag.gap_rel <= 1e-6);
    CHECK(rep.diag.inclusion_resid <= 1e-5);
    CHECK(rep.diag.kkt_resid <= 1e-5);
    CHECK(rep.diag.budget_resid <= 1e-6);
  }
}

TEST_CASE("independent measure-space search certifies the ladder dual value") {
  for (const auto& s : solved_corpus()) {
    INFO(s.inst->label);
    REQUIRE(s.rep.oracle_run);
    const double scale = 1.0 + std::abs(s.rep.dual_value);
    CHECK(std::abs(s.rep.oracle.value - s.rep.dual_value) <= 1e-6 * scale);
    CHECK(s.rep.oracle.evaluations > 0);
  }
}

TEST_CASE("optimal density is strictly positive exactly when satiation is unaffordable") {
  for (const auto& s : solved_corpus()) {
    INFO(s.inst->label);
    CHECK(s.rep.diag.positivity_ok);
    if (s.inst->satiation_probe) {
      // Capital exceeds the superreplication cost of claim + satiation level:
      // the plateau is reachable and the dual collapses to zero mass.
      CHECK(s.rep.dual.point.y <= 1e-6);
      CHECK(std::abs(s.rep.primal_value - s.inst->utility.sup_value()) <= 1e-6);
      CHECK_FALSE(s.rep.diag.positivity_expected);
    } else if (s.rep.diag.positivity_expected) {
      CHECK(s.rep.diag.min_density >= Tolerances{}.positivity);
      CHECK(s.rep.diag.equivalent_regime);
    }
  }
}

TEST_CASE("optimal wealth replicates under the optimizer measure in the equivalent regime") {
  for (const auto& s : solved_corpus()) {
    INFO(s.inst->label);
    if (!s.rep.diag.equivalent_regime) continue;
    const double xs = 1.0 + s.rep.primal.wealth.lpNorm<Eigen::Infinity>();
    CHECK(s.rep.diag.replication_resid <= 1e-8 * xs);
    CHECK(s.rep.diag.wealth_mart_resid <= 1e-8 * xs);
    CHECK(s.rep.diag.terminal_match_resid <= 1e-7 * xs);
  }
}

TEST_CASE("every feasible dual iterate dominates every feasible primal iterate") {
  const char* labels[] = {"tree1/exponential", "tree1/piecewise_linear", "tree2/exponential",
                          "tree2/quadratic_shortfall"};
  for (const char* label : labels) {
    INFO(label);
    const corpus::Instance& inst = instance_by_label(label);
    const Conjugate conj = inst.utility.conjugate();

    double best_primal = -oracle::kInf;
    double worst_dual = oracle::kInf;
    int dual_seen = 0, primal_seen = 0;
    SolveHooks hooks;
    hooks.on_dual_iterate = [&](const Eigen::VectorXd& w) {
      worst_dual = std::min(worst_dual, dual_objective(inst.tree, conj, inst.claim, inst.x, w));
      ++dual_seen;
    };
    hooks.on_primal_iterate = [&](const Strategy& th) {
      best_primal = std::max(
          best_primal, oracle::expected_utility(inst.tree, inst.utility, inst.claim, inst.x, th));
      ++primal_seen;
    };

    DualSolveResult dual =
        solve_dual(inst.tree, inst.poly, conj, inst.claim, inst.x, Tolerances{}, &hooks);
    PrimalSolveResult primal =
        solve_primal_dynamic(inst.tree, inst.utility, inst.claim, inst.x, Tolerances{}, &hooks);
    CHECK(dual_seen > 0);
    best_primal = std::max(best_primal, primal.value);
    worst_dual = std::min(worst_dual, dual.value);

    const double scale = 1.0 + std::abs(best_primal);
    CHECK(best_primal <= worst_dual + 1e-8 * scale);
    CHECK(primal_seen >= 0);
  }
}

TEST_CASE("one-period trinomial with exponential utility matches the closed form") {
  // sup_t -(e^{t/2} + 1 + e^{-t})/3 attained at t = (2/3) log 2.
  const double theta_star = (2.0 / 3.0) * std::log(2.0);
  const double v_star = -(std::cbrt(2.0) + 1.0 + std::pow(2.0, -2.0 / 3.0)) / 3.0;

  MarketTree tree = trinomial();
  MartingalePolytope poly = martingale_polytope(tree);
  Utility u = Utility::exponential(1.0);
  Claim b = Claim::Zero(3);

  SolveReport rep = solve_duality(tree, poly, u, b, 0.0);
  CHECK(rep.primal_value == doctest::Approx(v_star).epsilon(1e-9));
  CHECK(rep.dual_value == doctest::Approx(v_star).epsilon(1e-9));
  REQUIRE(rep.primal.theta.size() == 1);
  CHECK(rep.primal.theta[0] == doctest::Approx(theta_star).epsilon(1e-6));
  // For this family the optimal dual mass equals -value.
  CHECK(rep.dual.point.y == doctest::Approx(-v_star).epsilon(1e-6));

  MeasureOracleResult ora = dual_over_measures(tree, poly, u.conjugate(), b, 0.0);
  CHECK(ora.value == doctest::Approx(v_star).epsilon(1e-9));
  CHECK(ora.point.y == doctest::Approx(-v_star).epsilon(1e-5));
}

TEST_CASE("binomial shortfall with negative capital matches the hand calculation") {
  // Unique martingale measure (2/3, 1/3) in atom order (down, up); minimizing
  // E[(X^-)^2] under E_Q[X] = -0.3 gives X = (-0.36, -0.18) and value -0.081.
  MarketTree tree = MarketTree::binomial(1.0, 2.0, 0.5, 0.5, 1);
  MartingalePolytope poly = martingale_polytope(tree);
  Utility u = Utility::quadratic_shortfall();
  Claim b = Claim::Zero(2);

  SolveReport rep = solve_duality(tree, poly, u, b, -0.3);
  CHECK(rep.primal_value == doctest::Approx(-0.081).epsilon(1e-8));
  CHECK(rep.dual_value == doctest::Approx(-0.081).epsilon(1e-8));
  REQUIRE(rep.primal.wealth.size() == 2);
  CHECK(rep.primal.wealth[0] == doctest::Approx(-0.36).epsilon(1e-6));
  CHECK(rep.primal.wealth[1] == doctest::Approx(-0.18).epsilon(1e-6));
  CHECK(rep.dual.point.y == doctest::Approx(0.54).epsilon(1e-6));

  // With capital above the plateau the same market prices nothing: value 0.
  SolveReport flat = solve_duality(tree, poly, u, b, 0.5);
  CHECK(flat.primal_value == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(flat.dual_value == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(flat.dual.point.y <= 1e-7);
}

TEST_CASE("riskless market reduces to deterministic utility evaluation") {
  // Two branches with identical factors: the price never moves, trading is
  // inert, and the optimum is just U(x - b) for a constant claim b.
  MarketTree tree = MarketTree::one_period(1.0, {1.0, 1.0}, {0.5, 0.5});
  MartingalePolytope poly = martingale_polytope(tree);
  Utility u = Utility::exponential(1.0);
  Claim b(2);
  b << 0.4, 0.4;

  SolveReport rep = solve_duality(tree, poly, u, b, 0.25);
  CHECK(rep.primal_value == doctest::Approx(u.value(0.25 - 0.4)).epsilon(1e-9));
  CHECK(rep.dual_value == doctest::Approx(u.value(0.25 - 0.4)).epsilon(1e-9));
}

TEST_CASE("smoothing trace climbs monotonically to the reported dual value") {
  for (const auto& s : solved_corpus()) {
    INFO(s.inst->label);
    const auto& trace = s.rep.dual.trace;
    REQUIRE(!trace.empty());
    const double scale = 1.0 + std::abs(s.rep.dual_value);
    for (size_t i = 1; i < trace.size(); ++i) {
      CHECK(trace[i].level > trace[i - 1].level);
      CHECK(trace[i].value >= trace[i - 1].value - 1e-9 * scale);
    }
    // The ladder hands the endpoint to an exact polish, so the last rung only
    // needs to have climbed close to the reported value.
    CHECK(std::abs(s.rep.dual_value - trace.back().value) <= 2e-5 * scale);
  }
}

TEST_CASE("domain truncation only lowers the value and converges to it") {
  MarketTree tree = trinomial();
  MartingalePolytope poly = martingale_polytope(tree);
  Utility u = Utility::exponential(1.0);
  Claim b(3);
  b << 0.0, 0.0, 3.0;

  LadderResult lad = truncation_ladder(tree, poly, u, b, 0.0, {6, 8, 12, 16, 24, 32});
  REQUIRE(lad.rungs.size() == 6);
  for (size_t i = 0; i < lad.rungs.size(); ++i) {
    const LadderRung& r = lad.rungs[i];
    INFO("level ", r.level);
    CHECK(r.shifted_x == doctest::Approx(0.0 + 0.5 * r.level));
    CHECK(r.shifted_beta == doctest::Approx(0.5 * r.level));
    CHECK(r.dual >= r.primal - 1e-8 * (1.0 + std::abs(r.primal)));
    CHECK(r.primal <= lad.primal_limit + 1e-8);
    CHECK(r.dual <= lad.dual_limit + 1e-8);
    if (i > 0) {
      CHECK(r.primal >= lad.rungs[i - 1].primal - 1e-10);
      CHECK(r.dual >= lad.rungs[i - 1].dual - 1e-10);
    }
  }
  CHECK(std::abs(lad.rungs.back().primal - lad.primal_limit) <= 1e-3);
  CHECK(std::abs(lad.rungs.back().dual - lad.dual_limit) <= 1e-3);
  CHECK(std::abs(lad.primal_limit - lad.dual_limit) <=
        1e-6 * (1.0 + std::abs(lad.primal_limit)));

  CHECK_THROWS_AS(truncation_ladder(tree, poly, u, b, 0.0, {}), std::invalid_argument);
  CHECK_THROWS_AS(truncation_ladder(tree, poly, u, b, 0.0, {4.0}), std::invalid_argument);
  CHECK_THROWS_AS(truncation_ladder(tree, poly, u, b, -4.0, {6.0}), std::invalid_argument);
}

TEST_CASE("exponential value is invariant under the wealth-scale symmetry") {
  // Scaling (x, B) by lambda and the risk aversion by 1/lambda leaves the
  // objective pointwise unchanged along rescaled strategies.
  MarketTree tree = trinomial();
  MartingalePolytope poly = martingale_polytope(tree);
  Claim b(3);
  b << 0.0, 0.0, 3.0;

  SolveReport base = solve_duality(tree, poly, Utility::exponential(1.0), b, 0.2);
  for (double lambda : {0.5, 2.0}) {
    INFO("lambda ", lambda);
    Claim bl = lambda * b;
    SolveReport rep =
        solve_duality(tree, poly, Utility::exponential(1.0 / lambda), bl, lambda * 0.2);
    const double scale = 1.0 + std::abs(base.primal_value);
    CHECK(std::abs(rep.primal_value - base.primal_value) <= 1e-7 * scale);
    CHECK(std::abs(rep.dual_value - base.dual_value) <= 1e-7 * scale);
  }
}

TEST_CASE("shifting the utility translates capital and offsets the value") {
  MarketTree tree = trinomial();
  MartingalePolytope poly = martingale_polytope(tree);
  Utility u = Utility::exponential(1.0);
  Claim b(3);
  b << 0.0, 0.0, 1.0;
  const double k1 = 0.7, k2 = 2.0;

  SolveReport shifted = solve_duality(tree, poly, u.shifted(k1, k2), b, 0.3);
  SolveReport base = solve_duality(tree, poly, u, b, 0.3 - k1);
  const double scale = 1.0 + std::abs(base.primal_value);
  CHECK(std::abs(shifted.primal_value - (base.primal_value + k2)) <= 1e-8 * scale);
  CHECK(std::abs(shifted.dual_value - (base.dual_value + k2)) <= 1e-8 * scale);
  // The dual mass is a slope quantity and is unchanged by the shift.
  CHECK(shifted.dual.point.y == doctest::Approx(base.dual.point.y).epsilon(1e-5));
}

TEST_CASE("static and dynamic primal routes agree where both apply") {
  MarketTree tree = trinomial();
  MartingalePolytope poly = martingale_polytope(tree);
  Utility u = Utility::exponential(1.0);
  Claim b(3);
  b << 0.0, 0.0, 1.0;

  PrimalSolveResult dyn = solve_primal_dynamic(tree, u, b, 0.2);
  PrimalSolveResult sta = solve_primal_static(tree, poly, u, b, 0.2);
  CHECK(dyn.converged);
  CHECK(sta.converged);
  CHECK(std::abs(dyn.value - sta.value) <= 1e-6 * (1.0 + std::abs(dyn.value)));
}

TEST_CASE("uniqueness probe distinguishes strict and flat objectives") {
  MarketTree bino = MarketTree::binomial(1.0, 2.0, 0.5, 0.5, 1);
  MartingalePolytope bpoly = martingale_polytope(bino);
  Claim call(2);
  call << 0.0, 1.0;  // atom order (down, up)

  UniquenessReport strict =
      uniqueness_probe(bino, bpoly, Utility::exponential(1.0), call, 0.3, 11);
  CHECK(strict.primal_unique);
  CHECK(strict.dual_unique);
  CHECK(strict.dual_face_dim == 0);
  CHECK(strict.primal_spread <= 1e-5);
  CHECK(strict.face_within_affine_pieces);

  MarketTree tri = trinomial();
  MartingalePolytope tpoly = martingale_polytope(tri);
  Claim b(3);
  b << 0.0, 0.0, 1.0;
  Utility pw = Utility::piecewise_linear({-0.5, 0.0, 0.5}, {3.0, 1.5, 0.5}, 0.0);
  UniquenessReport flat = uniqueness_probe(tri, tpoly, pw, b, 0.2, 11);
  // Whatever multiplicity the probe finds must sit inside affine pieces of
  // the conjugate, and the canonical face point must be a usable density.
  CHECK(flat.dual_face_dim >= 0);
  CHECK(flat.dual_face_diameter >= 0.0);
  CHECK(flat.face_within_affine_pieces);
  REQUIRE(flat.dual_face_center.size() == 3);
  for (int i = 0; i < 3; ++i) CHECK(flat.dual_face_center[i] >= -1e-9);
}

TEST_CASE("optimal pair passes the admissible-class audit") {
  MarketTree tree = MarketTree::binomial(1.0, 2.0, 0.5, 0.5, 2);
  MartingalePolytope poly = martingale_polytope(tree);
  Utility u = Utility::exponential(1.0);
  Claim b(4);
  for (int a = 0; a < 4; ++a)
    b[a] = std::max(tree.node(tree.atom_node(a)).prices[0] - 1.0, 0.0);

  SolveReport rep = solve_duality(tree, poly, u, b, 0.3);
  ClassAuditReport audit = admissible_class_audit(tree, poly, u, b, 0.3, rep);
  CHECK(audit.q_mart_resid <= 1e-7);
  CHECK(audit.supermart_worst <= 1e-7);
  CHECK(audit.vertices_checked >= 1);
  CHECK(audit.nodes_checked >= 1);
  CHECK(audit.growth_ok);
  CHECK(audit.growth_c < oracle::kInf);
  REQUIRE(audit.grid_y.size() == audit.grid_value.size());
  CHECK(audit.grid_y.size() >= 3);

  MarketTree tri = trinomial();
  MartingalePolytope tpoly = martingale_polytope(tri);
  Claim bt(3);
  bt << 0.0, 0.0, 1.0;
  SolveReport rt = solve_duality(tri, tpoly, u, bt, 0.2);
  ClassAuditReport at = admissible_class_audit(tri, tpoly, u, bt, 0.2, rt);
  CHECK(at.vertices_checked == 2);
  CHECK(at.supermart_worst <= 1e-7);
  CHECK(at.growth_ok);
}

TEST_CASE("arbitrage and domain violations are rejected") {
  std::vector<TreeNode> nodes(3);
  nodes[0].prices = {1.0};
  nodes[1] = {0, 1, 0.5, {1.5}, {}};
  nodes[2] = {0, 1, 0.5, {2.0}, {}};
  MarketTree bad = MarketTree::from_nodes(std::move(nodes));
  MartingalePolytope poly = martingale_polytope(bad);
  Utility u = Utility::exponential(1.0);
  Claim b = Claim::Zero(2);

  CHECK_THROWS_AS(solve_duality(bad, poly, u, b, 0.0), ArbitrageError);
  CHECK_THROWS_AS(solve_dual(bad, poly, u.conjugate(), b, 0.0), ArbitrageError);
  CHECK_THROWS_AS(dual_over_measures(bad, poly, u.conjugate(), b, 0.0), ArbitrageError);

  MarketTree good = trinomial();
  CHECK_THROWS_AS(solve_primal_dynamic(good, u.truncated(2.0), Claim::Zero(3), 0.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(solve_primal_dynamic(good, u, Claim::Zero(2), 0.0), std::invalid_argument);
}

TEST_CASE("dual scale curve is convex and its minimum matches the dual value") {
  MarketTree tree = trinomial();
  MartingalePolytope poly = martingale_polytope(tree);
  Conjugate conj = Utility::exponential(1.0).conjugate();
  Claim b = Claim::Zero(3);
  const double x = 0.0;
  const double v_star = -(std::cbrt(2.0) + 1.0 + std::pow(2.0, -2.0 / 3.0)) / 3.0;

  std::vector<double> f;
  for (int i = 0; i <= 20; ++i) {
    const double y = 0.2 + 0.09 * i;
    Eigen::VectorXd z;
    const double inner = dual_curve_value(tree, poly, conj, b, y, &z);
    f.push_back(x * y + inner);

    // The reported density is a feasible martingale density attaining inner.
    REQUIRE(z.size() == 3);
    CHECK(z.minCoeff() >= -1e-12);
    CHECK((poly.a_eq * z - poly.b_eq).lpNorm<Eigen::Infinity>() <= 1e-8);
    double recompute = 0.0;
    for (int a = 0; a < 3; ++a)
      recompute += tree.atom_prob(a) * (conj.value(y * z[a]) - y * z[a] * b[a]);
    CHECK(recompute == doctest::Approx(inner).epsilon(1e-8));
  }
  double fmin = f[0];
  for (size_t i = 1; i < f.size(); ++i) fmin = std::min(fmin, f[i]);
  for (size_t i = 1; i + 1 < f.size(); ++i)
    CHECK(f[i + 1] - 2.0 * f[i] + f[i - 1] >= -1e-8);
  CHECK(fmin >= v_star - 1e-9);
  CHECK(fmin <= v_star + 1e-2);  // grid resolution around the minimizer
}
