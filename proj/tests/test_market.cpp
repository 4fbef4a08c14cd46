#include <cmath>
#include <random>

#include <doctest.h>

#include "nsdual/polytope.hpp"

using namespace nsdual;

namespace {

MarketTree trinomial() {
  return MarketTree::one_period(1.0, {0.5, 1.0, 2.0}, {1.0 / 3, 1.0 / 3, 1.0 / 3});
}

// single asset that can only go up: every measure must put mass off the tree
MarketTree arbitrage_tree() {
  std::vector<TreeNode> nodes(3);
  nodes[0].prices = {1.0};
  nodes[1] = {0, 1, 0.5, {1.5}, {}};
  nodes[2] = {0, 1, 0.5, {2.0}, {}};
  return MarketTree::from_nodes(std::move(nodes));
}

Eigen::VectorXd random_simplex(std::mt19937_64& rng, int m) {
  Eigen::VectorXd v(m);
  for (int i = 0; i < m; ++i)
    v[i] = -std::log(1.0 - static_cast<double>(rng() >> 11) * 0x1.0p-53);
  return v / v.sum();
}

}  // namespace

TEST_CASE("tree construction validates structure") {
  CHECK_THROWS_AS(MarketTree::from_nodes({}), std::invalid_argument);

  std::vector<TreeNode> bad_prob(3);
  bad_prob[0].prices = {1.0};
  bad_prob[1] = {0, 1, 0.6, {2.0}, {}};
  bad_prob[2] = {0, 1, 0.6, {0.5}, {}};  // sums to 1.2
  CHECK_THROWS_AS(MarketTree::from_nodes(std::move(bad_prob)), std::invalid_argument);

  std::vector<TreeNode> bad_price(3);
  bad_price[0].prices = {1.0};
  bad_price[1] = {0, 1, 0.5, {2.0}, {}};
  bad_price[2] = {0, 1, 0.5, {-0.5}, {}};
  CHECK_THROWS_AS(MarketTree::from_nodes(std::move(bad_price)), std::invalid_argument);
}

TEST_CASE("terminal wealth: zero strategy, binomial arithmetic, linearity") {
  const MarketTree bin = MarketTree::binomial(1.0, 2.0, 0.5, 0.5, 1);
  const MarketTree two = MarketTree::binomial(1.0, 2.0, 0.5, 0.4, 2);

  Eigen::VectorXd zero = Eigen::VectorXd::Zero(bin.num_strategy_coords());
  CHECK(bin.terminal_wealth(0.7, zero).isConstant(0.7));

  Eigen::VectorXd one = Eigen::VectorXd::Ones(1);
  const Eigen::VectorXd w = bin.terminal_wealth(0.0, one);
  // atom order follows node construction: up branch first
  CHECK(w.maxCoeff() == doctest::Approx(1.0));
  CHECK(w.minCoeff() == doctest::Approx(-0.5));

  std::mt19937_64 rng(99);
  auto unit = [&] { return static_cast<double>(rng() >> 11) * 0x1.0p-53 - 0.5; };
  Eigen::VectorXd t1(two.num_strategy_coords()), t2(two.num_strategy_coords());
  for (int i = 0; i < t1.size(); ++i) t1[i] = unit(), t2[i] = unit();
  const Eigen::VectorXd lhs = two.terminal_wealth(0.3, t1) + two.terminal_wealth(0.9, t2);
  const Eigen::VectorXd rhs = two.terminal_wealth(1.2, t1 + t2);
  CHECK((lhs - rhs).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("binomial polytope is the single density with q_up = 1/3") {
  const MarketTree bin = MarketTree::binomial(1.0, 2.0, 0.5, 0.5, 1);
  const MartingalePolytope poly = martingale_polytope(bin);
  REQUIRE(poly.vertices_complete);
  REQUIRE(poly.vertices.size() == 1);
  // atoms are built down-branch first; q = (q_down, q_up) = (2/3, 1/3),
  // densities Z = q/p under p = (1/2, 1/2)
  CHECK(poly.vertices[0][0] == doctest::Approx(4.0 / 3.0));
  CHECK(poly.vertices[0][1] == doctest::Approx(2.0 / 3.0));
  CHECK(poly.interior_margin > 0.0);
}

TEST_CASE("trinomial polytope is a segment with the two known vertices") {
  const MartingalePolytope poly = martingale_polytope(trinomial());
  REQUIRE(poly.vertices_complete);
  REQUIRE(poly.vertices.size() == 2);
  // measures q = (0, 1, 0) and (2/3, 0, 1/3); densities are 3q under uniform P
  const auto close = [](const MartingaleDensity& z, double a, double b, double c) {
    return std::abs(z[0] - a) + std::abs(z[1] - b) + std::abs(z[2] - c) < 1e-9;
  };
  const bool order1 = close(poly.vertices[0], 0, 3, 0) && close(poly.vertices[1], 2, 0, 1);
  const bool order2 = close(poly.vertices[1], 0, 3, 0) && close(poly.vertices[0], 2, 0, 1);
  CHECK((order1 || order2));
  CHECK(poly.interior_margin > 0.0);
  // interior point is strictly positive and satisfies the constraints
  CHECK(poly.interior.minCoeff() > 0.0);
  CHECK((poly.a_eq * poly.interior - poly.b_eq).cwiseAbs().maxCoeff() <= 1e-9);
}

TEST_CASE("constant price process makes every probability a martingale measure") {
  const MarketTree flat = MarketTree::one_period(1.0, {1.0, 1.0, 1.0}, {0.2, 0.3, 0.5});
  const MartingalePolytope poly = martingale_polytope(flat);
  REQUIRE(poly.vertices_complete);
  CHECK(poly.vertices.size() == 3);  // full simplex: one vertex per atom
  std::mt19937_64 rng(5);
  const Eigen::VectorXd q = random_simplex(rng, 3);
  Eigen::VectorXd z(3);
  for (int i = 0; i < 3; ++i) z[i] = q[i] / flat.atom_prob(i);
  CHECK((poly.a_eq * z - poly.b_eq).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("arbitrage tree has an empty equivalent-measure polytope") {
  const MartingalePolytope poly = martingale_polytope(arbitrage_tree());
  CHECK(!(poly.interior_margin > 0.0));
  CHECK_THROWS_AS(superreplication_price(arbitrage_tree(), poly, Eigen::VectorXd::Zero(2)),
                  ArbitrageError);
}

TEST_CASE("superreplication: constants, the trinomial call, sublinearity") {
  const MarketTree tri = trinomial();
  const MartingalePolytope poly = martingale_polytope(tri);

  CHECK(superreplication_price(tri, poly, Eigen::VectorXd::Constant(3, 1.4)) ==
        doctest::Approx(1.4));

  Eigen::VectorXd call(3);
  call << 0.0, 0.0, 1.0;  // (S - 1)^+ on factors (0.5, 1, 2)
  CHECK(superreplication_price(tri, poly, call) == doctest::Approx(1.0 / 3.0));

  std::mt19937_64 rng(11);
  for (int rep = 0; rep < 20; ++rep) {
    Eigen::VectorXd a(3), b(3);
    for (int i = 0; i < 3; ++i) {
      a[i] = static_cast<double>(rng() >> 11) * 0x1.0p-53 * 2.0 - 1.0;
      b[i] = static_cast<double>(rng() >> 11) * 0x1.0p-53 * 2.0 - 1.0;
    }
    const double pa = superreplication_price(tri, poly, a);
    const double pb = superreplication_price(tri, poly, b);
    CHECK(superreplication_price(tri, poly, a + b) <= pa + pb + 1e-10);
    CHECK(superreplication_price(tri, poly, 1.7 * a) == doctest::Approx(1.7 * pa));
  }
}

TEST_CASE("superhedge attains the superreplication price with dominating wealth") {
  const MarketTree tri = trinomial();
  const MartingalePolytope poly = martingale_polytope(tri);
  Eigen::VectorXd call(3);
  call << 0.0, 0.0, 1.0;
  const SuperhedgeResult h = superhedge(tri, call);
  CHECK(h.cost == doctest::Approx(superreplication_price(tri, poly, call)));
  CHECK((h.terminal - call).minCoeff() >= -1e-10);
}

TEST_CASE("replication: binomial call, constants, trinomial nonreplicability") {
  const MarketTree bin = MarketTree::binomial(1.0, 2.0, 0.5, 0.5, 1);
  const MartingalePolytope bpoly = martingale_polytope(bin);
  Eigen::VectorXd call(2);
  call << 0.0, 1.0;  // down atom first; payoff (S - 1)^+
  const ReplicationResult r = replicate(bin, bpoly.vertices[0], call);
  CHECK(r.cost == doctest::Approx(1.0 / 3.0));
  CHECK(r.theta[0] == doctest::Approx(2.0 / 3.0));
  CHECK(r.residual <= 1e-12);
  CHECK((r.terminal - call).cwiseAbs().maxCoeff() <= 1e-12);

  const MarketTree tri = trinomial();
  const MartingalePolytope tpoly = martingale_polytope(tri);
  const ReplicationResult rc = replicate(tri, tpoly.interior, Eigen::VectorXd::Constant(3, 0.8));
  CHECK(rc.cost == doctest::Approx(0.8));
  CHECK(rc.theta.cwiseAbs().maxCoeff() <= 1e-12);
  CHECK(rc.residual <= 1e-12);

  Eigen::VectorXd tcall(3);
  tcall << 0.0, 0.0, 1.0;
  CHECK(replicate(tri, tpoly.interior, tcall).residual > 1e-3);
}

TEST_CASE("martingale property: E_Q[wealth] = x at every vertex, machine precision") {
  std::mt19937_64 rng(2024);
  for (int seed = 1; seed <= 8; ++seed) {
    const MarketTree tree = random_arbitrage_free_tree(seed);
    const MartingalePolytope poly = martingale_polytope(tree);
    REQUIRE(poly.interior_margin > 0.0);
    Eigen::VectorXd theta(tree.num_strategy_coords());
    for (int i = 0; i < theta.size(); ++i)
      theta[i] = 2.0 * static_cast<double>(rng() >> 11) * 0x1.0p-53 - 1.0;
    const Eigen::VectorXd w = tree.terminal_wealth(0.37, theta);
    for (const MartingaleDensity& z : poly.vertices) {
      double ev = 0.0;
      for (int a = 0; a < tree.num_atoms(); ++a) ev += tree.atom_prob(a) * z[a] * w[a];
      CHECK(ev == doctest::Approx(0.37).epsilon(1e-12));
    }
  }
}

TEST_CASE("polar-cone identification: martingale rows span the wealth annihilator") {
  // On finite trees the dual variables are exactly the nonnegative multiples
  // of martingale densities: a nonnegative normalized Y prices every zero-cost
  // wealth at zero iff it solves the polytope's equality rows.  Row spaces of
  // the two descriptions must coincide.
  for (int seed = 1; seed <= 10; ++seed) {
    const MarketTree tree = random_arbitrage_free_tree(seed);
    if (tree.num_atoms() > 12) continue;
    const MartingalePolytope poly = martingale_polytope(tree);
    const int m = tree.num_atoms();
    const int rows = static_cast<int>(poly.a_eq.rows()) - 1;  // normalization row is last

    // wealth-pricing description: columns of G scaled by atom probabilities
    const Eigen::MatrixXd gt = tree.wealth_matrix().transpose() * tree.atom_probs().asDiagonal();
    const Eigen::MatrixXd mart = poly.a_eq.topRows(rows);

    const auto in_rowspace = [&](const Eigen::MatrixXd& basis, const Eigen::VectorXd& v) {
      Eigen::VectorXd sol = basis.transpose().colPivHouseholderQr().solve(v);
      return (basis.transpose() * sol - v).cwiseAbs().maxCoeff() <= 1e-9;
    };
    for (int i = 0; i < gt.rows(); ++i) CHECK(in_rowspace(mart, gt.row(i).transpose()));
    for (int i = 0; i < rows; ++i) CHECK(in_rowspace(gt, mart.row(i).transpose()));
    (void)m;
  }
}

TEST_CASE("random trees are reproducible and arbitrage-free by construction") {
  for (int seed : {3, 17}) {
    const MarketTree a = random_arbitrage_free_tree(seed);
    const MarketTree b = random_arbitrage_free_tree(seed);
    REQUIRE(a.num_nodes() == b.num_nodes());
    CHECK(a.to_csv() == b.to_csv());
    CHECK(martingale_polytope(a).interior_margin > 0.0);
  }
  const MarketTree c = random_arbitrage_free_tree(3);
  const MarketTree d = random_arbitrage_free_tree(4);
  CHECK((c.num_nodes() != d.num_nodes() || c.to_csv() != d.to_csv()));
}
