#pragma once

// Deterministic cross-module test corpus: 20 seeded arbitrage-free trees, each
// paired with three utility families and a bounded claim, plus a handful of
// instances whose capital is large enough to afford satiation outright.

#include <algorithm>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "nsdual/polytope.hpp"
#include "nsdual/solvers.hpp"

namespace corpus {

struct Instance {
  std::string label;
  nsdual::MarketTree tree;
  nsdual::MartingalePolytope poly;
  nsdual::Utility utility;
  nsdual::Claim claim;
  double x = 0.0;
  bool satiation_probe = false;
};

inline constexpr int kTreeCount = 20;

inline const std::vector<Instance>& instances() {
  static const std::vector<Instance> all = [] {
    std::vector<Instance> out;
    for (int seed = 1; seed <= kTreeCount; ++seed) {
      nsdual::MarketTree tree = nsdual::random_arbitrage_free_tree(seed);
      nsdual::MartingalePolytope poly = nsdual::martingale_polytope(tree);

      std::mt19937_64 rng(0xc0ffee ^ (static_cast<std::uint64_t>(seed) << 17));
      auto urand = [&] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
      nsdual::Claim b(tree.num_atoms());
      for (int a = 0; a < tree.num_atoms(); ++a) b[a] = 2.0 * urand() - 1.0;
      const double x = -0.5 + 1.5 * urand();

      const double eta = 0.5 + 1.5 * urand();
      std::vector<double> kinks = {2.0 * urand() - 1.0, 2.0 * urand() - 1.0,
                                   2.0 * urand() - 1.0};
      std::sort(kinks.begin(), kinks.end());
      kinks[1] = std::max(kinks[1], kinks[0] + 0.05);
      kinks[2] = std::max(kinks[2], kinks[1] + 0.05);
      std::vector<double> slopes = {2.0 + urand(), 1.0 + 0.5 * urand(), 0.1 + 0.3 * urand()};

      const std::string tag = "tree" + std::to_string(seed);
      out.push_back({tag + "/exponential", tree, poly, nsdual::Utility::exponential(eta), b, x});
      out.push_back(
          {tag + "/quadratic_shortfall", tree, poly, nsdual::Utility::quadratic_shortfall(), b, x});
      out.push_back({tag + "/piecewise_linear", tree, poly,
                     nsdual::Utility::piecewise_linear(kinks, slopes, urand()), b, x});

      // Capital beyond the superreplication cost of claim + satiation level:
      // the optimizer can afford the utility's plateau and y* collapses to 0.
      if (seed <= 3) {
        for (int fam = 0; fam < 2; ++fam) {
          nsdual::Utility u = fam == 0 ? nsdual::Utility::quadratic_shortfall()
                                       : nsdual::Utility::piecewise_linear(kinks, slopes, 1.0);
          nsdual::Claim target = b.array() + u.satiation();
          double xs = nsdual::superreplication_price(tree, poly, target) + 0.5;
          Instance inst{tag + (fam == 0 ? "/satiated_quadratic" : "/satiated_piecewise"),
                        tree,  poly, u, b, xs};
          inst.satiation_probe = true;
          out.push_back(std::move(inst));
        }
      }
    }
    return out;
  }();
  return all;
}

}  // namespace corpus
