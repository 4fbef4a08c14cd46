#include <algorithm>
#include <stdexcept>

#include "nsdual/solvers.hpp"

namespace nsdual {

LadderResult truncation_ladder(const MarketTree& tree, const MartingalePolytope& poly,
                               const Utility& u, const Claim& b, double x,
                               const std::vector<double>& levels, const Tolerances& tol) {
  if (levels.empty()) throw std::invalid_argument("truncation_ladder: no levels");
  if (b.size() != tree.num_atoms())
    throw std::invalid_argument("truncation_ladder: claim size mismatch");
  const double bmax = b.size() ? b.cwiseAbs().maxCoeff() : 0.0;

  std::vector<double> ls = levels;
  std::sort(ls.begin(), ls.end());

  LadderResult out;
  for (double n : ls) {
    if (!(n >= 2.0 * bmax - 1e-12))
      throw std::invalid_argument("truncation_ladder: level below twice the claim bound");
    if (!(x + 0.5 * n > 0.0))
      throw std::invalid_argument("truncation_ladder: shifted capital x + n/2 must be positive");
    Utility un = u.truncated(n);
    // Both sides are solved in capital-reduced form; the shifted instance
    // (capital x + n/2, claim b + n/2) has the same value by construction.
    double vn = solve_primal_static(tree, poly, un, b, x, tol, true).value;
    double wn = solve_dual(tree, poly, un.conjugate(), b, x, tol).value;
    out.rungs.push_back({n, vn, wn, x + 0.5 * n, 0.5 * n});
  }

  out.dual_limit = solve_dual(tree, poly, u.conjugate(), b, x, tol).value;
  out.primal_limit = std::isfinite(u.domain_left())
                         ? solve_primal_static(tree, poly, u, b, x, tol, true).value
                         : solve_primal_dynamic(tree, u, b, x, tol).value;
  return out;
}

}  // namespace nsdual
