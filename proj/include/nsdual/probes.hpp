#pragma once

#include <cstdint>

#include "nsdual/solvers.hpp"

namespace nsdual {

/// Multiplicity diagnostics for both sides of the duality.
struct UniquenessReport {
  bool primal_unique = false;
  double primal_spread = kInf;  // max wealth deviation across perturbed restarts
  bool dual_unique = false;
  double dual_face_diameter = 0.0;  // functional range over the dual optimal face
  int dual_face_dim = 0;
  Eigen::VectorXd dual_face_center;       // density coordinates
  bool face_within_affine_pieces = true;  // multiplicity confined to affine conjugate pieces
};

UniquenessReport uniqueness_probe(const MarketTree& tree, const MartingalePolytope& poly,
                                  const Utility& u, const Claim& b, double x, std::uint64_t seed,
                                  const Tolerances& tol = {});

/// Checks the optimal pair against the class the dual ranges over: the wealth
/// process must be a martingale under the optimizer measure and a
/// supermartingale under every finite-conjugate-moment vertex measure, and the
/// dual value curve must satisfy a doubling growth bound around y*.
struct ClassAuditReport {
  double q_mart_resid = kInf;
  double supermart_worst = -kInf;  // max positive one-step violation
  int vertices_checked = 0;
  int nodes_checked = 0;
  std::vector<double> grid_y;
  std::vector<double> grid_value;
  double growth_c = kInf;
  bool growth_ok = false;
  double shift_k2 = 0.0;
};

ClassAuditReport admissible_class_audit(const MarketTree& tree, const MartingalePolytope& poly,
                                        const Utility& u, const Claim& b, double x,
                                        const SolveReport& rep, const Tolerances& tol = {});

}  // namespace nsdual
