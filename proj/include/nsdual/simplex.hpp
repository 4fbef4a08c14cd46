#pragma once

#include <Eigen/Dense>
#include <vector>

namespace nsdual {

/// Dense linear program
///   min c'x  s.t.  a_eq x = b_eq,  a_le x <= b_le,  x_i >= 0 unless free[i].
/// Solved by a two-phase primal simplex with Bland's rule.  Sizes here are a
/// few dozen variables; robustness is preferred over speed.
struct LpProblem {
  Eigen::MatrixXd a_eq;  // may have 0 rows
  Eigen::VectorXd b_eq;
  Eigen::MatrixXd a_le;  // may have 0 rows
  Eigen::VectorXd b_le;
  Eigen::VectorXd c;
  std::vector<bool> free_var;  // empty means all nonnegative
};

struct LpResult {
  enum class Status { Optimal, Infeasible, Unbounded };
  Status status = Status::Infeasible;
  Eigen::VectorXd x;
  double objective = 0.0;
  int iterations = 0;
};

LpResult solve_lp(const LpProblem& p, double tol = 1e-9);

/// Convenience: max c'x over the same constraints.
LpResult maximize_lp(LpProblem p, double tol = 1e-9);

}  // namespace nsdual
