#include "nsdual/simplex.hpp"

#include <cmath>
#include <stdexcept>

namespace nsdual {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Tableau simplex on min c'x, Ax = b, x >= 0, b >= 0, starting from the given
// basis (which must be feasible).  Bland's rule throughout: no cycling.
// Returns false when unbounded.
bool simplex_core(MatrixXd& t, std::vector<int>& basis, const VectorXd& cost, double tol,
                  int& iterations) {
  const int m = static_cast<int>(t.rows());
  const int n = static_cast<int>(t.cols()) - 1;

  // Reduced costs kept implicitly: z_j = cost_j - cost_B' * t_col(j).
  VectorXd cb(m);
  for (int iter = 0; iter < 200000; ++iter) {
    for (int i = 0; i < m; ++i) cb[i] = cost[basis[i]];
    int enter = -1;
    for (int j = 0; j < n; ++j) {
      double red = cost[j] - cb.dot(t.col(j));
      if (red < -tol) {
        enter = j;
        break;  // Bland: first improving index
      }
    }
    if (enter < 0) {
      iterations = iter;
      return true;
    }
    int leave = -1;
    double best = 0.0;
    for (int i = 0; i < m; ++i) {
      double a = t(i, enter);
      if (a > tol) {
        double ratio = t(i, n) / a;
        if (leave < 0 || ratio < best - 1e-15 ||
            (std::abs(ratio - best) <= 1e-15 && basis[i] < basis[leave])) {
          leave = i;
          best = ratio;
        }
      }
    }
    if (leave < 0) {
      iterations = iter;
      return false;  // unbounded
    }
    double piv = t(leave, enter);
    t.row(leave) /= piv;
    for (int i = 0; i < m; ++i) {
      if (i == leave) continue;
      double f = t(i, enter);
      if (f != 0.0) t.row(i) -= f * t.row(leave);
    }
    basis[leave] = enter;
  }
  throw std::runtime_error("simplex: iteration cap reached");
}

LpResult solve_standard(const MatrixXd& a, const VectorXd& b, const VectorXd& c, double tol) {
  const int m = static_cast<int>(a.rows());
  const int n = static_cast<int>(a.cols());
  LpResult out;

  MatrixXd t(m, n + m + 1);
  t.block(0, 0, m, n) = a;
  t.block(0, n, m, m) = MatrixXd::Identity(m, m);
  t.col(n + m) = b;
  for (int i = 0; i < m; ++i)
    if (t(i, n + m) < 0.0) t.row(i) = -t.row(i);

  // Phase 1: minimize the sum of artificials.
  VectorXd cost1 = VectorXd::Zero(n + m);
  cost1.tail(m).setOnes();
  std::vector<int> basis(m);
  for (int i = 0; i < m; ++i) basis[i] = n + i;
  int it1 = 0;
  simplex_core(t, basis, cost1, tol, it1);
  out.iterations = it1;

  double phase1 = 0.0;
  for (int i = 0; i < m; ++i)
    if (basis[i] >= n) phase1 += t(i, n + m);
  if (phase1 > 1e-7) {
    out.status = LpResult::Status::Infeasible;
    return out;
  }
  // Pivot remaining (degenerate) artificials out where possible; rows where
  // none of the real columns can pivot are redundant and get dropped.
  std::vector<int> keep;
  for (int i = 0; i < m; ++i) {
    if (basis[i] < n) {
      keep.push_back(i);
      continue;
    }
    int piv = -1;
    for (int j = 0; j < n; ++j)
      if (std::abs(t(i, j)) > 1e-8) {
        piv = j;
        break;
      }
    if (piv < 0) continue;  // redundant row
    double pv = t(i, piv);
    t.row(i) /= pv;
    for (int k = 0; k < m; ++k) {
      if (k == i) continue;
      double f = t(k, piv);
      if (f != 0.0) t.row(k) -= f * t.row(i);
    }
    basis[i] = piv;
    keep.push_back(i);
  }

  // Phase 2 on the real columns only.
  const int m2 = static_cast<int>(keep.size());
  MatrixXd t2(m2, n + 1);
  std::vector<int> basis2(m2);
  for (int i = 0; i < m2; ++i) {
    t2.block(i, 0, 1, n) = t.block(keep[i], 0, 1, n);
    t2(i, n) = t(keep[i], n + m);
    basis2[i] = basis[keep[i]];
  }
  int it2 = 0;
  bool bounded = simplex_core(t2, basis2, c, tol, it2);
  out.iterations += it2;
  if (!bounded) {
    out.status = LpResult::Status::Unbounded;
    return out;
  }

  VectorXd x = VectorXd::Zero(n);
  for (int i = 0; i < m2; ++i) x[basis2[i]] = t2(i, n);
  out.status = LpResult::Status::Optimal;
  out.x = x;
  out.objective = c.dot(x);
  return out;
}

}  // namespace

LpResult solve_lp(const LpProblem& p, double tol) {
  const int n = static_cast<int>(p.c.size());
  const int me = static_cast<int>(p.a_eq.rows());
  const int mi = static_cast<int>(p.a_le.rows());
  if ((me && p.a_eq.cols() != n) || (mi && p.a_le.cols() != n))
    throw std::invalid_argument("solve_lp: constraint matrix width mismatch");

  int n_split = 0;
  for (bool f : p.free_var)
    if (f) ++n_split;
  const int ns = n + n_split + mi;  // split negatives + slacks

  MatrixXd a = MatrixXd::Zero(me + mi, ns);
  VectorXd b(me + mi), c = VectorXd::Zero(ns);
  std::vector<int> split_col(n, -1);
  int col = n;
  for (int j = 0; j < n; ++j)
    if (!p.free_var.empty() && p.free_var[j]) split_col[j] = col++;

  auto fill_row = [&](int row, const Eigen::RowVectorXd& r) {
    a.block(row, 0, 1, n) = r;
    for (int j = 0; j < n; ++j)
      if (split_col[j] >= 0) a(row, split_col[j]) = -r(j);
  };
  for (int i = 0; i < me; ++i) {
    fill_row(i, p.a_eq.row(i));
    b[i] = p.b_eq[i];
  }
  for (int i = 0; i < mi; ++i) {
    fill_row(me + i, p.a_le.row(i));
    a(me + i, col + i) = 1.0;
    b[me + i] = p.b_le[i];
  }
  c.head(n) = p.c;
  for (int j = 0; j < n; ++j)
    if (split_col[j] >= 0) c[split_col[j]] = -p.c[j];

  LpResult std_res = solve_standard(a, b, c, tol);
  LpResult out;
  out.status = std_res.status;
  out.iterations = std_res.iterations;
  if (out.status != LpResult::Status::Optimal) return out;
  out.x = std_res.x.head(n);
  for (int j = 0; j < n; ++j)
    if (split_col[j] >= 0) out.x[j] -= std_res.x[split_col[j]];
  out.objective = p.c.dot(out.x);
  return out;
}

LpResult maximize_lp(LpProblem p, double tol) {
  p.c = -p.c;
  LpResult r = solve_lp(p, tol);
  if (r.status == LpResult::Status::Optimal) r.objective = -r.objective;
  return r;
}

}  // namespace nsdual
