/**
 * @file lp.hpp
 * @brief Dense two-phase primal simplex with Bland's rule for
 *        min c^T z subject to Q z <= k, z free.
 */
#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace robod::est {

struct LpProblem {
  Eigen::VectorXd c;
  Eigen::MatrixXd Q;
  Eigen::VectorXd k;

  void validate() const {
    if (Q.rows() != k.size() || Q.cols() != c.size()) throw std::invalid_argument("LpProblem: inconsistent dimensions");
    if (!Q.allFinite() || !k.allFinite() || !c.allFinite()) throw std::invalid_argument("LpProblem: non-finite data");
  }
};

enum class LpStatus { optimal, infeasible, unbounded };

struct LpResult {
  LpStatus status = LpStatus::optimal;
  Eigen::VectorXd z;
  double objective = 0.0;
  int pivots = 0;
  double min_reduced_cost = 0.0;  ///< at the final vertex, phase II
};

namespace detail {

/// Tableau with rows 0..m-1 constraints and row m the objective
/// (reduced costs), last column the right-hand side.
class Tableau {
 public:
  Tableau(Eigen::MatrixXd T, std::vector<int> basis) : T_(std::move(T)), basis_(std::move(basis)) {}

  /// Runs Bland's rule over the allowed columns. Returns false if unbounded.
  bool optimize(int ncols, int& pivots, double tol) {
    const int m = static_cast<int>(basis_.size());
    const int rhs = static_cast<int>(T_.cols()) - 1;
    for (int guard = 0; guard < 100000; ++guard) {
      int enter = -1;
      for (int j = 0; j < ncols; ++j) {
        if (T_(m, j) < -tol) {
          enter = j;
          break;
        }
      }
      if (enter < 0) return true;
      int leave = -1;
      double best = std::numeric_limits<double>::infinity();
      for (int i = 0; i < m; ++i) {
        const double a = T_(i, enter);
        if (a <= tol) continue;
        const double ratio = T_(i, rhs) / a;
        const double slack = 1e-12 * std::max(1.0, std::abs(ratio));
        if (leave < 0 || ratio < best - slack ||
            (ratio <= best + slack && basis_[static_cast<std::size_t>(i)] < basis_[static_cast<std::size_t>(leave)])) {
          best = ratio;
          leave = i;
        }
      }
      if (leave < 0) return false;
      pivot(leave, enter);
      ++pivots;
    }
    throw std::runtime_error("lp_solve: pivot limit reached");
  }

  void pivot(int r, int col) {
    const double piv = T_(r, col);
    T_.row(r) /= piv;
    for (int i = 0; i < T_.rows(); ++i) {
      const double f = T_(i, col);
      if (i != r && f != 0.0) T_.row(i) -= f * T_.row(r);
    }
    basis_[static_cast<std::size_t>(r)] = col;
  }

  Eigen::MatrixXd& T() { return T_; }
  std::vector<int>& basis() { return basis_; }

 private:
  Eigen::MatrixXd T_;
  std::vector<int> basis_;
};

}  // namespace detail

inline LpResult lp_solve(const LpProblem& p, double tol = 1e-9) {
  p.validate();
  const int m = static_cast<int>(p.Q.rows());
  const int n = static_cast<int>(p.c.size());
  // Columns: z+ (n), z- (n), slack (m), artificial (m); last column rhs.
  const int nz = 2 * n, ns = m, na = m;
  const int cols = nz + ns + na + 1;
  const int rhs = cols - 1;
  Eigen::MatrixXd T = Eigen::MatrixXd::Zero(m + 1, cols);
  std::vector<int> basis(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) {
    const double sgn = p.k(i) < 0.0 ? -1.0 : 1.0;
    T.block(i, 0, 1, n) = sgn * p.Q.row(i);
    T.block(i, n, 1, n) = -sgn * p.Q.row(i);
    T(i, nz + i) = sgn;
    T(i, nz + ns + i) = 1.0;
    T(i, rhs) = sgn * p.k(i);
    basis[static_cast<std::size_t>(i)] = nz + ns + i;
  }
  // Phase I objective: sum of artificials, expressed in non-basic terms.
  for (int i = 0; i < m; ++i) T.row(m) -= T.row(i);
  for (int i = 0; i < m; ++i) T(m, nz + ns + i) = 0.0;
  detail::Tableau tab(std::move(T), std::move(basis));
  LpResult res;
  tab.optimize(nz + ns, res.pivots, tol);
  auto& Tm = tab.T();
  if (-Tm(m, rhs) > tol * std::max(1.0, p.k.cwiseAbs().maxCoeff())) {
    res.status = LpStatus::infeasible;
    return res;
  }
  // Drive remaining artificials out of the basis.
  for (int i = 0; i < m; ++i) {
    if (tab.basis()[static_cast<std::size_t>(i)] < nz + ns) continue;
    for (int j = 0; j < nz + ns; ++j) {
      if (std::abs(Tm(i, j)) > tol) {
        tab.pivot(i, j);
        break;
      }
    }
  }
  // Phase II objective.
  Tm.row(m).setZero();
  Tm.block(m, 0, 1, n) = p.c.transpose();
  Tm.block(m, n, 1, n) = -p.c.transpose();
  for (int i = 0; i < m; ++i) {
    const int b = tab.basis()[static_cast<std::size_t>(i)];
    const double f = b < nz + ns ? Tm(m, b) : 0.0;
    if (f != 0.0) Tm.row(m) -= f * Tm.row(i);
  }
  // Artificial columns are barred from entering.
  if (!tab.optimize(nz + ns, res.pivots, tol)) {
    res.status = LpStatus::unbounded;
    return res;
  }
  Eigen::VectorXd x = Eigen::VectorXd::Zero(nz + ns);
  for (int i = 0; i < m; ++i) {
    const int b = tab.basis()[static_cast<std::size_t>(i)];
    if (b < nz + ns) x(b) = Tm(i, rhs);
  }
  res.z = x.head(n) - x.segment(n, n);
  res.objective = p.c.dot(res.z);
  res.min_reduced_cost = Tm.block(m, 0, 1, nz + ns).minCoeff();
  return res;
}

}  // namespace robod::est
