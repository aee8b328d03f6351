/**
 * @file newton.hpp
 * @brief Newton solves of G(u; p) = 0 that work over reals and over Taylor
 *        polynomials in the parameters p.
 *
 * The residual is a generic callable G(u, p) returning a container of the
 * same scalar type. Over polynomials the Jacobian is taken at the constant
 * parts (first-order expansion in u) and the iteration runs in the full
 * algebra, which gains one polynomial order per step once the constant part
 * has converged.
 */
#pragma once

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <vector>

#include "robod/da/taylor_poly.hpp"

namespace robod::da {

struct NewtonOptions {
  double tol = 1e-9;      // on the max-norm of the constant part of G
  int max_iter = 25;
  int extra_iter = -1;    // polynomial refinement sweeps; -1 means order + 1
};

struct NewtonInfo {
  int iterations = 0;
  double residual = 0.0;
};

/// Jacobian dG/du at real (u, p) via a first-order expansion in u.
template <std::size_t N, class F>
Eigen::Matrix<double, static_cast<int>(N), static_cast<int>(N)> jacobian_at(
    F&& G, const std::array<double, N>& u, const std::vector<double>& p) {
  const AlgebraSpec aux(1, static_cast<int>(N));
  std::array<TaylorPoly, N> ud;
  for (std::size_t i = 0; i < N; ++i) ud[i] = TaylorPoly::variable(aux, static_cast<int>(i), u[i]);
  std::vector<TaylorPoly> pd;
  pd.reserve(p.size());
  for (double x : p) pd.push_back(TaylorPoly::constant(aux, x));
  const auto g = G(ud, pd);
  Eigen::Matrix<double, static_cast<int>(N), static_cast<int>(N)> J;
  for (std::size_t i = 0; i < N; ++i) {
    for (std::size_t j = 0; j < N; ++j) J(static_cast<int>(i), static_cast<int>(j)) = g[i].linear(static_cast<int>(j));
  }
  return J;
}

template <std::size_t N, class S, class F>
std::array<S, N> newton_solve(F&& G, std::array<S, N> u, const std::vector<S>& p, const NewtonOptions& opt = {},
                              NewtonInfo* info = nullptr) {
  constexpr bool kPoly = std::is_same_v<S, TaylorPoly>;
  std::vector<double> p0;
  p0.reserve(p.size());
  for (const auto& x : p) p0.push_back(cst(x));
  int extra = 0;
  if constexpr (kPoly) {
    const int order = p.empty() ? u[0].spec().order() : p[0].spec().order();
    extra = opt.extra_iter >= 0 ? opt.extra_iter : order + 1;
  }
  bool converged = false;
  double res = 0.0;
  for (int it = 0; it <= opt.max_iter + extra; ++it) {
    const auto g = G(u, p);
    res = 0.0;
    for (std::size_t i = 0; i < N; ++i) res = std::max(res, std::abs(cst(g[i])));
    if (!std::isfinite(res)) throw std::runtime_error("newton: non-finite residual");
    if (!converged && res < opt.tol) converged = true;
    if (converged) {
      if (extra-- == 0) {
        if (info) *info = {it, res};
        return u;
      }
    } else if (it >= opt.max_iter) {
      break;
    }
    std::array<double, N> uc{};
    for (std::size_t i = 0; i < N; ++i) uc[i] = cst(u[i]);
    const auto J = jacobian_at<N>(G, uc, p0);
    const auto lu = J.fullPivLu();
    if (!lu.isInvertible()) throw std::runtime_error("newton: singular Jacobian");
    const auto Jinv = lu.inverse();
    for (std::size_t i = 0; i < N; ++i) {
      S step = g[0] * Jinv(static_cast<int>(i), 0);
      for (std::size_t j = 1; j < N; ++j) step = step + g[j] * Jinv(static_cast<int>(i), static_cast<int>(j));
      u[i] = u[i] - step;
    }
  }
  throw std::runtime_error("newton: no convergence after " + std::to_string(opt.max_iter) +
                           " iterations (residual " + std::to_string(res) + ")");
}

}  // namespace robod::da
