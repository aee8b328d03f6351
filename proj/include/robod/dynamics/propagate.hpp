/**
 * @file propagate.hpp
 * @brief Numerical high-fidelity propagation of states and of the
 *        state-noise-compensation covariance.
 */
#pragma once

#include <type_traits>
#include <vector>

#include "robod/da/taylor_poly.hpp"
#include "robod/dynamics/forces.hpp"
#include "robod/dynamics/integrator.hpp"
#include "robod/linalg.hpp"

namespace robod::dyn {

/// The controller bounds the local error at this fraction of the requested
/// tolerance so that the accumulated error over an arc stays near tol.
inline constexpr double kLocalErrorFactor = 1e-4;

/// Controller tolerance for a requested arc tolerance; floored well above
/// double rounding.
inline double controller_rtol(double tol) { return std::max(tol * kLocalErrorFactor, 1e-14); }

/// Default relative tolerance: 1e-10 for reals, 1e-9 for polynomials.
template <class T>
constexpr double default_tolerance() {
  return std::is_same_v<T, double> ? 1e-10 : 1e-9;
}

template <class T>
State6<T> hf_propagate(const State6<T>& x0, double t0, double t1, const ForceConfig& cfg, double tol = default_tolerance<T>(),
                       IntegratorStats* stats = nullptr) {
  if (t0 == t1) return x0;
  IntegratorOptions opt;
  opt.rtol = controller_rtol(tol);
  opt.atol = opt.rtol * 1e-3;
  auto rhs = [&](double t, const std::vector<T>& y) {
    const State6<T> x{y[0], y[1], y[2], y[3], y[4], y[5]};
    const auto d = hf_derivative(x, t, cfg);
    return std::vector<T>(d.begin(), d.end());
  };
  const auto y = dop853(rhs, std::vector<T>(x0.begin(), x0.end()), t0, t1, opt, stats);
  return {y[0], y[1], y[2], y[3], y[4], y[5]};
}

struct NoiseConfig {
  Mat3 Q = Mat3::Identity() * 1e-22;  ///< (km/s^2)^2 s

  void validate() const {
    if (!Q.allFinite() || (Q - Q.transpose()).cwiseAbs().maxCoeff() > 1e-12 * (1.0 + Q.cwiseAbs().maxCoeff())) {
      throw std::invalid_argument("NoiseConfig: Q must be finite and symmetric");
    }
    Eigen::SelfAdjointEigenSolver<Mat3> es(Q);
    if (es.eigenvalues().minCoeff() < -1e-12 * std::max(1e-300, Q.trace())) {
      throw std::invalid_argument("NoiseConfig: Q must be positive semidefinite");
    }
  }
};

struct SncResult {
  State6<double> x;
  Mat6 P;
};

/// Jacobian of the force model at a real state, via a first-order polynomial
/// evaluation.
inline Mat6 force_jacobian(const State6<double>& x, double t, const ForceConfig& cfg) {
  static const AlgebraSpec spec(1, 6);
  State6<TaylorPoly> xp;
  for (int c = 0; c < 6; ++c) xp[c] = TaylorPoly::variable(spec, c, x[c]);
  const auto d = hf_derivative(xp, t, cfg);
  Mat6 A;
  for (int r = 0; r < 6; ++r) {
    for (int c = 0; c < 6; ++c) A(r, c) = d[r].linear(c);
  }
  return A;
}

/// Joint integration of x' = f(x, t) and P' = A P + P A^T + B Q B^T with
/// B = [0; I]. zero_jacobian forces A = 0 in the covariance equation.
inline SncResult snc_propagate(const State6<double>& x0, const Mat6& P0, double t0, double t1, const ForceConfig& cfg,
                               const NoiseConfig& noise, double tol = 1e-10, bool zero_jacobian = false,
                               IntegratorStats* stats = nullptr) {
  if (t0 == t1) return {x0, 0.5 * (P0 + P0.transpose())};
  Mat6 BQB = Mat6::Zero();
  BQB.block<3, 3>(3, 3) = noise.Q;
  auto rhs = [&](double t, const std::vector<double>& y) {
    const State6<double> x{y[0], y[1], y[2], y[3], y[4], y[5]};
    const auto dx = hf_derivative(x, t, cfg);
    const Eigen::Map<const Mat6> P(y.data() + 6);
    Mat6 dP = BQB;
    if (!zero_jacobian) {
      const Mat6 A = force_jacobian(x, t, cfg);
      dP += A * P + P * A.transpose();
    }
    std::vector<double> out(42);
    for (int c = 0; c < 6; ++c) out[static_cast<std::size_t>(c)] = dx[c];
    Eigen::Map<Mat6>(out.data() + 6) = dP;
    return out;
  };
  std::vector<double> y(42);
  for (int c = 0; c < 6; ++c) y[static_cast<std::size_t>(c)] = x0[c];
  Eigen::Map<Mat6>(y.data() + 6) = 0.5 * (P0 + P0.transpose());
  IntegratorOptions opt;
  opt.rtol = controller_rtol(tol);
  opt.atol = opt.rtol * 1e-3;
  opt.error_components = 6;
  const std::function<void(double, std::vector<double>&)> symmetrize = [](double, std::vector<double>& s) {
    Eigen::Map<Mat6> P(s.data() + 6);
    const Mat6 S = 0.5 * (P + P.transpose());
    P = S;
  };
  const auto out = dop853(rhs, std::move(y), t0, t1, opt, stats, symmetrize);
  SncResult r;
  for (int c = 0; c < 6; ++c) r.x[c] = out[static_cast<std::size_t>(c)];
  r.P = Eigen::Map<const Mat6>(out.data() + 6);
  return r;
}

}  // namespace robod::dyn
