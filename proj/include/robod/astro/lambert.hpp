/**
 * @file lambert.hpp
 * @brief Single-revolution Lambert solver in universal variables, usable
 *        over reals or Taylor polynomials in the boundary positions.
 */
#pragma once

#include <cmath>
#include <stdexcept>
#include <utility>

#include "robod/astro/constants.hpp"
#include "robod/da/taylor_poly.hpp"
#include "robod/linalg.hpp"

namespace robod::astro {

/// Stumpff functions C(z), S(z); series near z = 0.
template <class T>
std::pair<T, T> stumpff(const T& z) {
  using std::cos;
  using std::cosh;
  using std::sin;
  using std::sinh;
  using std::sqrt;
  const double z0 = cst(z);
  if (std::abs(z0) < 0.1) {
    // C = sum (-z)^k / (2k+2)!, S = sum (-z)^k / (2k+3)!
    T c = constant_like(z, 0.0), s = constant_like(z, 0.0);
    T zk = constant_like(z, 1.0);
    double fc = 2.0, fs = 6.0;
    for (int k = 0; k < 12; ++k) {
      c = c + zk / fc;
      s = s + zk / fs;
      zk = zk * (-1.0) * z;
      fc *= (2 * k + 3) * (2 * k + 4);
      fs *= (2 * k + 4) * (2 * k + 5);
    }
    return {c, s};
  }
  if (z0 > 0) {
    const T sz = sqrt(z);
    return {(1.0 - cos(sz)) / z, (sz - sin(sz)) / (sz * sz * sz)};
  }
  const T sz = sqrt(-1.0 * z);
  return {(cosh(sz) - 1.0) / (-1.0 * z), (sinh(sz) - sz) / (sz * sz * sz)};
}

template <class T>
struct LambertResult {
  Vec3<T> v1, v2;
};

namespace detail {

template <class T>
T lambert_y(const T& z, const T& r1, const T& r2, const T& A) {
  using std::sqrt;
  const auto [C, S] = stumpff(z);
  return r1 + r2 + A * (z * S - 1.0) / sqrt(C);
}

/// Time-of-flight residual sqrt(mu) dt(z) - sqrt(mu) dt and its z-derivative.
template <class T>
std::pair<T, T> lambert_residual(const T& z, const T& r1, const T& r2, const T& A, double mu, double dt) {
  using std::pow;
  using std::sqrt;
  const auto [C, S] = stumpff(z);
  const T y = r1 + r2 + A * (z * S - 1.0) / sqrt(C);
  const T F = pow(y / C, 1.5) * S + A * sqrt(y) - std::sqrt(mu) * dt;
  T dF;
  if (std::abs(cst(z)) > 1e-6) {
    dF = pow(y / C, 1.5) * ((1.0 / (2.0 * z)) * (C - 1.5 * S / C) + 0.75 * S * S / C) +
         (A / 8.0) * (3.0 * S / C * sqrt(y) + A * sqrt(C / y));
  } else {
    dF = (std::sqrt(2.0) / 40.0) * pow(y, 1.5) + (A / 8.0) * (sqrt(y) + A * sqrt(1.0 / (2.0 * y)));
  }
  return {F, dF};
}

}  // namespace detail

template <class T>
LambertResult<T> lambert(const Vec3<T>& r1v, const Vec3<T>& r2v, double dt, double mu = kMuEarth, bool prograde = true) {
  using std::sqrt;
  if (!(dt > 0.0)) throw std::invalid_argument("lambert: non-positive time of flight");
  const T r1 = norm(r1v), r2 = norm(r2v);
  const double c1[3] = {cst(r1v[0]), cst(r1v[1]), cst(r1v[2])};
  const double c2[3] = {cst(r2v[0]), cst(r2v[1]), cst(r2v[2])};
  const double cz = c1[0] * c2[1] - c1[1] * c2[0];
  const double cosd = (c1[0] * c2[0] + c1[1] * c2[1] + c1[2] * c2[2]) / (cst(r1) * cst(r2));
  const double dtheta0 = std::acos(std::clamp(cosd, -1.0, 1.0));
  if (dtheta0 < 1e-6 || kPi - dtheta0 < 1e-6) throw std::domain_error("lambert: near-collinear geometry");
  const bool long_way = prograde ? cz < 0.0 : cz >= 0.0;
  // A = sin(dtheta) sqrt(r1 r2 / (1 - cos dtheta)) = +-sqrt(r1 r2 + r1.r2)
  // Near dtheta = pi the cross-product form avoids cancellation.
  const Vec3<T> cr = cross(r1v, r2v);
  const T a2 = cosd >= 0.0 ? r1 * r2 + dot(r1v, r2v) : dot(cr, cr) / (r1 * r2 - dot(r1v, r2v));
  const T A = (long_way ? -1.0 : 1.0) * sqrt(a2);
  const double Ac = cst(A), r1c = cst(r1), r2c = cst(r2);

  auto Fd = [&](double z) -> double {
    const double y = detail::lambert_y(z, r1c, r2c, Ac);
    if (y <= 0.0) return -1e300;
    return detail::lambert_residual(z, r1c, r2c, Ac, mu, dt).first;
  };
  // Bracket within the single-revolution range, then bisect and polish.
  double lo = -4.0 * kPi * kPi, hi = (kTwoPi - 1e-3) * (kTwoPi - 1e-3);
  while (Fd(lo) > 0.0) {
    lo *= 2.0;
    if (lo < -1e6) throw std::runtime_error("lambert: cannot bracket solution");
  }
  if (Fd(hi) < 0.0) throw std::runtime_error("lambert: no single-revolution solution");
  double z = 0.5 * (lo + hi);
  for (int it = 0; it < 200 && hi - lo > 1e-13 * std::max(1.0, std::abs(z)); ++it) {
    z = 0.5 * (lo + hi);
    (Fd(z) > 0.0 ? hi : lo) = z;
  }
  for (int it = 0; it < 20; ++it) {
    auto [F, dF] = detail::lambert_residual(z, r1c, r2c, Ac, mu, dt);
    const double step = F / dF;
    z -= step;
    if (std::abs(step) < 1e-15 * std::max(1.0, std::abs(z))) break;
  }
  if (!std::isfinite(z)) throw std::runtime_error("lambert: non-convergence");
  T zt = constant_like(r1, z);
  for (int k = 0; k < refine_sweeps(r1); ++k) {
    auto [F, dF] = detail::lambert_residual(zt, r1, r2, A, mu, dt);
    zt = zt - F / dF;
  }
  const T y = detail::lambert_y(zt, r1, r2, A);
  const T f = 1.0 - y / r1;
  const T g = A * sqrt(y / mu);
  const T gdot = 1.0 - y / r2;
  LambertResult<T> out;
  out.v1 = scale(sub(r2v, scale(r1v, f)), 1.0 / g);
  out.v2 = scale(sub(scale(r2v, gdot), r1v), 1.0 / g);
  return out;
}

}  // namespace robod::astro
