/**
 * @file elements.hpp
 * @brief Keplerian, alternate equinoctial and Cartesian states and the
 *        conversions between them, over reals or Taylor polynomials.
 *
 * Alternate equinoctial elements (n, f, g, h, k, lambda):
 *   f = e cos(w + W), g = e sin(w + W), h = tan(i/2) cos W,
 *   k = tan(i/2) sin W, lambda = W + w + M, n = sqrt(mu / a^3).
 */
#pragma once

#include <cmath>
#include <stdexcept>

#include "robod/astro/constants.hpp"
#include "robod/da/taylor_poly.hpp"
#include "robod/linalg.hpp"

namespace robod::astro {

template <class T>
struct Keplerian {
  T a, e, i, raan, argp, M;
};

template <class T>
struct AltEquinoctial {
  T n, f, g, h, k, lambda;
};

template <class T>
State6<T> to_array(const AltEquinoctial<T>& s) {
  return {s.n, s.f, s.g, s.h, s.k, s.lambda};
}
template <class T>
AltEquinoctial<T> altequi_from_array(const State6<T>& x) {
  return {x[0], x[1], x[2], x[3], x[4], x[5]};
}
template <class T>
State6<T> to_array(const Keplerian<T>& s) {
  return {s.a, s.e, s.i, s.raan, s.argp, s.M};
}

/// Wraps to (-pi, pi] based on the constant part.
inline double wrap_pi(double x) {
  double y = std::fmod(x + kPi, kTwoPi);
  if (y <= 0.0) y += kTwoPi;
  return y - kPi;
}
template <class T>
T wrap_angle(const T& x) {
  const double c = cst(x);
  return x + (wrap_pi(c) - c);
}

/// Adds the multiple of 2 pi that brings x closest to ref.
template <class T>
T unwrap_toward(const T& x, double ref) {
  return x + kTwoPi * std::round((ref - cst(x)) / kTwoPi);
}

/// Eccentric anomaly from M; Newton over the scalar type, |dE| < 1e-12.
template <class T>
T solve_kepler(const T& M, const T& e) {
  using std::cos;
  using std::sin;
  const double e0 = cst(e), m0 = cst(M);
  const double mw = wrap_pi(m0);
  double E0 = e0 < 0.8 ? mw : (mw >= 0.0 ? kPi : -kPi);
  for (int it = 0;; ++it) {
    if (it >= 50) throw std::runtime_error("kepler: Newton did not converge");
    const double d = (E0 - e0 * std::sin(E0) - mw) / (1.0 - e0 * std::cos(E0));
    E0 -= d;
    if (std::abs(d) < 1e-12) break;
  }
  E0 += m0 - mw;
  T E = constant_like(M, E0);
  for (int k = 0; k < refine_sweeps(M) + 1; ++k) E = E - (E - e * sin(E) - M) / (1.0 - e * cos(E));
  return E;
}

template <class T>
State6<T> kep_to_cart(const Keplerian<T>& k, double mu = kMuEarth) {
  using std::cos;
  using std::sin;
  using std::sqrt;
  if (!(cst(k.e) < 1.0) || !(cst(k.e) >= 0.0)) throw std::domain_error("kep_to_cart: only elliptic orbits supported");
  if (!(cst(k.a) > 0.0)) throw std::domain_error("kep_to_cart: non-positive semi-major axis");
  const T E = solve_kepler(k.M, k.e);
  const T cE = cos(E), sE = sin(E);
  const T b = sqrt(1.0 - k.e * k.e);
  const T xp = k.a * (cE - k.e);
  const T yp = k.a * b * sE;
  const T r = k.a * (1.0 - k.e * cE);
  const T nn = sqrt(mu / (k.a * k.a * k.a));
  const T vxp = -k.a * nn * sE * k.a / r;
  const T vyp = k.a * nn * b * cE * k.a / r;
  const T cO = cos(k.raan), sO = sin(k.raan), cw = cos(k.argp), sw = sin(k.argp), ci = cos(k.i), si = sin(k.i);
  const T P0 = cO * cw - sO * sw * ci, P1 = sO * cw + cO * sw * ci, P2 = sw * si;
  const T Q0 = -cO * sw - sO * cw * ci, Q1 = -sO * sw + cO * cw * ci, Q2 = cw * si;
  return {xp * P0 + yp * Q0, xp * P1 + yp * Q1, xp * P2 + yp * Q2,
          vxp * P0 + vyp * Q0, vxp * P1 + vyp * Q1, vxp * P2 + vyp * Q2};
}

template <class T>
AltEquinoctial<T> kep_to_altequi(const Keplerian<T>& k, double mu = kMuEarth) {
  using std::cos;
  using std::sin;
  using std::sqrt;
  using std::tan;
  if (!(cst(k.i) < kPi - 1e-12)) throw std::domain_error("kep_to_altequi: retrograde equatorial singularity");
  const T lp = k.argp + k.raan;
  const T ti = tan(k.i / 2.0);
  return {sqrt(mu / (k.a * k.a * k.a)), k.e * cos(lp), k.e * sin(lp), ti * cos(k.raan), ti * sin(k.raan),
          k.raan + k.argp + k.M};
}

template <class T>
Keplerian<T> altequi_to_kep(const AltEquinoctial<T>& s, double mu = kMuEarth) {
  using std::atan;
  using std::atan2;
  using std::pow;
  using std::sqrt;
  const T a = pow(mu / (s.n * s.n), 1.0 / 3.0);
  const T e = sqrt(s.f * s.f + s.g * s.g);
  const T tani = sqrt(s.h * s.h + s.k * s.k);
  const T i = 2.0 * atan(tani);
  const T raan = atan2(s.k, s.h);
  const T lp = atan2(s.g, s.f);
  const T argp = wrap_angle(lp - raan);
  const T M = wrap_angle(s.lambda - lp);
  return {a, e, i, raan, argp, M};
}

/// Direct nonsingular conversion; lambda returned in (-pi, pi].
template <class T>
AltEquinoctial<T> cart_to_altequi(const State6<T>& x, double mu = kMuEarth) {
  using std::atan2;
  using std::sqrt;
  const Vec3<T> r = position(x), v = velocity(x);
  const T rn = norm(r);
  if (!(cst(rn) > 0.0)) throw std::domain_error("cart_to_altequi: zero radius");
  const T v2 = dot(v, v);
  const T inv_a = 2.0 / rn - v2 / mu;
  if (!(cst(inv_a) > 0.0)) throw std::domain_error("cart_to_altequi: non-elliptic state");
  const T a = 1.0 / inv_a;
  const Vec3<T> hv = cross(r, v);
  const T hn = norm(hv);
  const Vec3<T> w = scale(hv, 1.0 / hn);
  if (!(cst(w[2]) > -1.0 + 1e-12)) throw std::domain_error("cart_to_altequi: retrograde equatorial singularity");
  const T p = w[0] / (1.0 + w[2]);
  const T q = -w[1] / (1.0 + w[2]);
  const T den = 1.0 + p * p + q * q;
  const Vec3<T> fh{(1.0 - p * p + q * q) / den, 2.0 * p * q / den, -2.0 * p / den};
  const Vec3<T> gh{2.0 * p * q / den, (1.0 + p * p - q * q) / den, 2.0 * q / den};
  const Vec3<T> ev = sub(scale(cross(v, hv), 1.0 / mu), scale(r, 1.0 / rn));
  const T f = dot(ev, fh), g = dot(ev, gh);
  const T X1 = dot(r, fh), Y1 = dot(r, gh);
  const T s = sqrt(1.0 - f * f - g * g);
  const T beta = 1.0 / (1.0 + s);
  const T cF = f + ((1.0 - f * f * beta) * X1 - f * g * beta * Y1) / (a * s);
  const T sF = g + ((1.0 - g * g * beta) * Y1 - f * g * beta * X1) / (a * s);
  const T F = atan2(sF, cF);
  const T lambda = F + g * cF - f * sF;
  return {sqrt(mu * inv_a * inv_a * inv_a), f, g, q, p, wrap_angle(lambda)};
}

template <class T>
State6<T> altequi_to_cart(const AltEquinoctial<T>& s, double mu = kMuEarth) {
  using std::cos;
  using std::pow;
  using std::sin;
  using std::sqrt;
  if (!(cst(s.n) > 0.0)) throw std::domain_error("altequi_to_cart: non-positive mean motion");
  if (!(cst(s.f) * cst(s.f) + cst(s.g) * cst(s.g) < 1.0)) throw std::domain_error("altequi_to_cart: e >= 1");
  const T a = pow(mu / (s.n * s.n), 1.0 / 3.0);
  // Eccentric longitude from lambda = F - f sin F + g cos F.
  const double f0 = cst(s.f), g0 = cst(s.g), l0 = cst(s.lambda);
  double F0 = l0;
  for (int it = 0;; ++it) {
    if (it >= 50) throw std::runtime_error("altequi_to_cart: Kepler iteration did not converge");
    const double d = (F0 - f0 * std::sin(F0) + g0 * std::cos(F0) - l0) / (1.0 - f0 * std::cos(F0) - g0 * std::sin(F0));
    F0 -= d;
    if (std::abs(d) < 1e-13) break;
  }
  T F = constant_like(s.n, F0);
  for (int k = 0; k < refine_sweeps(s.n) + 1; ++k) {
    F = F - (F - s.f * sin(F) + s.g * cos(F) - s.lambda) / (1.0 - s.f * cos(F) - s.g * sin(F));
  }
  const T cF = cos(F), sF = sin(F);
  const T sq = sqrt(1.0 - s.f * s.f - s.g * s.g);
  const T beta = 1.0 / (1.0 + sq);
  const T fgb = s.f * s.g * beta;
  const T X1 = a * ((1.0 - s.g * s.g * beta) * cF + fgb * sF - s.f);
  const T Y1 = a * ((1.0 - s.f * s.f * beta) * sF + fgb * cF - s.g);
  const T r = a * (1.0 - s.f * cF - s.g * sF);
  const T c = s.n * a * a / r;
  const T Xd = c * (fgb * cF - (1.0 - s.g * s.g * beta) * sF);
  const T Yd = c * ((1.0 - s.f * s.f * beta) * cF - fgb * sF);
  const T p = s.k, q = s.h;
  const T den = 1.0 + p * p + q * q;
  const Vec3<T> fh{(1.0 - p * p + q * q) / den, 2.0 * p * q / den, -2.0 * p / den};
  const Vec3<T> gh{2.0 * p * q / den, (1.0 + p * p - q * q) / den, 2.0 * q / den};
  return join(add(scale(fh, X1), scale(gh, Y1)), add(scale(fh, Xd), scale(gh, Yd)));
}

template <class T>
Keplerian<T> cart_to_kep(const State6<T>& x, double mu = kMuEarth) {
  return altequi_to_kep(cart_to_altequi(x, mu), mu);
}

/// Specific orbital energy.
inline double energy(const State6<double>& x, double mu = kMuEarth) {
  return 0.5 * dot(velocity(x), velocity(x)) - mu / norm(position(x));
}

/// Two-body propagation by mean-anomaly advance.
template <class T>
State6<T> kepler_propagate(const State6<T>& x, double dt, double mu = kMuEarth) {
  if (dt == 0.0) return x;
  auto ae = cart_to_altequi(x, mu);
  ae.lambda = ae.lambda + ae.n * dt;
  return altequi_to_cart(ae, mu);
}

}  // namespace robod::astro
