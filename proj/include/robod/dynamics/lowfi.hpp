/**
 * @file lowfi.hpp
 * @brief Low-fidelity analytic propagator: two-body mean motion plus
 *        first-order J2 secular drift of node, perigee and mean anomaly.
 *
 * The secular rates are the Keplerian ones. They are applied directly to the
 * alternate equinoctial set as rotations of (f, g) by the perigee-longitude
 * drift and of (h, k) by the node drift, which is the same map without the
 * atan2 branch points of a round trip through Keplerian angles.
 */
#pragma once

#include <cmath>
#include <stdexcept>

#include "robod/astro/constants.hpp"
#include "robod/astro/elements.hpp"

namespace robod::dyn {

struct SecularRates {
  double raan, argp, mean_anomaly;  ///< rad/s, J2 part only
};

/// J2 secular rates for a real element set.
inline SecularRates j2_secular_rates(double a, double e, double i, double j2 = astro::kJ2,
                                     double mu = astro::kMuEarth) {
  const double n = std::sqrt(mu / (a * a * a));
  const double p = a * (1.0 - e * e);
  const double k = j2 * n * std::pow(astro::kEarthRadius / p, 2);
  const double c = std::cos(i);
  return {-1.5 * k * c, 0.75 * k * (5.0 * c * c - 1.0), 0.75 * k * (3.0 * c * c - 1.0) * std::sqrt(1.0 - e * e)};
}

template <class T>
astro::AltEquinoctial<T> lf_propagate(const astro::AltEquinoctial<T>& s, double t0, double t1,
                                      double j2 = astro::kJ2, double mu = astro::kMuEarth) {
  using std::cos;
  using std::pow;
  using std::sin;
  using std::sqrt;
  const double dt = t1 - t0;
  if (dt == 0.0) return s;
  if (!(cst(s.n) > 0.0)) throw std::domain_error("lf_propagate: non-positive mean motion");
  const T e2 = s.f * s.f + s.g * s.g;
  if (!(cst(e2) < 1.0)) throw std::domain_error("lf_propagate: non-elliptic state");
  astro::AltEquinoctial<T> out = s;
  if (j2 == 0.0) {
    out.lambda = s.lambda + s.n * dt;
    return out;
  }
  const T a = pow(mu / (s.n * s.n), 1.0 / 3.0);
  const T p = a * (1.0 - e2);
  const T tau2 = s.h * s.h + s.k * s.k;
  const T ci = (1.0 - tau2) / (1.0 + tau2);
  const T kk = j2 * s.n * (astro::kEarthRadius * astro::kEarthRadius) / (p * p);
  const T draan = -1.5 * kk * ci;
  const T dargp = 0.75 * kk * (5.0 * ci * ci - 1.0);
  const T dmean = 0.75 * kk * (3.0 * ci * ci - 1.0) * sqrt(1.0 - e2);
  const T dvarpi = (draan + dargp) * dt;
  const T dnode = draan * dt;
  const T cw = cos(dvarpi), sw = sin(dvarpi), cn = cos(dnode), sn = sin(dnode);
  out.f = s.f * cw - s.g * sw;
  out.g = s.f * sw + s.g * cw;
  out.h = s.h * cn - s.k * sn;
  out.k = s.h * sn + s.k * cn;
  out.lambda = s.lambda + (s.n + dmean + dargp + draan) * dt;
  return out;
}

}  // namespace robod::dyn
