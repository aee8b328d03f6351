/**
 * @file frames.hpp
 * @brief Earth rotation (GMST) and ground-site positions in the inertial
 *        frame.
 */
#pragma once

#include <cmath>
#include <string>

#include "robod/astro/constants.hpp"
#include "robod/astro/elements.hpp"
#include "robod/astro/time.hpp"
#include "robod/linalg.hpp"

namespace robod::astro {

struct Site {
  std::string id;
  double lat = 0.0;  // geodetic, rad
  double lon = 0.0;  // rad
  double height = 0.0;  // km
};

/// IAU-1982 GMST, UT1 taken equal to the epoch's time scale. Radians in [0, 2pi).
inline double gmst(Epoch t) {
  const double T = t / (86400.0 * 36525.0);
  double sec = 67310.54841 + (876600.0 * 3600.0 + 8640184.812866) * T + 0.093104 * T * T - 6.2e-6 * T * T * T;
  sec = std::fmod(sec, 86400.0);
  if (sec < 0) sec += 86400.0;
  return sec * (kTwoPi / 86400.0);
}

inline Vec3<double> site_ecef(const Site& s) {
  const double e2 = kFlattening * (2.0 - kFlattening);
  const double sl = std::sin(s.lat), cl = std::cos(s.lat);
  const double N = kEarthRadius / std::sqrt(1.0 - e2 * sl * sl);
  return {(N + s.height) * cl * std::cos(s.lon), (N + s.height) * cl * std::sin(s.lon), (N * (1.0 - e2) + s.height) * sl};
}

struct SiteState {
  Vec3<double> r;
  Vec3<double> v;
};

inline SiteState site_inertial(const Site& s, Epoch t) {
  const auto e = site_ecef(s);
  const double th = gmst(t), c = std::cos(th), sn = std::sin(th);
  const Vec3<double> r{c * e[0] - sn * e[1], sn * e[0] + c * e[1], e[2]};
  const Vec3<double> w{0.0, 0.0, kEarthRotation};
  return {r, cross(w, r)};
}

/// Local zenith (geodetic normal) in the inertial frame.
inline Vec3<double> site_zenith(const Site& s, Epoch t) {
  const double th = gmst(t) + s.lon;
  return {std::cos(s.lat) * std::cos(th), std::cos(s.lat) * std::sin(th), std::sin(s.lat)};
}

}  // namespace robod::astro
