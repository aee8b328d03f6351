/**
 * @file forces.hpp
 * @brief High-fidelity force model: two-body, zonal J2..J4, analytic Sun and
 *        Moon point masses, exponential-atmosphere drag and cannonball SRP
 *        with a smoothed cylindrical shadow. Units km, s.
 */
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

#include "robod/astro/constants.hpp"
#include "robod/astro/time.hpp"
#include "robod/da/taylor_poly.hpp"
#include "robod/linalg.hpp"

namespace robod::dyn {

struct ForceConfig {
  int zonal_degree = 4;  ///< 0, 2, 3 or 4
  bool sun_moon = true;
  bool drag = true;
  bool srp = true;
  double area_to_mass = 0.01;  ///< m^2/kg
  double cd = 2.2;
  double cr = 1.3;
  double mu = astro::kMuEarth;

  void validate() const {
    if (zonal_degree != 0 && (zonal_degree < 2 || zonal_degree > 4)) {
      throw std::invalid_argument("ForceConfig: zonal_degree must be 0, 2, 3 or 4");
    }
    if (!(area_to_mass >= 0.0) || !std::isfinite(area_to_mass)) throw std::invalid_argument("ForceConfig: bad area_to_mass");
    if (!std::isfinite(cd) || !std::isfinite(cr) || !(mu > 0.0)) throw std::invalid_argument("ForceConfig: bad coefficient");
  }

  static ForceConfig two_body() { return {0, false, false, false}; }
};

/// Low-precision geocentric Sun position (km, mean equator and equinox).
inline Vec3<double> sun_position(astro::Epoch t) {
  using astro::kDeg;
  const double T = t / (36525.0 * 86400.0);
  const double M = (357.5256 + 35999.049 * T) * kDeg;
  const double lon = (282.9400 * 3600.0 + 6892.0 * std::sin(M) + 72.0 * std::sin(2 * M)) * astro::kArcsec + M;
  const double r = (149.619 - 2.499 * std::cos(M) - 0.021 * std::cos(2 * M)) * 1e6;
  const double eps = 23.43929111 * kDeg;
  return {r * std::cos(lon), r * std::sin(lon) * std::cos(eps), r * std::sin(lon) * std::sin(eps)};
}

/// Low-precision geocentric Moon position (km, mean equator and equinox).
inline Vec3<double> moon_position(astro::Epoch t) {
  using astro::kArcsec;
  using astro::kDeg;
  const double T = t / (36525.0 * 86400.0);
  const double L0 = (218.31617 + 481267.88088 * T - 1.3972 * T) * kDeg;
  const double l = (134.96292 + 477198.86753 * T) * kDeg;
  const double lp = (357.52543 + 35999.04944 * T) * kDeg;
  const double F = (93.27283 + 483202.01873 * T) * kDeg;
  const double D = (297.85027 + 445267.11135 * T) * kDeg;
  const double dlon = 22640 * std::sin(l) + 769 * std::sin(2 * l) - 4586 * std::sin(l - 2 * D) +
                      2370 * std::sin(2 * D) - 668 * std::sin(lp) - 412 * std::sin(2 * F) -
                      212 * std::sin(2 * l - 2 * D) - 206 * std::sin(l + lp - 2 * D) + 192 * std::sin(l + 2 * D) -
                      165 * std::sin(lp - 2 * D) + 148 * std::sin(l - lp) - 125 * std::sin(D) -
                      110 * std::sin(l + lp) - 55 * std::sin(2 * F - 2 * D);
  const double lon = L0 + dlon * kArcsec;
  const double lat = (18520 * std::sin(F + lon - L0 + (412 * std::sin(2 * F) + 541 * std::sin(lp)) * kArcsec) -
                      526 * std::sin(F - 2 * D) + 44 * std::sin(l + F - 2 * D) - 31 * std::sin(-l + F - 2 * D) -
                      25 * std::sin(-2 * l + F) - 23 * std::sin(lp + F - 2 * D) + 21 * std::sin(-l + F) +
                      11 * std::sin(-lp + F - 2 * D)) *
                     kArcsec;
  const double r = 385000 - 20905 * std::cos(l) - 3699 * std::cos(2 * D - l) - 2956 * std::cos(2 * D) -
                   570 * std::cos(2 * l) + 246 * std::cos(2 * l - 2 * D) - 205 * std::cos(lp - 2 * D) -
                   171 * std::cos(l + 2 * D) - 152 * std::cos(l + lp - 2 * D);
  const double eps = 23.43929111 * kDeg;
  const double xe = r * std::cos(lon) * std::cos(lat), ye = r * std::sin(lon) * std::cos(lat), ze = r * std::sin(lat);
  return {xe, ye * std::cos(eps) - ze * std::sin(eps), ye * std::sin(eps) + ze * std::cos(eps)};
}

namespace detail {

struct AtmosphereBand {
  double h0, rho0, H;  // km, kg/m^3, km
};

// Exponential atmosphere reference values by base altitude.
inline constexpr std::array<AtmosphereBand, 28> kAtmosphere{{
    {0, 1.225, 7.249},         {25, 3.899e-2, 6.349},     {30, 1.774e-2, 6.682},     {40, 3.972e-3, 7.554},
    {50, 1.057e-3, 8.382},     {60, 3.206e-4, 7.714},     {70, 8.770e-5, 6.549},     {80, 1.905e-5, 5.799},
    {90, 3.396e-6, 5.382},     {100, 5.297e-7, 5.877},    {110, 9.661e-8, 7.263},    {120, 2.438e-8, 9.473},
    {130, 8.484e-9, 12.636},   {140, 3.845e-9, 16.149},   {150, 2.070e-9, 22.523},   {180, 5.464e-10, 29.740},
    {200, 2.789e-10, 37.105},  {250, 7.248e-11, 45.546},  {300, 2.418e-11, 53.628},  {350, 9.518e-12, 53.298},
    {400, 3.725e-12, 58.515},  {450, 1.585e-12, 60.828},  {500, 6.967e-13, 63.822},  {600, 1.454e-13, 71.835},
    {700, 3.614e-14, 88.667},  {800, 1.170e-14, 124.64},  {900, 5.245e-15, 181.05},  {1000, 3.019e-15, 268.00},
}};

}  // namespace detail

namespace detail {

/// Natural cubic spline through ln(rho) at the tabulated base altitudes. A
/// twice-differentiable density keeps the integrator's error estimate honest
/// across band boundaries.
struct LogDensitySpline {
  static constexpr std::size_t N = kAtmosphere.size();
  std::array<double, N> x{}, y{}, m{};

  LogDensitySpline() {
    for (std::size_t i = 0; i < N; ++i) {
      x[i] = kAtmosphere[i].h0;
      y[i] = std::log(kAtmosphere[i].rho0);
    }
    // Tridiagonal solve for the second derivatives, m[0] = m[N-1] = 0.
    std::array<double, N> c{}, d{};
    for (std::size_t i = 1; i + 1 < N; ++i) {
      const double h0 = x[i] - x[i - 1], h1 = x[i + 1] - x[i];
      const double a = h0 / 6.0, b = (h0 + h1) / 3.0, cc = h1 / 6.0;
      const double r = (y[i + 1] - y[i]) / h1 - (y[i] - y[i - 1]) / h0;
      const double den = b - a * c[i - 1];
      c[i] = cc / den;
      d[i] = (r - a * d[i - 1]) / den;
    }
    for (std::size_t i = N - 2; i >= 1; --i) m[i] = d[i] - c[i] * m[i + 1];
  }

  [[nodiscard]] double end_slope() const {
    const double h = x[N - 1] - x[N - 2];
    return (y[N - 1] - y[N - 2]) / h + h * (m[N - 2] + 2.0 * m[N - 1]) / 6.0;
  }
};

inline const LogDensitySpline& log_density_spline() {
  static const LogDensitySpline s;
  return s;
}

}  // namespace detail

/// Atmospheric density in kg/m^3 at altitude h (km) above the equatorial
/// radius. Interval chosen from the constant part; above the last base
/// altitude ln(rho) continues linearly.
template <class T>
T density(const T& h) {
  using std::exp;
  const auto& sp = detail::log_density_spline();
  constexpr std::size_t N = detail::LogDensitySpline::N;
  const double h0 = cst(h);
  if (h0 >= sp.x[N - 1]) return exp(sp.y[N - 1] + sp.end_slope() * (h - sp.x[N - 1]));
  std::size_t i = 0;
  while (i + 2 < N && h0 >= sp.x[i + 1]) ++i;
  const double w = sp.x[i + 1] - sp.x[i];
  const T A = (sp.x[i + 1] - h) / w;
  const T B = 1.0 - A;
  const T lr = A * sp.y[i] + B * sp.y[i + 1] + ((A * A * A - A) * sp.m[i] + (B * B * B - B) * sp.m[i + 1]) * (w * w / 6.0);
  return exp(lr);
}

/// Zonal J2..J4 acceleration.
template <class T>
Vec3<T> zonal_acceleration(const Vec3<T>& r, int degree, double mu = astro::kMuEarth) {
  using astro::kEarthRadius;
  using std::sqrt;
  Vec3<T> a{constant_like(r[0], 0.0), constant_like(r[0], 0.0), constant_like(r[0], 0.0)};
  if (degree < 2) return a;
  const T r2 = dot(r, r);
  const T rn = sqrt(r2);
  const T ir2 = 1.0 / r2;
  const T z = r[2];
  const T u2 = z * z * ir2;
  const T ir5 = ir2 * ir2 / rn;
  {
    const T c = (-1.5 * astro::kJ2 * mu * kEarthRadius * kEarthRadius) * ir5;
    const T axy = c * (1.0 - 5.0 * u2);
    a[0] += axy * r[0];
    a[1] += axy * r[1];
    a[2] += c * z * (3.0 - 5.0 * u2);
  }
  if (degree >= 3) {
    const T c = (-2.5 * astro::kJ3 * mu * std::pow(kEarthRadius, 3)) * ir5 * ir2;
    const T axy = c * (3.0 * z - 7.0 * z * u2);
    a[0] += axy * r[0];
    a[1] += axy * r[1];
    a[2] += c * (6.0 * z * z - 7.0 * z * z * u2 - 0.6 * r2);
  }
  if (degree >= 4) {
    const T c = (1.875 * astro::kJ4 * mu * std::pow(kEarthRadius, 4)) * ir5 * ir2;
    const T axy = c * (1.0 - 14.0 * u2 + 21.0 * u2 * u2);
    a[0] += axy * r[0];
    a[1] += axy * r[1];
    a[2] += c * z * (5.0 - (70.0 / 3.0) * u2 + 21.0 * u2 * u2);
  }
  return a;
}

/// Point-mass third-body perturbation for a body at s.
template <class T>
Vec3<T> third_body_acceleration(const Vec3<T>& r, const Vec3<double>& s, double mu_b) {
  const Vec3<T> d{s[0] - r[0], s[1] - r[1], s[2] - r[2]};
  const T dn = norm(d);
  const T id3 = 1.0 / (dn * dn * dn);
  const double sn = std::sqrt(s[0] * s[0] + s[1] * s[1] + s[2] * s[2]);
  const double is3 = 1.0 / (sn * sn * sn);
  return {mu_b * (d[0] * id3 - s[0] * is3), mu_b * (d[1] * id3 - s[1] * is3), mu_b * (d[2] * id3 - s[2] * is3)};
}

/// True when the point is inside the cylindrical Earth shadow.
inline bool in_shadow(const Vec3<double>& r, const Vec3<double>& sun) {
  const double sn = norm(sun);
  const Vec3<double> u = scale(sun, 1.0 / sn);
  const double proj = dot(r, u);
  if (proj >= 0.0) return false;
  return norm(sub(r, scale(u, proj))) < astro::kEarthRadius;
}

/// Illuminated fraction for the cylindrical shadow, with the edge smoothed
/// by a logistic ramp whose width grows like a penumbra (Sun angular radius
/// times the distance behind the terminator plane, at least 1 km).
template <class T>
T sunlit_fraction(const Vec3<T>& r, const Vec3<double>& sun) {
  using std::exp;
  using std::sqrt;
  const double sn = norm(sun);
  const Vec3<double> u = scale(sun, 1.0 / sn);
  const T proj = r[0] * u[0] + r[1] * u[1] + r[2] * u[2];
  if (cst(proj) >= 0.0) return constant_like(proj, 1.0);
  const T perp2 = dot(r, r) - proj * proj;
  const double width = std::max(1.0, -cst(proj) * 4.65e-3);
  const T s = (sqrt(perp2) - astro::kEarthRadius) / width;
  const double s0 = cst(s);
  if (s0 > 40.0) return constant_like(proj, 1.0);
  if (s0 < -40.0) return constant_like(proj, 0.0);
  return 1.0 / (1.0 + exp(-2.0 * s));
}

/// State derivative (v, a) at epoch t.
template <class T>
State6<T> hf_derivative(const State6<T>& x, astro::Epoch t, const ForceConfig& cfg) {
  using std::sqrt;
  const Vec3<T> r = position(x), v = velocity(x);
  const T r2 = dot(r, r);
  const T rn = sqrt(r2);
  if (!(cst(rn) > astro::kEarthRadius)) throw std::domain_error("hf_derivative: subterranean radius");
  const T c0 = -cfg.mu / (r2 * rn);
  Vec3<T> a = scale(r, c0);
  if (cfg.zonal_degree >= 2) a = add(a, zonal_acceleration(r, cfg.zonal_degree, cfg.mu));
  Vec3<double> sun{};
  const bool need_sun = cfg.sun_moon || (cfg.srp && cfg.area_to_mass > 0.0);
  if (need_sun) sun = sun_position(t);
  if (cfg.sun_moon) {
    a = add(a, third_body_acceleration(r, sun, astro::kMuSun));
    a = add(a, third_body_acceleration(r, moon_position(t), astro::kMuMoon));
  }
  if (cfg.drag && cfg.area_to_mass > 0.0) {
    const double w = astro::kEarthRotation;
    const Vec3<T> vrel{v[0] + w * r[1], v[1] - w * r[0], v[2]};
    const T vn = norm(vrel);
    const T rho = density(rn - astro::kEarthRadius);
    // rho [kg/m^3] * (A/m) [m^2/kg] * v^2 [km^2/s^2] -> 1e3 km/s^2 per unit
    const T c = (-0.5e3 * cfg.cd * cfg.area_to_mass) * rho * vn;
    a = add(a, scale(vrel, c));
  }
  if (cfg.srp && cfg.area_to_mass > 0.0) {
    const T lit = sunlit_fraction(r, sun);
    if (cst(lit) > 0.0) {
      const Vec3<T> d{r[0] - sun[0], r[1] - sun[1], r[2] - sun[2]};
      const T dn = norm(d);
      // N/m^2 * m^2/kg = m/s^2 -> 1e-3 km/s^2
      const T c = (1e-3 * astro::kSolarPressure * cfg.cr * cfg.area_to_mass * astro::kAU * astro::kAU) * lit /
                  (dn * dn * dn);
      a = add(a, scale(d, c));
    }
  }
  return join(v, a);
}

}  // namespace robod::dyn
