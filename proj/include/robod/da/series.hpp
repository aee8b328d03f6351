/**
 * @file series.hpp
 * @brief Univariate truncated power series in a single deviation t.
 *
 * Used to build the expansion coefficients f(a0 + t) = sum c_k t^k of an
 * elementary function around a polynomial's constant part.
 */
#pragma once

#include <array>
#include <cmath>
#include <stdexcept>

#include "robod/da/algebra.hpp"

namespace robod::da::detail {

struct Series {
  std::array<double, kMaxOrder + 1> c{};
  int n = 0;

  explicit Series(int order) : n(order) {}

  static Series constant(int order, double a) {
    Series s(order);
    s.c[0] = a;
    return s;
  }
  /// a0 + t
  static Series shift(int order, double a0) {
    Series s(order);
    s.c[0] = a0;
    if (order >= 1) s.c[1] = 1.0;
    return s;
  }
};

inline Series operator+(Series a, const Series& b) {
  for (int k = 0; k <= a.n; ++k) a.c[k] += b.c[k];
  return a;
}
inline Series operator-(Series a, const Series& b) {
  for (int k = 0; k <= a.n; ++k) a.c[k] -= b.c[k];
  return a;
}
inline Series operator*(Series a, double s) {
  for (int k = 0; k <= a.n; ++k) a.c[k] *= s;
  return a;
}
inline Series operator*(const Series& a, const Series& b) {
  Series r(a.n);
  for (int i = 0; i <= a.n; ++i) {
    for (int j = 0; i + j <= a.n; ++j) r.c[i + j] += a.c[i] * b.c[j];
  }
  return r;
}

inline Series reciprocal(const Series& a) {
  if (a.c[0] == 0.0) throw std::domain_error("series reciprocal of zero constant part");
  Series r(a.n);
  r.c[0] = 1.0 / a.c[0];
  for (int k = 1; k <= a.n; ++k) {
    double s = 0.0;
    for (int j = 1; j <= k; ++j) s += a.c[j] * r.c[k - j];
    r.c[k] = -s / a.c[0];
  }
  return r;
}

inline Series operator/(const Series& a, const Series& b) { return a * reciprocal(b); }

/// (u)^alpha for u0 > 0 via the binomial series of (1 + w)^alpha.
inline Series pow(const Series& u, double alpha) {
  if (!(u.c[0] > 0.0)) throw std::domain_error("series pow requires positive constant part");
  Series w = u * (1.0 / u.c[0]);
  w.c[0] = 0.0;
  Series r(u.n);
  // Horner on binomial coefficients.
  std::array<double, kMaxOrder + 1> binom{};
  binom[0] = 1.0;
  for (int k = 1; k <= u.n; ++k) binom[k] = binom[k - 1] * (alpha - (k - 1)) / k;
  r.c[0] = binom[u.n];
  for (int k = u.n - 1; k >= 0; --k) {
    r = r * w;
    r.c[0] += binom[k];
  }
  return r * std::pow(u.c[0], alpha);
}

inline Series integrate(const Series& a, double constant) {
  Series r(a.n);
  r.c[0] = constant;
  for (int k = 1; k <= a.n; ++k) r.c[k] = a.c[k - 1] / k;
  return r;
}

inline Series exp_at(int n, double a0) {
  Series s(n);
  double f = std::exp(a0);
  for (int k = 0; k <= n; ++k) {
    s.c[k] = f;
    f /= (k + 1);
  }
  return s;
}

inline Series log_at(int n, double a0) {
  if (!(a0 > 0.0)) throw std::domain_error("log of non-positive constant part");
  Series s(n);
  s.c[0] = std::log(a0);
  double p = 1.0;
  for (int k = 1; k <= n; ++k) {
    p /= a0;
    s.c[k] = ((k % 2) ? 1.0 : -1.0) * p / k;
  }
  return s;
}

inline Series sin_at(int n, double a0) {
  Series s(n);
  const double sa = std::sin(a0), ca = std::cos(a0);
  double fact = 1.0;
  for (int k = 0; k <= n; ++k) {
    if (k > 0) fact *= k;
    double d = 0.0;
    switch (k % 4) {
      case 0: d = sa; break;
      case 1: d = ca; break;
      case 2: d = -sa; break;
      case 3: d = -ca; break;
    }
    s.c[k] = d / fact;
  }
  return s;
}

inline Series cos_at(int n, double a0) {
  Series s(n);
  const double sa = std::sin(a0), ca = std::cos(a0);
  double fact = 1.0;
  for (int k = 0; k <= n; ++k) {
    if (k > 0) fact *= k;
    double d = 0.0;
    switch (k % 4) {
      case 0: d = ca; break;
      case 1: d = -sa; break;
      case 2: d = -ca; break;
      case 3: d = sa; break;
    }
    s.c[k] = d / fact;
  }
  return s;
}

inline Series sinh_at(int n, double a0) {
  Series s(n);
  const double sh = std::sinh(a0), ch = std::cosh(a0);
  double fact = 1.0;
  for (int k = 0; k <= n; ++k) {
    if (k > 0) fact *= k;
    s.c[k] = ((k % 2) ? ch : sh) / fact;
  }
  return s;
}

inline Series cosh_at(int n, double a0) {
  Series s(n);
  const double sh = std::sinh(a0), ch = std::cosh(a0);
  double fact = 1.0;
  for (int k = 0; k <= n; ++k) {
    if (k > 0) fact *= k;
    s.c[k] = ((k % 2) ? sh : ch) / fact;
  }
  return s;
}

inline Series tan_at(int n, double a0) {
  if (std::cos(a0) == 0.0) throw std::domain_error("tan at odd multiple of pi/2");
  return sin_at(n, a0) / cos_at(n, a0);
}

inline Series atan_at(int n, double a0) {
  const Series x = Series::shift(n, a0);
  return integrate(reciprocal(Series::constant(n, 1.0) + x * x), std::atan(a0));
}

inline Series asin_at(int n, double a0) {
  if (!(std::abs(a0) < 1.0)) throw std::domain_error("asin requires |constant part| < 1");
  const Series x = Series::shift(n, a0);
  return integrate(pow(Series::constant(n, 1.0) - x * x, -0.5), std::asin(a0));
}

inline Series acos_at(int n, double a0) {
  if (!(std::abs(a0) < 1.0)) throw std::domain_error("acos requires |constant part| < 1");
  const Series x = Series::shift(n, a0);
  return integrate(pow(Series::constant(n, 1.0) - x * x, -0.5) * -1.0, std::acos(a0));
}

inline Series pow_at(int n, double a0, double alpha) { return pow(Series::shift(n, a0), alpha); }

}  // namespace robod::da::detail
