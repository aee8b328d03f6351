/**
 * @file taylor_poly.hpp
 * @brief Truncated multivariate Taylor polynomial over a fixed AlgebraSpec.
 *
 * Coefficients are stored densely in the layout order of the algebra. All
 * operations return new values; a TaylorPoly is never mutated behind a
 * caller's back, so instances can be shared freely between threads.
 */
#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "robod/da/algebra.hpp"
#include "robod/da/series.hpp"

namespace robod::da {

/// Closed interval [lower, upper].
struct RangeBound {
  double lower = 0.0;
  double upper = 0.0;

  [[nodiscard]] double width() const { return upper - lower; }
  [[nodiscard]] double center() const { return 0.5 * (lower + upper); }
  [[nodiscard]] bool contains(double x, double slack = 0.0) const {
    return x >= lower - slack && x <= upper + slack;
  }
};

class TaylorPoly {
 public:
  TaylorPoly() = default;
  explicit TaylorPoly(AlgebraSpec spec) : spec_(std::move(spec)), c_(spec_.size(), 0.0) {}

  static TaylorPoly constant(const AlgebraSpec& spec, double value) {
    TaylorPoly p(spec);
    p.c_[0] = value;
    return p;
  }

  /// center + scale * dx_index
  static TaylorPoly variable(const AlgebraSpec& spec, int index, double center = 0.0, double scale = 1.0) {
    if (index < 0 || index >= spec.nvars()) {
      throw std::invalid_argument("TaylorPoly::variable: index out of range");
    }
    if (scale < 0.0) throw std::invalid_argument("TaylorPoly::variable: negative scale");
    TaylorPoly p(spec);
    p.c_[0] = center;
    p.c_[static_cast<std::size_t>(1 + index)] = scale;
    p.cleanup();
    return p;
  }

  [[nodiscard]] const AlgebraSpec& spec() const { return spec_; }
  [[nodiscard]] bool valid() const { return spec_.valid(); }
  [[nodiscard]] double cst() const { return c_[0]; }
  [[nodiscard]] std::span<const double> coeffs() const { return c_; }
  [[nodiscard]] std::size_t size() const { return c_.size(); }
  [[nodiscard]] double operator[](std::size_t m) const { return c_[m]; }

  /// Coefficient of the first-order monomial dx_var.
  [[nodiscard]] double linear(int var) const { return c_[static_cast<std::size_t>(1 + var)]; }

  [[nodiscard]] double coeff(const std::vector<int>& exponent) const {
    check_exponent(exponent);
    const int m = spec_.layout().find(exponent);
    return m < 0 ? 0.0 : c_[static_cast<std::size_t>(m)];
  }

  void set_coeff(const std::vector<int>& exponent, double value) {
    check_exponent(exponent);
    const int m = spec_.layout().find(exponent);
    if (m < 0) throw std::invalid_argument("TaylorPoly::set_coeff: exponent exceeds truncation order");
    c_[static_cast<std::size_t>(m)] = value;
  }

  /// Raw coefficient access in layout order; used by algorithms in this library.
  void set_raw(std::size_t m, double value) { c_[m] = value; }
  void set_cst(double value) { c_[0] = value; }

  [[nodiscard]] bool is_zero() const {
    return std::all_of(c_.begin(), c_.end(), [](double x) { return x == 0.0; });
  }

  /// Drops coefficients below 1e-14 times the largest coefficient magnitude.
  void cleanup() {
    double big = 0.0;
    for (double x : c_) big = std::max(big, std::abs(x));
    const double tol = 1e-14 * big;
    for (std::size_t m = 1; m < c_.size(); ++m) {
      if (std::abs(c_[m]) < tol) c_[m] = 0.0;
    }
  }

  TaylorPoly& operator+=(const TaylorPoly& o) {
    check_same(o);
    for (std::size_t m = 0; m < c_.size(); ++m) c_[m] += o.c_[m];
    cleanup();
    return *this;
  }
  TaylorPoly& operator-=(const TaylorPoly& o) {
    check_same(o);
    for (std::size_t m = 0; m < c_.size(); ++m) c_[m] -= o.c_[m];
    cleanup();
    return *this;
  }
  TaylorPoly& operator*=(const TaylorPoly& o) {
    *this = *this * o;
    return *this;
  }
  TaylorPoly& operator/=(const TaylorPoly& o) {
    *this = *this / o;
    return *this;
  }
  TaylorPoly& operator+=(double s) {
    c_[0] += s;
    return *this;
  }
  TaylorPoly& operator-=(double s) {
    c_[0] -= s;
    return *this;
  }
  TaylorPoly& operator*=(double s) {
    for (double& x : c_) x *= s;
    cleanup();
    return *this;
  }
  TaylorPoly& operator/=(double s) { return *this *= (1.0 / s); }

  friend TaylorPoly operator+(TaylorPoly a, const TaylorPoly& b) { return a += b; }
  friend TaylorPoly operator-(TaylorPoly a, const TaylorPoly& b) { return a -= b; }
  friend TaylorPoly operator+(TaylorPoly a, double s) { return a += s; }
  friend TaylorPoly operator+(double s, TaylorPoly a) { return a += s; }
  friend TaylorPoly operator-(TaylorPoly a, double s) { return a -= s; }
  friend TaylorPoly operator-(double s, const TaylorPoly& a) {
    TaylorPoly r = -a;
    r.c_[0] += s;
    return r;
  }
  friend TaylorPoly operator*(TaylorPoly a, double s) { return a *= s; }
  friend TaylorPoly operator*(double s, TaylorPoly a) { return a *= s; }
  friend TaylorPoly operator/(TaylorPoly a, double s) { return a /= s; }
  friend TaylorPoly operator-(TaylorPoly a) {
    for (double& x : a.c_) x = -x;
    return a;
  }

  friend TaylorPoly operator*(const TaylorPoly& a, const TaylorPoly& b) {
    a.check_same(b);
    TaylorPoly r(a.spec_);
    const auto& L = a.spec_.layout();
    const double* pa = a.c_.data();
    const double* pb = b.c_.data();
    double* pr = r.c_.data();
    for (const auto& t : L.products) {
      const double x = pa[t.i];
      if (x == 0.0) continue;
      pr[t.k] += x * pb[t.j];
    }
    r.cleanup();
    return r;
  }

  friend TaylorPoly operator/(const TaylorPoly& a, const TaylorPoly& b);
  friend TaylorPoly operator/(double s, const TaylorPoly& b);

  /// Applies sum_k series.c[k] * (p - p0)^k.
  [[nodiscard]] TaylorPoly apply_series(const detail::Series& s) const {
    TaylorPoly h = *this;
    h.c_[0] = 0.0;
    TaylorPoly r = constant(spec_, s.c[static_cast<std::size_t>(s.n)]);
    for (int k = s.n - 1; k >= 0; --k) {
      r = r * h;
      r.c_[0] += s.c[static_cast<std::size_t>(k)];
    }
    r.cleanup();
    return r;
  }

  void check_same(const TaylorPoly& o) const {
    if (!(spec_ == o.spec_)) throw std::invalid_argument("TaylorPoly: algebra spec mismatch");
  }

 private:
  void check_exponent(const std::vector<int>& e) const {
    if (static_cast<int>(e.size()) != spec_.nvars()) {
      throw std::invalid_argument("TaylorPoly: exponent length does not match nvars");
    }
  }

  AlgebraSpec spec_;
  std::vector<double> c_;
};

// ---------------------------------------------------------------------------
// Elementary functions
// ---------------------------------------------------------------------------

inline TaylorPoly reciprocal(const TaylorPoly& p) {
  if (p.cst() == 0.0) throw std::domain_error("reciprocal of polynomial with zero constant part");
  detail::Series s(p.spec().order());
  const double inv = 1.0 / p.cst();
  double term = inv;
  for (int k = 0; k <= s.n; ++k) {
    s.c[static_cast<std::size_t>(k)] = term;
    term *= -inv;
  }
  return p.apply_series(s);
}

inline TaylorPoly operator/(const TaylorPoly& a, const TaylorPoly& b) { return a * reciprocal(b); }
inline TaylorPoly operator/(double s, const TaylorPoly& b) { return reciprocal(b) * s; }

inline TaylorPoly exp(const TaylorPoly& p) { return p.apply_series(detail::exp_at(p.spec().order(), p.cst())); }
inline TaylorPoly log(const TaylorPoly& p) { return p.apply_series(detail::log_at(p.spec().order(), p.cst())); }
inline TaylorPoly sin(const TaylorPoly& p) { return p.apply_series(detail::sin_at(p.spec().order(), p.cst())); }
inline TaylorPoly cos(const TaylorPoly& p) { return p.apply_series(detail::cos_at(p.spec().order(), p.cst())); }
inline TaylorPoly tan(const TaylorPoly& p) { return p.apply_series(detail::tan_at(p.spec().order(), p.cst())); }
inline TaylorPoly sinh(const TaylorPoly& p) { return p.apply_series(detail::sinh_at(p.spec().order(), p.cst())); }
inline TaylorPoly cosh(const TaylorPoly& p) { return p.apply_series(detail::cosh_at(p.spec().order(), p.cst())); }
inline TaylorPoly atan(const TaylorPoly& p) { return p.apply_series(detail::atan_at(p.spec().order(), p.cst())); }
inline TaylorPoly asin(const TaylorPoly& p) { return p.apply_series(detail::asin_at(p.spec().order(), p.cst())); }
inline TaylorPoly acos(const TaylorPoly& p) { return p.apply_series(detail::acos_at(p.spec().order(), p.cst())); }

inline TaylorPoly sqrt(const TaylorPoly& p) {
  if (!(p.cst() > 0.0)) throw std::domain_error("sqrt of polynomial with non-positive constant part");
  return p.apply_series(detail::pow_at(p.spec().order(), p.cst(), 0.5));
}

/// Real exponent; requires a positive constant part.
inline TaylorPoly pow(const TaylorPoly& p, double alpha) {
  if (alpha == std::round(alpha) && std::abs(alpha) <= 16.0) {
    int e = static_cast<int>(alpha);
    TaylorPoly base = e < 0 ? reciprocal(p) : p;
    e = std::abs(e);
    TaylorPoly r = TaylorPoly::constant(p.spec(), 1.0);
    while (e > 0) {
      if (e & 1) r = r * base;
      e >>= 1;
      if (e > 0) base = base * base;
    }
    return r;
  }
  if (!(p.cst() > 0.0)) throw std::domain_error("pow with non-integer exponent requires positive constant part");
  return p.apply_series(detail::pow_at(p.spec().order(), p.cst(), alpha));
}

inline TaylorPoly pow(const TaylorPoly& p, int e) { return pow(p, static_cast<double>(e)); }

/// Four-quadrant arctangent; the quadrant is fixed by the constant parts.
inline TaylorPoly atan2(const TaylorPoly& y, const TaylorPoly& x) {
  y.check_same(x);
  const double y0 = y.cst(), x0 = x.cst();
  if (x0 == 0.0 && y0 == 0.0) throw std::domain_error("atan2 with both constant parts zero");
  const double a0 = std::atan2(y0, x0);
  TaylorPoly r = (std::abs(x0) >= std::abs(y0)) ? atan(y / x) : -atan(x / y);
  r.set_cst(a0);
  return r;
}

// ---------------------------------------------------------------------------
// Calculus, composition, evaluation, bounding
// ---------------------------------------------------------------------------

inline TaylorPoly partial(const TaylorPoly& p, int var) {
  const auto& spec = p.spec();
  if (var < 0 || var >= spec.nvars()) throw std::invalid_argument("partial: variable out of range");
  const auto& L = spec.layout();
  const auto nv = static_cast<std::size_t>(spec.nvars());
  TaylorPoly r(spec);
  for (std::size_t m = 1; m < L.size(); ++m) {
    const double a = p[m];
    if (a == 0.0) continue;
    const int lo = L.lower[m * nv + static_cast<std::size_t>(var)];
    if (lo < 0) continue;
    r.set_raw(static_cast<std::size_t>(lo), a * L.lower_exp[m * nv + static_cast<std::size_t>(var)]);
  }
  return r;
}

/// Integral with respect to one variable, truncated at the algebra order.
inline TaylorPoly integrate(const TaylorPoly& p, int var) {
  const auto& spec = p.spec();
  if (var < 0 || var >= spec.nvars()) throw std::invalid_argument("integrate: variable out of range");
  const auto& L = spec.layout();
  const auto nv = static_cast<std::size_t>(spec.nvars());
  TaylorPoly r(spec);
  for (std::size_t m = 0; m < L.size(); ++m) {
    const int lo = L.lower[m * nv + static_cast<std::size_t>(var)];
    if (lo < 0) continue;
    const double a = p[static_cast<std::size_t>(lo)];
    if (a != 0.0) r.set_raw(m, a / L.lower_exp[m * nv + static_cast<std::size_t>(var)]);
  }
  return r;
}

inline double eval(const TaylorPoly& p, std::span<const double> point) {
  const auto& spec = p.spec();
  if (static_cast<int>(point.size()) != spec.nvars()) throw std::invalid_argument("eval: point length mismatch");
  const auto& L = spec.layout();
  std::vector<double> mono(L.size());
  mono[0] = 1.0;
  double acc = p[0];
  for (std::size_t m = 1; m < L.size(); ++m) {
    mono[m] = mono[static_cast<std::size_t>(L.parent[m])] * point[static_cast<std::size_t>(L.parent_var[m])];
    acc += p[m] * mono[m];
  }
  return acc;
}

inline double eval(const TaylorPoly& p, std::initializer_list<double> point) {
  return eval(p, std::span<const double>(point.begin(), point.size()));
}

/// Substitutes args[v] for dx_v. The result lives in the args' algebra.
inline TaylorPoly compose(const TaylorPoly& p, std::span<const TaylorPoly> args) {
  const auto& spec = p.spec();
  if (static_cast<int>(args.size()) != spec.nvars()) throw std::invalid_argument("compose: arity mismatch");
  const AlgebraSpec& out = args[0].spec();
  for (const auto& a : args) args[0].check_same(a);
  const auto& L = spec.layout();
  std::vector<TaylorPoly> mono;
  mono.reserve(L.size());
  mono.push_back(TaylorPoly::constant(out, 1.0));
  TaylorPoly acc = TaylorPoly::constant(out, p[0]);
  for (std::size_t m = 1; m < L.size(); ++m) {
    mono.push_back(mono[static_cast<std::size_t>(L.parent[m])] * args[static_cast<std::size_t>(L.parent_var[m])]);
    if (p[m] != 0.0) acc += mono.back() * p[m];
  }
  return acc;
}

inline TaylorPoly compose(const TaylorPoly& p, const std::vector<TaylorPoly>& args) {
  return compose(p, std::span<const TaylorPoly>(args));
}

/// Range enclosure over [-1, 1]^v. A monomial is "even" when every variable
/// exponent is even; even terms contribute one-sidedly, odd terms symmetrically.
inline RangeBound bound(const TaylorPoly& p) {
  const auto& L = p.spec().layout();
  double lo = p[0], hi = p[0];
  for (std::size_t m = 1; m < L.size(); ++m) {
    const double a = p[m];
    if (a == 0.0) continue;
    bool even = true;
    for (int e : L.exponents[m]) {
      if (e % 2) {
        even = false;
        break;
      }
    }
    if (even) {
      lo += std::min(0.0, a);
      hi += std::max(0.0, a);
    } else {
      lo -= std::abs(a);
      hi += std::abs(a);
    }
  }
  return {lo, hi};
}

/// Re-keys p into a larger algebra, mapping variable v to v + var_offset.
inline TaylorPoly embed(const TaylorPoly& p, const AlgebraSpec& target, int var_offset) {
  const auto& spec = p.spec();
  if (target.order() != spec.order()) throw std::invalid_argument("embed: order mismatch");
  if (var_offset < 0 || var_offset + spec.nvars() > target.nvars()) {
    throw std::invalid_argument("embed: variables do not fit in target algebra");
  }
  const auto& L = spec.layout();
  const auto& T = target.layout();
  TaylorPoly r(target);
  std::vector<int> e(static_cast<std::size_t>(target.nvars()), 0);
  for (std::size_t m = 0; m < L.size(); ++m) {
    if (p[m] == 0.0) continue;
    std::fill(e.begin(), e.end(), 0);
    for (int v = 0; v < spec.nvars(); ++v) {
      e[static_cast<std::size_t>(v + var_offset)] = L.exponents[m][static_cast<std::size_t>(v)];
    }
    r.set_raw(static_cast<std::size_t>(T.find(e)), p[m]);
  }
  return r;
}

/// Keeps only terms up to the given total degree.
inline TaylorPoly truncate(const TaylorPoly& p, int degree) {
  const auto& L = p.spec().layout();
  TaylorPoly r(p.spec());
  for (std::size_t m = 0; m < L.size(); ++m) {
    if (L.degree[m] <= degree) r.set_raw(m, p[m]);
  }
  return r;
}

inline std::ostream& operator<<(std::ostream& os, const TaylorPoly& p) {
  const auto& L = p.spec().layout();
  os << "TaylorPoly(order=" << p.spec().order() << ", nvars=" << p.spec().nvars() << ")";
  for (std::size_t m = 0; m < L.size(); ++m) {
    if (p[m] == 0.0) continue;
    os << "\n  " << p[m] << " [";
    for (std::size_t v = 0; v < L.exponents[m].size(); ++v) os << (v ? " " : "") << L.exponents[m][v];
    os << "]";
  }
  return os;
}

}  // namespace robod::da

namespace robod {

using da::AlgebraSpec;
using da::RangeBound;
using da::TaylorPoly;

/// Constant part of a scalar or polynomial.
inline double cst(double x) { return x; }
inline double cst(const TaylorPoly& p) { return p.cst(); }

/// Extra Newton sweeps needed after the constant part has converged: one per
/// polynomial order (plus one), none for reals.
inline int refine_sweeps(double) { return 0; }
inline int refine_sweeps(const TaylorPoly& p) { return p.spec().order() + 1; }

/// A constant with the same algebra as `like`.
inline double constant_like(double, double value) { return value; }
inline TaylorPoly constant_like(const TaylorPoly& like, double value) {
  return TaylorPoly::constant(like.spec(), value);
}

}  // namespace robod
