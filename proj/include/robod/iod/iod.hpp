/**
 * @file iod.hpp
 * @brief Angles-only initial orbit determination: Gauss seed, double Lambert
 *        range refinement, J2 shooting correction and the polynomial
 *        expansion of the whole chain over the measurement uncertainty.
 */
#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "robod/astro/elements.hpp"
#include "robod/astro/frames.hpp"
#include "robod/astro/lambert.hpp"
#include "robod/da/newton.hpp"
#include "robod/dynamics/lowfi.hpp"
#include "robod/manifold/manifold.hpp"
#include "robod/obs/observation.hpp"

namespace robod::iod {

struct IodTriplet {
  std::array<obs::Observation, 3> obs;
  astro::Site site;

  void validate() const {
    for (const auto& o : obs) {
      o.validate();
      if (o.site_id != site.id) throw std::invalid_argument("IodTriplet: observations from different sites");
    }
    if (!(obs[0].epoch < obs[1].epoch && obs[1].epoch < obs[2].epoch)) {
      throw std::invalid_argument("IodTriplet: epochs must be strictly increasing");
    }
  }
};

/// First, middle (1-based index ceil(m/2)) and last measurement of a pass.
inline IodTriplet select_triplet(const std::vector<obs::Observation>& pass, const astro::Site& site) {
  const std::size_t m = pass.size();
  if (m < 3) throw std::invalid_argument("select_triplet: need at least 3 measurements");
  const std::size_t mid = (m + 1) / 2 - 1;
  IodTriplet t{{pass.front(), pass[mid == 0 ? 1 : mid], pass.back()}, site};
  t.validate();
  return t;
}

/// Propagator used by the J2 shooting correction: the secular analytic
/// model or a numerical J2-only integration.
enum class J2Propagator { analytic, numerical };

struct IodConfig {
  double j2 = astro::kJ2;
  bool j2_correction = true;
  double c = 3.0;
  double eps = 1e-2;
  int max_depth = 12;
  int order = 2;
  double tol_velocity = 1e-9;  ///< km/s, velocity matching
  double tol_position = 1e-7;  ///< km, J2 shooting
  int max_iter = 25;
  J2Propagator j2_propagator = J2Propagator::numerical;
};

struct IodSolution {
  Manifold manifold;               ///< Cartesian state at t1 over the 6 angle deviations
  std::array<double, 3> ranges{};  ///< km
  State6<double> state{};          ///< real solution at the nominal angles
  double epoch = 0.0;              ///< t1
  int iterations = 0;
  std::string log;
};

struct GaussSeed {
  std::array<double, 3> ranges{};
  State6<double> state2{};  ///< rough state at t2
  std::string log;
};

namespace detail {

inline dyn::ForceConfig j2_force(double j2, double mu) {
  auto f = dyn::ForceConfig::two_body();
  f.zonal_degree = j2 == 0.0 ? 0 : 2;
  f.mu = mu;
  return f;
}

struct Geometry {
  std::array<Vec3<double>, 3> R;  ///< site positions
  std::array<double, 3> t;
};

inline Geometry geometry(const IodTriplet& tr) {
  Geometry g;
  for (std::size_t i = 0; i < 3; ++i) {
    g.R[i] = astro::site_inertial(tr.site, tr.obs[i].epoch).r;
    g.t[i] = tr.obs[i].epoch;
  }
  return g;
}

/// Angles ordered (ra1, ra2, ra3, dec1, dec2, dec3).
inline std::vector<double> nominal_angles(const IodTriplet& tr) {
  return {tr.obs[0].ra, tr.obs[1].ra, tr.obs[2].ra, tr.obs[0].dec, tr.obs[1].dec, tr.obs[2].dec};
}

template <class S>
Vec3<S> los_point(const Geometry& g, std::size_t i, const S& rho, const std::vector<S>& ang) {
  const auto L = obs::line_of_sight(ang[i], ang[3 + i]);
  return add(scale(L, rho), g.R[i]);
}

/// Positive real roots of x^8 + a x^6 + b x^3 + c via the
/// companion matrix, polished by Newton.
inline std::vector<double> octic_roots(double a, double b, double c) {
  // Solve in y = x / s so that the coefficients are of order one.
  const double s = std::max({std::sqrt(std::abs(a)), std::cbrt(std::sqrt(std::abs(b))), std::pow(std::abs(c), 0.125), 1.0});
  Eigen::Matrix<double, 8, 8> C = Eigen::Matrix<double, 8, 8>::Zero();
  // coefficients of y^7..y^0
  const double coef[8] = {0.0, a / (s * s), 0.0, 0.0, b / std::pow(s, 5), 0.0, 0.0, c / std::pow(s, 8)};
  for (int j = 0; j < 8; ++j) C(0, j) = -coef[j];
  for (int i = 1; i < 8; ++i) C(i, i - 1) = 1.0;
  Eigen::EigenSolver<Eigen::Matrix<double, 8, 8>> es(C, false);
  std::vector<double> out;
  for (int i = 0; i < 8; ++i) {
    const auto z = es.eigenvalues()(i);
    if (std::abs(z.imag()) > 1e-6 * std::max(1.0, std::abs(z)) || z.real() <= 0.0) continue;
    double x = z.real() * s;
    for (int k = 0; k < 20; ++k) {
      const double x2 = x * x, x3 = x2 * x;
      const double f = x3 * x3 * x2 + a * x3 * x3 + b * x3 + c;
      const double df = 8.0 * x3 * x3 * x + 6.0 * a * x2 * x3 + 3.0 * b * x2;
      if (df == 0.0) break;
      const double s = f / df;
      x -= s;
      if (std::abs(s) < 1e-15 * x) break;
    }
    if (x > 0.0 && std::none_of(out.begin(), out.end(), [&](double y) { return std::abs(y - x) < 1e-9 * x; })) {
      out.push_back(x);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace detail

/// Classical Gauss solution with truncated f and g series.
inline GaussSeed gauss_seed(const IodTriplet& tr, double mu = astro::kMuEarth) {
  tr.validate();
  const auto g = detail::geometry(tr);
  const auto ang = detail::nominal_angles(tr);
  std::array<Vec3<double>, 3> L;
  for (std::size_t i = 0; i < 3; ++i) L[i] = obs::line_of_sight(ang[i], ang[3 + i]);
  const double tau1 = g.t[0] - g.t[1], tau3 = g.t[2] - g.t[1], tau = tau3 - tau1;
  const auto p1 = cross(L[1], L[2]), p2 = cross(L[0], L[2]), p3 = cross(L[0], L[1]);
  const double D0 = dot(L[0], p1);
  if (std::abs(D0) < 1e-12) throw std::domain_error("gauss_seed: degenerate (coplanar) line-of-sight geometry");
  double D[3][3];
  const std::array<Vec3<double>, 3> p{p1, p2, p3};
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) D[i][j] = dot(g.R[static_cast<std::size_t>(i)], p[static_cast<std::size_t>(j)]);
  }
  const double A = (-D[0][1] * tau3 / tau + D[1][1] + D[2][1] * tau1 / tau) / D0;
  const double B = (D[0][1] * (tau3 * tau3 - tau * tau) * tau3 / tau + D[2][1] * (tau * tau - tau1 * tau1) * tau1 / tau) /
                   (6.0 * D0);
  const double E = dot(g.R[1], L[1]);
  const double R2sq = dot(g.R[1], g.R[1]);
  const double a = -(A * A + 2.0 * A * E + R2sq);
  const double b = -2.0 * mu * B * (A + E);
  const double c = -mu * mu * B * B;
  const auto roots = detail::octic_roots(a, b, c);
  if (roots.empty()) throw std::runtime_error("gauss_seed: no positive real root");

  struct Candidate {
    double r2;
    std::array<double, 3> rho;
    State6<double> x2;
    bool admissible;
  };
  std::vector<Candidate> cands;
  for (double r2 : roots) {
    const double r23 = r2 * r2 * r2;
    const double rho2 = A + mu * B / r23;
    const double rho1 = ((6.0 * (D[2][0] * tau1 / tau3 + D[1][0] * tau / tau3) * r23 +
                          mu * D[2][0] * (tau * tau - tau1 * tau1) * tau1 / tau3) /
                             (6.0 * r23 + mu * (tau * tau - tau3 * tau3)) -
                         D[0][0]) /
                        D0;
    const double rho3 = ((6.0 * (D[0][2] * tau3 / tau1 - D[1][2] * tau / tau1) * r23 +
                          mu * D[0][2] * (tau * tau - tau3 * tau3) * tau3 / tau1) /
                             (6.0 * r23 + mu * (tau * tau - tau1 * tau1)) -
                         D[2][2]) /
                        D0;
    if (!(rho1 > 0.0 && rho2 > 0.0 && rho3 > 0.0)) continue;
    const auto r1v = add(scale(L[0], rho1), g.R[0]);
    const auto r2v = add(scale(L[1], rho2), g.R[1]);
    const auto r3v = add(scale(L[2], rho3), g.R[2]);
    const double f1 = 1.0 - 0.5 * mu * tau1 * tau1 / r23, f3 = 1.0 - 0.5 * mu * tau3 * tau3 / r23;
    const double g1 = tau1 - mu * tau1 * tau1 * tau1 / (6.0 * r23), g3 = tau3 - mu * tau3 * tau3 * tau3 / (6.0 * r23);
    const double den = f1 * g3 - f3 * g1;
    const auto v2 = scale(add(scale(r1v, -f3), scale(r3v, f1)), 1.0 / den);
    const auto x2 = join(r2v, v2);
    bool ok = false;
    if (astro::energy(x2, mu) < 0.0) {
      const auto k = astro::cart_to_kep(x2, mu);
      ok = k.e < 1.0 && k.a * (1.0 - k.e) > astro::kEarthRadius + 200.0;
    }
    cands.push_back({r2, {rho1, rho2, rho3}, x2, ok});
  }
  if (cands.empty()) throw std::runtime_error("gauss_seed: no root yields positive ranges");
  std::ostringstream log;
  log << "gauss: " << roots.size() << " positive root(s):";
  for (const auto& cd : cands) log << ' ' << cd.r2 << (cd.admissible ? "(ok)" : "(rejected)");
  const Candidate* best = nullptr;
  for (const auto& cd : cands) {
    if (cd.admissible && (!best || cd.r2 > best->r2)) best = &cd;
  }
  if (!best) {
    for (const auto& cd : cands) {
      if (!best || cd.r2 > best->r2) best = &cd;
    }
    log << "; none admissible, using largest";
  }
  log << "; selected r2 = " << best->r2 << " km";
  return {best->rho, best->x2, log.str()};
}

namespace detail {

/// Velocity mismatch at t2 between the two Lambert arcs through the
/// line-of-sight points.
template <class S>
std::array<S, 3> velocity_mismatch(const Geometry& g, const std::array<S, 3>& rho, const std::vector<S>& ang, bool prograde,
                                   double mu) {
  const auto r1 = los_point(g, 0, rho[0], ang);
  const auto r2 = los_point(g, 1, rho[1], ang);
  const auto r3 = los_point(g, 2, rho[2], ang);
  const auto a = astro::lambert(r1, r2, g.t[1] - g.t[0], mu, prograde);
  const auto b = astro::lambert(r2, r3, g.t[2] - g.t[1], mu, prograde);
  return {a.v2[0] - b.v1[0], a.v2[1] - b.v1[1], a.v2[2] - b.v1[2]};
}

template <class S>
State6<S> kepler_state(const Geometry& g, const std::array<S, 3>& rho, const std::vector<S>& ang, bool prograde, double mu) {
  const auto r1 = los_point(g, 0, rho[0], ang);
  const auto r2 = los_point(g, 1, rho[1], ang);
  return join(r1, astro::lambert(r1, r2, g.t[1] - g.t[0], mu, prograde).v1);
}

/// Unknowns (rho1, rho2, rho3, v1); residual is the analytic-J2 position
/// mismatch at t2 and t3 against the line-of-sight points.
template <class S>
std::array<S, 6> shooting_residual(const Geometry& g, const std::array<S, 6>& u, const std::vector<S>& ang, double j2,
                                   J2Propagator prop, double mu) {
  const auto r1 = los_point(g, 0, u[0], ang);
  const State6<S> x1{r1[0], r1[1], r1[2], u[3], u[4], u[5]};
  std::array<S, 6> out;
  State6<S> xn = x1;
  for (std::size_t k = 1; k < 3; ++k) {
    State6<S> xk;
    if (prop == J2Propagator::analytic) {
      xk = astro::altequi_to_cart(dyn::lf_propagate(astro::cart_to_altequi(x1, mu), g.t[0], g.t[k], j2, mu), mu);
    } else {
      xn = dyn::hf_propagate(xn, g.t[k - 1], g.t[k], j2_force(j2, mu), 1e-11);
      xk = xn;
    }
    const auto rk = los_point(g, k, u[k], ang);
    for (std::size_t c = 0; c < 3; ++c) out[3 * (k - 1) + c] = xk[c] - rk[c];
  }
  return out;
}

/// Real damped Newton with backtracking on the max-norm of G.
template <std::size_t N, class F>
std::array<double, N> damped_newton(F&& G, std::array<double, N> u, const std::vector<double>& p, double tol, int max_iter,
                                    int* iterations, const char* what) {
  auto norm_of = [](const std::array<double, N>& g) {
    double m = 0.0;
    for (double x : g) m = std::max(m, std::abs(x));
    return m;
  };
  auto safe_eval = [&](const std::array<double, N>& x, double& out) {
    try {
      out = norm_of(G(x, p));
      return std::isfinite(out);
    } catch (const std::exception&) {
      return false;
    }
  };
  double res = 0.0;
  if (!safe_eval(u, res)) throw std::runtime_error(std::string(what) + ": residual undefined at the initial point");
  for (int it = 0; it <= max_iter; ++it) {
    if (res < tol) {
      if (iterations) *iterations = it;
      return u;
    }
    if (it == max_iter) break;
    const auto J = da::jacobian_at<N>(G, u, p);
    const auto g = G(u, p);
    Eigen::Matrix<double, static_cast<int>(N), 1> gv;
    for (std::size_t i = 0; i < N; ++i) gv(static_cast<int>(i)) = g[i];
    const auto lu = J.fullPivLu();
    if (!lu.isInvertible()) throw std::runtime_error(std::string(what) + ": singular Jacobian");
    const auto step = (lu.solve(gv)).eval();
    double lam = 1.0;
    bool accepted = false;
    for (int k = 0; k < 30; ++k, lam *= 0.5) {
      std::array<double, N> trial = u;
      for (std::size_t i = 0; i < N; ++i) trial[i] -= lam * step(static_cast<int>(i));
      double r = 0.0;
      if (safe_eval(trial, r) && (r < res || r < tol)) {
        u = trial;
        res = r;
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
  }
  throw std::runtime_error(std::string(what) + ": no convergence after " + std::to_string(max_iter) + " iterations");
}

inline bool prograde_guess(const State6<double>& x) { return cross(position(x), velocity(x))[2] >= 0.0; }

}  // namespace detail

struct RealSolution {
  std::array<double, 3> ranges{};
  State6<double> state{};  ///< at t1
  int iterations = 0;
  bool prograde = true;
};

/// Newton on the ranges so that the two Lambert arcs share the velocity at t2.
inline RealSolution refine_ranges(const IodTriplet& tr, const std::array<double, 3>& seed, bool prograde,
                                  const IodConfig& cfg = {}, double mu = astro::kMuEarth) {
  for (double r : seed) {
    if (!(r > 0.0)) throw std::invalid_argument("refine_ranges: seed ranges must be positive");
  }
  const auto g = detail::geometry(tr);
  const auto ang = detail::nominal_angles(tr);
  auto G = [&](const auto& rho, const auto& p) { return detail::velocity_mismatch(g, rho, p, prograde, mu); };
  RealSolution s;
  s.prograde = prograde;
  s.ranges = detail::damped_newton<3>(G, seed, ang, cfg.tol_velocity, cfg.max_iter, &s.iterations, "refine_ranges");
  for (double r : s.ranges) {
    if (!(r > 0.0)) throw std::runtime_error("refine_ranges: converged to a non-positive range");
  }
  s.state = detail::kepler_state(g, s.ranges, ang, prograde, mu);
  return s;
}

/// Replaces the two-body arcs by analytic-J2 propagation, starting from a
/// converged Keplerian solution.
inline RealSolution j2_shooting_correction(const RealSolution& kep, const IodTriplet& tr, const IodConfig& cfg = {},
                                           double mu = astro::kMuEarth) {
  const auto g = detail::geometry(tr);
  const auto ang = detail::nominal_angles(tr);
  auto G = [&](const auto& u, const auto& p) { return detail::shooting_residual(g, u, p, cfg.j2, cfg.j2_propagator, mu); };
  std::array<double, 6> u{kep.ranges[0], kep.ranges[1], kep.ranges[2], kep.state[3], kep.state[4], kep.state[5]};
  RealSolution s = kep;
  u = detail::damped_newton<6>(G, u, ang, cfg.tol_position, cfg.max_iter, &s.iterations, "j2_shooting_correction");
  s.ranges = {u[0], u[1], u[2]};
  const auto r1 = detail::los_point(g, 0, u[0], ang);
  s.state = {r1[0], r1[1], r1[2], u[3], u[4], u[5]};
  return s;
}

/// Real chain at the nominal angles: Gauss, Lambert refinement and optional
/// J2 correction.
inline RealSolution solve_real(const IodTriplet& tr, const IodConfig& cfg, std::string* log = nullptr) {
  const auto seed = gauss_seed(tr);
  if (log) *log = seed.log;
  const bool pro = detail::prograde_guess(seed.state2);
  auto s = refine_ranges(tr, seed.ranges, pro, cfg);
  if (cfg.j2_correction && cfg.j2 != 0.0) {
    const int kit = s.iterations;
    s = j2_shooting_correction(s, tr, cfg);
    s.iterations += kit;
  }
  return s;
}

/// Expands the chain over the six angle deviations (dra1..3, ddec1..3), each
/// scaled by c sigma, with automatic domain splitting.
inline IodSolution iod_expand(const IodTriplet& tr, const IodConfig& cfg, double mu = astro::kMuEarth) {
  if (!(cfg.c > 0.0)) throw std::invalid_argument("iod_expand: c must be positive");
  tr.validate();
  IodSolution out;
  const auto nominal = solve_real(tr, cfg, &out.log);
  out.ranges = nominal.ranges;
  out.state = nominal.state;
  out.iterations = nominal.iterations;
  out.epoch = tr.obs[0].epoch;

  const auto g = detail::geometry(tr);
  const auto ang0 = detail::nominal_angles(tr);
  std::array<double, 6> width{};
  for (std::size_t i = 0; i < 3; ++i) {
    width[i] = cfg.c * tr.obs[i].sigma_ra;
    width[3 + i] = cfg.c * tr.obs[i].sigma_dec;
  }
  const bool use_j2 = cfg.j2_correction && cfg.j2 != 0.0;
  const bool pro = nominal.prograde;

  auto f = [&](const std::vector<TaylorPoly>& dev) {
    const auto& spec = dev[0].spec();
    std::vector<TaylorPoly> ang;
    std::vector<double> angc;
    for (std::size_t i = 0; i < 6; ++i) {
      ang.push_back(dev[i] * width[i] + ang0[i]);
      angc.push_back(ang.back().cst());
    }
    // Real solve at the domain center, warm-started from the nominal.
    auto Gk = [&](const auto& rho, const auto& p) { return detail::velocity_mismatch(g, rho, p, pro, mu); };
    int it = 0;
    const auto rho_c = detail::damped_newton<3>(Gk, nominal.ranges, angc, cfg.tol_velocity, cfg.max_iter, &it, "refine_ranges");
    da::NewtonOptions nopt;
    nopt.tol = cfg.tol_velocity;
    nopt.max_iter = cfg.max_iter;
    if (!use_j2) {
      std::array<TaylorPoly, 3> u;
      for (std::size_t i = 0; i < 3; ++i) u[i] = TaylorPoly::constant(spec, rho_c[i]);
      u = da::newton_solve<3>(Gk, u, ang, nopt);
      const auto x = detail::kepler_state(g, u, ang, pro, mu);
      return std::vector<TaylorPoly>(x.begin(), x.end());
    }
    const auto xk = detail::kepler_state(g, rho_c, angc, pro, mu);
    auto Gs = [&](const auto& u, const auto& p) { return detail::shooting_residual(g, u, p, cfg.j2, cfg.j2_propagator, mu); };
    const std::array<double, 6> u0{rho_c[0], rho_c[1], rho_c[2], xk[3], xk[4], xk[5]};
    const auto uc = detail::damped_newton<6>(Gs, u0, angc, cfg.tol_position, cfg.max_iter, &it, "j2_shooting_correction");
    std::array<TaylorPoly, 6> u;
    for (std::size_t i = 0; i < 6; ++i) u[i] = TaylorPoly::constant(spec, uc[i]);
    nopt.tol = cfg.tol_position;
    u = da::newton_solve<6>(Gs, u, ang, nopt);
    const auto r1 = detail::los_point(g, 0, u[0], ang);
    return std::vector<TaylorPoly>{r1[0], r1[1], r1[2], u[3], u[4], u[5]};
  };

  const AlgebraSpec spec(cfg.order, 6);
  Manifold input;
  input.epoch = out.epoch;
  Domain d;
  for (int v = 0; v < 6; ++v) d.state.push_back(TaylorPoly::variable(spec, v));
  d.epoch = out.epoch;
  input.domains.push_back(std::move(d));
  auto res = adaptive_eval(f, input, cfg.eps, cfg.max_depth);
  out.manifold = std::move(res.output);
  return out;
}

}  // namespace robod::iod
