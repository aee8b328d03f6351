/**
 * @file estimate.hpp
 * @brief Batch estimation of the epoch state from angles: weighted least
 *        squares by Levenberg-Marquardt and least sum of absolute residuals
 *        through linear programming. Design matrices come from first-order
 *        polynomial propagation.
 */
#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "robod/astro/elements.hpp"
#include "robod/dynamics/propagate.hpp"
#include "robod/estimate/lp.hpp"
#include "robod/obs/observation.hpp"

namespace robod::est {

inline constexpr double kLsarWeightFactor = 1.24;

/// Stacked (ra, dec) rows, one pair per observation.
struct DesignSystem {
  Eigen::VectorXd h;      ///< predicted measurements
  Eigen::MatrixXd H;      ///< d h / d x0
  Eigen::VectorXd dy;     ///< measured minus predicted, ra wrapped
  Eigen::VectorXd sigma;  ///< per row

  [[nodiscard]] Eigen::VectorXd W() const { return sigma.cwiseInverse().cwiseAbs2(); }
  [[nodiscard]] Eigen::VectorXd lsar_weights() const { return (kLsarWeightFactor * sigma).cwiseInverse(); }
  [[nodiscard]] double ls_cost() const { return 0.5 * dy.dot(W().asDiagonal() * dy); }
  [[nodiscard]] double lsar_cost() const { return lsar_weights().dot(dy.cwiseAbs()); }
};

using DesignFn = std::function<DesignSystem(const Vec6&)>;

using SiteMap = std::map<std::string, astro::Site>;

/// First-order polynomial state at x0 propagated through every epoch in
/// time order and projected. Rows follow the order of `observations`.
inline DesignSystem build_design(const Vec6& x0, double t0, const std::vector<obs::Observation>& observations,
                                 const SiteMap& sites, const dyn::ForceConfig& cfg, double tol = 1e-10) {
  if (observations.empty()) throw std::invalid_argument("build_design: no observations");
  const AlgebraSpec spec(1, 6);
  State6<TaylorPoly> x;
  for (int c = 0; c < 6; ++c) x[static_cast<std::size_t>(c)] = TaylorPoly::variable(spec, c, x0(c));
  std::vector<std::size_t> order(observations.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return observations[a].epoch < observations[b].epoch; });
  const auto m = static_cast<Eigen::Index>(2 * observations.size());
  DesignSystem d;
  d.h.resize(m);
  d.H.resize(m, 6);
  d.dy.resize(m);
  d.sigma.resize(m);
  double t = t0;
  for (auto i : order) {
    const auto& o = observations[i];
    x = dyn::hf_propagate(x, t, o.epoch, cfg, tol);
    t = o.epoch;
    const auto it = sites.find(o.site_id);
    if (it == sites.end()) throw std::invalid_argument("build_design: unknown site '" + o.site_id + "'");
    const auto p = obs::project(x, it->second, o.epoch);
    const auto r = static_cast<Eigen::Index>(2 * i);
    d.h(r) = p.ra.cst();
    d.h(r + 1) = p.dec.cst();
    for (int c = 0; c < 6; ++c) {
      d.H(r, c) = p.ra.linear(c);
      d.H(r + 1, c) = p.dec.linear(c);
    }
    d.dy(r) = astro::wrap_pi(o.ra - d.h(r));
    d.dy(r + 1) = o.dec - d.h(r + 1);
    d.sigma(r) = o.sigma_ra;
    d.sigma(r + 1) = o.sigma_dec;
  }
  return d;
}

enum class Termination { residual_tol, optimality_tol, step_tol, max_iter };

inline std::string to_string(Termination t) {
  switch (t) {
    case Termination::residual_tol: return "residual_tol";
    case Termination::optimality_tol: return "optimality_tol";
    case Termination::step_tol: return "step_tol";
    default: return "max_iter";
  }
}

struct SolverOptions {
  double lambda0 = 1e-3;
  double lambda_factor = 10.0;
  double lambda_max = 1e10;
  double eps_res = 1e-8;
  double eps_opt = 1e-8;
  double eps_step = 1e-10;
  int max_iter = 25;
  double cond_limit = 1e12;
};

struct EstimationResult {
  Vec6 x0 = Vec6::Zero();
  Mat6 P0 = Mat6::Zero();
  int iterations = 0;
  Termination termination = Termination::max_iter;
  std::vector<double> cost_history;
  Eigen::VectorXd residuals;  ///< final dy, rad
  Eigen::VectorXd sigma;
  std::vector<std::string> diagnostics;
};

namespace detail {

/// Condition number of a normal matrix after symmetric Jacobi scaling.
inline double scaled_condition(const Mat6& A) {
  const Vec6 d = A.diagonal().cwiseMax(1e-300).cwiseSqrt().cwiseInverse();
  const Mat6 S = d.asDiagonal() * A * d.asDiagonal();
  Eigen::SelfAdjointEigenSolver<Mat6> es(S);
  const double lo = es.eigenvalues().minCoeff(), hi = es.eigenvalues().maxCoeff();
  return lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
}

inline Mat6 covariance(const DesignSystem& d, const Eigen::VectorXd& w) {
  const Mat6 A = d.H.transpose() * w.asDiagonal() * d.H;
  Mat6 P = A.ldlt().solve(Mat6::Identity());
  return 0.5 * (P + P.transpose());
}

inline double weighted_change(const DesignSystem& a, const DesignSystem& b) {
  return ((a.h - b.h).cwiseQuotient(a.sigma)).norm();
}

inline bool small_step(const Vec6& dx, const Vec6& x, double eps) {
  for (int i = 0; i < 6; ++i) {
    if (std::abs(dx(i)) > eps * std::max(1.0, std::abs(x(i)))) return false;
  }
  return true;
}

}  // namespace detail

/// Levenberg-Marquardt on J = 1/2 e^T W e with damping lambda I.
inline EstimationResult ls_solve(const DesignFn& design, const Vec6& guess, const SolverOptions& opt = {}) {
  EstimationResult r;
  Vec6 x = guess;
  DesignSystem d = design(x);
  if (d.h.size() < 6) throw std::invalid_argument("ls_solve: need at least 6 measurement rows");
  double J = d.ls_cost();
  r.cost_history.push_back(J);
  double lambda = opt.lambda0;
  bool done = false;
  for (int it = 1; it <= opt.max_iter && !done; ++it) {
    r.iterations = it;
    const Eigen::VectorXd W = d.W();
    const Mat6 A = d.H.transpose() * W.asDiagonal() * d.H;
    const Vec6 g = d.H.transpose() * W.asDiagonal() * d.dy;
    if (detail::scaled_condition(A) > opt.cond_limit) {
      r.diagnostics.push_back("iteration " + std::to_string(it) + ": ill-conditioned normal matrix");
    }
    // Gradient in weighted-residual units per column.
    double gmax = 0.0;
    for (int i = 0; i < 6; ++i) gmax = std::max(gmax, std::abs(g(i)) / std::sqrt(std::max(A(i, i), 1e-300)));
    if (gmax < opt.eps_opt) {
      r.termination = Termination::optimality_tol;
      break;
    }
    while (true) {
      const Vec6 dx = (A + lambda * Mat6::Identity()).ldlt().solve(g);
      if (!dx.allFinite()) throw std::runtime_error("ls_solve: singular normal matrix");
      const Vec6 xt = x + dx;
      DesignSystem dt;
      bool ok = true;
      try {
        dt = design(xt);
      } catch (const std::exception&) {
        ok = false;
      }
      const double Jt = ok ? dt.ls_cost() : std::numeric_limits<double>::infinity();
      if (Jt < J) {
        const double change = detail::weighted_change(d, dt);
        x = xt;
        d = std::move(dt);
        J = Jt;
        r.cost_history.push_back(J);
        lambda /= opt.lambda_factor;
        if (change < opt.eps_res) {
          r.termination = Termination::residual_tol;
          done = true;
        } else if (detail::small_step(dx, x, opt.eps_step)) {
          r.termination = Termination::step_tol;
          done = true;
        }
        break;
      }
      if (detail::small_step(dx, x, opt.eps_step)) {
        r.termination = Termination::step_tol;
        done = true;
        break;
      }
      lambda *= opt.lambda_factor;
      if (lambda > opt.lambda_max) throw std::runtime_error("ls_solve: damping exceeded limit, no descent step found");
    }
    if (!done && it == opt.max_iter) r.termination = Termination::max_iter;
  }
  r.iterations = std::max(r.iterations, 1);
  r.x0 = x;
  r.P0 = detail::covariance(d, d.W());
  r.residuals = d.dy;
  r.sigma = d.sigma;
  return r;
}

/// Minimizes sum w_i |y_i - (H z)_i| over z as a linear program in
/// column-scaled variables. Empty when the program is not optimal.
inline std::optional<Eigen::VectorXd> weighted_l1_fit(const Eigen::MatrixXd& H, const Eigen::VectorXd& y,
                                                      const Eigen::VectorXd& w, LpResult* info = nullptr) {
  const Eigen::Index m = H.rows(), n = H.cols();
  if (y.size() != m || w.size() != m) throw std::invalid_argument("weighted_l1_fit: inconsistent dimensions");
  Eigen::MatrixXd Ht = w.asDiagonal() * H;
  Eigen::VectorXd scale(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    scale(j) = Ht.col(j).norm();
    if (scale(j) == 0.0) scale(j) = 1.0;
    Ht.col(j) /= scale(j);
  }
  const Eigen::VectorXd yt = w.cwiseProduct(y);
  LpProblem p;
  p.Q = Eigen::MatrixXd::Zero(2 * m, n + m);
  p.Q.block(0, 0, m, n) = -Ht;
  p.Q.block(0, n, m, m) = -Eigen::MatrixXd::Identity(m, m);
  p.Q.block(m, 0, m, n) = Ht;
  p.Q.block(m, n, m, m) = -Eigen::MatrixXd::Identity(m, m);
  p.k.resize(2 * m);
  p.k << -yt, yt;
  p.c = Eigen::VectorXd::Zero(n + m);
  p.c.tail(m).setOnes();
  auto res = lp_solve(p);
  if (info) *info = res;
  if (res.status != LpStatus::optimal) return std::nullopt;
  return Eigen::VectorXd(res.z.head(n).cwiseQuotient(scale));
}

/// Minimum weighted L1 step for the linearized system.
inline LpResult lsar_step(const DesignSystem& d, Vec6* dx) {
  LpResult res;
  const auto z = weighted_l1_fit(d.H, d.dy, d.lsar_weights(), &res);
  if (z && dx) *dx = *z;
  return res;
}

/// Iterated linear programming on J = sum w_i |e_i| with w_i = 1/(1.24 sigma_i).
inline EstimationResult lsar_solve(const DesignFn& design, const Vec6& guess, const SolverOptions& opt = {}) {
  EstimationResult r;
  Vec6 x = guess;
  DesignSystem d = design(x);
  if (d.h.size() < 6) throw std::invalid_argument("lsar_solve: need at least 6 measurement rows");
  double J = d.lsar_cost();
  r.cost_history.push_back(J);
  for (int it = 1; it <= opt.max_iter; ++it) {
    r.iterations = it;
    const Eigen::VectorXd W = d.W();
    const Mat6 A = d.H.transpose() * W.asDiagonal() * d.H;
    Vec6 dx;
    bool use_ls = detail::scaled_condition(A) > opt.cond_limit;
    if (use_ls) {
      r.diagnostics.push_back("iteration " + std::to_string(it) + ": ill-conditioned, damped least-squares step");
      dx = (A + opt.lambda0 * Mat6::Identity()).ldlt().solve(d.H.transpose() * W.asDiagonal() * d.dy);
    } else {
      const auto lp = lsar_step(d, &dx);
      if (lp.status != LpStatus::optimal) throw std::runtime_error("lsar_solve: linear program failed");
      // The linearized cost cannot be lowered: first-order optimal.
      if (lp.objective >= J * (1.0 - 1e-12)) {
        r.termination = Termination::optimality_tol;
        break;
      }
    }
    // Backtrack if the nonlinear cost does not decrease.
    double step = 1.0;
    bool accepted = false;
    DesignSystem dt;
    for (int k = 0; k < 20; ++k, step *= 0.5) {
      try {
        dt = design(x + step * dx);
      } catch (const std::exception&) {
        continue;
      }
      if (dt.lsar_cost() < J) {
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      r.termination = Termination::step_tol;
      break;
    }
    const Vec6 applied = step * dx;
    const double change = detail::weighted_change(d, dt);
    x += applied;
    d = std::move(dt);
    J = d.lsar_cost();
    r.cost_history.push_back(J);
    if (change < opt.eps_res) {
      r.termination = Termination::residual_tol;
      break;
    }
    if (detail::small_step(applied, x, opt.eps_step)) {
      r.termination = Termination::step_tol;
      break;
    }
    if (it == opt.max_iter) r.termination = Termination::max_iter;
  }
  r.iterations = std::max(r.iterations, 1);
  r.x0 = x;
  const Eigen::VectorXd wt = d.W() / (kLsarWeightFactor * kLsarWeightFactor);
  r.P0 = detail::covariance(d, wt);
  r.residuals = d.dy;
  r.sigma = d.sigma;
  return r;
}

inline DesignFn orbit_design(double t0, const std::vector<obs::Observation>& observations, const SiteMap& sites,
                             const dyn::ForceConfig& cfg, double tol = 1e-10) {
  return [=](const Vec6& x) { return build_design(x, t0, observations, sites, cfg, tol); };
}

inline Vec6 to_vec(const State6<double>& x) { return Vec6(x.data()); }
inline State6<double> to_state(const Vec6& v) { return {v(0), v(1), v(2), v(3), v(4), v(5)}; }

inline nlohmann::ordered_json to_json(const EstimationResult& r, double t0, const std::vector<obs::Observation>& used) {
  nlohmann::ordered_json j;
  j["epoch"] = astro::format_iso8601(t0);
  j["estimate"] = std::vector<double>(r.x0.data(), r.x0.data() + 6);
  auto P = nlohmann::ordered_json::array();
  for (int i = 0; i < 6; ++i) {
    std::vector<double> row(6);
    for (int k = 0; k < 6; ++k) row[static_cast<std::size_t>(k)] = r.P0(i, k);
    P.push_back(row);
  }
  j["covariance"] = P;
  j["iterations"] = r.iterations;
  j["termination"] = to_string(r.termination);
  j["cost_history"] = r.cost_history;
  auto res = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < used.size(); ++i) {
    const auto k = static_cast<Eigen::Index>(2 * i);
    res.push_back({{"epoch", astro::format_iso8601(used[i].epoch)},
                   {"site_id", used[i].site_id},
                   {"ra_residual_rad", r.residuals(k)},
                   {"dec_residual_rad", r.residuals(k + 1)}});
  }
  j["residuals"] = res;
  j["diagnostics"] = r.diagnostics;
  return j;
}

}  // namespace robod::est
