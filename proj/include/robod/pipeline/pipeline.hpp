/**
 * @file pipeline.hpp
 * @brief Sequential multifidelity propagation of a polynomial manifold,
 *        process-noise inflation, projection onto the observables, pruning
 *        against measurements, outlier detection and merging.
 *
 * The state manifold holds alternate equinoctial polynomials in 6
 * persistent deviation variables. Each domain carries its process-noise
 * covariance in Cartesian coordinates.
 */
#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "robod/astro/elements.hpp"
#include "robod/dynamics/lowfi.hpp"
#include "robod/dynamics/propagate.hpp"
#include "robod/iod/iod.hpp"
#include "robod/manifold/manifold.hpp"
#include "robod/obs/observation.hpp"
#include "robod/util/format.hpp"

namespace robod::pipeline {

struct PipelineConfig {
  double c = 3.0;
  double eps = 1e-2;
  int max_depth = 12;
  dyn::ForceConfig hf;
  dyn::NoiseConfig noise;
  double lf_j2 = astro::kJ2;
  double hf_tol = 1e-10;

  void validate() const {
    if (!(c > 0.0)) throw std::invalid_argument("PipelineConfig: c must be positive");
    if (!(eps > 0.0)) throw std::invalid_argument("PipelineConfig: eps must be positive");
    if (max_depth < 0) throw std::invalid_argument("PipelineConfig: max_depth must be non-negative");
    hf.validate();
    noise.validate();
  }
};

struct EpochCounts {
  double epoch_hours = 0.0;
  int propagation = 0;
  int projection = 0;
  int pruning = 0;
  int merging = 0;
};

struct PipelineState {
  Manifold manifold;
  std::vector<int> correlated;  ///< K_c
  std::vector<int> outliers;    ///< K_o
  std::vector<EpochCounts> history_log;
  double t_ref = 0.0;  ///< epoch the log hours are counted from
};

struct DomainBounds {
  RangeBound ra, dec, rho;
  bool retained = false;
};

struct PruneReport {
  int index = -1;  ///< observation index
  double epoch = 0.0;
  int projected_count = 0;
  int retained_count = 0;
  bool outlier = false;
  obs::MeasurementBox box;
  std::vector<DomainBounds> domains;
};

/// Observable manifold in bijection with a refined state manifold.
struct Projected {
  Manifold observable;  ///< (rho, ra, dec) per domain, 12 variables
  Manifold state;       ///< refined state manifold, 6 variables
};

// ---------------------------------------------------------------------------
// Initialization
// ---------------------------------------------------------------------------

/// Converts a Cartesian manifold to alternate equinoctial elements under
/// automatic splitting.
inline PipelineState init_from_cartesian(const Manifold& cart, const PipelineConfig& cfg) {
  if (cart.empty()) throw std::invalid_argument("init: empty manifold");
  auto f = [](const std::vector<TaylorPoly>& x) {
    const State6<TaylorPoly> s{x[0], x[1], x[2], x[3], x[4], x[5]};
    const auto e = astro::to_array(astro::cart_to_altequi(s));
    return std::vector<TaylorPoly>(e.begin(), e.end());
  };
  auto res = adaptive_eval(f, cart, cfg.eps, cfg.max_depth);
  PipelineState st;
  st.manifold = std::move(res.output);
  for (auto& d : st.manifold.domains) {
    d.pn_cov.setZero();
    d.epoch = cart.epoch;
  }
  st.manifold.epoch = cart.epoch;
  st.t_ref = cart.epoch;
  return st;
}

inline PipelineState init_from_iod(const iod::IodSolution& sol, const PipelineConfig& cfg) {
  return init_from_cartesian(sol.manifold, cfg);
}

/// One Cartesian domain x0 + V (c sqrt(lambda) dx) along the eigenvectors of P0.
inline Manifold cartesian_from_estimate(const State6<double>& x0, const Mat6& P0, double c, double epoch, int order = 2) {
  if (!P0.allFinite() || (P0 - P0.transpose()).cwiseAbs().maxCoeff() > 1e-9 * (1.0 + P0.cwiseAbs().maxCoeff())) {
    throw std::invalid_argument("init_from_estimate: P0 must be finite and symmetric");
  }
  const auto eig = jacobi_eigen(P0);
  if (eig.values.minCoeff() < 0.0) throw std::invalid_argument("init_from_estimate: P0 must be positive semidefinite");
  const AlgebraSpec spec(order, 6);
  Domain d;
  d.epoch = epoch;
  for (int r = 0; r < 6; ++r) {
    TaylorPoly p = TaylorPoly::constant(spec, x0[static_cast<std::size_t>(r)]);
    for (int k = 0; k < 6; ++k) {
      const double w = eig.vectors(r, k) * c * std::sqrt(eig.values(k));
      if (w != 0.0) p = p + TaylorPoly::variable(spec, k) * w;
    }
    d.state.push_back(std::move(p));
  }
  Manifold m;
  m.epoch = epoch;
  m.domains.push_back(std::move(d));
  return m;
}

inline PipelineState init_from_estimate(const State6<double>& x0, const Mat6& P0, double epoch, const PipelineConfig& cfg) {
  return init_from_cartesian(cartesian_from_estimate(x0, P0, cfg.c, epoch), cfg);
}

// ---------------------------------------------------------------------------
// Propagation
// ---------------------------------------------------------------------------

inline State6<double> center_cartesian(const Domain& d) {
  State6<double> e;
  for (std::size_t i = 0; i < 6; ++i) e[i] = d.state[i].cst();
  return astro::altequi_to_cart(astro::altequi_from_array(e));
}

struct MfStats {
  int lf_splits = 0;
  int hf_propagations = 0;
};

/// Low-fidelity polynomial propagation under automatic splitting, followed
/// by high-fidelity propagation of each domain center and its process-noise
/// covariance, and recentering of the polynomials on the high-fidelity
/// endpoints.
/// Low-fidelity polynomial propagation of an element manifold under
/// automatic splitting.
inline AdaptiveResult lf_step(const Manifold& man, double t_next, const PipelineConfig& cfg) {
  const double t0 = man.epoch;
  const double j2 = cfg.lf_j2;
  auto lf = [&](const std::vector<TaylorPoly>& x) {
    const auto s = astro::altequi_from_array(State6<TaylorPoly>{x[0], x[1], x[2], x[3], x[4], x[5]});
    const auto e = astro::to_array(dyn::lf_propagate(s, t0, t_next, j2));
    return std::vector<TaylorPoly>(e.begin(), e.end());
  };
  auto res = adaptive_eval(lf, man, cfg.eps, cfg.max_depth);
  res.output.epoch = t_next;
  for (auto& d : res.output.domains) d.epoch = t_next;
  return res;
}

inline Manifold mf_step(const Manifold& man, double t_next, const PipelineConfig& cfg, MfStats* stats = nullptr) {
  const double t0 = man.epoch;
  if (t_next == t0) return man;
  auto res = lf_step(man, t_next, cfg);
  if (stats) stats->lf_splits += res.splits;
  Manifold out;
  out.epoch = t_next;
  out.domains.reserve(res.output.domains.size());
  for (std::size_t i = 0; i < res.output.domains.size(); ++i) {
    const Domain& pre = res.input_refined.domains[i];
    Domain d = std::move(res.output.domains[i]);
    try {
      const auto snc = dyn::snc_propagate(center_cartesian(pre), pre.pn_cov, t0, t_next, cfg.hf, cfg.noise, cfg.hf_tol);
      if (stats) ++stats->hf_propagations;
      auto e = astro::to_array(astro::cart_to_altequi(snc.x));
      e[5] = astro::unwrap_toward(e[5], d.state[5].cst());
      for (std::size_t k = 0; k < 6; ++k) d.state[k] = d.state[k] + (e[k] - d.state[k].cst());
      d.pn_cov = snc.P;
    } catch (const std::exception& ex) {
      throw DomainError(std::string("mf_step: ") + ex.what(), d.history);
    }
    d.epoch = t_next;
    out.domains.push_back(std::move(d));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Projection and pruning
// ---------------------------------------------------------------------------

/// Cartesian polynomials in 12 variables: the state embedded in variables
/// 0-5 plus the first-order process-noise term on variables 6-11.
inline State6<TaylorPoly> inflated_cartesian(const std::vector<TaylorPoly>& state6, const Mat6& pn_cov, double c) {
  const auto& s6 = state6[0].spec();
  const AlgebraSpec s12(s6.order(), 12);
  State6<TaylorPoly> e;
  for (std::size_t k = 0; k < 6; ++k) e[k] = embed(state6[k], s12, 0);
  auto x = astro::altequi_to_cart(astro::altequi_from_array(e));
  if (pn_cov.cwiseAbs().maxCoeff() > 0.0) {
    const auto eig = jacobi_eigen(pn_cov);
    for (int k = 0; k < 6; ++k) {
      if (eig.values(k) <= 0.0) continue;
      const double s = c * std::sqrt(eig.values(k));
      const auto dv = TaylorPoly::variable(s12, 6 + k);
      for (int r = 0; r < 6; ++r) {
        const double w = eig.vectors(r, k) * s;
        if (w != 0.0) x[static_cast<std::size_t>(r)] = x[static_cast<std::size_t>(r)] + dv * w;
      }
    }
  }
  return x;
}

/// Projects each state domain onto (rho, ra, dec) of the observation's
/// site, splitting state domains until (ra, dec) are within eps.
inline Projected inflate_and_project(const Manifold& man, const obs::Observation& o, const astro::Site& site,
                                     const PipelineConfig& cfg, int* splits = nullptr) {
  Projected out;
  out.observable.epoch = man.epoch;
  out.state.epoch = man.epoch;
  const NliSelector angles = [](const std::vector<TaylorPoly>& y) { return std::vector<TaylorPoly>{y[1], y[2]}; };
  for (const auto& dom : man.domains) {
    auto f = [&](const std::vector<TaylorPoly>& st) {
      const auto x = inflated_cartesian(st, dom.pn_cov, cfg.c);
      const auto p = obs::project(x, site, o.epoch);
      return std::vector<TaylorPoly>{p.rho, p.ra, p.dec};
    };
    Manifold one;
    one.epoch = man.epoch;
    one.domains.push_back(dom);
    auto res = adaptive_eval(f, one, cfg.eps, cfg.max_depth, angles);
    if (splits) *splits += res.splits;
    for (auto& d : res.output.domains) out.observable.domains.push_back(std::move(d));
    for (auto& d : res.input_refined.domains) out.state.domains.push_back(std::move(d));
  }
  return out;
}

/// Closed-interval overlap with absolute slack.
inline bool overlaps(const RangeBound& a, const RangeBound& b, double slack = 1e-12) {
  return a.lower <= b.upper + slack && b.lower <= a.upper + slack;
}

/// Overlap of two angle intervals on the circle.
inline bool overlaps_circular(const RangeBound& a, const RangeBound& b, double slack = 1e-12) {
  if (a.width() >= astro::kTwoPi || b.width() >= astro::kTwoPi) return true;
  const double shift = astro::kTwoPi * std::round((a.center() - b.center()) / astro::kTwoPi);
  for (int k = -1; k <= 1; ++k) {
    const double s = shift + k * astro::kTwoPi;
    if (overlaps(a, {b.lower + s, b.upper + s}, slack)) return true;
  }
  return false;
}

struct PruneResult {
  Manifold manifold;
  PruneReport report;
};

/// Keeps every domain whose (ra, dec) bounds meet the measurement box. When
/// none does, the measurement is an outlier and `unchanged` is returned.
inline PruneResult prune(const Manifold& unchanged, const Projected& proj, const obs::Observation& o, int index, double c) {
  if (proj.observable.size() != proj.state.size()) throw std::invalid_argument("prune: bijection broken");
  PruneResult r;
  r.report.index = index;
  r.report.epoch = o.epoch;
  r.report.box = obs::measurement_box(o, c);
  r.report.projected_count = static_cast<int>(proj.observable.size());
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < proj.observable.size(); ++i) {
    const auto& y = proj.observable.domains[i].state;
    DomainBounds b{da::bound(y[1]), da::bound(y[2]), da::bound(y[0]), false};
    b.retained = overlaps_circular(b.ra, r.report.box.ra) && overlaps(b.dec, r.report.box.dec);
    if (b.retained) keep.push_back(i);
    r.report.domains.push_back(b);
  }
  if (keep.empty()) {
    r.report.outlier = true;
    r.report.retained_count = r.report.projected_count;
    r.manifold = unchanged;
    return r;
  }
  r.report.retained_count = static_cast<int>(keep.size());
  r.manifold.epoch = proj.state.epoch;
  for (auto i : keep) r.manifold.domains.push_back(proj.state.domains[i]);
  return r;
}

// ---------------------------------------------------------------------------
// Sequence
// ---------------------------------------------------------------------------

struct SequenceResult {
  PipelineState state;
  std::vector<PruneReport> reports;
};

using SiteMap = std::map<std::string, astro::Site>;

inline const astro::Site& site_of(const SiteMap& sites, const obs::Observation& o) {
  const auto it = sites.find(o.site_id);
  if (it == sites.end()) throw std::invalid_argument("unknown site id '" + o.site_id + "'");
  return it->second;
}

/// One epoch: propagation, projection, pruning and merging.
inline PruneReport process_observation(PipelineState& st, const obs::Observation& o, int index, const astro::Site& site,
                                       const PipelineConfig& cfg) {
  if (o.epoch < st.manifold.epoch) throw std::invalid_argument("run_sequence: observations must be sorted");
  EpochCounts counts;
  counts.epoch_hours = (o.epoch - st.t_ref) / 3600.0;
  st.manifold = mf_step(st.manifold, o.epoch, cfg);
  counts.propagation = static_cast<int>(st.manifold.size());
  const auto proj = inflate_and_project(st.manifold, o, site, cfg);
  counts.projection = static_cast<int>(proj.state.size());
  auto pr = prune(st.manifold, proj, o, index, cfg.c);
  if (pr.report.outlier) {
    st.outliers.push_back(index);
    counts.pruning = counts.projection;
    counts.merging = counts.propagation;
  } else {
    st.correlated.push_back(index);
    counts.pruning = pr.report.retained_count;
    st.manifold = merge(pr.manifold, cfg.eps);
    counts.merging = static_cast<int>(st.manifold.size());
  }
  st.history_log.push_back(counts);
  return std::move(pr.report);
}

inline SequenceResult run_sequence(PipelineState st, const std::vector<obs::Observation>& observations, const SiteMap& sites,
                                   const PipelineConfig& cfg) {
  cfg.validate();
  SequenceResult r;
  for (std::size_t i = 0; i < observations.size(); ++i) {
    const auto& o = observations[i];
    r.reports.push_back(process_observation(st, o, static_cast<int>(i), site_of(sites, o), cfg));
  }
  r.state = std::move(st);
  return r;
}

// ---------------------------------------------------------------------------
// Initial guess reconstruction
// ---------------------------------------------------------------------------

/// Weighted RMS of the (ra, dec) residuals of a real state at t0 against a
/// set of observations, with high-fidelity propagation.
inline double weighted_rms(const State6<double>& x0, double t0, const std::vector<obs::Observation>& observations,
                           const std::vector<int>& indices, const SiteMap& sites, const PipelineConfig& cfg) {
  std::vector<int> idx = indices;
  std::sort(idx.begin(), idx.end(),
            [&](int a, int b) { return observations[static_cast<std::size_t>(a)].epoch < observations[static_cast<std::size_t>(b)].epoch; });
  State6<double> x = x0;
  double t = t0;
  double s = 0.0;
  for (int i : idx) {
    const auto& o = observations[static_cast<std::size_t>(i)];
    x = dyn::hf_propagate(x, t, o.epoch, cfg.hf, cfg.hf_tol);
    t = o.epoch;
    const auto p = obs::project(x, site_of(sites, o), o.epoch);
    const double dra = astro::wrap_pi(p.ra - o.ra) / o.sigma_ra;
    const double ddec = (p.dec - o.dec) / o.sigma_dec;
    s += dra * dra + ddec * ddec;
  }
  return idx.empty() ? 0.0 : std::sqrt(s / (2.0 * static_cast<double>(idx.size())));
}

struct GuessResult {
  State6<double> x0{};
  double rms = 0.0;
  int candidates = 0;
  std::size_t best = 0;
  std::vector<double> candidate_rms;
};

/// Center of an initial Cartesian domain restricted to a final history.
inline State6<double> replay_center(const Manifold& initial, const History& h) {
  for (const auto& d : initial.domains) {
    if (!is_prefix(d.history, h)) continue;
    const History rest(h.begin() + static_cast<std::ptrdiff_t>(d.history.size()), h.end());
    const auto st = replay(d.state, rest);
    State6<double> x;
    for (std::size_t k = 0; k < 6; ++k) x[k] = st[k].cst();
    return x;
  }
  throw std::runtime_error("reconstruct_guess: no initial domain matches history " + to_string(h));
}

/// Replays every final domain's splitting history on the initial Cartesian
/// manifold and returns the center with the smallest weighted residuals.
inline GuessResult reconstruct_guess(const Manifold& final_state, const Manifold& initial,
                                     const std::vector<obs::Observation>& observations, const std::vector<int>& correlated,
                                     const SiteMap& sites, const PipelineConfig& cfg) {
  if (final_state.empty()) throw std::invalid_argument("reconstruct_guess: empty manifold");
  GuessResult g;
  g.rms = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < final_state.size(); ++i) {
    const auto x = replay_center(initial, final_state.domains[i].history);
    double r = std::numeric_limits<double>::infinity();
    try {
      r = weighted_rms(x, initial.epoch, observations, correlated, sites, cfg);
    } catch (const std::exception&) {
    }
    g.candidate_rms.push_back(r);
    if (r < g.rms) {
      g.rms = r;
      g.x0 = x;
      g.best = i;
    }
  }
  g.candidates = static_cast<int>(final_state.size());
  if (!std::isfinite(g.rms)) throw std::runtime_error("reconstruct_guess: no candidate could be evaluated");
  return g;
}

// ---------------------------------------------------------------------------
// Export
// ---------------------------------------------------------------------------

inline constexpr const char* kHistoryHeader = "epoch_hours,count_propagation,count_projection,count_pruning,count_merging";

inline void write_history(std::ostream& os, const std::vector<EpochCounts>& log) {
  os << kHistoryHeader << '\n';
  for (const auto& c : log) {
    os << util::fmt(c.epoch_hours) << ',' << c.propagation << ',' << c.projection << ',' << c.pruning << ',' << c.merging
       << '\n';
  }
}

inline nlohmann::ordered_json to_json(const PruneReport& r) {
  nlohmann::ordered_json j;
  j["index"] = r.index;
  j["epoch"] = astro::format_iso8601(r.epoch);
  j["projected_count"] = r.projected_count;
  j["retained_count"] = r.retained_count;
  j["outlier"] = r.outlier;
  j["box"] = {{"ra", {r.box.ra.lower, r.box.ra.upper}}, {"dec", {r.box.dec.lower, r.box.dec.upper}}};
  auto doms = nlohmann::ordered_json::array();
  for (const auto& d : r.domains) {
    doms.push_back({{"ra", {d.ra.lower, d.ra.upper}},
                    {"dec", {d.dec.lower, d.dec.upper}},
                    {"rho", {d.rho.lower, d.rho.upper}},
                    {"retained", d.retained}});
  }
  j["domains"] = doms;
  return j;
}

inline void write_prune_reports(std::ostream& os, const std::vector<PruneReport>& reports) {
  for (const auto& r : reports) os << to_json(r).dump() << '\n';
}

/// Product of the first-order widths of the persistent variables in the
/// original box, replayed from a history.
inline double box_volume(const History& h) {
  double v = 1.0;
  for (std::size_t i = 0; i < h.size(); ++i) v /= 3.0;
  return v;
}

inline double union_volume(const Manifold& m) {
  double v = 0.0;
  for (const auto& d : m.domains) v += box_volume(d.history);
  return v;
}

}  // namespace robod::pipeline
