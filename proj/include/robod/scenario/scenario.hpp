/**
 * @file scenario.hpp
 * @brief End-to-end drivers: measurement simulation, the orbit
 *        determination run and the uncertainty-propagation comparison.
 */
#pragma once

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "robod/estimate/estimate.hpp"
#include "robod/iod/iod.hpp"
#include "robod/obs/io.hpp"
#include "robod/pipeline/pipeline.hpp"
#include "robod/scenario/config.hpp"
#include "robod/util/format.hpp"

namespace robod::scenario {

// ---------------------------------------------------------------------------
// Simulation
// ---------------------------------------------------------------------------

/// Seed of the outlier object's noise stream, distinct from the target's.
inline std::uint64_t outlier_seed(std::uint64_t seed) { return seed ^ 0x9e3779b97f4a7c15ULL; }

/// Target measurements on every pass, except the outlier passes whose epochs
/// observe the outlier object instead. Sorted by epoch.
inline std::vector<obs::Observation> simulate(const ScenarioConfig& cfg) {
  cfg.validate();
  const double t0 = cfg.t0();
  std::vector<obs::Pass> target, outlier;
  for (std::size_t p = 0; p < cfg.passes.size(); ++p) {
    obs::Pass pass{cfg.site(cfg.passes[p].site), {}};
    for (double h : cfg.passes[p].hours) pass.epochs.push_back(t0 + h * 3600.0);
    const bool is_out =
        std::find(cfg.outlier_passes.begin(), cfg.outlier_passes.end(), static_cast<int>(p) + 1) != cfg.outlier_passes.end();
    (is_out ? outlier : target).push_back(std::move(pass));
  }
  obs::SynthOptions opt;
  opt.sigma_ra = cfg.sigma_ra_arcsec * astro::kArcsec;
  opt.sigma_dec = cfg.sigma_dec_arcsec * astro::kArcsec;
  opt.seed = cfg.seed;
  auto all = obs::synthesize(cfg.target.keplerian(), t0, target, cfg.hf, opt).observations;
  if (!outlier.empty()) {
    opt.seed = outlier_seed(cfg.seed);
    opt.tag = obs::TruthTag::outlier;
    const auto o = obs::synthesize(cfg.outlier.keplerian(), t0, outlier, cfg.hf, opt).observations;
    all.insert(all.end(), o.begin(), o.end());
    std::stable_sort(all.begin(), all.end(), [](const auto& a, const auto& b) { return a.epoch < b.epoch; });
  }
  return all;
}

// ---------------------------------------------------------------------------
// Orbit determination run
// ---------------------------------------------------------------------------

/// The leading observations from the first site with consecutive gaps of at
/// most gap_hours.
inline std::vector<obs::Observation> first_pass(const std::vector<obs::Observation>& observations, double gap_hours) {
  std::vector<obs::Observation> p;
  for (const auto& o : observations) {
    if (!p.empty() && (o.site_id != p.front().site_id || o.epoch - p.back().epoch > gap_hours * 3600.0)) break;
    p.push_back(o);
  }
  return p;
}

struct Confusion {
  int target_retained = 0;
  int target_rejected = 0;
  int outlier_rejected = 0;
  int outlier_retained = 0;
};

struct Timing {
  std::string stage;
  double seconds = 0.0;
};

struct EstimateSummary {
  std::string estimator;
  est::EstimationResult result;
  Vec6 error;      ///< estimate minus truth
  Vec6 bound3;     ///< 3 sigma from the estimated covariance
  bool within_3sigma = false;
};

struct RunResult {
  std::vector<obs::Observation> observations;
  double epoch = 0.0;  ///< estimation epoch
  State6<double> truth;
  iod::IodSolution iod;
  bool pruning = false;
  std::optional<pipeline::SequenceResult> sequence;
  std::optional<pipeline::GuessResult> guess;
  std::optional<Confusion> confusion;  ///< when every observation carries a truth tag
  std::vector<int> used;               ///< observation indices given to the estimators
  State6<double> initial_guess;
  std::vector<EstimateSummary> estimates;
  std::vector<Timing> timings;
};

namespace detail {

inline double seconds_since(std::chrono::steady_clock::time_point a) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - a).count();
}

}  // namespace detail

inline RunResult run(const ScenarioConfig& cfg, const std::vector<obs::Observation>& observations, bool pruning,
                     EstimatorChoice estimator) {
  cfg.validate();
  if (observations.size() < 3) throw std::invalid_argument("run: at least 3 observations required");
  using clock = std::chrono::steady_clock;
  RunResult r;
  r.observations = observations;
  r.pruning = pruning;
  const auto sites = cfg.site_map();
  const auto pcfg = cfg.pipeline_config();

  auto t = clock::now();
  const auto pass = first_pass(observations, cfg.iod_pass_gap_hours);
  const auto triplet = iod::select_triplet(pass, cfg.site(pass.front().site_id));
  r.iod = iod::iod_expand(triplet, cfg.iod_config());
  r.epoch = r.iod.epoch;
  r.timings.push_back({"iod", detail::seconds_since(t)});

  r.initial_guess = r.iod.state;
  if (pruning) {
    t = clock::now();
    auto st = pipeline::init_from_iod(r.iod, pcfg);
    r.sequence = pipeline::run_sequence(std::move(st), observations, sites, pcfg);
    r.timings.push_back({"pipeline", detail::seconds_since(t)});
    t = clock::now();
    r.guess = pipeline::reconstruct_guess(r.sequence->state.manifold, r.iod.manifold, observations,
                                          r.sequence->state.correlated, sites, pcfg);
    r.timings.push_back({"reconstruction", detail::seconds_since(t)});
    r.initial_guess = r.guess->x0;
    r.used = r.sequence->state.correlated;
    const bool tagged = std::all_of(observations.begin(), observations.end(),
                                    [](const auto& o) { return o.truth_tag != obs::TruthTag::unknown; });
    if (tagged) {
      Confusion c;
      for (const auto& rep : r.sequence->reports) {
        const bool is_out = observations[static_cast<std::size_t>(rep.index)].truth_tag == obs::TruthTag::outlier;
        if (is_out) {
          (rep.outlier ? c.outlier_rejected : c.outlier_retained)++;
        } else {
          (rep.outlier ? c.target_rejected : c.target_retained)++;
        }
      }
      r.confusion = c;
    }
  } else {
    for (std::size_t i = 0; i < observations.size(); ++i) r.used.push_back(static_cast<int>(i));
  }

  std::vector<obs::Observation> used;
  for (int i : r.used) used.push_back(observations[static_cast<std::size_t>(i)]);
  const double t0 = cfg.t0();
  r.truth = dyn::hf_propagate(astro::kep_to_cart(cfg.target.keplerian()), t0, r.epoch, cfg.hf);
  const auto design = est::orbit_design(r.epoch, used, sites, cfg.hf);
  const Vec6 guess = est::to_vec(r.initial_guess);
  for (const char* name : {"ls", "lsar"}) {
    const std::string n = name;
    if ((n == "ls" && estimator == EstimatorChoice::lsar) || (n == "lsar" && estimator == EstimatorChoice::ls)) continue;
    t = clock::now();
    EstimateSummary s;
    s.estimator = n;
    s.result = n == "ls" ? est::ls_solve(design, guess, cfg.solver) : est::lsar_solve(design, guess, cfg.solver);
    r.timings.push_back({n, detail::seconds_since(t)});
    s.error = s.result.x0 - est::to_vec(r.truth);
    s.within_3sigma = true;
    for (int k = 0; k < 6; ++k) {
      s.bound3(k) = 3.0 * std::sqrt(std::max(0.0, s.result.P0(k, k)));
      if (std::abs(s.error(k)) > s.bound3(k)) s.within_3sigma = false;
    }
    r.estimates.push_back(std::move(s));
  }
  return r;
}

inline constexpr const char* kSummaryHeader =
    "estimator,pruning,n_used,iterations,termination,position_error_km,velocity_error_kms,"
    "err_x_km,err_y_km,err_z_km,err_vx_kms,err_vy_kms,err_vz_kms,"
    "bound3_x_km,bound3_y_km,bound3_z_km,bound3_vx_kms,bound3_vy_kms,bound3_vz_kms,within_3sigma";

inline void write_summary(std::ostream& os, const RunResult& r) {
  os << kSummaryHeader << '\n';
  for (const auto& s : r.estimates) {
    os << s.estimator << ',' << (r.pruning ? 1 : 0) << ',' << r.used.size() << ',' << s.result.iterations << ','
       << est::to_string(s.result.termination) << ',' << util::fmt(s.error.head<3>().norm()) << ','
       << util::fmt(s.error.tail<3>().norm());
    for (int k = 0; k < 6; ++k) os << ',' << util::fmt(s.error(k));
    for (int k = 0; k < 6; ++k) os << ',' << util::fmt(s.bound3(k));
    os << ',' << (s.within_3sigma ? 1 : 0) << '\n';
  }
}

inline void write_timings(std::ostream& os, const std::vector<Timing>& timings) {
  os << "stage,seconds\n";
  for (const auto& t : timings) os << t.stage << ',' << util::fmt(t.seconds) << '\n';
}

namespace detail {

inline std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream os(p);
  if (!os) throw std::runtime_error("cannot write " + p.string());
  return os;
}

}  // namespace detail

/// Writes the run artifacts into dir. Everything except timings.csv is a
/// deterministic function of the inputs.
inline void write_run(const std::filesystem::path& dir, const RunResult& r) {
  std::filesystem::create_directories(dir);
  if (r.sequence) {
    auto h = detail::open_out(dir / "history.csv");
    pipeline::write_history(h, r.sequence->state.history_log);
    auto p = detail::open_out(dir / "prune_reports.jsonl");
    pipeline::write_prune_reports(p, r.sequence->reports);
  }
  std::vector<obs::Observation> used;
  for (int i : r.used) used.push_back(r.observations[static_cast<std::size_t>(i)]);
  for (const auto& s : r.estimates) {
    auto os = detail::open_out(dir / ("estimate_" + s.estimator + ".json"));
    auto j = est::to_json(s.result, r.epoch, used);
    j["initial_guess"] = std::vector<double>(r.initial_guess.begin(), r.initial_guess.end());
    os << j.dump(2) << '\n';
  }
  auto su = detail::open_out(dir / "summary.csv");
  write_summary(su, r);
  auto ti = detail::open_out(dir / "timings.csv");
  write_timings(ti, r.timings);
}

// ---------------------------------------------------------------------------
// Uncertainty propagation comparison
// ---------------------------------------------------------------------------

struct UpMethod {
  std::string method;
  std::array<double, 6> rmse{};
  std::size_t domains = 0;
  double seconds = 0.0;
};

struct UpResult {
  int samples = 0;
  double span_days = 0.0;
  std::vector<UpMethod> methods;
  double truth_seconds = 0.0;
};

namespace detail {

/// Evaluates the manifold at a point of the original deviation box.
inline std::optional<std::vector<double>> eval_manifold(const Manifold& m, const std::vector<double>& u) {
  for (const auto& d : m.domains) {
    const auto loc = descend(u, d.history);
    if (!loc) continue;
    std::vector<double> y(d.state.size());
    for (std::size_t k = 0; k < y.size(); ++k) y[k] = da::eval(d.state[k], *loc);
    return y;
  }
  return std::nullopt;
}

inline State6<double> elements_to_cart(const std::vector<double>& e) {
  return astro::altequi_to_cart(astro::altequi_from_array(State6<double>{e[0], e[1], e[2], e[3], e[4], e[5]}));
}

}  // namespace detail

/// Propagates the initial orbit determination manifold over the span with
/// the low-fidelity, multifidelity and high-fidelity polynomial models and
/// compares each against pointwise high-fidelity propagation of uniform
/// samples of the deviation box.
inline UpResult validate_up(const ScenarioConfig& cfg, const std::vector<obs::Observation>& observations) {
  cfg.validate();
  using clock = std::chrono::steady_clock;
  const auto pass = first_pass(observations, cfg.iod_pass_gap_hours);
  const auto sol = iod::iod_expand(iod::select_triplet(pass, cfg.site(pass.front().site_id)), cfg.iod_config());
  const auto pcfg = cfg.pipeline_config();
  const double t0 = sol.epoch;
  const double t1 = t0 + cfg.up.span_days * astro::kSecondsPerDay;

  UpResult out;
  out.samples = cfg.up.samples;
  out.span_days = cfg.up.span_days;

  std::mt19937_64 rng(cfg.up.seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<std::vector<double>> pts(static_cast<std::size_t>(cfg.up.samples), std::vector<double>(6));
  for (auto& p : pts) {
    for (auto& x : p) x = u(rng);
  }
  std::vector<State6<double>> truth;
  auto t = clock::now();
  for (const auto& p : pts) {
    const auto x0 = detail::eval_manifold(sol.manifold, p);
    if (!x0) throw std::logic_error("validate_up: sample outside the initial manifold");
    truth.push_back(dyn::hf_propagate(State6<double>{(*x0)[0], (*x0)[1], (*x0)[2], (*x0)[3], (*x0)[4], (*x0)[5]}, t0, t1,
                                      cfg.hf, pcfg.hf_tol));
  }
  out.truth_seconds = detail::seconds_since(t);

  auto score = [&](const std::string& name, const Manifold& m, bool elements, double secs) {
    UpMethod r;
    r.method = name;
    r.domains = m.size();
    r.seconds = secs;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const auto y = detail::eval_manifold(m, pts[i]);
      if (!y) throw std::logic_error("validate_up: sample not covered by the " + name + " manifold");
      const auto x = elements ? detail::elements_to_cart(*y) : State6<double>{(*y)[0], (*y)[1], (*y)[2], (*y)[3], (*y)[4], (*y)[5]};
      for (std::size_t k = 0; k < 6; ++k) r.rmse[k] += std::pow(x[k] - truth[i][k], 2);
    }
    for (auto& v : r.rmse) v = std::sqrt(v / static_cast<double>(pts.size()));
    out.methods.push_back(r);
  };

  const auto init = pipeline::init_from_iod(sol, pcfg);
  t = clock::now();
  const auto lf = pipeline::lf_step(init.manifold, t1, pcfg);
  score("LF", lf.output, true, detail::seconds_since(t));

  t = clock::now();
  const auto mf = pipeline::mf_step(init.manifold, t1, pcfg);
  score("MF", mf, true, detail::seconds_since(t));

  if (cfg.up.hf_da) {
    t = clock::now();
    const auto& hf = pcfg.hf;
    auto f = [&](const std::vector<TaylorPoly>& x) {
      const auto y = dyn::hf_propagate(State6<TaylorPoly>{x[0], x[1], x[2], x[3], x[4], x[5]}, t0, t1, hf);
      return std::vector<TaylorPoly>(y.begin(), y.end());
    };
    const auto res = adaptive_eval(f, sol.manifold, pcfg.eps, pcfg.max_depth);
    score("HF-DA", res.output, false, detail::seconds_since(t));
  }
  return out;
}

inline constexpr const char* kUpHeader =
    "method,rmse_x_km,rmse_y_km,rmse_z_km,rmse_vx_kms,rmse_vy_kms,rmse_vz_kms,domains,seconds";

inline void write_up(std::ostream& os, const UpResult& r) {
  os << kUpHeader << '\n';
  for (const auto& m : r.methods) {
    os << m.method;
    for (double v : m.rmse) os << ',' << util::fmt(v);
    os << ',' << m.domains << ',' << util::fmt(m.seconds) << '\n';
  }
}

}  // namespace robod::scenario
