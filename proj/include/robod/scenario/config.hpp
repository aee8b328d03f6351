/**
 * @file config.hpp
 * @brief Scenario configuration: JSON schema with defaults, strict key
 *        checking and conversion to the module configurations.
 */
#pragma once

#include <cstdint>
#include <fstream>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "robod/astro/elements.hpp"
#include "robod/astro/frames.hpp"
#include "robod/astro/time.hpp"
#include "robod/dynamics/forces.hpp"
#include "robod/dynamics/propagate.hpp"
#include "robod/estimate/estimate.hpp"
#include "robod/iod/iod.hpp"
#include "robod/pipeline/pipeline.hpp"

namespace robod::scenario {

using json = nlohmann::ordered_json;

struct ElementsConfig {
  double a_km = 0, e = 0, i_deg = 0, raan_deg = 0, argp_deg = 0, mean_anomaly_deg = 0;

  [[nodiscard]] astro::Keplerian<double> keplerian() const {
    return {a_km, e, i_deg * astro::kDeg, raan_deg * astro::kDeg, argp_deg * astro::kDeg, mean_anomaly_deg * astro::kDeg};
  }
};

struct PassConfig {
  std::string site;
  std::vector<double> hours;  ///< offsets from the scenario epoch
};

enum class EstimatorChoice { ls, lsar, both };

inline std::string to_string(EstimatorChoice e) {
  switch (e) {
    case EstimatorChoice::ls: return "ls";
    case EstimatorChoice::lsar: return "lsar";
    default: return "both";
  }
}

inline EstimatorChoice estimator_from_string(const std::string& s) {
  if (s == "ls") return EstimatorChoice::ls;
  if (s == "lsar") return EstimatorChoice::lsar;
  if (s == "both") return EstimatorChoice::both;
  throw std::invalid_argument("estimator must be one of ls, lsar, both (got '" + s + "')");
}

struct UpValidationConfig {
  int samples = 500;
  double span_days = 5.0;
  std::uint64_t seed = 7;
  bool hf_da = true;
};

struct ScenarioConfig {
  std::string epoch = "2019-02-25T18:49:01.148";
  ElementsConfig target{22953.852669768778, 0.707854612716, 3.387521317683, -168.891499315499, 172.980213527756,
                        60.742995057860};
  ElementsConfig outlier{22953.852669768778, 0.687854612716, 3.387521317683, -168.891499315499, 172.980213527756,
                         60.742995057860};
  std::vector<astro::Site> sites{{"reunion", -21.1992 * astro::kDeg, 55.4094 * astro::kDeg, 0.972},
                                 {"calern", 43.7522 * astro::kDeg, 6.9236 * astro::kDeg, 1.27}};
  std::vector<PassConfig> passes{
      {"reunion",
       {0.0, 0.00667388888888889, 0.0133258333333333, 4.39337888888889, 4.40004833333333, 5.20617527777778,
        5.21283222222222, 5.21949694444444}},
      {"reunion", {52.6387119444444, 52.6453727777778, 52.6523152777778}},
      {"reunion", {78.7817813888889, 78.7884552777778, 78.79512}},
      {"reunion", {100.366146944444, 100.372816666667}},
      {"calern", {101.157182777778, 101.164106666667}}};
  double sigma_ra_arcsec = 1.285;
  double sigma_dec_arcsec = 1.280;
  double c = 3.0;
  double eps = 1e-2;
  int max_depth = 12;
  int order = 2;
  std::uint64_t seed = 1;
  bool pruning = true;
  std::vector<int> outlier_passes;  ///< 1-based pass numbers
  EstimatorChoice estimator = EstimatorChoice::both;
  dyn::ForceConfig hf;
  double lf_j2 = astro::kJ2;
  double process_noise_q = 1e-22;  ///< (km/s^2)^2 s, isotropic
  bool iod_j2_correction = true;
  iod::J2Propagator iod_j2_propagator = iod::J2Propagator::numerical;
  double iod_pass_gap_hours = 12.0;
  est::SolverOptions solver;
  UpValidationConfig up;

  void validate() const {
    astro::parse_iso8601(epoch);
    if (!(target.a_km > 0.0) || !(target.e >= 0.0 && target.e < 1.0)) throw std::invalid_argument("target: bad elements");
    if (!(outlier.a_km > 0.0) || !(outlier.e >= 0.0 && outlier.e < 1.0)) throw std::invalid_argument("outlier: bad elements");
    if (passes.empty()) throw std::invalid_argument("passes: at least one pass required");
    std::set<std::string> ids;
    for (const auto& s : sites) {
      if (!ids.insert(s.id).second) throw std::invalid_argument("sites: duplicate id " + s.id);
    }
    double last = -1e300;
    for (const auto& p : passes) {
      if (!ids.count(p.site)) throw std::invalid_argument("passes: unknown site '" + p.site + "'");
      if (p.hours.empty()) throw std::invalid_argument("passes: empty pass");
      for (double h : p.hours) {
        if (!(h > last)) throw std::invalid_argument("passes: epochs must be strictly increasing");
        last = h;
      }
    }
    if (passes.front().hours.size() < 3) throw std::invalid_argument("passes: the first pass needs at least 3 epochs");
    for (int k : outlier_passes) {
      if (k < 1 || k > static_cast<int>(passes.size())) throw std::invalid_argument("outlier_passes: index out of range");
      if (k == 1) throw std::invalid_argument("outlier_passes: the first pass is used for initial orbit determination");
    }
    if (!(sigma_ra_arcsec > 0.0) || !(sigma_dec_arcsec > 0.0)) throw std::invalid_argument("sigmas must be positive");
    if (!(c > 0.0) || !(eps > 0.0) || max_depth < 0) throw std::invalid_argument("c, eps must be positive, max_depth >= 0");
    if (order < 1 || order > 6) throw std::invalid_argument("order must be in 1..6");
    if (!(process_noise_q >= 0.0)) throw std::invalid_argument("process_noise_q must be non-negative");
    if (up.samples < 1 || !(up.span_days > 0.0)) throw std::invalid_argument("validate_up: bad samples or span");
    hf.validate();
  }

  [[nodiscard]] double t0() const { return astro::parse_iso8601(epoch); }

  [[nodiscard]] pipeline::PipelineConfig pipeline_config() const {
    pipeline::PipelineConfig p;
    p.c = c;
    p.eps = eps;
    p.max_depth = max_depth;
    p.hf = hf;
    p.noise.Q = Mat3::Identity() * process_noise_q;
    p.lf_j2 = lf_j2;
    return p;
  }

  [[nodiscard]] iod::IodConfig iod_config() const {
    iod::IodConfig i;
    i.c = c;
    i.eps = eps;
    i.max_depth = max_depth;
    i.order = order;
    i.j2_correction = iod_j2_correction;
    i.j2_propagator = iod_j2_propagator;
    return i;
  }

  [[nodiscard]] const astro::Site& site(const std::string& id) const {
    for (const auto& s : sites) {
      if (s.id == id) return s;
    }
    throw std::invalid_argument("unknown site '" + id + "'");
  }

  [[nodiscard]] pipeline::SiteMap site_map() const {
    pipeline::SiteMap m;
    for (const auto& s : sites) m.emplace(s.id, s);
    return m;
  }
};

namespace detail {

inline void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw std::invalid_argument(where + ": expected an object");
  for (const auto& [k, v] : j.items()) {
    if (!allowed.count(k)) throw std::invalid_argument(where + ": unknown key '" + k + "'");
  }
}

template <class T>
void get_if(const json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw std::invalid_argument(where + "." + key + ": " + e.what());
  }
}

inline json elements_to_json(const ElementsConfig& e) {
  return {{"a_km", e.a_km}, {"e", e.e}, {"i_deg", e.i_deg}, {"raan_deg", e.raan_deg}, {"argp_deg", e.argp_deg},
          {"mean_anomaly_deg", e.mean_anomaly_deg}};
}

inline void elements_from_json(const json& j, ElementsConfig& e, const std::string& where) {
  check_keys(j, {"a_km", "e", "i_deg", "raan_deg", "argp_deg", "mean_anomaly_deg"}, where);
  get_if(j, "a_km", e.a_km, where);
  get_if(j, "e", e.e, where);
  get_if(j, "i_deg", e.i_deg, where);
  get_if(j, "raan_deg", e.raan_deg, where);
  get_if(j, "argp_deg", e.argp_deg, where);
  get_if(j, "mean_anomaly_deg", e.mean_anomaly_deg, where);
}

}  // namespace detail

inline json to_json(const ScenarioConfig& c) {
  json j;
  j["epoch"] = c.epoch;
  j["target"] = detail::elements_to_json(c.target);
  j["outlier"] = detail::elements_to_json(c.outlier);
  auto sites = json::array();
  for (const auto& s : c.sites) {
    sites.push_back({{"id", s.id}, {"lat_deg", s.lat / astro::kDeg}, {"lon_deg", s.lon / astro::kDeg}, {"height_km", s.height}});
  }
  j["sites"] = sites;
  auto passes = json::array();
  for (const auto& p : c.passes) passes.push_back({{"site", p.site}, {"hours", p.hours}});
  j["passes"] = passes;
  j["sigma_ra_arcsec"] = c.sigma_ra_arcsec;
  j["sigma_dec_arcsec"] = c.sigma_dec_arcsec;
  j["c"] = c.c;
  j["eps"] = c.eps;
  j["max_depth"] = c.max_depth;
  j["order"] = c.order;
  j["seed"] = c.seed;
  j["pruning"] = c.pruning;
  j["outlier_passes"] = c.outlier_passes;
  j["estimator"] = to_string(c.estimator);
  j["hf_force"] = {{"zonal_degree", c.hf.zonal_degree}, {"sun_moon", c.hf.sun_moon},     {"drag", c.hf.drag},
                   {"srp", c.hf.srp},                   {"area_to_mass", c.hf.area_to_mass}, {"cd", c.hf.cd},
                   {"cr", c.hf.cr}};
  j["lf_j2"] = c.lf_j2;
  j["process_noise_q"] = c.process_noise_q;
  j["iod"] = {{"j2_correction", c.iod_j2_correction},
              {"j2_propagator", c.iod_j2_propagator == iod::J2Propagator::numerical ? "numerical" : "analytic"},
              {"pass_gap_hours", c.iod_pass_gap_hours}};
  j["solver"] = {{"lambda0", c.solver.lambda0},   {"lambda_factor", c.solver.lambda_factor}, {"eps_res", c.solver.eps_res},
                 {"eps_opt", c.solver.eps_opt},   {"eps_step", c.solver.eps_step},           {"max_iter", c.solver.max_iter}};
  j["validate_up"] = {{"samples", c.up.samples}, {"span_days", c.up.span_days}, {"seed", c.up.seed}, {"hf_da", c.up.hf_da}};
  return j;
}

/// Overlays a JSON document on the defaults. Unknown keys are rejected.
inline ScenarioConfig config_from_json(const json& j) {
  ScenarioConfig c;
  const std::string w = "config";
  detail::check_keys(j,
                     {"epoch", "target", "outlier", "sites", "passes", "sigma_ra_arcsec", "sigma_dec_arcsec", "c", "eps",
                      "max_depth", "order", "seed", "pruning", "outlier_passes", "estimator", "hf_force", "lf_j2",
                      "process_noise_q", "iod", "solver", "validate_up"},
                     w);
  detail::get_if(j, "epoch", c.epoch, w);
  if (j.contains("target")) detail::elements_from_json(j["target"], c.target, "target");
  if (j.contains("outlier")) detail::elements_from_json(j["outlier"], c.outlier, "outlier");
  if (j.contains("sites")) {
    if (!j["sites"].is_array()) throw std::invalid_argument("sites: expected an array");
    c.sites.clear();
    for (const auto& s : j["sites"]) {
      detail::check_keys(s, {"id", "lat_deg", "lon_deg", "height_km"}, "sites[]");
      astro::Site site;
      double lat = 0, lon = 0;
      detail::get_if(s, "id", site.id, "sites[]");
      detail::get_if(s, "lat_deg", lat, "sites[]");
      detail::get_if(s, "lon_deg", lon, "sites[]");
      detail::get_if(s, "height_km", site.height, "sites[]");
      site.lat = lat * astro::kDeg;
      site.lon = lon * astro::kDeg;
      c.sites.push_back(site);
    }
  }
  if (j.contains("passes")) {
    if (!j["passes"].is_array()) throw std::invalid_argument("passes: expected an array");
    c.passes.clear();
    for (const auto& p : j["passes"]) {
      detail::check_keys(p, {"site", "hours"}, "passes[]");
      PassConfig pc;
      detail::get_if(p, "site", pc.site, "passes[]");
      detail::get_if(p, "hours", pc.hours, "passes[]");
      c.passes.push_back(pc);
    }
  }
  detail::get_if(j, "sigma_ra_arcsec", c.sigma_ra_arcsec, w);
  detail::get_if(j, "sigma_dec_arcsec", c.sigma_dec_arcsec, w);
  detail::get_if(j, "c", c.c, w);
  detail::get_if(j, "eps", c.eps, w);
  detail::get_if(j, "max_depth", c.max_depth, w);
  detail::get_if(j, "order", c.order, w);
  detail::get_if(j, "seed", c.seed, w);
  detail::get_if(j, "pruning", c.pruning, w);
  detail::get_if(j, "outlier_passes", c.outlier_passes, w);
  if (j.contains("estimator")) c.estimator = estimator_from_string(j["estimator"].get<std::string>());
  if (j.contains("hf_force")) {
    const auto& f = j["hf_force"];
    const std::string wf = "hf_force";
    detail::check_keys(f, {"zonal_degree", "sun_moon", "drag", "srp", "area_to_mass", "cd", "cr"}, wf);
    detail::get_if(f, "zonal_degree", c.hf.zonal_degree, wf);
    detail::get_if(f, "sun_moon", c.hf.sun_moon, wf);
    detail::get_if(f, "drag", c.hf.drag, wf);
    detail::get_if(f, "srp", c.hf.srp, wf);
    detail::get_if(f, "area_to_mass", c.hf.area_to_mass, wf);
    detail::get_if(f, "cd", c.hf.cd, wf);
    detail::get_if(f, "cr", c.hf.cr, wf);
  }
  detail::get_if(j, "lf_j2", c.lf_j2, w);
  detail::get_if(j, "process_noise_q", c.process_noise_q, w);
  if (j.contains("iod")) {
    const auto& i = j["iod"];
    detail::check_keys(i, {"j2_correction", "j2_propagator", "pass_gap_hours"}, "iod");
    detail::get_if(i, "j2_correction", c.iod_j2_correction, "iod");
    detail::get_if(i, "pass_gap_hours", c.iod_pass_gap_hours, "iod");
    if (i.contains("j2_propagator")) {
      const auto s = i["j2_propagator"].get<std::string>();
      if (s == "numerical") {
        c.iod_j2_propagator = iod::J2Propagator::numerical;
      } else if (s == "analytic") {
        c.iod_j2_propagator = iod::J2Propagator::analytic;
      } else {
        throw std::invalid_argument("iod.j2_propagator must be numerical or analytic");
      }
    }
  }
  if (j.contains("solver")) {
    const auto& s = j["solver"];
    detail::check_keys(s, {"lambda0", "lambda_factor", "eps_res", "eps_opt", "eps_step", "max_iter"}, "solver");
    detail::get_if(s, "lambda0", c.solver.lambda0, "solver");
    detail::get_if(s, "lambda_factor", c.solver.lambda_factor, "solver");
    detail::get_if(s, "eps_res", c.solver.eps_res, "solver");
    detail::get_if(s, "eps_opt", c.solver.eps_opt, "solver");
    detail::get_if(s, "eps_step", c.solver.eps_step, "solver");
    detail::get_if(s, "max_iter", c.solver.max_iter, "solver");
  }
  if (j.contains("validate_up")) {
    const auto& u = j["validate_up"];
    detail::check_keys(u, {"samples", "span_days", "seed", "hf_da"}, "validate_up");
    detail::get_if(u, "samples", c.up.samples, "validate_up");
    detail::get_if(u, "span_days", c.up.span_days, "validate_up");
    detail::get_if(u, "seed", c.up.seed, "validate_up");
    detail::get_if(u, "hf_da", c.up.hf_da, "validate_up");
  }
  c.validate();
  return c;
}

inline ScenarioConfig load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open config " + path);
  json j;
  try {
    j = json::parse(is, nullptr, true, true);
  } catch (const json::exception& e) {
    throw std::invalid_argument("config " + path + ": " + e.what());
  }
  return config_from_json(j);
}

}  // namespace robod::scenario
