/**
 * @file observation.hpp
 * @brief Optical angles-only measurements: projection of a state onto
 *        topocentric right ascension and declination, measurement boxes,
 *        polynomial lifting and synthetic generation.
 */
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "robod/astro/elements.hpp"
#include "robod/astro/frames.hpp"
#include "robod/da/taylor_poly.hpp"
#include "robod/dynamics/propagate.hpp"
#include "robod/linalg.hpp"

namespace robod::obs {

enum class TruthTag { target, outlier, unknown };

inline std::string to_string(TruthTag t) {
  switch (t) {
    case TruthTag::target: return "target";
    case TruthTag::outlier: return "outlier";
    default: return "unknown";
  }
}

inline TruthTag truth_tag_from_string(const std::string& s) {
  if (s == "target") return TruthTag::target;
  if (s == "outlier") return TruthTag::outlier;
  if (s == "unknown" || s.empty()) return TruthTag::unknown;
  throw std::invalid_argument("unknown truth_tag '" + s + "'");
}

struct Observation {
  astro::Epoch epoch = 0.0;
  std::string site_id;
  double ra = 0.0;
  double dec = 0.0;
  double sigma_ra = 0.0;
  double sigma_dec = 0.0;
  TruthTag truth_tag = TruthTag::unknown;

  void validate() const {
    if (!(sigma_ra > 0.0) || !(sigma_dec > 0.0)) throw std::invalid_argument("observation sigmas must be positive");
    if (!(std::abs(dec) <= astro::kPi / 2)) throw std::invalid_argument("observation declination out of range");
    if (!std::isfinite(ra) || !std::isfinite(epoch)) throw std::invalid_argument("observation has non-finite fields");
  }
};

struct MeasurementBox {
  RangeBound ra;
  RangeBound dec;
};

template <class T>
struct Projection {
  T rho, ra, dec;
};

/// Topocentric range, right ascension and declination of x seen from a site.
template <class T>
Projection<T> project(const State6<T>& x, const astro::Site& site, astro::Epoch t) {
  using std::asin;
  using std::atan2;
  const auto so = astro::site_inertial(site, t);
  const Vec3<T> d{x[0] - so.r[0], x[1] - so.r[1], x[2] - so.r[2]};
  const T rho = norm(d);
  if (!(cst(rho) > 0.0)) throw std::domain_error("project: zero range");
  return {rho, atan2(d[1], d[0]), asin(d[2] / rho)};
}

/// Inverse of project: inertial position from range and angles.
inline Vec3<double> so_pos(const astro::Site& site, astro::Epoch t, double rho, double ra, double dec) {
  const auto so = astro::site_inertial(site, t);
  return {so.r[0] + rho * std::cos(ra) * std::cos(dec), so.r[1] + rho * std::sin(ra) * std::cos(dec),
          so.r[2] + rho * std::sin(dec)};
}

/// Unit line of sight from angles.
template <class T>
Vec3<T> line_of_sight(const T& ra, const T& dec) {
  using std::cos;
  using std::sin;
  return {cos(ra) * cos(dec), sin(ra) * cos(dec), sin(dec)};
}

inline MeasurementBox measurement_box(const Observation& o, double c) {
  if (!(c >= 0.0)) throw std::invalid_argument("measurement_box: c must be non-negative");
  return {{o.ra - c * o.sigma_ra, o.ra + c * o.sigma_ra}, {o.dec - c * o.sigma_dec, o.dec + c * o.sigma_dec}};
}

/// First-order polynomials ra + c sigma_ra dy_ra, dec + c sigma_dec dy_dec on
/// the given variables of an algebra.
inline std::array<TaylorPoly, 2> lift(const Observation& o, double c, const AlgebraSpec& spec, int var_ra, int var_dec) {
  if (!(c >= 0.0)) throw std::invalid_argument("lift: c must be non-negative");
  return {TaylorPoly::variable(spec, var_ra, o.ra, c * o.sigma_ra),
          TaylorPoly::variable(spec, var_dec, o.dec, c * o.sigma_dec)};
}

/// Elevation of a real state above a site's local horizon.
inline double elevation(const State6<double>& x, const astro::Site& site, astro::Epoch t) {
  const auto so = astro::site_inertial(site, t);
  const Vec3<double> d = sub(position(x), so.r);
  const double s = dot(d, astro::site_zenith(site, t)) / norm(d);
  return std::asin(std::clamp(s, -1.0, 1.0));
}

struct Pass {
  astro::Site site;
  std::vector<astro::Epoch> epochs;
};

struct SynthOptions {
  double sigma_ra = 1.285 * astro::kArcsec;
  double sigma_dec = 1.280 * astro::kArcsec;
  bool add_noise = true;
  std::uint64_t seed = 1;
  TruthTag tag = TruthTag::target;
};

struct SynthResult {
  std::vector<Observation> observations;
  std::vector<astro::Epoch> below_horizon;  ///< epochs skipped, elevation < 0
};

/// Propagates the truth with the high-fidelity model to every epoch, projects
/// it and adds Gaussian noise. Draws are made in epoch order, ra then dec.
inline SynthResult synthesize(const astro::Keplerian<double>& truth, astro::Epoch t0, const std::vector<Pass>& passes,
                              const dyn::ForceConfig& cfg, const SynthOptions& opt) {
  struct Item {
    astro::Epoch t;
    std::size_t pass;
  };
  std::vector<Item> items;
  for (std::size_t p = 0; p < passes.size(); ++p) {
    for (auto t : passes[p].epochs) items.push_back({t, p});
  }
  for (std::size_t i = 1; i < items.size(); ++i) {
    if (items[i].t < items[i - 1].t) throw std::invalid_argument("synthesize: epochs must be sorted");
  }
  std::mt19937_64 rng(opt.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  SynthResult out;
  State6<double> x = astro::kep_to_cart(truth);
  astro::Epoch t = t0;
  for (const auto& it : items) {
    x = dyn::hf_propagate(x, t, it.t, cfg);
    t = it.t;
    const auto& site = passes[it.pass].site;
    const double n_ra = gauss(rng), n_dec = gauss(rng);
    if (elevation(x, site, t) < 0.0) {
      out.below_horizon.push_back(t);
      continue;
    }
    const auto pr = project(x, site, t);
    Observation o;
    o.epoch = t;
    o.site_id = site.id;
    o.ra = pr.ra;
    o.dec = pr.dec;
    if (opt.add_noise) {
      o.ra = astro::wrap_pi(o.ra + opt.sigma_ra * n_ra);
      o.dec = std::clamp(o.dec + opt.sigma_dec * n_dec, -astro::kPi / 2, astro::kPi / 2);
    }
    o.sigma_ra = opt.sigma_ra;
    o.sigma_dec = opt.sigma_dec;
    o.truth_tag = opt.tag;
    out.observations.push_back(o);
  }
  return out;
}

}  // namespace robod::obs
