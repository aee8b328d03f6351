/**
 * @file io.hpp
 * @brief Observation and site CSV files.
 */
#pragma once

#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "robod/obs/observation.hpp"
#include "robod/util/format.hpp"

namespace robod::obs {

inline constexpr const char* kObservationHeader = "epoch_iso8601,site_id,ra_rad,dec_rad,sigma_ra_rad,sigma_dec_rad,truth_tag";
inline constexpr const char* kSiteHeader = "site_id,lat_deg,lon_deg,height_km";

inline void write_observations(std::ostream& os, const std::vector<Observation>& obs) {
  os << kObservationHeader << '\n';
  for (const auto& o : obs) {
    os << astro::format_iso8601(o.epoch) << ',' << o.site_id << ',' << util::fmt(o.ra) << ',' << util::fmt(o.dec) << ','
       << util::fmt(o.sigma_ra) << ',' << util::fmt(o.sigma_dec) << ',' << to_string(o.truth_tag) << '\n';
  }
}

inline std::vector<Observation> read_observations(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw std::invalid_argument("observation file is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kObservationHeader) throw std::invalid_argument("unexpected observation header: " + line);
  std::vector<Observation> out;
  int lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const auto f = util::split_csv_line(line);
    if (f.size() != 7) throw std::invalid_argument("observation line " + std::to_string(lineno) + ": expected 7 fields");
    Observation o;
    o.epoch = astro::parse_iso8601(f[0]);
    o.site_id = f[1];
    o.ra = util::parse_double(f[2], "ra_rad");
    o.dec = util::parse_double(f[3], "dec_rad");
    o.sigma_ra = util::parse_double(f[4], "sigma_ra_rad");
    o.sigma_dec = util::parse_double(f[5], "sigma_dec_rad");
    o.truth_tag = truth_tag_from_string(f[6]);
    o.validate();
    out.push_back(o);
  }
  return out;
}

inline void write_sites(std::ostream& os, const std::vector<astro::Site>& sites) {
  os << kSiteHeader << '\n';
  for (const auto& s : sites) {
    os << s.id << ',' << util::fmt(s.lat / astro::kDeg) << ',' << util::fmt(s.lon / astro::kDeg) << ','
       << util::fmt(s.height) << '\n';
  }
}

inline std::vector<astro::Site> read_sites(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw std::invalid_argument("site file is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kSiteHeader) throw std::invalid_argument("unexpected site header: " + line);
  std::vector<astro::Site> out;
  while (std::getline(is, line)) {
    if (line.empty() || line == "\r") continue;
    const auto f = util::split_csv_line(line);
    if (f.size() != 4) throw std::invalid_argument("site line: expected 4 fields");
    out.push_back({f[0], util::parse_double(f[1], "lat_deg") * astro::kDeg, util::parse_double(f[2], "lon_deg") * astro::kDeg,
                   util::parse_double(f[3], "height_km")});
  }
  return out;
}

template <class Reader>
auto read_file(const std::string& path, Reader reader) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open " + path);
  return reader(is);
}

inline std::map<std::string, astro::Site> site_map(const std::vector<astro::Site>& sites) {
  std::map<std::string, astro::Site> m;
  for (const auto& s : sites) {
    if (!m.emplace(s.id, s).second) throw std::invalid_argument("duplicate site id " + s.id);
  }
  return m;
}

}  // namespace robod::obs
