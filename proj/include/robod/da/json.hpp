/**
 * @file json.hpp
 * @brief Debug serialization of a TaylorPoly as
 *        {"order":n,"nvars":v,"terms":[{"exp":[..],"coef":..}]}.
 */
#pragma once

#include <json.hpp>

#include "robod/da/taylor_poly.hpp"

namespace robod::da {

inline nlohmann::json to_json(const TaylorPoly& p) {
  const auto& L = p.spec().layout();
  nlohmann::json terms = nlohmann::json::array();
  for (std::size_t m = 0; m < L.size(); ++m) {
    if (p[m] == 0.0) continue;
    terms.push_back({{"exp", L.exponents[m]}, {"coef", p[m]}});
  }
  return {{"order", p.spec().order()}, {"nvars", p.spec().nvars()}, {"terms", terms}};
}

inline TaylorPoly poly_from_json(const nlohmann::json& j) {
  const AlgebraSpec spec(j.at("order").get<int>(), j.at("nvars").get<int>());
  TaylorPoly p(spec);
  for (const auto& t : j.at("terms")) p.set_coeff(t.at("exp").get<std::vector<int>>(), t.at("coef").get<double>());
  return p;
}

}  // namespace robod::da
