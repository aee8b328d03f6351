/**
 * @file manifold.hpp
 * @brief Polynomial domains, nonlinearity index, trisection (LOADS) and
 *        history-based merging.
 *
 * A Domain is a vector of polynomials over a shared deviation box
 * [-1, 1]^v together with the ordered list of trisections that carved it out
 * of an original box. A Manifold is the set of domains jointly covering one
 * uncertainty set.
 */
#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "robod/da/taylor_poly.hpp"
#include "robod/linalg.hpp"

namespace robod {

struct SplitRecord {
  int direction = 0;
  int third = 2;  // 1, 2 or 3

  friend bool operator==(const SplitRecord&, const SplitRecord&) = default;
  friend auto operator<=>(const SplitRecord&, const SplitRecord&) = default;
};

using History = std::vector<SplitRecord>;

inline std::string to_string(const History& h) {
  std::string s;
  for (const auto& r : h) {
    if (!s.empty()) s += ' ';
    s += std::to_string(r.direction) + ':' + std::to_string(r.third);
  }
  return s;
}

struct Domain {
  std::vector<TaylorPoly> state;
  History history;
  Mat6 pn_cov = Mat6::Zero();
  double epoch = 0.0;
  bool depth_flagged = false;
};

struct Manifold {
  std::vector<Domain> domains;
  double epoch = 0.0;

  [[nodiscard]] std::size_t size() const { return domains.size(); }
  [[nodiscard]] bool empty() const { return domains.empty(); }
};

/// Evaluation failure inside one domain, carrying that domain's history.
class DomainError : public std::runtime_error {
 public:
  DomainError(const std::string& what, History h)
      : std::runtime_error(what + " [history: " + to_string(h) + "]"), history_(std::move(h)) {}
  [[nodiscard]] const History& history() const { return history_; }

 private:
  History history_;
};

// ---------------------------------------------------------------------------
// Nonlinearity index
// ---------------------------------------------------------------------------

struct NliParts {
  double numerator = 0.0;
  double denominator = 0.0;

  /// Ratio with 0/0 read as linear and x/0 as infinitely nonlinear.
  [[nodiscard]] double value() const {
    if (denominator > 0.0) return numerator / denominator;
    return numerator > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
  }
};

/// direction < 0 uses every variable; otherwise only that one.
inline NliParts nli_parts(const std::vector<TaylorPoly>& pv, int direction = -1) {
  if (pv.empty()) throw std::invalid_argument("nli: empty vector");
  const auto& spec = pv[0].spec();
  for (const auto& p : pv) pv[0].check_same(p);
  const int v = spec.nvars();
  if (direction >= v) throw std::invalid_argument("nli: direction out of range");
  const auto& L = spec.layout();
  std::vector<int> e(static_cast<std::size_t>(v), 0);
  double num = 0.0, den = 0.0;
  for (const auto& p : pv) {
    for (int j = 0; j < v; ++j) {
      const double jbar = p.linear(j);
      den += jbar * jbar;
      if (spec.order() < 2) continue;
      double s = 0.0;
      for (int k = 0; k < v; ++k) {
        if (direction >= 0 && k != direction) continue;
        e[static_cast<std::size_t>(j)] += 1;
        e[static_cast<std::size_t>(k)] += 1;
        const int m = L.find(e);
        e[static_cast<std::size_t>(j)] -= 1;
        e[static_cast<std::size_t>(k)] -= 1;
        s += std::abs((j == k ? 2.0 : 1.0) * p[static_cast<std::size_t>(m)]);
      }
      num += s * s;
    }
  }
  return {std::sqrt(num), std::sqrt(den)};
}

inline double nli(const std::vector<TaylorPoly>& pv) {
  const auto parts = nli_parts(pv);
  if (parts.denominator == 0.0) throw std::domain_error("nli: degenerate map (zero constant Jacobian)");
  return parts.numerator / parts.denominator;
}

inline double directional_nli(const std::vector<TaylorPoly>& pv, int d) {
  if (!pv.empty() && (d < 0 || d >= pv[0].spec().nvars())) {
    throw std::invalid_argument("directional_nli: direction out of range");
  }
  const auto parts = nli_parts(pv, d);
  if (parts.denominator == 0.0) throw std::domain_error("nli: degenerate map (zero constant Jacobian)");
  return parts.numerator / parts.denominator;
}

// ---------------------------------------------------------------------------
// Split / merge
// ---------------------------------------------------------------------------

/// Substitution for child j along d: dx_d -> (2/3)(j-2) + (1/3) dx_d.
inline std::vector<TaylorPoly> child_map(const AlgebraSpec& spec, int d, int third) {
  std::vector<TaylorPoly> args;
  args.reserve(static_cast<std::size_t>(spec.nvars()));
  for (int v = 0; v < spec.nvars(); ++v) {
    if (v == d) {
      args.push_back(TaylorPoly::variable(spec, v, (2.0 / 3.0) * (third - 2), 1.0 / 3.0));
    } else {
      args.push_back(TaylorPoly::variable(spec, v));
    }
  }
  return args;
}

inline std::vector<TaylorPoly> split_state(const std::vector<TaylorPoly>& state, int d, int third) {
  const auto args = child_map(state[0].spec(), d, third);
  std::vector<TaylorPoly> out;
  out.reserve(state.size());
  for (const auto& p : state) out.push_back(compose(p, args));
  return out;
}

inline std::array<Domain, 3> split(const Domain& dom, int d) {
  if (dom.state.empty()) throw std::invalid_argument("split: empty domain");
  if (d < 0 || d >= dom.state[0].spec().nvars()) throw std::invalid_argument("split: direction out of range");
  std::array<Domain, 3> out;
  for (int j = 1; j <= 3; ++j) {
    Domain& c = out[static_cast<std::size_t>(j - 1)];
    c.state = split_state(dom.state, d, j);
    c.history = dom.history;
    c.history.push_back({d, j});
    c.pn_cov = dom.pn_cov;
    c.epoch = dom.epoch;
  }
  return out;
}

/// Applies a recorded split sequence to a state.
inline std::vector<TaylorPoly> replay(std::vector<TaylorPoly> state, const History& h) {
  for (const auto& r : h) state = split_state(state, r.direction, r.third);
  return state;
}

/// Maps a point of the original box to the local coordinates of the domain
/// with history h, or nothing when the point lies elsewhere. Subintervals are
/// half-open so every point has exactly one owner.
inline std::optional<std::vector<double>> descend(std::vector<double> pt, const History& h) {
  for (const auto& r : h) {
    double& t = pt[static_cast<std::size_t>(r.direction)];
    const int j = t < -1.0 / 3.0 ? 1 : (t < 1.0 / 3.0 ? 2 : 3);
    if (j != r.third) return std::nullopt;
    t = 3.0 * (t - (2.0 / 3.0) * (j - 2));
  }
  return pt;
}

inline bool history_less(const History& a, const History& b) {
  return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

inline bool is_prefix(const History& p, const History& h) {
  return p.size() <= h.size() && std::equal(p.begin(), p.end(), h.begin());
}

inline void sort_by_history(Manifold& m) {
  std::stable_sort(m.domains.begin(), m.domains.end(),
                   [](const Domain& a, const Domain& b) { return history_less(a.history, b.history); });
}

// ---------------------------------------------------------------------------
// LOADS
// ---------------------------------------------------------------------------

/// Picks the components the nonlinearity index is computed on.
using NliSelector = std::function<std::vector<TaylorPoly>(const std::vector<TaylorPoly>&)>;

struct AdaptiveResult {
  Manifold output;
  Manifold input_refined;
  std::vector<int> origin;  // index of the input domain each output came from
  int flagged = 0;
  int splits = 0;
};

/// Runs f on every domain; splits along the most nonlinear direction until
/// the output NLI is within eps or the history reaches max_depth.
template <class F>
AdaptiveResult adaptive_eval(F&& f, const Manifold& input, double eps, int max_depth,
                             const NliSelector& select = nullptr) {
  if (!(eps > 0.0)) throw std::invalid_argument("adaptive_eval: eps must be positive");
  if (max_depth < 0) throw std::invalid_argument("adaptive_eval: max_depth must be non-negative");
  struct Item {
    Domain in;
    Domain out;
    int origin;
  };
  std::vector<Item> done;
  AdaptiveResult res;
  for (std::size_t i = 0; i < input.domains.size(); ++i) {
    std::vector<Domain> stack{input.domains[i]};
    while (!stack.empty()) {
      Domain dom = std::move(stack.back());
      stack.pop_back();
      std::vector<TaylorPoly> y;
      try {
        y = f(dom.state);
      } catch (const DomainError&) {
        throw;
      } catch (const std::exception& e) {
        throw DomainError(e.what(), dom.history);
      }
      const auto sel = select ? select(y) : y;
      const double nu = nli_parts(sel).value();
      const bool at_limit = static_cast<int>(dom.history.size()) >= max_depth;
      if (nu > eps && !at_limit) {
        int best = 0;
        double best_nu = -1.0;
        const int nv = sel[0].spec().nvars();
        const int ns = dom.state[0].spec().nvars();
        for (int d = 0; d < std::min(nv, ns); ++d) {
          const double nd = nli_parts(sel, d).value();
          if (nd > best_nu) {
            best_nu = nd;
            best = d;
          }
        }
        auto kids = split(dom, best);
        ++res.splits;
        for (int j = 2; j >= 0; --j) stack.push_back(std::move(kids[static_cast<std::size_t>(j)]));
        continue;
      }
      Domain out;
      out.state = std::move(y);
      out.history = dom.history;
      out.pn_cov = dom.pn_cov;
      out.epoch = dom.epoch;
      out.depth_flagged = nu > eps;
      dom.depth_flagged = out.depth_flagged;
      if (out.depth_flagged) ++res.flagged;
      done.push_back({std::move(dom), std::move(out), static_cast<int>(i)});
    }
  }
  std::stable_sort(done.begin(), done.end(),
                   [](const Item& a, const Item& b) { return history_less(a.in.history, b.in.history); });
  res.output.epoch = input.epoch;
  res.input_refined.epoch = input.epoch;
  for (auto& it : done) {
    res.input_refined.domains.push_back(std::move(it.in));
    res.output.domains.push_back(std::move(it.out));
    res.origin.push_back(it.origin);
  }
  return res;
}

using NliFunction = std::function<double(const std::vector<TaylorPoly>&)>;

inline double default_nli_of(const std::vector<TaylorPoly>& pv) { return nli_parts(pv).value(); }

/// Recombines complete sibling triplets, deepest first, whenever the
/// recovered parent is within eps.
inline Manifold merge(const Manifold& man, double eps, const NliFunction& nli_of = default_nli_of) {
  if (!(eps > 0.0)) throw std::invalid_argument("merge: eps must be positive");
  std::vector<Domain> pool = man.domains;
  std::size_t max_depth = 0;
  for (const auto& d : pool) max_depth = std::max(max_depth, d.history.size());
  for (std::size_t depth = max_depth; depth >= 1; --depth) {
    std::vector<Domain> keep;
    // (parent history, direction) -> indices of children by third
    std::map<std::pair<History, int>, std::array<int, 3>> groups;
    for (std::size_t i = 0; i < pool.size(); ++i) {
      const auto& h = pool[i].history;
      if (h.size() != depth) continue;
      History parent(h.begin(), h.end() - 1);
      auto [it, inserted] = groups.try_emplace({parent, h.back().direction}, std::array<int, 3>{-1, -1, -1});
      it->second[static_cast<std::size_t>(h.back().third - 1)] = static_cast<int>(i);
    }
    std::vector<bool> consumed(pool.size(), false);
    std::vector<Domain> merged;
    for (const auto& [key, idx] : groups) {
      if (idx[0] < 0 || idx[1] < 0 || idx[2] < 0) continue;
      const Domain& mid = pool[static_cast<std::size_t>(idx[1])];
      const int d = key.second;
      const auto& spec = mid.state[0].spec();
      std::vector<TaylorPoly> args;
      for (int v = 0; v < spec.nvars(); ++v) {
        args.push_back(TaylorPoly::variable(spec, v, 0.0, v == d ? 3.0 : 1.0));
      }
      Domain parent;
      for (const auto& p : mid.state) parent.state.push_back(compose(p, args));
      if (!(nli_of(parent.state) <= eps)) continue;
      parent.history = key.first;
      parent.epoch = mid.epoch;
      parent.pn_cov = pool[static_cast<std::size_t>(idx[0])].pn_cov;
      for (int j : {1, 2}) parent.pn_cov = parent.pn_cov.cwiseMax(pool[static_cast<std::size_t>(idx[static_cast<std::size_t>(j)])].pn_cov);
      for (int j : idx) consumed[static_cast<std::size_t>(j)] = true;
      merged.push_back(std::move(parent));
    }
    for (std::size_t i = 0; i < pool.size(); ++i) {
      if (!consumed[i]) keep.push_back(std::move(pool[i]));
    }
    for (auto& m : merged) keep.push_back(std::move(m));
    pool = std::move(keep);
  }
  Manifold out;
  out.epoch = man.epoch;
  out.domains = std::move(pool);
  sort_by_history(out);
  return out;
}

// ---------------------------------------------------------------------------
// Dump
// ---------------------------------------------------------------------------

inline nlohmann::json to_json(const Domain& d) {
  nlohmann::json h = nlohmann::json::array();
  for (const auto& r : d.history) h.push_back({r.direction, r.third});
  nlohmann::json b = nlohmann::json::array();
  for (const auto& p : d.state) {
    const auto rb = da::bound(p);
    b.push_back({rb.lower, rb.upper});
  }
  nlohmann::json cov = nlohmann::json::array();
  for (int i = 0; i < 6; ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (int j = 0; j < 6; ++j) row.push_back(d.pn_cov(i, j));
    cov.push_back(row);
  }
  return {{"history", h}, {"bounds", b}, {"pn_cov", cov}, {"depth_flagged", d.depth_flagged}};
}

}  // namespace robod
