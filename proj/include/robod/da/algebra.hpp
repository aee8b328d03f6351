/**
 * @file algebra.hpp
 * @brief Truncation order / variable count of a Taylor algebra and the
 *        monomial layout shared by every polynomial built on it.
 */
#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace robod::da {

inline constexpr int kMaxOrder = 6;

namespace detail {

/// Monomials in graded order: degree 0, then all degree-1 monomials in
/// variable order, then degree 2, ... Within a degree the ordering is
/// lexicographic with higher powers of lower-indexed variables first.
struct Layout {
  int order = 0;
  int nvars = 0;
  std::vector<std::vector<int>> exponents;
  std::vector<int> degree;
  // mono[m] == mono[parent[m]] * x[parent_var[m]] for every m > 0.
  std::vector<int> parent;
  std::vector<int> parent_var;
  std::unordered_map<std::uint64_t, int> index_of;
  // Ordered pairs (i, j) whose product monomial k stays within the order.
  struct Product {
    int i, j, k;
  };
  std::vector<Product> products;
  // For each (monomial, variable): monomial with that exponent decremented
  // and the original exponent, or -1 when the exponent is zero.
  std::vector<int> lower;      // size(exponents) * nvars
  std::vector<int> lower_exp;  // same shape

  [[nodiscard]] std::size_t size() const { return exponents.size(); }

  [[nodiscard]] std::uint64_t key(const std::vector<int>& e) const {
    std::uint64_t k = 0;
    for (int v = 0; v < nvars; ++v) {
      k = k * static_cast<std::uint64_t>(order + 1) + static_cast<std::uint64_t>(e[static_cast<std::size_t>(v)]);
    }
    return k;
  }

  [[nodiscard]] int find(const std::vector<int>& e) const {
    int total = 0;
    for (int x : e) {
      if (x < 0) return -1;
      total += x;
    }
    if (total > order) return -1;
    auto it = index_of.find(key(e));
    return it == index_of.end() ? -1 : it->second;
  }
};

inline void enumerate_degree(int nvars, int var, int remaining, std::vector<int>& cur,
                             std::vector<std::vector<int>>& out) {
  if (var == nvars - 1) {
    cur[static_cast<std::size_t>(var)] = remaining;
    out.push_back(cur);
    cur[static_cast<std::size_t>(var)] = 0;
    return;
  }
  for (int e = remaining; e >= 0; --e) {
    cur[static_cast<std::size_t>(var)] = e;
    enumerate_degree(nvars, var + 1, remaining - e, cur, out);
  }
  cur[static_cast<std::size_t>(var)] = 0;
}

inline std::shared_ptr<const Layout> build_layout(int order, int nvars) {
  auto L = std::make_shared<Layout>();
  L->order = order;
  L->nvars = nvars;
  std::vector<int> cur(static_cast<std::size_t>(nvars), 0);
  for (int d = 0; d <= order; ++d) {
    enumerate_degree(nvars, 0, d, cur, L->exponents);
  }
  const std::size_t n = L->exponents.size();
  L->degree.resize(n);
  L->parent.assign(n, -1);
  L->parent_var.assign(n, -1);
  for (std::size_t m = 0; m < n; ++m) {
    int d = 0;
    for (int x : L->exponents[m]) d += x;
    L->degree[m] = d;
    L->index_of.emplace(L->key(L->exponents[m]), static_cast<int>(m));
  }
  const auto nv = static_cast<std::size_t>(nvars);
  L->lower.assign(n * nv, -1);
  L->lower_exp.assign(n * nv, 0);
  for (std::size_t m = 0; m < n; ++m) {
    for (std::size_t v = 0; v < nv; ++v) {
      const int e = L->exponents[m][v];
      if (e == 0) continue;
      auto dec = L->exponents[m];
      dec[v] -= 1;
      L->lower[m * nv + v] = L->find(dec);
      L->lower_exp[m * nv + v] = e;
      if (L->parent[m] < 0) {
        L->parent[m] = L->lower[m * nv + v];
        L->parent_var[m] = static_cast<int>(v);
      }
    }
  }
  // Monomials are graded, so those of degree <= d form a prefix.
  std::vector<std::size_t> prefix(static_cast<std::size_t>(order) + 1, 0);
  for (std::size_t m = 0; m < n; ++m) prefix[static_cast<std::size_t>(L->degree[m])] = m + 1;
  std::vector<int> sum(nv);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t jend = prefix[static_cast<std::size_t>(order - L->degree[i])];
    for (std::size_t j = 0; j < jend; ++j) {
      for (std::size_t v = 0; v < nv; ++v) sum[v] = L->exponents[i][v] + L->exponents[j][v];
      L->products.push_back({static_cast<int>(i), static_cast<int>(j), L->find(sum)});
    }
  }
  return L;
}

inline std::shared_ptr<const Layout> layout_for(int order, int nvars) {
  static std::mutex mu;
  static std::map<std::pair<int, int>, std::shared_ptr<const Layout>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto& slot = cache[{order, nvars}];
  if (!slot) slot = build_layout(order, nvars);
  return slot;
}

}  // namespace detail

/// Truncation order and number of independent deviation variables.
class AlgebraSpec {
 public:
  AlgebraSpec() = default;
  AlgebraSpec(int order, int nvars) : order_(order), nvars_(nvars) {
    if (order < 1 || order > kMaxOrder) {
      throw std::invalid_argument("AlgebraSpec: order must be in [1, " + std::to_string(kMaxOrder) + "]");
    }
    if (nvars < 1 || nvars > 24) {
      throw std::invalid_argument("AlgebraSpec: nvars must be in [1, 24]");
    }
    layout_ = detail::layout_for(order, nvars);
  }

  [[nodiscard]] int order() const { return order_; }
  [[nodiscard]] int nvars() const { return nvars_; }
  [[nodiscard]] bool valid() const { return layout_ != nullptr; }
  [[nodiscard]] std::size_t size() const { return layout_->size(); }
  [[nodiscard]] const detail::Layout& layout() const { return *layout_; }

  friend bool operator==(const AlgebraSpec& a, const AlgebraSpec& b) {
    return a.order_ == b.order_ && a.nvars_ == b.nvars_;
  }

 private:
  int order_ = 0;
  int nvars_ = 0;
  std::shared_ptr<const detail::Layout> layout_;
};

}  // namespace robod::da
