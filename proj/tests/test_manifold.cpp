#include <gtest/gtest.h>

#include <random>

#include "robod/manifold/manifold.hpp"

using namespace robod;

namespace {

Domain box_domain(const AlgebraSpec& s, std::vector<double> center, std::vector<double> half) {
  Domain d;
  for (int v = 0; v < s.nvars(); ++v) {
    d.state.push_back(TaylorPoly::variable(s, v, center[static_cast<std::size_t>(v)], half[static_cast<std::size_t>(v)]));
  }
  return d;
}

auto square = [](const std::vector<TaylorPoly>& x) { return std::vector<TaylorPoly>{x[0] * x[0]}; };

}  // namespace

TEST(Nli, Examples) {
  const AlgebraSpec s(2, 2);
  auto x0 = TaylorPoly::variable(s, 0), x1 = TaylorPoly::variable(s, 1);
  EXPECT_EQ(nli({3.0 + 2.0 * x0 - x1, x1}), 0.0);
  EXPECT_THROW(nli({x0 * x0}), std::domain_error);
  EXPECT_NEAR(nli({x0 + 0.5 * x0 * x0}), 1.0, 1e-15);
  EXPECT_NEAR(directional_nli({x0 + 0.5 * x0 * x0}, 0), 1.0, 1e-15);
  EXPECT_NEAR(directional_nli({x0 + 0.5 * x0 * x0}, 1), 0.0, 1e-15);
  EXPECT_THROW(directional_nli({x0}, 2), std::invalid_argument);
}

TEST(Nli, ScaleInvariance) {
  const AlgebraSpec s(2, 3);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<TaylorPoly> pv;
    for (int i = 0; i < 3; ++i) {
      TaylorPoly p(s);
      for (std::size_t m = 0; m < s.size(); ++m) p.set_raw(m, u(rng));
      pv.push_back(p);
    }
    const double a = u(rng) * 10;
    std::vector<TaylorPoly> scaled;
    for (const auto& p : pv) scaled.push_back(a * p);
    EXPECT_NEAR(nli(scaled), nli(pv), 1e-12 * nli(pv));
  }
}

TEST(Nli, ArgmaxFindsNonlinearDirection) {
  const AlgebraSpec s(2, 4);
  for (int d = 0; d < 4; ++d) {
    std::vector<TaylorPoly> pv;
    for (int v = 0; v < 4; ++v) {
      auto x = TaylorPoly::variable(s, v);
      pv.push_back(v == d ? x + 0.3 * x * x : x);
    }
    int best = -1;
    double bv = -1;
    for (int k = 0; k < 4; ++k) {
      const double n = directional_nli(pv, k);
      if (n > bv) {
        bv = n;
        best = k;
      }
    }
    EXPECT_EQ(best, d);
  }
}

TEST(Split, AffineChildren) {
  const AlgebraSpec s(2, 1);
  Domain d;
  d.state = {TaylorPoly::variable(s, 0)};
  auto kids = split(d, 0);
  for (int j = 0; j < 3; ++j) {
    EXPECT_NEAR(kids[j].state[0].cst(), (2.0 / 3.0) * (j - 1), 1e-15);
    EXPECT_NEAR(kids[j].state[0].linear(0), 1.0 / 3.0, 1e-15);
    ASSERT_EQ(kids[j].history.size(), 1u);
    EXPECT_EQ(kids[j].history[0].third, j + 1);
  }
  // Bounds along the split direction tile the parent's.
  EXPECT_NEAR(da::bound(kids[0].state[0]).lower, -1.0, 1e-15);
  EXPECT_NEAR(da::bound(kids[0].state[0]).upper, da::bound(kids[1].state[0]).lower, 1e-15);
  EXPECT_NEAR(da::bound(kids[1].state[0]).upper, da::bound(kids[2].state[0]).lower, 1e-15);
  EXPECT_NEAR(da::bound(kids[2].state[0]).upper, 1.0, 1e-15);
}

TEST(Split, ChildEvaluationIdentity) {
  const AlgebraSpec s(2, 3);
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-1, 1);
  Domain d;
  for (int i = 0; i < 2; ++i) {
    TaylorPoly p(s);
    for (std::size_t m = 0; m < s.size(); ++m) p.set_raw(m, u(rng));
    d.state.push_back(p);
  }
  for (int dir = 0; dir < 3; ++dir) {
    auto kids = split(d, dir);
    for (int j = 1; j <= 3; ++j) {
      for (int k = 0; k < 20; ++k) {
        std::vector<double> pt{u(rng), u(rng), u(rng)};
        auto q = pt;
        q[dir] = (2.0 / 3.0) * (j - 2) + pt[dir] / 3.0;
        for (int c = 0; c < 2; ++c) EXPECT_NEAR(da::eval(kids[j - 1].state[c], pt), da::eval(d.state[c], q), 1e-12);
      }
    }
  }
}

TEST(Merge, InvertsSplit) {
  const AlgebraSpec s(2, 3);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int trial = 0; trial < 20; ++trial) {
    Domain d;
    for (int i = 0; i < 3; ++i) {
      TaylorPoly p(s);
      for (std::size_t m = 0; m < s.size(); ++m) p.set_raw(m, u(rng));
      d.state.push_back(p);
    }
    const int dir = trial % 3;
    auto kids = split(d, dir);
    Manifold m;
    for (auto& k : kids) m.domains.push_back(k);
    auto merged = merge(m, 1e300);
    ASSERT_EQ(merged.size(), 1u);
    EXPECT_TRUE(merged.domains[0].history.empty());
    for (int i = 0; i < 3; ++i) {
      for (std::size_t c = 0; c < s.size(); ++c) EXPECT_NEAR(merged.domains[0].state[i][c], d.state[i][c], 1e-12);
    }
  }
}

TEST(Merge, IncompleteTripletUnchanged) {
  const AlgebraSpec s(2, 1);
  Domain d;
  d.state = {TaylorPoly::variable(s, 0)};
  auto kids = split(d, 0);
  Manifold m;
  m.domains = {kids[0], kids[2]};
  auto out = merge(m, 1.0);
  EXPECT_EQ(out.size(), 2u);
}

TEST(Merge, PnCovElementwiseMax) {
  const AlgebraSpec s(2, 1);
  Domain d;
  d.state = {TaylorPoly::variable(s, 0)};
  auto kids = split(d, 0);
  kids[0].pn_cov(0, 0) = 1.0;
  kids[1].pn_cov(1, 1) = 2.0;
  kids[2].pn_cov(0, 0) = 3.0;
  Manifold m;
  for (auto& k : kids) m.domains.push_back(k);
  auto out = merge(m, 1.0);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out.domains[0].pn_cov(0, 0), 3.0);
  EXPECT_EQ(out.domains[0].pn_cov(1, 1), 2.0);
}

TEST(AdaptiveEval, IdentityNoSplit) {
  const AlgebraSpec s(2, 2);
  Manifold m;
  m.domains.push_back(box_domain(s, {1, 2}, {0.5, 0.5}));
  auto r = adaptive_eval([](const std::vector<TaylorPoly>& x) { return x; }, m, 1e-2, 12);
  ASSERT_EQ(r.output.size(), 1u);
  EXPECT_EQ(r.splits, 0);
  for (std::size_t m2 = 0; m2 < s.size(); ++m2) EXPECT_EQ(r.output.domains[0].state[0][m2], m.domains[0].state[0][m2]);
}

TEST(AdaptiveEval, SquareStressMap) {
  const AlgebraSpec s(2, 1);
  Manifold m;
  m.domains.push_back(box_domain(s, {1.0}, {0.9}));
  EXPECT_NEAR(nli(square(m.domains[0].state)), 0.9, 1e-14);
  auto r = adaptive_eval(square, m, 0.1, 12);
  EXPECT_GT(r.output.size(), 1u);
  ASSERT_EQ(r.output.size(), r.input_refined.size());
  for (std::size_t i = 0; i < r.output.size(); ++i) {
    EXPECT_EQ(r.output.domains[i].history, r.input_refined.domains[i].history);
    if (!r.output.domains[i].depth_flagged) {
      EXPECT_LE(nli(r.output.domains[i].state), 0.1);
    }
  }
  for (std::size_t i = 1; i < r.output.size(); ++i) {
    EXPECT_TRUE(history_less(r.output.domains[i - 1].history, r.output.domains[i].history));
  }
  auto merged = merge(r.output, 0.1);
  EXPECT_LE(merged.size(), r.output.size());
}

TEST(AdaptiveEval, MaxDepthZero) {
  const AlgebraSpec s(2, 1);
  Manifold m;
  m.domains.push_back(box_domain(s, {1.0}, {0.9}));
  auto r = adaptive_eval(square, m, 0.1, 0);
  ASSERT_EQ(r.output.size(), 1u);
  EXPECT_TRUE(r.output.domains[0].depth_flagged);
  EXPECT_EQ(r.flagged, 1);
}

TEST(AdaptiveEval, Coverage) {
  const AlgebraSpec s(2, 2);
  Manifold m;
  m.domains.push_back(box_domain(s, {1.0, 0.5}, {0.8, 0.4}));
  auto f = [](const std::vector<TaylorPoly>& x) { return std::vector<TaylorPoly>{exp(x[0]) * x[1], sin(x[0] * x[1])}; };
  auto r = adaptive_eval(f, m, 0.05, 12);
  EXPECT_GT(r.output.size(), 1u);
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int k = 0; k < 500; ++k) {
    std::vector<double> pt{u(rng), u(rng)};
    int owners = 0;
    for (const auto& d : r.output.domains) {
      auto loc = descend(pt, d.history);
      if (!loc) continue;
      ++owners;
      const double x0 = 1.0 + 0.8 * pt[0], x1 = 0.5 + 0.4 * pt[1];
      EXPECT_NEAR(da::eval(d.state[0], *loc), std::exp(x0) * x1, 5e-3);
      EXPECT_NEAR(da::eval(d.state[1], *loc), std::sin(x0 * x1), 5e-3);
    }
    EXPECT_EQ(owners, 1);
  }
}

TEST(AdaptiveEval, FailureCarriesHistory) {
  const AlgebraSpec s(2, 1);
  Manifold m;
  m.domains.push_back(box_domain(s, {1.0}, {0.9}));
  auto f = [](const std::vector<TaylorPoly>& x) {
    if (x[0].cst() > 1.5) throw std::domain_error("boom");
    return std::vector<TaylorPoly>{x[0] * x[0]};
  };
  try {
    adaptive_eval(f, m, 0.1, 12);
    FAIL();
  } catch (const DomainError& e) {
    EXPECT_FALSE(e.history().empty());
  }
}
