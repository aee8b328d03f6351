#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include "robod/estimate/estimate.hpp"

using namespace robod;
using namespace robod::astro;
using namespace robod::est;

namespace {

const Site kReunion{"reunion", -21.1992 * kDeg, 55.4094 * kDeg, 0.972};
const Keplerian<double> kGto{22953.852669768778, 0.707854612716, 3.387521317683 * kDeg,
                             -168.891499315499 * kDeg, 172.980213527756 * kDeg, 60.742995057860 * kDeg};
const double kT0 = parse_iso8601("2019-02-25T18:49:01.148");
const SiteMap kSites{{"reunion", kReunion}};

std::vector<obs::Observation> clean_observations() {
  std::vector<obs::Pass> passes{{kReunion, {}}};
  for (double h : {0.0, 0.1, 0.2, 4.4, 5.2, 52.64, 52.65}) passes[0].epochs.push_back(kT0 + h * 3600.0);
  obs::SynthOptions opt;
  opt.add_noise = false;
  return obs::synthesize(kGto, kT0, passes, dyn::ForceConfig::two_body(), opt).observations;
}

/// Linear model h = A x with measurements y.
DesignFn linear_design(const Eigen::MatrixXd& A, const Eigen::VectorXd& y, double sigma) {
  return [=](const Vec6& x) {
    DesignSystem d;
    d.h = A * x;
    d.H = A;
    d.dy = y - d.h;
    d.sigma = Eigen::VectorXd::Constant(y.size(), sigma);
    return d;
  };
}

double weighted_median(std::vector<std::pair<double, double>> yw) {
  std::sort(yw.begin(), yw.end());
  double total = 0.0;
  for (const auto& [y, w] : yw) total += w;
  double acc = 0.0;
  for (const auto& [y, w] : yw) {
    acc += w;
    if (acc >= 0.5 * total) return y;
  }
  return yw.back().first;
}

}  // namespace

TEST(Design, JacobianMatchesFiniteDifferences) {
  const auto obs = clean_observations();
  const Vec6 x0 = to_vec(kep_to_cart(kGto));
  const auto cfg = dyn::ForceConfig::two_body();
  const auto d = build_design(x0, kT0, obs, kSites, cfg);
  ASSERT_EQ(d.H.rows(), static_cast<Eigen::Index>(2 * obs.size()));
  for (int c = 0; c < 6; ++c) {
    const double h = c < 3 ? 1e-2 : 1e-5;
    Vec6 xp = x0, xm = x0;
    xp(c) += h;
    xm(c) -= h;
    const auto dp = build_design(xp, kT0, obs, kSites, cfg);
    const auto dm = build_design(xm, kT0, obs, kSites, cfg);
    for (Eigen::Index r = 0; r < d.H.rows(); ++r) {
      const double fd = wrap_pi(dp.h(r) - dm.h(r)) / (2.0 * h);
      EXPECT_NEAR(d.H(r, c), fd, 1e-5 * d.H.col(c).cwiseAbs().maxCoeff()) << r << " " << c;
    }
  }
}

TEST(Design, ZeroNoiseGivesZeroResiduals) {
  const auto obs = clean_observations();
  const auto d = build_design(to_vec(kep_to_cart(kGto)), kT0, obs, kSites, dyn::ForceConfig::two_body());
  EXPECT_LT(d.dy.cwiseAbs().maxCoeff(), 1e-9);
  EXPECT_THROW(build_design(Vec6::Zero(), kT0, {}, kSites, dyn::ForceConfig::two_body()), std::invalid_argument);
}

TEST(Ls, LinearProblemConvergesImmediately) {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> g;
  Eigen::MatrixXd A(20, 6);
  for (Eigen::Index i = 0; i < A.size(); ++i) A.data()[i] = g(rng);
  Vec6 truth;
  for (int i = 0; i < 6; ++i) truth(i) = g(rng);
  const Eigen::VectorXd y = A * truth;
  const auto r = ls_solve(linear_design(A, y, 1e-3), Vec6::Zero());
  EXPECT_LE(r.iterations, 2);
  EXPECT_LT((r.x0 - truth).cwiseAbs().maxCoeff(), 1e-10);
  const Mat6 P = (A.transpose() * A * 1e6).inverse();
  EXPECT_LT((r.P0 - P).cwiseAbs().maxCoeff(), 1e-9 * P.cwiseAbs().maxCoeff());
}

TEST(Ls, RecoversOrbitFromCleanData) {
  const auto obs = clean_observations();
  const Vec6 truth = to_vec(kep_to_cart(kGto));
  Vec6 guess = truth;
  guess.head<3>() += Vec3d(5.0, -3.0, 2.0);
  guess.tail<3>() += Vec3d(1e-3, 5e-4, -2e-4);
  const auto r = ls_solve(orbit_design(kT0, obs, kSites, dyn::ForceConfig::two_body()), guess);
  EXPECT_LT((r.x0 - truth).head<3>().norm(), 1e-3);
  EXPECT_LT((r.x0 - truth).tail<3>().norm(), 1e-7);
  EXPECT_LE(r.iterations, 10);
}

TEST(Ls, RejectsTooFewRows) {
  Eigen::MatrixXd A = Eigen::MatrixXd::Identity(4, 6);
  EXPECT_THROW(ls_solve(linear_design(A, Eigen::VectorXd::Zero(4), 1.0), Vec6::Zero()), std::invalid_argument);
}

TEST(Lp, SimpleBoundAndInfeasible) {
  LpProblem p;
  p.c = Eigen::VectorXd::Ones(1);
  p.Q = -Eigen::MatrixXd::Ones(1, 1);
  p.k = -Eigen::VectorXd::Ones(1);
  auto r = lp_solve(p);
  ASSERT_EQ(r.status, LpStatus::optimal);
  EXPECT_NEAR(r.z(0), 1.0, 1e-12);
  p.Q.resize(2, 1);
  p.Q << 1.0, -1.0;
  p.k.resize(2);
  p.k << 0.0, -1.0;  // x <= 0 and x >= 1
  EXPECT_EQ(lp_solve(p).status, LpStatus::infeasible);
  p.c(0) = -1.0;
  p.Q.resize(1, 1);
  p.Q << -1.0;
  p.k.resize(1);
  p.k << 0.0;  // maximize x with x >= 0
  EXPECT_EQ(lp_solve(p).status, LpStatus::unbounded);
}

TEST(Lp, SolutionIsFeasibleAndOptimalOnRandomPrograms) {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 50; ++trial) {
    // Box-bounded programs with a random objective always have an optimum.
    const int n = 3;
    LpProblem p;
    p.c.resize(n);
    for (int i = 0; i < n; ++i) p.c(i) = g(rng);
    const int extra = 4;
    p.Q = Eigen::MatrixXd::Zero(2 * n + extra, n);
    p.k.resize(2 * n + extra);
    for (int i = 0; i < n; ++i) {
      p.Q(2 * i, i) = 1.0;
      p.Q(2 * i + 1, i) = -1.0;
      p.k(2 * i) = 1.0;
      p.k(2 * i + 1) = 1.0;
    }
    for (int r = 0; r < extra; ++r) {
      for (int i = 0; i < n; ++i) p.Q(2 * n + r, i) = g(rng);
      p.k(2 * n + r) = std::abs(g(rng)) + 0.1;  // origin stays feasible
    }
    const auto res = lp_solve(p);
    ASSERT_EQ(res.status, LpStatus::optimal);
    EXPECT_LE((p.Q * res.z - p.k).maxCoeff(), 1e-9);
    EXPECT_GE(res.min_reduced_cost, -1e-9);
    // No random feasible point does better.
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int s = 0; s < 200; ++s) {
      Eigen::VectorXd z(n);
      for (int i = 0; i < n; ++i) z(i) = u(rng);
      if ((p.Q * z - p.k).maxCoeff() > 0.0) continue;
      EXPECT_GE(p.c.dot(z), res.objective - 1e-9);
    }
  }
}

TEST(Lsar, OneDimensionalFitIsWeightedMedian) {
  std::mt19937_64 rng(12);
  std::normal_distribution<double> g;
  std::uniform_real_distribution<double> uw(0.1, 2.0);
  for (int trial = 0; trial < 100; ++trial) {
    const int m = 3 + trial % 9;
    Eigen::VectorXd y(m), w(m);
    std::vector<std::pair<double, double>> yw;
    for (int i = 0; i < m; ++i) {
      y(i) = g(rng) * 10.0;
      w(i) = uw(rng);
      yw.emplace_back(y(i), w(i));
    }
    LpResult info;
    const auto z = weighted_l1_fit(Eigen::MatrixXd::Ones(m, 1), y, w, &info);
    ASSERT_TRUE(z.has_value());
    EXPECT_NEAR((*z)(0), weighted_median(yw), 1e-9 * (1.0 + std::abs((*z)(0))));
    // The slacks of an optimal vertex equal the weighted absolute residuals.
    EXPECT_NEAR(info.objective, w.dot((y.array() - (*z)(0)).abs().matrix()), 1e-9 * (1.0 + info.objective));
    EXPECT_GE(info.min_reduced_cost, -1e-9);
  }
}

TEST(Lsar, IgnoresGrossOutlierOnLinearProblem) {
  std::mt19937_64 rng(6);
  std::normal_distribution<double> g;
  Eigen::MatrixXd A(30, 6);
  for (Eigen::Index i = 0; i < A.size(); ++i) A.data()[i] = g(rng);
  Vec6 truth;
  for (int i = 0; i < 6; ++i) truth(i) = g(rng);
  Eigen::VectorXd y = A * truth;
  y(7) += 1e3;
  const auto lsar = lsar_solve(linear_design(A, y, 1.0), Vec6::Zero());
  const auto ls = ls_solve(linear_design(A, y, 1.0), Vec6::Zero());
  EXPECT_LT((lsar.x0 - truth).norm(), 1e-6);
  EXPECT_GT((ls.x0 - truth).norm(), 1.0);
  EXPECT_GE(lsar.iterations, 1);
}

TEST(Export, JsonCarriesResidualsAndCovariance) {
  Eigen::MatrixXd A = Eigen::MatrixXd::Identity(6, 6);
  const auto r = ls_solve(linear_design(A, Eigen::VectorXd::Ones(6), 1.0), Vec6::Zero());
  std::vector<obs::Observation> used(3, obs::Observation{kT0, "reunion", 0, 0, 1, 1, obs::TruthTag::target});
  const auto j = to_json(r, kT0, used);
  EXPECT_EQ(j["estimate"].size(), 6u);
  EXPECT_EQ(j["covariance"].size(), 6u);
  EXPECT_EQ(j["residuals"].size(), 3u);
  EXPECT_EQ(j["termination"].get<std::string>(), to_string(r.termination));
}
