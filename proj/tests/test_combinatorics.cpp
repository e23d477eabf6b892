#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "psl/combinatorics.hpp"
#include "psl/heat1d.hpp"

using namespace psl;

TEST(Weights, DirectFormulaValues) {
  for (double r : {0.1, 0.5, 0.9}) EXPECT_EQ(gevrey_m(r, {0, 0, 0}), 1.0);
  EXPECT_DOUBLE_EQ(gevrey_m(0.5, {0, 0, 1}), 8.0);
  EXPECT_DOUBLE_EQ(gevrey_l(0.3, 0), 0.3);
  EXPECT_DOUBLE_EQ(gevrey_l(2.0, 3), 16.0 / 6.0);
}

TEST(Weights, DomainErrors) {
  EXPECT_THROW(gevrey_m(1.0, {0, 0, 1}), InvalidArgument);
  EXPECT_THROW(gevrey_m(0.5, {10, 10, 11}), InvalidArgument);
  EXPECT_THROW(gevrey_l(0.0, 1), InvalidArgument);
  EXPECT_THROW(gevrey_l(1.0, 31), InvalidArgument);
}

TEST(Weights, FactorialCacheMatchesIntegers) {
  const auto& f = factorial_table();
  EXPECT_EQ(f[0], 1.0);
  EXPECT_EQ(f[10], 3628800.0);
  EXPECT_EQ(f[20], 2432902008176640000.0);
}

TEST(Weights, DependOnlyOnOrder) {
  for (int n = 0; n <= 12; ++n) {
    const double ref = gevrey_m(0.4, {0, 0, n});
    for (int a = 0; a <= n; ++a)
      for (int b = 0; a + b <= n; ++b) EXPECT_EQ(gevrey_m(0.4, {a, b, n - a - b}), ref);
  }
}

TEST(Inequalities, SmallestPairOfFirstFamily) {
  EXPECT_NEAR(inequality_ratio(Inequality::Ineq3, 0.5, {0, 0, 1}, {0, 0, 0}), 16.0 / 17.0, 1e-14);
}

TEST(Inequalities, InadmissiblePairsAreSkipped) {
  EXPECT_TRUE(std::isnan(inequality_ratio(Inequality::Ineq3, 0.5, {1, 0, 0}, {0, 0, 0})));
  EXPECT_TRUE(std::isnan(inequality_ratio(Inequality::Ineq3, 0.5, {0, 0, 2}, {0, 0, 1})));
  EXPECT_TRUE(std::isnan(inequality_ratio(Inequality::Ineq4, 0.5, {0, 0, 2}, {0, 0, 0})));
  EXPECT_TRUE(std::isnan(inequality_ratio(Inequality::Ineq6, 0.5, {1, 0, 1}, {2, 0, 1})));
}

TEST(Inequalities, BetaEqualAlphaBoundedByLeftSide) {
  for (auto id : {Inequality::Ineq4, Inequality::Ineq6}) {
    const MultiIndex a{1, 2, 3};
    const double q = inequality_ratio(id, 0.5, a, a);
    ASSERT_FALSE(std::isnan(q));
    // Denominator at least 1: the ratio never exceeds the left side alone.
    const double lhs = id == Inequality::Ineq6 ? inequality_ratio(id, 0.5, a, a) * (1.0 / 16807.0 + 1.0) : q;
    EXPECT_LE(q, lhs + 1e-15);
  }
}

TEST(Inequalities, CapGrowthLeavesConstantUnchanged) {
  // Both families attain their sup at small indices.
  for (auto id : {Inequality::Ineq3, Inequality::Ineq6}) {
    const auto a = inequality_scan(id, 0.5, 15);
    const auto b = inequality_scan(id, 0.5, 25);
    EXPECT_EQ(a.constant, b.constant) << inequality_name(id);
    EXPECT_EQ(a.alpha, b.alpha);
    EXPECT_GT(b.pairs, a.pairs);
  }
}

TEST(Inequalities, SlowFamiliesStayBelowAnalyticBounds) {
  // Along alpha = (0,0,n), beta = (0,0,1) the first ratio tends to 1 from below;
  // the extra-r family creeps up with the cap but is capped by (n+1)^4 / (2((n+3)/2)^4) < 8.
  double prev4 = 0.0, prev5 = 0.0;
  for (int cap : {5, 10, 15, 20, 25, 30}) {
    const double c4 = inequality_scan(Inequality::Ineq4, 0.5, cap).constant;
    const double c5 = inequality_scan(Inequality::Ineq5, 0.5, cap).constant;
    EXPECT_GE(c4, prev4);
    EXPECT_GE(c5, prev5);
    EXPECT_LT(c4, 1.0);
    EXPECT_LT(c5, 8.0);
    prev4 = c4;
    prev5 = c5;
  }
}

TEST(Inequalities, FiniteAcrossParameters) {
  for (auto id : {Inequality::Ineq3, Inequality::Ineq4, Inequality::Ineq5, Inequality::Ineq6})
    for (double r : {0.1, 0.5, 0.9}) {
      const auto s = inequality_scan(id, r, 25);
      EXPECT_TRUE(std::isfinite(s.constant));
      EXPECT_GT(s.constant, 0.0);
    }
}

TEST(Inequalities, SwappingTangentialComponents) {
  for (auto id : {Inequality::Ineq3, Inequality::Ineq4, Inequality::Ineq5, Inequality::Ineq6})
    for (int n = 1; n <= 6; ++n)
      for (int a0 = 0; a0 <= n; ++a0)
        for (int a1 = 0; a0 + a1 < n; ++a1) {
          const MultiIndex a{a0, a1, n - a0 - a1};
          for (int b0 = 0; b0 <= a0; ++b0)
            for (int b1 = 0; b1 <= a1; ++b1)
              for (int b2 = 0; b2 <= a[2]; ++b2) {
                const double q = inequality_ratio(id, 0.3, a, {b0, b1, b2});
                const double p = inequality_ratio(id, 0.3, {a1, a0, a[2]}, {b1, b0, b2});
                if (std::isnan(q)) {
                  EXPECT_TRUE(std::isnan(p));
                } else {
                  EXPECT_NEAR(p / q, 1.0, 1e-13);
                }
              }
        }
}

TEST(Inequalities, ParseIds) {
  EXPECT_EQ(parse_inequality("ineq5"), Inequality::Ineq5);
  EXPECT_EQ(parse_inequality("ineq6"), Inequality::Ineq6);
  EXPECT_THROW(parse_inequality("ineq7"), InvalidArgument);
  EXPECT_THROW(inequality_scan(Inequality::Ineq3, 0.5, 0), InvalidArgument);
}

TEST(Recurrence, ConstantIsSixteenAndStable) {
  EXPECT_DOUBLE_EQ(recurrence_constant(0.5, 15), 16.0);
  EXPECT_EQ(recurrence_constant(0.5, 15), recurrence_constant(0.5, 30));
  EXPECT_EQ(recurrence_constant(0.1, 25), recurrence_constant(0.9, 25));
}

TEST(Young, DeltaGivesEquality) {
  const std::vector<double> p{1, 0, 0, 0}, q{0.3, 2.0, 0.7};
  EXPECT_NEAR(young_check(p, q), 1.0, 1e-15);
}

TEST(Young, HandConvolution) {
  const std::vector<double> p{1, 1};
  EXPECT_NEAR(young_check(p, p), std::sqrt(6.0 / 8.0), 1e-15);
}

TEST(Young, RandomSequencesBounded) {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> len(1, 40);
  for (int s = 0; s < 100; ++s) {
    std::vector<double> p(len(rng)), q(len(rng));
    for (auto& v : p) v = u(rng);
    for (auto& v : q) v = u(rng);
    EXPECT_LE(young_check(p, q), 1.0 + 1e-12);
  }
}

TEST(Young, NegativeEntriesRejected) {
  const std::vector<double> p{1, -1}, q{1};
  EXPECT_THROW(young_check(p, q), InvalidArgument);
}

TEST(Hardy, ExponentialProfile) {
  const VerticalGrid g(40.0, 4001, 0.0);
  EXPECT_NEAR(hardy_check(g, sample_profile(g, [](double z) { return z * std::exp(-z); })), 1.0 / std::sqrt(2.0), 1e-8);
}

TEST(Hardy, ZeroProfileConvention) {
  const VerticalGrid g(20.0, 101, 0.0);
  EXPECT_EQ(hardy_check(g, std::vector<double>(101, 0.0)), 0.0);
}

TEST(Hardy, RandomCompatibleProfiles) {
  const VerticalGrid g(20.0, 2001, 0.0);
  for (const auto& h : random_profiles(g, 100, 77, true, false)) EXPECT_LE(hardy_check(g, h), 1.0 + 1e-8);
}

TEST(Hardy, WallValueRejected) {
  const VerticalGrid g(20.0, 101, 0.0);
  EXPECT_THROW(hardy_check(g, sample_profile(g, [](double z) { return std::exp(-z); })), InvalidArgument);
}
