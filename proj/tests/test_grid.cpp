#include <gtest/gtest.h>

#include <cmath>

#include "psl/grid.hpp"

using namespace psl;

TEST(Grid, UniformSpacing) {
  const auto g = make_grid({2 * kPi, 4, 1.0, 9, 0.0});
  const auto h = g->vertical().spacing();
  for (double v : h) EXPECT_NEAR(v, 0.125, 1e-15);
  EXPECT_EQ(g->vertical().z()[0], 0.0);
  EXPECT_EQ(g->vertical().z()[8], 1.0);
}

TEST(Grid, RejectsOddModeCount) {
  try {
    make_grid({2 * kPi, 3, 1.0, 9, 0.0});
    FAIL();
  } catch (const InvalidArgument& e) {
    EXPECT_STREQ(e.what(), "tangential mode count must be even");
  }
}

TEST(Grid, RejectsBadVerticalParameters) {
  EXPECT_THROW(make_grid({2 * kPi, 4, 0.0, 9, 0.0}), InvalidArgument);
  EXPECT_THROW(make_grid({2 * kPi, 4, -1.0, 9, 0.0}), InvalidArgument);
  EXPECT_THROW(make_grid({2 * kPi, 4, 1.0, 8, 0.0}), InvalidArgument);
}

TEST(Grid, StretchClustersNodesNearWall) {
  const auto g = make_grid({2 * kPi, 4, 20.0, 201, 2.0});
  const auto z = g->vertical().z();
  int below = 0, above = 0;
  for (double v : z) {
    if (v < 5.0) ++below;
    if (v > 15.0) ++above;
  }
  // Density over equal-length bands at the two ends of the strip.
  EXPECT_GE(double(below), 2.0 * above);
  for (std::size_t i = 1; i < z.size(); ++i) EXPECT_GT(z[i], z[i - 1]);
}

class QuadratureTest : public ::testing::TestWithParam<double> {};

TEST_P(QuadratureTest, WeightsPositiveAndSumToHeight) {
  for (int nz : {9, 10, 201, 202}) {
    const VerticalGrid g(20.0, nz, GetParam());
    double s = 0.0;
    for (double w : g.quad_weights()) {
      EXPECT_GT(w, 0.0);
      s += w;
    }
    EXPECT_NEAR(s, 20.0, 20.0 * 1e-12);
    double e = 0.0;
    for (double w : g.energy_weights()) e += w;
    EXPECT_NEAR(e, 20.0, 20.0 * 1e-12);
  }
}

TEST_P(QuadratureTest, IntegratesExponential) {
  const VerticalGrid g(20.0, 201, GetParam());
  std::vector<double> f(g.size());
  for (int i = 0; i < g.size(); ++i) f[i] = std::exp(-g.z()[i]);
  EXPECT_NEAR(g.integrate<double>(f), 1.0 - std::exp(-20.0), 1e-6);
}

TEST_P(QuadratureTest, StencilsExactOnPolynomials) {
  const VerticalGrid g(3.0, 41, GetParam());
  std::vector<double> f(g.size());
  for (int i = 0; i < g.size(); ++i) f[i] = g.z()[i] * g.z()[i];
  const auto d = g.d1<double>(f);
  const auto dd = g.d2<double>(f);
  std::vector<double> d3(g.size());
  g.d2_3pt<double>(f, d3);
  for (int i = 1; i + 1 < g.size(); ++i) {
    EXPECT_NEAR(d[i], 2.0 * g.z()[i], 1e-10);
    EXPECT_NEAR(dd[i], 2.0, 1e-8);
    EXPECT_NEAR(d3[i], 2.0, 1e-9);
  }
}

INSTANTIATE_TEST_SUITE_P(Stretch, QuadratureTest, ::testing::Values(0.0, 2.0));

TEST(Weights, ZeroExponentIsOne) {
  const auto g = make_grid({});
  for (double t : {0.0, 3.0}) {
    const auto wp = weight_values(*g, 0.0, t);
    for (double m : wp.mu_values) EXPECT_EQ(m, 1.0);
  }
}

TEST(Weights, GaussianAtTwo) { EXPECT_NEAR(gaussian_weight(1.0, 0.0, 2.0), std::exp(1.0), 1e-15); }

TEST(Weights, BracketValues) {
  EXPECT_NEAR(bracket(std::sqrt(3.0)), 2.0, 1e-15);
  EXPECT_EQ(bracket(0.0), 1.0);
}

TEST(Weights, ProfileInvariants) {
  const auto g = make_grid({2 * kPi, 4, 10.0, 101, 1.0});
  const auto wp = weight_values(*g, 0.7, 1.5);
  EXPECT_EQ(wp.mu_values[0], 1.0);
  for (std::size_t i = 0; i < wp.mu_values.size(); ++i) {
    EXPECT_GE(wp.bracket_z[i], 1.0);
    if (i) {
      EXPECT_GE(wp.mu_values[i], wp.mu_values[i - 1]);
    }
  }
}

TEST(Weights, RejectsBadExponentAndTime) {
  const auto g = make_grid({});
  EXPECT_THROW(weight_values(*g, 1.5, 0.0), InvalidArgument);
  EXPECT_THROW(weight_values(*g, -0.1, 0.0), InvalidArgument);
  EXPECT_THROW(weight_values(*g, 0.5, -1.0), InvalidArgument);
}

TEST(Grid, ModeBookkeeping3D) {
  const auto g = make_grid({2 * kPi, 8, 5.0, 9, 0.0, 4 * kPi, 8});
  EXPECT_TRUE(g->is_3d());
  EXPECT_EQ(g->mode_count(), 5 * 8);
  EXPECT_DOUBLE_EQ(g->ky(1 * 8 + 7), -0.5);
  EXPECT_DOUBLE_EQ(g->kx(2 * 8 + 3), 2.0);
  EXPECT_TRUE(g->is_nyquist(4 * 8));
  EXPECT_TRUE(g->is_nyquist(4));
}
