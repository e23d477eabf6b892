#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <cmath>

#include "psl/solver2d.hpp"
#include "test_util.hpp"

using namespace psl;

namespace {

double max_abs(const SpectralField& f) {
  double m = 0.0;
  for (const auto& v : f.data()) m = std::max(m, std::abs(v));
  return m;
}

double energy_l2(const SpectralField& u) {
  const auto ew = u.grid().vertical().energy_weights();
  double s = 0.0;
  for (int m = 0; m < u.modes(); ++m)
    for (int i = 0; i < u.nz(); ++i) s += u.grid().parseval_weight(m) * ew[i] * std::norm(u(m, i));
  return s;
}

}  // namespace

TEST(InitialData, ZeroAmplitude) {
  const auto g = make_grid({2 * kPi, 16, 20.0, 65, 0.0});
  InitialSpec s;
  s.amplitude = 0.0;
  EXPECT_EQ(max_abs(make_initial_data(s, g)), 0.0);
}

TEST(InitialData, SingleModeMatchesClosedForm) {
  const auto g = make_grid({2 * kPi, 16, 20.0, 801, 0.0});
  InitialSpec s;
  s.amplitude = 0.01;
  const auto u = make_initial_data(s, g);
  const auto z = g->vertical().z();
  for (int i = 0; i < g->nz(); ++i)
    EXPECT_NEAR(std::abs(u(1, i) - cplx(0, -0.5) * 0.01 * z[i] * std::exp(-0.5 * z[i] * z[i])), 0.0, 1e-18);
  // 2 pi eps^2 sqrt(pi) (1/4 + 3/8 + 7/16) from the Gaussian moment integrals.
  const double exact = 2.0 * kPi * 1e-4 * std::sqrt(kPi) * 17.0 / 16.0;
  EXPECT_NEAR(h1_weighted_norm2(u) / exact, 1.0, 1e-6);
}

TEST(InitialData, RandomIsSeedDeterministic) {
  const auto g = make_grid({2 * kPi, 32, 20.0, 65, 0.0});
  InitialSpec s;
  s.kind = "random";
  s.seed = 42;
  const auto a = make_initial_data(s, g);
  const auto b = make_initial_data(s, g);
  EXPECT_EQ(a.data(), b.data());
  s.seed = 43;
  EXPECT_NE(a.data(), make_initial_data(s, g).data());
}

TEST(InitialData, NormalizationToWeightedNorm) {
  const auto g = make_grid({2 * kPi, 32, 20.0, 201, 0.0});
  InitialSpec s;
  s.kind = "random";
  s.normalization = "h1_norm";
  s.amplitude = 0.01;
  EXPECT_NEAR(h1_weighted_norm(make_initial_data(s, g)), 0.01, 1e-15);
}

TEST(InitialData, RejectsProfileOffTheWall) {
  const auto g = make_grid({2 * kPi, 16, 20.0, 65, 0.0});
  EXPECT_THROW(make_initial_from_profile(g, 1, 0.01, [](double z) { return std::exp(-z); }), InvalidArgument);
  EXPECT_NO_THROW(make_initial_from_profile(g, 1, 0.01, [](double z) { return z * std::exp(-z); }));
}

TEST(Advection, ZeroField) {
  const auto g = make_grid({2 * kPi, 16, 10.0, 65, 0.0});
  Advection adv(g);
  EXPECT_EQ(max_abs(adv(SpectralField(g))), 0.0);
}

TEST(Advection, IndependentOfX) {
  const auto g = make_grid({2 * kPi, 16, 10.0, 65, 0.0});
  SpectralField u(g);
  for (int i = 0; i < g->nz(); ++i) u(0, i) = g->vertical().z()[i] * std::exp(-g->vertical().z()[i]);
  u.zero_walls();
  Advection adv(g);
  EXPECT_EQ(max_abs(adv(u)), 0.0);
}

TEST(Advection, MatchesSymbolicProduct) {
  const auto g = make_grid({2 * kPi, 16, 10.0, 100001, 0.0});
  const auto u = make_initial_from_profile(g, 1, 1.0, [](double z) { return z * std::exp(-z); });
  Advection adv(g);
  const auto n = adv(u);
  double err = 0.0;
  // The profile is clamped to zero at z = Z, so stay clear of the top stencils.
  for (int i = 1; g->vertical().z()[i] <= 9.0; ++i) {
    const double z = g->vertical().z()[i];
    const double gz = z * std::exp(-z), dg = (1.0 - z) * std::exp(-z), G = 1.0 - (1.0 + z) * std::exp(-z);
    // 1/2 sin(2x) (g^2 - G g') stored at index 2 as -i/4 (g^2 - G g').
    err = std::max(err, std::abs(n(2, i) - cplx(0, -0.25) * (gz * gz - G * dg)));
    for (int m : {0, 1, 3, 4}) err = std::max(err, std::abs(n(m, i)));
  }
  EXPECT_LT(err, 1e-8);
}

TEST(Step, ZeroStateStaysZero) {
  const auto g = make_grid({2 * kPi, 16, 10.0, 65, 0.0});
  Stepper2D st(g, {});
  State2D s;
  s.u = SpectralField(g);
  for (int i = 0; i < 5; ++i) st.step(s);
  EXPECT_EQ(max_abs(s.u), 0.0);
  EXPECT_EQ(s.step_index, 5);
}

TEST(Step, DominantEigenvalueOracle) {
  const double Z = 5.0, dt = 1e-3;
  const auto g = make_grid({2 * kPi, 4, Z, 33, 0.0});
  const auto& vg = g->vertical();
  const int n = vg.size() - 2;
  Eigen::MatrixXd D2 = Eigen::MatrixXd::Zero(n, n);
  for (int r = 0; r < n; ++r) {
    const int i = r + 1;
    D2(r, r) = vg.diag(i);
    if (r > 0) D2(r, r - 1) = vg.lower(i);
    if (r + 1 < n) D2(r, r + 1) = vg.upper(i);
  }
  const Eigen::MatrixXd A = -D2 - D2.inverse();  // k = 1
  Eigen::VectorXd s(n);
  for (int r = 0; r < n; ++r) s(r) = std::sqrt(vg.energy_weights()[r + 1]);
  const Eigen::MatrixXd S = s.asDiagonal() * A * s.cwiseInverse().asDiagonal();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (S + S.transpose()));
  const double lambda = es.eigenvalues().minCoeff();
  const double root = (2.0 + std::sqrt(1.0 - 2.0 * dt * lambda)) / (3.0 + 2.0 * dt * lambda);

  StepOptions opts;
  opts.advection = false;
  Stepper2D st(g, opts);
  State2D state;
  state.dt = dt;
  // Seed several vertical modes; the slowest one is not the gravest sine.
  state.u = make_initial_from_profile(
      g, 1, 1.0, [&](double z) { return std::sin(kPi * z / Z) + std::sin(2 * kPi * z / Z) + std::sin(3 * kPi * z / Z); });
  double factor = 0.0;
  for (int k = 0; k < 30000; ++k) {
    const double before = std::sqrt(energy_l2(state.u));
    st.step(state);
    const double after = std::sqrt(energy_l2(state.u));
    factor = after / before;
    state.u *= 1.0 / after;
    state.u_prev *= 1.0 / after;
  }
  EXPECT_NEAR(factor / root, 1.0, 1e-6);
}

TEST(Step, ManufacturedSolutionSecondOrderInTime) {
  const auto g = make_grid({2 * kPi, 16, 10.0, 81, 0.0});
  auto profile = [&](double z) { return z * std::exp(-0.5 * z * z); };
  const auto base = make_initial_from_profile(g, 1, 0.05, profile);
  SpectralField base2 = make_initial_from_profile(g, 2, 0.02, [](double z) { return z * z * std::exp(-z); });
  SpectralField shape = base;
  shape += base2;
  auto exact = [&](double t) { return (1.0 + 0.5 * std::sin(t)) * shape; };
  auto error_at = [&](double dt) {
    Advection adv(g);
    StepOptions o;
    o.forcing = [&](double t) {
      SpectralField f = apply_linear_operator(exact(t));
      f += adv(exact(t));
      f += (0.5 * std::cos(t)) * shape;
      for (int m = 0; m < f.modes(); ++m) {
        f(m, 0) = 0.0;
        f(m, f.nz() - 1) = 0.0;
      }
      return f;
    };
    Stepper2D st(g, o);
    State2D s;
    s.dt = dt;
    s.u = exact(0.0);
    while (s.step_index < std::llround(1.0 / dt)) st.step(s);
    SpectralField d = s.u;
    d -= exact(1.0);
    return max_abs(d);
  };
  const double e1 = error_at(0.02), e2 = error_at(0.01), e3 = error_at(0.005);
  EXPECT_GE(std::log2(e1 / e2), 1.8);
  EXPECT_GE(std::log2(e2 / e3), 1.8);
}

TEST(Step, LinearEnergyDecreases) {
  const auto g = make_grid({2 * kPi, 16, 20.0, 129, 0.0});
  StepOptions opts;
  opts.advection = false;
  Stepper2D st(g, opts);
  State2D s;
  s.dt = 1e-2;
  s.u = testutil::random_field(g, 3);
  double prev = energy_l2(s.u);
  for (int k = 0; k < 200; ++k) {
    st.step(s);
    const double e = energy_l2(s.u);
    EXPECT_LT(e, prev);
    prev = e;
  }
}

TEST(Step, NonFiniteStepIsRejected) {
  const auto g = make_grid({2 * kPi, 8, 10.0, 33, 0.0});
  StepOptions o;
  o.forcing = [&](double) {
    SpectralField f(g);
    f(1, 5) = std::nan("");
    return f;
  };
  Stepper2D st(g, o);
  State2D s;
  s.u = testutil::random_field(g, 1);
  const auto before = s.u.data();
  EXPECT_THROW(st.step(s), NumericalError);
  EXPECT_EQ(s.step_index, 0);
  EXPECT_EQ(s.u.data(), before);
}

TEST(Compatibility, ZeroField) {
  const auto g = make_grid({2 * kPi, 8, 10.0, 33, 0.0});
  const auto d = compatibility_diagnostics(SpectralField(g));
  EXPECT_EQ(d.d2u_wall, 0.0);
  EXPECT_EQ(d.far_moment, 0.0);
}

TEST(Compatibility, WallCurvatureConvergesUnderRefinement) {
  auto wall = [](int nz) {
    const double Z = 10.0;
    const auto g = make_grid({2 * kPi, 8, Z, nz, 0.0});
    const auto u = make_initial_from_profile(g, 1, 1.0, [&](double z) { return std::sin(kPi * z / Z); });
    return compatibility_diagnostics(u).d2u_wall;
  };
  EXPECT_GE(wall(33) / wall(65), 3.5);
}

TEST(Scenario2D, ZeroHorizonGivesInitialSample) {
  Scenario2D sc;
  sc.grid = {2 * kPi, 16, 20.0, 65, 0.0};
  sc.t_final = 0.0;
  const auto r = run_scenario2d(sc);
  ASSERT_EQ(r.report.size(), 1u);
  EXPECT_EQ(r.report.rows[0][0], 0.0);
}

TEST(Scenario2D, ThreadCountDoesNotChangeOutput) {
  Scenario2D sc;
  sc.grid = {2 * kPi, 32, 20.0, 129, 0.0};
  sc.initial.kind = "random";
  sc.initial.seed = 9;
  sc.t_final = 0.2;
  sc.dt = 1e-2;
  sc.cadence = 2;
  sc.threads = 1;
  const auto a = run_scenario2d(sc);
  sc.threads = 4;
  const auto b = run_scenario2d(sc);
  ASSERT_EQ(a.report.rows.size(), b.report.rows.size());
  for (std::size_t i = 0; i < a.report.rows.size(); ++i)
    for (std::size_t j = 0; j < a.report.rows[i].size(); ++j) {
      const double x = a.report.rows[i][j], y = b.report.rows[i][j];
      EXPECT_TRUE((std::isnan(x) && std::isnan(y)) || x == y);
    }
  EXPECT_LE(a.final_state.u.symmetry_defect(), 1e-12);
}

TEST(Scenario2D, SmallDataNormDoesNotGrow) {
  Scenario2D sc;
  sc.grid = {2 * kPi, 32, 20.0, 129, 0.0};
  sc.initial.normalization = "h1_norm";
  sc.t_final = 1.0;
  sc.dt = 1e-2;
  sc.cadence = 10;
  const auto r = run_scenario2d(sc);
  const auto n = r.report.series("h1_norm");
  for (std::size_t i = 1; i < n.size(); ++i) EXPECT_LE(n[i], n[i - 1]);
  EXPECT_TRUE(monotonicity_audit(r.report, 0.01).pass);
}
