#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <numbers>
#include <random>

#include "erd/dynamics.hpp"

using namespace erd;

namespace {

SystemState random_state(const Grid1D& g, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  SystemState st = SystemState::zeros(g);
  for (Species sp : {Species::E, Species::S, Species::C, Species::P})
    for (double& v : st.field(sp)) v = u(rng);
  return st;
}

SystemState figure_state(const Grid1D& g) {
  SystemState st = SystemState::zeros(g);
  st.e = project_indicator(0.4, 0.6, 0.2, g);
  st.s = project_indicator(0.1, 0.3, 1.5, g);
  return st;
}

}  // namespace

TEST(Reaction, ZeroStateAndSingleTerm) {
  const Grid1D g(4);
  const auto z = reaction_terms(SystemState::zeros(g), {1, 1, 1});
  for (const Field* f : {&z.f_e, &z.f_s, &z.f_c, &z.f_p})
    for (double v : *f) EXPECT_EQ(v, 0.0);
  SystemState st = SystemState::zeros(g);
  st.e = Field(4, 1.0);
  st.s = Field(4, 1.0);
  const auto r = reaction_terms(st, {1, 1, 1});
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(r.f_e[i], -1.0);
    EXPECT_EQ(r.f_s[i], -1.0);
    EXPECT_EQ(r.f_c[i], 1.0);
    EXPECT_EQ(r.f_p[i], 0.0);
  }
}

TEST(Reaction, ConservationCancellation) {
  const Grid1D g(32);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto st = random_state(g, seed);
    const auto r = reaction_terms(st, {2.5, 0.7, 1.3});
    for (std::size_t i = 0; i < 32; ++i) {
      EXPECT_NEAR(r.f_e[i] + r.f_c[i], 0.0, 1e-14);
      EXPECT_NEAR(r.f_s[i] + r.f_c[i] + r.f_p[i], 0.0, 1e-14);
    }
  }
}

TEST(Laplacian, ConstantAndTelescoping) {
  const Grid1D g(50);
  for (double v : neumann_laplacian(Field(50, 3.0), g)) EXPECT_EQ(v, 0.0);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto f = random_state(g, seed).s;
    EXPECT_NEAR(integrate(neumann_laplacian(f, g), g), 0.0, 1e-12);
  }
}

TEST(Laplacian, SecondOrderOnCosine) {
  std::vector<double> errs;
  for (std::size_t n : {50u, 100u, 200u}) {
    const Grid1D g(n);
    Field f(n);
    for (std::size_t i = 0; i < n; ++i) f[i] = std::cos(std::numbers::pi * g.center(i));
    const auto L = neumann_laplacian(f, g);
    double err = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      err = std::max(err, std::abs(L[i] + std::numbers::pi * std::numbers::pi * f[i]));
    errs.push_back(err);
  }
  for (std::size_t k = 1; k < errs.size(); ++k) EXPECT_GT(std::log2(errs[k - 1] / errs[k]), 1.8);
}

TEST(NeumannSolver, MatchesDenseSolve) {
  const std::size_t n = 17;
  const double r = 0.37;
  detail::NeumannSolver solver(n, r);
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    const double diag = (i == 0 || i + 1 == n) ? 1.0 : 2.0;
    A(i, i) = 1.0 + r * diag;
    if (i > 0) A(i, i - 1) = -r;
    if (i + 1 < n) A(i, i + 1) = -r;
  }
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Eigen::VectorXd b(n);
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = b(i) = u(rng);
  solver.solve_in_place(x);
  const Eigen::VectorXd ref = A.partialPivLu().solve(b);
  for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(x[i], ref(i), 1e-14);
}

TEST(Step, FixedPointWithoutReaction) {
  const Grid1D g(20);
  SystemState st = SystemState::zeros(g);
  st.e = Field(20, 0.3);
  st.p = Field(20, 0.7);
  StepperConfig cfg;
  cfg.dt = 0.01;
  const auto next = step_imex(st, {1, 1, 1}, {1, 1, 1, 1}, cfg, g);
  EXPECT_LE(linf_distance(next.e, st.e), 1e-12);
  EXPECT_LE(linf_distance(next.p, st.p), 1e-12);
  EXPECT_LE(linf_norm(next.s), 1e-12);
}

TEST(Step, HeatModeDecay) {
  const std::size_t n = 64;
  const Grid1D g(n);
  SystemState st = SystemState::zeros(g);
  st.e = Field(n, 1.0);
  for (std::size_t i = 0; i < n; ++i) st.p[i] = 1.0 + 0.5 * std::cos(std::numbers::pi * g.center(i));
  const double d = 0.3;
  for (double dt : {1e-2, 1e-3, 1e-4}) {
    StepperConfig cfg;
    cfg.dt = dt;
    const auto next = step_imex(st, {1, 1, 1}, {1, 1, 1, d}, cfg, g);
    const double factor = l2_deviation(next.p, g) / l2_deviation(st.p, g);
    // backward Euler on the discrete eigenvalue of the cosine mode
    const double lam_h = 4.0 / (g.h() * g.h()) * std::pow(std::sin(std::numbers::pi * g.h() / 2.0), 2);
    EXPECT_NEAR(factor, 1.0 / (1.0 + dt * d * lam_h), 1e-12);
    EXPECT_NEAR(factor, std::exp(-d * std::numbers::pi * std::numbers::pi * dt), 2.0 * dt * dt * 10.0);
  }
}

TEST(Step, LocalizedEnzymeDataConservesMasses) {
  const Grid1D g(200);
  const auto st = figure_state(g);
  StepperConfig cfg;
  cfg.dt = 1e-4;
  const auto next = step_imex(st, {100, 1, 1}, {0, 0.02, 0, 0.02}, cfg, g);
  const auto m0 = conserved_masses(st, g), m1 = conserved_masses(next, g);
  EXPECT_LE(std::abs(m1.M0 - m0.M0) / m0.M0, 1e-12);
  EXPECT_LE(std::abs(m1.M1 - m0.M1) / m0.M1, 1e-12);
}

TEST(Simulate, ZeroDataStaysZero) {
  const Grid1D g(10);
  StepperConfig cfg;
  cfg.dt = 0.01;
  cfg.t_end = 0.5;
  const auto tr = simulate(SystemState::zeros(g), {1, 1, 1}, {1, 1, 1, 1}, cfg, g);
  for (const auto& st : tr.snapshots)
    for (Species sp : {Species::E, Species::S, Species::C, Species::P}) EXPECT_EQ(linf_norm(st.field(sp)), 0.0);
}

TEST(Simulate, NoSubstrateMeansPureEnzymeHeatFlow) {
  const Grid1D g(40);
  SystemState st = SystemState::zeros(g);
  st.e = project_indicator(0.0, 0.5, 1.0, g);
  StepperConfig cfg;
  cfg.dt = 1e-3;
  cfg.t_end = 2.0;
  cfg.record_every = 100;
  const auto tr = simulate(st, {1, 1, 1}, {1, 1, 1, 1}, cfg, g);
  const auto& last = tr.snapshots.back();
  EXPECT_EQ(linf_norm(last.s), 0.0);
  EXPECT_EQ(linf_norm(last.c), 0.0);
  EXPECT_EQ(linf_norm(last.p), 0.0);
  EXPECT_LT(tr.diagnostics.back().e_dev_linf, 1e-6);
  EXPECT_NEAR(tr.equilibrium.e_inf[0], 0.5, 1e-15);
}

TEST(Simulate, RecordingSchedule) {
  const Grid1D g(10);
  SystemState st = SystemState::zeros(g);
  st.e = Field(10, 1.0);
  st.s = Field(10, 0.5);
  StepperConfig cfg;
  cfg.dt = 0.01;
  cfg.t_end = 1.05;
  cfg.record_every = 10;
  const auto tr = simulate(st, {1, 1, 1}, {1, 1, 1, 1}, cfg, g);
  EXPECT_EQ(tr.steps_taken, 105u);
  EXPECT_EQ(tr.snapshots.size(), 12u);
  EXPECT_DOUBLE_EQ(tr.snapshots.back().t, 1.05);
}

TEST(Simulate, InitialReactionBoundViolation) {
  const Grid1D g(10);
  SystemState st = SystemState::zeros(g);
  st.e = Field(10, 1.0);
  st.s = Field(10, 1.0);
  StepperConfig cfg;
  cfg.dt = 0.1;
  try {
    simulate(st, {100, 1, 1}, {1, 1, 1, 1}, cfg, g);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Config);
  }
}

TEST(Simulate, NegativeInitialDataRejected) {
  const Grid1D g(4);
  SystemState st = SystemState::zeros(g);
  st.s[2] = -1e-3;
  StepperConfig cfg;
  EXPECT_THROW(simulate(st, {1, 1, 1}, {1, 1, 1, 1}, cfg, g), Error);
}

TEST(Simulate, FirstOrderAgainstFineReference) {
  // well-mixed reaction: compare against a much finer run of the same scheme
  const Grid1D g(4);
  SystemState st = SystemState::zeros(g);
  st.e = Field(4, 1.0);
  st.s = Field(4, 2.0);
  auto run = [&](double dt) {
    StepperConfig cfg;
    cfg.dt = dt;
    cfg.t_end = 1.0;
    cfg.record_every = 1000000;
    return simulate(st, {1, 1, 1}, {1, 1, 1, 1}, cfg, g).snapshots.back();
  };
  const auto ref = run(1e-5);
  const double e1 = std::abs(run(1e-2).c[0] - ref.c[0]);
  const double e2 = std::abs(run(5e-3).c[0] - ref.c[0]);
  EXPECT_GT(std::log2(e1 / e2), 0.9);
}

TEST(Equilibrium, LocalizedEnzymeAndFullRegime) {
  const Grid1D g(10);
  const auto st = figure_state(g);
  const auto deg = equilibrium(st, {0, 0.02, 0, 0.02}, g);
  EXPECT_EQ(deg.regime, Regime::Degenerate);
  for (std::size_t i = 0; i < 10; ++i) EXPECT_EQ(deg.e_inf[i], st.e[i]);
  EXPECT_NEAR(deg.p_inf, 0.3, 1e-15);
  const auto full = equilibrium(st, {1, 1, 1, 1}, g);
  for (double v : full.e_inf) EXPECT_NEAR(v, 0.04, 1e-15);
  EXPECT_NEAR(full.p_inf, 0.3, 1e-15);
}

TEST(Equilibrium, MinimumEnzyme) {
  const Grid1D g(10);
  EXPECT_EQ(check_min_enzyme(figure_state(g)), 0.0);
  SystemState st = SystemState::zeros(g);
  st.e = Field(10, 0.5);
  EXPECT_EQ(check_min_enzyme(st), 0.5);
  st.e = project_indicator(0.0, 0.5, 1.0, g);
  st.c = project_indicator(0.5, 1.0, 1.0, g);
  EXPECT_EQ(check_min_enzyme(st), 1.0);
}
