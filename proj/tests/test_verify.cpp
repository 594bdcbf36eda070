#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "erd/verify.hpp"

using namespace erd;

namespace {

Trajectory synthetic_rates(double rs, double rc, double re, double rp, double t_end = 20.0) {
  Trajectory tr;
  for (int i = 0; i <= 200; ++i) {
    Diagnostics d;
    d.t = t_end * i / 200.0;
    d.s_linf = std::exp(-rs * d.t);
    d.c_linf = 2.0 * std::exp(-rc * d.t);
    d.e_dev_linf = 0.5 * std::exp(-re * d.t);
    d.p_dev_linf = std::exp(-rp * d.t);
    tr.diagnostics.push_back(d);
  }
  return tr;
}

Trajectory run(const SystemState& init, const RateConstants& r, const DiffusionCoeffs& d, double t_end, double dt,
               const Grid1D& g) {
  StepperConfig cfg;
  cfg.dt = dt;
  cfg.t_end = t_end;
  cfg.record_every = 10;
  return simulate(init, r, d, cfg, g);
}

SystemState smooth_state(const Grid1D& g) {
  SystemState st = SystemState::zeros(g);
  for (std::size_t i = 0; i < g.n_cells(); ++i) {
    const double x = g.center(i);
    st.e[i] = 0.5 + 0.3 * std::cos(std::numbers::pi * x);
    st.c[i] = 0.1 + 0.05 * std::cos(2.0 * std::numbers::pi * x);
    st.s[i] = 1.0 + 0.8 * std::cos(std::numbers::pi * x);
    st.p[i] = 0.2;
  }
  return st;
}

}  // namespace

TEST(Report, JsonRoundTrip) {
  CheckReport a;
  a.name = "outer";
  CheckReport b;
  b.name = "outer.inner";
  b.tolerance = 1e-3;
  b.record("t=1", 0.25);
  b.record("t=2", -0.5);
  b.finalize();
  a.subchecks = {b, CheckReport::not_applicable("outer.na", "no data")};
  a.finalize_from_subchecks();
  EXPECT_TRUE(a.failed());
  EXPECT_EQ(b.worst_locator, "t=2");

  const auto back = check_report_from_json(to_json(a));
  EXPECT_EQ(back.name, "outer");
  EXPECT_EQ(back.outcome, Outcome::Fail);
  EXPECT_TRUE(std::isinf(back.worst_margin));
  ASSERT_EQ(back.subchecks.size(), 2u);
  EXPECT_EQ(back.subchecks[0].worst_margin, -0.5);
  EXPECT_EQ(back.subchecks[0].details.size(), 2u);
  EXPECT_EQ(back.subchecks[1].outcome, Outcome::NotApplicable);
  EXPECT_EQ(back.subchecks[1].message, "no data");
  EXPECT_EQ(to_json(back), to_json(a));
  EXPECT_THROW(outcome_from_string("MAYBE"), Error);
}

TEST(FunctionalInequality, SlackIsAffineInGamma) {
  const Grid1D g(32);
  const auto ac = random_audit_case(Regime::Full, GeometryConstants{}, g, 5);
  const auto t1 = functional_inequality_terms(ac.state, ac.params, ac.eq, ac.rates, ac.diff, ac.geometry, 0.1, g);
  const auto t2 = functional_inequality_terms(ac.state, ac.params, ac.eq, ac.rates, ac.diff, ac.geometry, 0.3, g);
  const double E = total_entropy(ac.state, ac.params, ac.eq, ac.rates, g).E;
  EXPECT_NEAR(t1.slack - t2.slack, 0.2 * E, 1e-12 * std::max(1.0, E));
  EXPECT_EQ(t1.rhs, t2.rhs);
}

TEST(FunctionalInequality, HoldsOnRandomStatesBothRegimes) {
  const Grid1D g(48);
  for (Regime r : {Regime::Full, Regime::Degenerate}) {
    const auto rep = audit_functional_inequality(r, 40, GeometryConstants{}, g, 100);
    EXPECT_TRUE(rep.passed()) << rep.message << " worst " << rep.worst_locator;
    EXPECT_EQ(rep.details.size(), 40u);
  }
}

TEST(FunctionalInequality, AuditCasesAreAdmissible) {
  const Grid1D g(40);
  for (std::uint64_t s = 0; s < 20; ++s) {
    const auto full = random_audit_case(Regime::Full, GeometryConstants{}, g, s);
    EXPECT_NEAR(conserved_masses(full.state, g).M0, full.M0, 1e-12);
    EXPECT_GT(min_value(full.state.s), 0.0);
    EXPECT_GT(full.gamma.value, 0.0);
    const auto deg = random_audit_case(Regime::Degenerate, GeometryConstants{}, g, s);
    EXPECT_LT(linf_distance(deg.state.e + deg.state.c, deg.eq.e_inf), 1e-15 * linf_norm(deg.eq.e_inf));
    EXPECT_NEAR(deg.beta, min_value(deg.eq.e_inf), 0.0);
  }
}

TEST(TightStates, RatioAtLeastOneAndReproducible) {
  const Grid1D g(16);
  AuditSetup s;
  s.M0 = 1.0;
  s.M1 = 1.0;
  s.eq = {Regime::Full, Field(16, 1.0), 0.0, 0.0, 1.0};
  s.params = default_params_full(s.rates, s.M0, s.geometry, s.diff.d_e);
  s.gamma = gamma_full({s.rates, s.diff, s.M0, s.M1, 0.0, s.geometry, s.params, std::nullopt, GammaForm::Proof}).value;
  const auto a = search_tight_state(s, g, 7, 2, 400);
  const auto b = search_tight_state(s, g, 7, 2, 400);
  EXPECT_EQ(a.ratio, b.ratio);
  EXPECT_GE(a.ratio, 1.0);
  EXPECT_GE(a.evaluations, 2u * 401u + 1u);
  EXPECT_LE(a.evaluations, 2u * 401u + 2u);

  const auto pass = check_tight_state_audit(s, s.gamma, g, 7, 2, 400);
  EXPECT_TRUE(pass.passed());
  const auto fail = check_tight_state_audit(s, 2.0 * a.ratio * s.gamma, g, 7, 2, 400);
  EXPECT_TRUE(fail.failed());
  EXPECT_NEAR(fail.worst_margin, -0.5, 1e-12);
}

TEST(TightStates, AdmissibleStateRespectsBudget) {
  const Grid1D g(8);
  AuditSetup s;
  s.M0 = 2.0;
  s.M1 = 0.5;
  std::vector<double> x(6, 0.0);
  const auto st = detail::admissible_state(s, x, 2, g);
  EXPECT_FALSE(st);
  x = {0.0, 1.0, -5.0, -5.0, -3.0, -4.0};
  const auto ok = detail::admissible_state(s, x, 2, g);
  ASSERT_TRUE(ok);
  const auto m = conserved_masses(*ok, g);
  EXPECT_NEAR(m.M0, 2.0, 1e-14);
  EXPECT_NEAR(m.M1, 0.5, 1e-14);
}

TEST(TruncatedLsi, TrivialCases) {
  const Grid1D g(64);
  const auto flat = truncated_lsi_sides(Field(64, 2.0), 0.5, GeometryConstants{}, g);
  EXPECT_EQ(flat.lhs, 0.0);
  EXPECT_NEAR(flat.rhs, 0.0, 1e-15);
  const auto below = truncated_lsi_sides(Field(64, 0.1), 0.5, GeometryConstants{}, g);
  EXPECT_EQ(below.lhs, 0.0);
  EXPECT_EQ(below.rhs, 0.0);
  EXPECT_THROW(truncated_lsi_sides(Field(64, 1.0), 0.0, GeometryConstants{}, g), Error);
}

TEST(TruncatedLsi, HoldsOnSmoothFields) {
  const Grid1D g(256);
  const auto fields = random_smooth_fields(200, 6, g, 3);
  for (double eps : {1e-3, 0.1, 0.5}) {
    const auto rep = check_truncated_lsi(fields, eps, GeometryConstants{}, g);
    EXPECT_TRUE(rep.passed()) << "eps " << eps << " worst " << rep.worst_margin << " at " << rep.worst_locator;
  }
  for (const auto& f : fields) EXPECT_GT(min_value(f), 0.0);
}

TEST(PL2Decay, PureProductHeatFlow) {
  const Grid1D g(64);
  SystemState st = SystemState::zeros(g);
  st.e = Field(64, 1.0);
  for (std::size_t i = 0; i < 64; ++i) st.p[i] = 1.0 + 0.5 * std::cos(std::numbers::pi * g.center(i));
  const auto tr = run(st, {1, 1, 1}, {1, 1, 1, 0.3}, 2.0, 1e-3, g);
  for (const auto& d : tr.diagnostics) EXPECT_EQ(d.c_l2_dev, 0.0);
  const auto rep = check_p_l2_decay(tr, 0.3, 1.0, GeometryConstants{}, 0.5);
  EXPECT_TRUE(rep.passed()) << rep.worst_margin;
  // a Poincare constant 4x too small claims decay faster than the heat flow delivers
  GeometryConstants wrong;
  wrong.C_P = 0.25 / (std::numbers::pi * std::numbers::pi);
  EXPECT_TRUE(check_p_l2_decay(tr, 0.3, 1.0, wrong, 0.1).failed());
}

TEST(RatePredictions, SyntheticSeries) {
  RatePredictions pred;
  pred.rate_s = 0.9;
  pred.rate_c = 0.5;
  pred.rate_e = 0.25;
  pred.rate_p = 0.4;
  auto rep = check_rate_predictions(synthetic_rates(1.0, 0.5, 0.3, 0.4), pred);
  EXPECT_TRUE(rep.passed());
  for (const auto& s : rep.subchecks) EXPECT_TRUE(s.passed()) << s.name << " " << s.message;

  rep = check_rate_predictions(synthetic_rates(1.0, 0.45, 0.3, 0.4), pred);
  EXPECT_TRUE(rep.failed());
  EXPECT_TRUE(rep.subchecks[1].failed());

  pred.rate_p.reset();
  rep = check_rate_predictions(synthetic_rates(1.0, 0.5, 0.3, 0.4), pred);
  EXPECT_EQ(rep.subchecks[3].outcome, Outcome::NotApplicable);
}

TEST(RatePredictions, FloorGivesNotApplicable) {
  RatePredictions pred;
  pred.rate_s = 1.0;
  const auto rep = check_rate_predictions(synthetic_rates(40.0, 40.0, 40.0, 40.0), pred);
  EXPECT_EQ(rep.subchecks[0].outcome, Outcome::NotApplicable);
  EXPECT_EQ(rep.outcome, Outcome::NotApplicable);
}

TEST(Conservation, DetectsDrift) {
  const Grid1D g(32);
  auto tr = run(smooth_state(g), {1, 1, 1}, {1, 1, 1, 1}, 1.0, 1e-3, g);
  EXPECT_TRUE(check_conservation(tr, g).passed());
  tr.snapshots.back().p[3] += 1e-6;
  const auto rep = check_conservation(tr, g);
  EXPECT_TRUE(rep.failed());
  EXPECT_TRUE(rep.subchecks[0].passed());
  EXPECT_TRUE(rep.subchecks[1].failed());
}

TEST(Conservation, PointwiseEnzymeInDegenerateRegime) {
  const Grid1D g(32);
  auto tr = run(smooth_state(g), {1, 1, 1}, {0, 1, 0, 1}, 1.0, 1e-3, g);
  auto rep = check_conservation(tr, g);
  ASSERT_EQ(rep.subchecks.size(), 3u);
  EXPECT_TRUE(rep.passed());
  tr.snapshots.back().e[1] += 1e-6;
  tr.snapshots.back().e[2] -= 1e-6;
  rep = check_conservation(tr, g);
  EXPECT_TRUE(rep.subchecks[0].passed());
  EXPECT_TRUE(rep.subchecks[2].failed());
}

TEST(MassDissipation, MatchesClosedFormAlongRun) {
  const Grid1D g(64);
  const auto tr = run(smooth_state(g), {2, 1, 1.5}, {1, 1, 1, 1}, 1.0, 1e-4, g);
  const auto stats = mass_dissipation_mismatch(tr, {2, 1, 1.5}, g);
  EXPECT_LT(stats.relative_mismatch, 5e-3);
  EXPECT_TRUE(check_mass_dissipation(tr, {2, 1, 1.5}, g).passed());
  EXPECT_FALSE(check_mass_dissipation(tr, {2, 1, 1.5}, g, 1e-9).passed());
}

TEST(CkpBounds, HoldAlongFullRun) {
  const Grid1D g(64);
  const RateConstants r{1, 1, 1};
  const auto tr = run(smooth_state(g), r, {1, 1, 1, 1}, 2.0, 1e-3, g);
  const auto p = default_params_full(r, tr.equilibrium.e_inf[0], GeometryConstants{}, 1.0);
  const auto rep = check_ckp_bounds(tr, p, tr.equilibrium, r, GeometryConstants{}, g);
  EXPECT_TRUE(rep.passed());
  EXPECT_EQ(rep.subchecks.size(), 3u);
}

TEST(EntropyDecay, MonotoneAndBoundedAlongDegenerateRun) {
  const Grid1D g(64);
  const RateConstants r{1, 1, 1};
  const auto tr = run(smooth_state(g), r, {0, 1, 0, 1}, 3.0, 1e-3, g);
  const auto p = default_params_degenerate(r, 1.0, tr.equilibrium.e_inf);
  GammaInputs gi;
  gi.diff = {0, 1, 0, 1};
  gi.M1 = tr.equilibrium.p_inf;
  gi.beta = min_value(tr.equilibrium.e_inf);
  gi.params = p;
  gi.e_inf = tr.equilibrium.e_inf;
  const double gamma = gamma_degenerate(gi).value;
  const auto rep = check_entropy_decay(tr, p, tr.equilibrium, r, gamma, g);
  EXPECT_TRUE(rep.passed());
  const auto na = check_entropy_decay(tr, p, tr.equilibrium, r, std::nullopt, g);
  EXPECT_EQ(na.subchecks[1].outcome, Outcome::NotApplicable);
  EXPECT_TRUE(na.passed());
}

TEST(ImportantInequality, ReExportedCheck) {
  const auto rep = check_important_inequality(100000, 1);
  EXPECT_TRUE(rep.passed());
  EXPECT_EQ(rep.worst_locator, "x=2");
  EXPECT_NEAR(rep.worst_margin, important_inequality_margin(2.0), 0.0);
}
