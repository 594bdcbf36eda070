// Run pipeline behind the command-line tool: simulate, rates, verify, fig1 and sweep.
#pragma once

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "erd/config.hpp"
#include "erd/core.hpp"
#include "erd/dynamics.hpp"
#include "erd/entropy.hpp"
#include "erd/rates.hpp"
#include "erd/verify.hpp"

namespace erd::cli {

namespace fs = std::filesystem;
using nlohmann::json;

enum ExitCode : int { kOk = 0, kCheckFailed = 1, kConfigError = 2, kRuntimeError = 3 };

/// Everything derived from a config before time stepping.
struct Setup {
  RunConfig cfg;
  Grid1D grid{2};
  SystemState initial;
  Regime regime = Regime::Full;
  ConservedMasses masses;
  double beta = 0.0;
  EquilibriumState eq;
  EntropyParams params;
  std::string params_source;
  std::optional<GammaResult> gamma;
  std::string gamma_reason;  // why gamma is absent
  std::optional<double> mu;
};

/// Entropy parameters: module defaults when possible, configured values otherwise.
inline EntropyParams resolve_params(const RunConfig& cfg, const Setup& s, std::string& source) {
  const auto& r = cfg.rates;
  if (s.regime == Regime::Full) {
    if (cfg.entropy_use_defaults && s.masses.M0 > 0.0) {
      source = cfg.entropy_variant == ParamVariant::Primary ? "defaults.primary" : "defaults.alternative";
      return default_params_full(r, s.masses.M0, cfg.geometry, cfg.diff.d_e, cfg.entropy_variant);
    }
    EntropyParams p;
    p.eps_s = cfg.entropy_eps_s.value_or(1.0);
    p.eps_c = Threshold(r.k_f * s.masses.M0 / r.k_r * p.eps_s);
    p.k = cfg.entropy_k.value_or(4.0 * (r.k_c + r.k_r + 2.0 * r.k_f * p.eps_s) / r.k_c);
    source = cfg.entropy_use_defaults ? "fallback (zero enzyme mass)" : "configured";
    return p;
  }
  EntropyParams p = default_params_degenerate(r, cfg.entropy_eps_s.value_or(1.0), s.eq.e_inf);
  if (!cfg.entropy_use_defaults && cfg.entropy_k) p.k = *cfg.entropy_k;
  source = cfg.entropy_use_defaults ? "defaults" : "configured";
  return p;
}

inline Setup prepare(const RunConfig& cfg) {
  Setup s;
  s.cfg = cfg;
  s.grid = Grid1D(cfg.n_cells);
  s.initial = build_initial_state(cfg, s.grid);
  s.regime = cfg.diff.regime();
  s.masses = conserved_masses(s.initial, s.grid);
  s.beta = check_min_enzyme(s.initial);
  s.eq = equilibrium(s.initial, cfg.diff, s.grid);
  s.params = resolve_params(cfg, s, s.params_source);

  GammaInputs gi{cfg.rates, cfg.diff, s.masses.M0, s.masses.M1, s.beta, cfg.geometry, s.params, std::nullopt,
                 cfg.gamma_form};
  try {
    if (s.regime == Regime::Full) {
      if (cfg.entropy_use_defaults && s.masses.M0 > 0.0) s.gamma = gamma_full(gi);
      else if (s.masses.M0 > 0.0 && s.masses.M1 > 0.0) s.gamma = gamma_full(gi);
      else s.gamma_reason = "M0 and M1 must be > 0";
    } else {
      gi.e_inf = s.eq.e_inf;
      s.gamma = gamma_degenerate(gi);
    }
  } catch (const Error& e) {
    s.gamma.reset();
    s.gamma_reason = e.detail();
  }
  if (s.gamma && !s.gamma->positive) {
    s.gamma_reason = "gamma is not positive for these constants";
  }
  if (s.regime == Regime::Full && s.masses.M0 > 0.0) s.mu = mu_opt(cfg.rates, s.masses.M0);
  return s;
}

/// gamma used by the checks: module gamma times verify.gamma_scale, when positive.
inline std::optional<double> checked_gamma(const Setup& s) {
  if (!s.gamma || !s.gamma->positive) return std::nullopt;
  return s.gamma->value * s.cfg.gamma_scale;
}

inline std::string fmt(double v) { return detail::format_double(v); }

inline json number_or_null(double v) { return detail::number_or_null(v); }

inline json params_json(const EntropyParams& p, const std::string& source) {
  json j;
  j["source"] = source;
  j["eps_s"] = p.eps_s;
  if (p.eps_c.is_uniform()) {
    j["eps_c"] = p.eps_c.uniform_value();
  } else {
    const auto& f = p.eps_c.field();
    j["eps_c"] = {{"min", min_value(f)}, {"max", *std::max_element(f.begin(), f.end())}};
  }
  j["k"] = p.k;
  return j;
}

inline json gamma_json(const Setup& s) {
  json j;
  if (s.gamma && s.gamma->positive) {
    j["status"] = "OK";
    j["value"] = s.gamma->value;
    j["branches"] = s.gamma->branches;
    j["binding_branch"] = s.gamma->binding_branch;
    j["form"] = s.cfg.gamma_form == GammaForm::Proof ? "proof" : "theorem_display";
  } else {
    j["status"] = "NOT_APPLICABLE";
    j["reason"] = s.gamma_reason;
    if (s.gamma) j["branches"] = s.gamma->branches;
  }
  return j;
}

/// Per-snapshot row of trajectory.csv.
struct TrajectoryRow {
  Diagnostics d;
  EntropySample e;
};

inline std::vector<TrajectoryRow> trajectory_rows(const Setup& s, const Trajectory& traj) {
  const auto samples = entropy_trajectory(traj, s.params, s.eq, s.cfg.rates, s.cfg.diff, s.cfg.geometry, s.grid);
  std::vector<TrajectoryRow> rows;
  rows.reserve(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) rows.push_back({traj.diagnostics[i], samples[i]});
  return rows;
}

inline void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Config, "cannot write '" + path.string() + "'");
  out << text;
}

inline std::string trajectory_csv(const std::vector<TrajectoryRow>& rows) {
  std::string out = "t,M0,M1,s_linf,c_linf,e_dev_linf,p_dev_linf,E,H,M,int_dM,int_d\n";
  char buf[512];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", r.d.t,
                  r.d.M0, r.d.M1, r.d.s_linf, r.d.c_linf, r.d.e_dev_linf, r.d.p_dev_linf, r.e.report.E, r.e.report.H,
                  r.e.report.M, r.e.int_mass_density, r.e.int_production);
    out += buf;
  }
  return out;
}

inline std::string fields_csv(const SystemState& st, const Grid1D& grid) {
  std::string out = "x,e,s,c,p\n";
  char buf[256];
  for (std::size_t i = 0; i < grid.n_cells(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g\n", grid.center(i), st.e[i], st.s[i], st.c[i],
                  st.p[i]);
    out += buf;
  }
  return out;
}

/// File name for the snapshot requested at time t, e.g. fields_t10.csv.
inline std::string fields_name(double t) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "fields_t%g.csv", t);
  return buf;
}

/// Snapshot index closest to t; throws when no snapshot is within half a recording interval.
inline std::size_t snapshot_at(const Trajectory& traj, double t, const StepperConfig& stepper) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < traj.snapshots.size(); ++i)
    if (std::abs(traj.snapshots[i].t - t) < std::abs(traj.snapshots[best].t - t)) best = i;
  const double spacing = stepper.dt * static_cast<double>(stepper.record_every);
  if (std::abs(traj.snapshots[best].t - t) > 0.5 * spacing + 1e-9 * std::max(1.0, t))
    throw Error(ErrorKind::Config, "outputs.field_times: t=" + fmt(t) + " is not near a recorded snapshot");
  return best;
}

inline std::vector<double> field_times(const RunConfig& cfg, const Trajectory& traj) {
  if (!cfg.field_times.empty()) return cfg.field_times;
  return {traj.snapshots.front().t, traj.snapshots.back().t};
}

/// Fitted exponential decay rates of the norm series, null where a fit is impossible.
inline json fitted_rates_json(const Trajectory& traj, double floor) {
  std::vector<double> t, s, c, e, p;
  for (const auto& d : traj.diagnostics) {
    t.push_back(d.t);
    s.push_back(d.s_linf);
    c.push_back(d.c_linf);
    e.push_back(d.e_dev_linf);
    p.push_back(d.p_dev_linf);
  }
  auto fit = [&](const std::vector<double>& v) -> json {
    std::vector<double> tt, vv;
    const auto w = default_fit_window(t);
    for (std::size_t i = 0; i < t.size(); ++i)
      if (t[i] >= w.t_lo && v[i] > floor) {
        tt.push_back(t[i]);
        vv.push_back(v[i]);
      }
    try {
      const auto f = fit_decay_rate(tt, vv, w, floor);
      return {{"rate", f.rate}, {"r_squared", number_or_null(f.r_squared)}, {"window", {f.window.t_lo, f.window.t_hi}}};
    } catch (const Error&) {
      return nullptr;
    }
  };
  return {{"s_linf", fit(s)}, {"c_linf", fit(c)}, {"e_dev_linf", fit(e)}, {"p_dev_linf", fit(p)}};
}

inline json config_json(const RunConfig& cfg) {
  json j = json::object();
  for (const auto& [k, v] : to_key_values(cfg)) j[k] = v;
  return j;
}

inline json check_summary(const std::vector<CheckReport>& reports) {
  json j = json::array();
  for (const auto& r : reports) j.push_back({{"name", r.name}, {"outcome", to_string(r.outcome)}, {"message", r.message}});
  return j;
}

/// Result of one simulate run, kept for the commands that build on it.
struct SimulateResult {
  Setup setup;
  Trajectory traj;
  std::vector<TrajectoryRow> rows;
  json manifest;
};

/// Runs the simulation and the per-snapshot entropy bookkeeping without writing anything.
inline SimulateResult simulate_run(const RunConfig& cfg) {
  SimulateResult r{prepare(cfg), {}, {}, {}};
  r.traj = simulate(r.setup.initial, cfg.rates, cfg.diff, cfg.stepper, r.setup.grid);
  r.rows = trajectory_rows(r.setup, r.traj);
  return r;
}

/// Writes trajectory.csv, fields_t{T}.csv and manifest.json under `out`.
inline void write_outputs(SimulateResult& r, const fs::path& out, const std::string& command,
                          const std::vector<CheckReport>& checks) {
  const RunConfig& cfg = r.setup.cfg;
  fs::create_directories(out);
  json files = json::array();
  if (cfg.write_csv) {
    write_text(out / "trajectory.csv", trajectory_csv(r.rows));
    files.push_back("trajectory.csv");
    for (double t : field_times(cfg, r.traj)) {
      const auto idx = snapshot_at(r.traj, t, cfg.stepper);
      write_text(out / fields_name(t), fields_csv(r.traj.snapshots[idx], r.setup.grid));
      files.push_back(fields_name(t));
    }
  }
  if (cfg.write_json) files.push_back("manifest.json");
  if (cfg.write_json && command != "simulate" && command != "sweep") files.push_back("checks.json");
  json& m = r.manifest;
  m["schema"] = "erd-run-manifest/1";
  m["command"] = command;
  m["config"] = config_json(cfg);
  m["regime"] = to_string(r.setup.regime);
  m["masses"] = {{"M0", r.setup.masses.M0}, {"M1", r.setup.masses.M1}, {"beta", r.setup.beta}};
  m["entropy_params"] = params_json(r.setup.params, r.setup.params_source);
  m["gamma"] = gamma_json(r.setup);
  m["mu_opt"] = r.setup.mu ? json(*r.setup.mu) : json(nullptr);
  m["fitted_rates"] = fitted_rates_json(r.traj, cfg.rate_floor);
  m["steps_taken"] = r.traj.steps_taken;
  m["halved_steps"] = r.traj.halved_steps;
  m["clamped_values"] = r.traj.clamped_values;
  m["log"] = r.traj.log;
  m["checks"] = check_summary(checks);
  m["files"] = files;
  if (cfg.write_json) write_text(out / "manifest.json", m.dump(2) + "\n");
}

/// simulate command: trajectory, fields and a manifest carrying the conservation check.
inline SimulateResult run_simulate(const RunConfig& cfg, const fs::path& out, const std::string& command = "simulate") {
  auto r = simulate_run(cfg);
  write_outputs(r, out, command, {check_conservation(r.traj, r.setup.grid)});
  return r;
}

/// Rate report: parameters, gamma, mu_opt, predicted exponents over eta and the first mode eigenvalues.
inline json rate_report(const RunConfig& cfg) {
  const Setup s = prepare(cfg);
  json j;
  j["regime"] = to_string(s.regime);
  j["masses"] = {{"M0", s.masses.M0}, {"M1", s.masses.M1}, {"beta", s.beta}};
  j["entropy_params"] = params_json(s.params, s.params_source);
  j["gamma"] = gamma_json(s);
  if (s.mu) j["mu_opt"] = *s.mu;

  json table = json::array();
  if (s.gamma && s.gamma->positive) {
    for (double eta : {0.25, 0.5, 1.0, 2.0, 3.0, 4.0, 8.0}) {
      RatePredictionInputs in{s.regime, s.gamma->value, 1, eta, cfg.diff.d_p, cfg.geometry.C_P, cfg.eps,
                              cfg.rates.k_r + cfg.rates.k_c, eta >= 3.0};
      const auto p = linf_rate_predictions(in);
      json row = {{"eta", eta}, {"rate_s", p.rate_s}, {"rate_c", p.rate_c}, {"rate_e", p.rate_e}};
      row["rate_p"] = p.rate_p ? json(*p.rate_p) : json(nullptr);
      row["ec_polynomial_prefactor"] = p.ec_polynomial_prefactor;
      row["p_polynomial_prefactor"] = p.p_polynomial_prefactor;
      table.push_back(row);
    }
    j["predictions"] = {{"status", "OK"}, {"dim", 1}, {"eps", cfg.eps}, {"table", table}};
  } else {
    j["predictions"] = {{"status", "NOT_APPLICABLE"}, {"reason", s.gamma_reason}};
  }

  json modes = json::array();
  const auto lambdas = neumann_eigenvalues(10);
  if (s.regime == Regime::Full && s.masses.M0 > 0.0) {
    const auto spec = linearized_spectrum(cfg.rates, cfg.diff, s.masses.M0, 10);
    for (std::size_t j2 = 0; j2 < spec.modes.size(); ++j2) {
      const auto& m = spec.modes[j2];
      modes.push_back({{"j", j2}, {"lambda", m.lambda}, {"tau_plus", m.tau_plus}, {"tau_minus", m.tau_minus},
                       {"tau_max", std::max(m.tau_plus, m.tau_minus)}, {"product", 0.0 - cfg.diff.d_p * m.lambda}});
    }
  } else {
    for (std::size_t j2 = 0; j2 < lambdas.size(); ++j2)
      modes.push_back({{"j", j2}, {"lambda", lambdas[j2]}, {"substrate", 0.0 - cfg.diff.d_s * lambdas[j2]},
                       {"product", 0.0 - cfg.diff.d_p * lambdas[j2]}});
  }
  j["modes"] = modes;
  return j;
}

/// Waypoints of the localized-enzyme run: substrate inside the enzyme region and complex there, strictly above round-off,
/// product growing between panels, and the final-state thresholds.
inline std::vector<CheckReport> fig1_checks(const Trajectory& traj, const Grid1D& grid, double p_target) {
  std::vector<CheckReport> out;
  auto inside = [&](std::size_t i) { return grid.center(i) > 0.4 && grid.center(i) < 0.6; };
  auto nearest = [&](double t) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < traj.snapshots.size(); ++i)
      if (std::abs(traj.snapshots[i].t - t) < std::abs(traj.snapshots[best].t - t)) best = i;
    return best;
  };
  const double floor = 1e-14 * std::max(p_target, 1.0);
  std::vector<double> p_bars{integrate(traj.snapshots.front().p, grid)};
  for (double t : {10.0, 80.0}) {
    const auto& st = traj.snapshots[nearest(t)];
    double s_mass = 0.0, c_max = 0.0, c_outside = 0.0;
    for (std::size_t i = 0; i < grid.n_cells(); ++i) {
      if (inside(i)) {
        s_mass += st.s[i] * grid.h();
        c_max = std::max(c_max, st.c[i]);
      } else {
        c_outside = std::max(c_outside, st.c[i]);
      }
    }
    p_bars.push_back(integrate(st.p, grid));
    CheckReport r;
    r.name = "fig1.waypoint_t" + fmt(t);
    r.record("substrate mass in (0.4,0.6) above round-off", s_mass - floor);
    r.record("complex in (0.4,0.6) above round-off", c_max - floor);
    r.record("no complex outside (0.4,0.6)", -c_outside);
    r.finalize();
    if (r.outcome == Outcome::Pass && (s_mass <= floor || c_max <= floor)) r.outcome = Outcome::Fail;
    r.message = "s mass inside " + fmt(s_mass) + ", c max inside " + fmt(c_max);
    out.push_back(r);
  }
  const auto& last = traj.snapshots.back();
  const auto& d = traj.diagnostics.back();
  const double p_bar = integrate(last.p, grid);
  p_bars.push_back(p_bar);

  CheckReport grow;
  grow.name = "fig1.product_growth";
  for (std::size_t i = 1; i < p_bars.size(); ++i) grow.record("panel " + std::to_string(i), p_bars[i] - p_bars[i - 1]);
  grow.finalize();
  if (grow.outcome == Outcome::Pass)
    for (const auto& smp : grow.details)
      if (smp.margin <= 0.0) grow.outcome = Outcome::Fail;
  out.push_back(grow);

  CheckReport fin;
  fin.name = "fig1.final_state";
  fin.record("|s|_inf < 1e-3", 1e-3 - d.s_linf);
  fin.record("|c|_inf < 1e-3", 1e-3 - d.c_linf);
  fin.record("|e - e_inf|_inf < 1e-3", 1e-3 - d.e_dev_linf);
  fin.record("|mean p - p_inf| < 3e-3", 3e-3 - std::abs(p_bar - p_target));
  fin.finalize();
  if (fin.outcome == Outcome::Pass)
    for (const auto& smp : fin.details)
      if (smp.margin <= 0.0) fin.outcome = Outcome::Fail;
  fin.message = "t=" + fmt(last.t) + " s=" + fmt(d.s_linf) + " c=" + fmt(d.c_linf) + " e_dev=" + fmt(d.e_dev_linf) +
                " mean p=" + fmt(p_bar);
  out.push_back(fin);
  return out;
}

/// Functional inequality at every recorded snapshot, slack relative to gamma * E.
inline CheckReport functional_inequality_along(const Setup& s, const Trajectory& traj, double gamma) {
  CheckReport rep;
  rep.name = "functional_inequality.trajectory";
  rep.tolerance = 0.0;
  std::size_t failures = 0;
  for (const auto& st : traj.snapshots) {
    const auto t =
        functional_inequality_terms(st, s.params, s.eq, s.cfg.rates, s.cfg.diff, s.cfg.geometry, gamma, s.grid);
    const auto one = functional_inequality_report(t, s.grid.n_cells(), detail::time_locator(st.t));
    const double rel = t.slack / std::max(std::abs(t.gamma_E), 1e-300);
    if (one.failed()) ++failures;
    rep.record(detail::time_locator(st.t), one.failed() ? std::min(rel, -1e-300) : std::max(rel, 0.0));
  }
  rep.finalize();
  rep.message = std::to_string(failures) + " failing snapshot(s) of " + std::to_string(traj.snapshots.size());
  return rep;
}

/// Verification battery for one simulated run.
inline std::vector<CheckReport> verify_battery(const Setup& s, const Trajectory& traj) {
  const auto& cfg = s.cfg;
  std::vector<CheckReport> out;
  const auto gamma = checked_gamma(s);
  const std::string na = s.gamma_reason.empty() ? "gamma unavailable" : s.gamma_reason;

  out.push_back(check_conservation(traj, s.grid));
  if (traj.snapshots.size() >= 3) out.push_back(check_mass_dissipation(traj, cfg.rates, s.grid));
  else out.push_back(CheckReport::not_applicable("mass_dissipation", "fewer than 3 snapshots"));
  out.push_back(check_entropy_decay(traj, s.params, s.eq, cfg.rates, gamma, s.grid, 1e-2, na));

  if (gamma) out.push_back(functional_inequality_along(s, traj, *gamma));
  else out.push_back(CheckReport::not_applicable("functional_inequality.trajectory", na));

  if (s.regime == Regime::Full) out.push_back(check_ckp_bounds(traj, s.params, s.eq, cfg.rates, cfg.geometry, s.grid));
  else out.push_back(CheckReport::not_applicable("ckp_bounds", "full-diffusion regime only"));

  if (traj.diagnostics.size() >= 3) out.push_back(check_p_l2_decay(traj, cfg.diff.d_p, cfg.rates.k_c, cfg.geometry, cfg.eps));

  if (gamma) {
    RatePredictionInputs in{s.regime, *gamma, 1, cfg.eta, cfg.diff.d_p, cfg.geometry.C_P, cfg.eps,
                            cfg.rates.k_r + cfg.rates.k_c, cfg.eta >= 3.0};
    out.push_back(check_rate_predictions(traj, linf_rate_predictions(in), cfg.rate_floor));
  } else {
    out.push_back(CheckReport::not_applicable("rate_predictions", na));
  }

  if (cfg.audit_states > 0) {
    out.push_back(audit_functional_inequality(s.regime, cfg.audit_states, cfg.geometry, Grid1D(cfg.tight_cells),
                                              cfg.seed, cfg.gamma_scale));
  }
  if (cfg.tight_restarts > 0) {
    if (s.gamma && s.gamma->positive) {
      const Grid1D g(cfg.tight_cells);
      AuditSetup as;
      as.regime = s.regime;
      as.rates = cfg.rates;
      as.diff = cfg.diff;
      as.geometry = cfg.geometry;
      as.M0 = s.masses.M0;
      as.M1 = s.masses.M1;
      as.gamma = s.gamma->value;
      if (s.regime == Regime::Full) {
        as.params = s.params;
        as.eq = {Regime::Full, Field(g.n_cells(), s.masses.M0), 0.0, 0.0, s.masses.M1};
      } else {
        // equilibrium enzyme profile resampled onto the audit grid
        Field einf(g.n_cells());
        for (std::size_t i = 0; i < g.n_cells(); ++i) {
          const auto src = std::min(s.grid.n_cells() - 1, static_cast<std::size_t>(g.center(i) * s.grid.n_cells()));
          einf[i] = s.eq.e_inf[src];
        }
        as.eq = {Regime::Degenerate, einf, 0.0, 0.0, s.masses.M1};
        as.params = default_params_degenerate(cfg.rates, s.params.eps_s, einf);
        as.params.k = s.params.k;
      }
      out.push_back(check_tight_state_audit(as, s.gamma->value * cfg.gamma_scale, g, cfg.seed, cfg.tight_restarts,
                                            cfg.tight_iterations));
    } else {
      out.push_back(CheckReport::not_applicable("functional_inequality_tight_states", na));
    }
  }
  return out;
}

inline bool any_failed(const std::vector<CheckReport>& reports) {
  return std::any_of(reports.begin(), reports.end(), [](const CheckReport& r) { return r.failed(); });
}

inline void write_checks(const fs::path& out, const std::vector<CheckReport>& reports) {
  json j = json::array();
  for (const auto& r : reports) j.push_back(to_json(r));
  write_text(out / "checks.json", j.dump(2) + "\n");
}

inline void print_checks(std::ostream& os, const std::vector<CheckReport>& reports) {
  for (const auto& r : reports) {
    os << to_string(r.outcome) << "  " << r.name;
    if (!r.message.empty()) os << "  (" << r.message << ")";
    os << "\n";
    for (const auto& sub : r.subchecks)
      if (sub.failed()) os << "    FAIL  " << sub.name << " at " << sub.worst_locator << "  " << sub.message << "\n";
  }
}

/// Simulate, run the battery, write checks.json. Exit 0 iff no check failed.
inline int run_verify(const RunConfig& cfg, const fs::path& out, std::ostream& os,
                      std::vector<CheckReport>* reports_out = nullptr) {
  auto r = simulate_run(cfg);
  auto reports = verify_battery(r.setup, r.traj);
  write_outputs(r, out, "verify", reports);
  if (cfg.write_json) write_checks(out, reports);
  print_checks(os, reports);
  const bool failed = any_failed(reports);
  for (const auto& rep : reports)
    if (rep.failed()) os << "failed check: " << rep.name << "\n";
  if (reports_out) *reports_out = std::move(reports);
  return failed ? kCheckFailed : kOk;
}

/// fig1 command: simulate the localized-enzyme preset, write fields at the panel times and check the waypoints.
inline int run_fig1(const RunConfig& cfg, const fs::path& out, std::ostream& os,
                    std::vector<CheckReport>* reports_out = nullptr) {
  auto r = simulate_run(cfg);
  auto reports = fig1_checks(r.traj, r.setup.grid, r.setup.masses.M1);
  const auto battery = verify_battery(r.setup, r.traj);
  reports.insert(reports.end(), battery.begin(), battery.end());
  write_outputs(r, out, "fig1", reports);
  if (cfg.write_json) write_checks(out, reports);
  print_checks(os, reports);
  const bool failed = any_failed(reports);
  if (reports_out) *reports_out = std::move(reports);
  return failed ? kCheckFailed : kOk;
}

/// One value of the swept parameter per run, each in out/run_{i}; a summary CSV collects the headline numbers.
inline int run_sweep(const KeyValues& base, const fs::path& out, std::size_t workers, std::ostream& os) {
  const RunConfig cfg0 = run_config_from(base);
  if (cfg0.sweep_param.empty()) throw Error(ErrorKind::Config, "sweep.param: required for the sweep command");
  if (cfg0.sweep_values.empty()) throw Error(ErrorKind::Config, "sweep.values: required for the sweep command");
  std::vector<RunConfig> runs;
  for (const auto& v : cfg0.sweep_values) {
    try {
      runs.push_back(run_config_from(with_override(base, cfg0.sweep_param, v)));
    } catch (const Error& e) {
      throw Error(ErrorKind::Config, "sweep.values: value '" + v + "' for " + cfg0.sweep_param + ": " + e.detail());
    }
  }
  struct Row {
    std::string line;
    std::string error;
  };
  std::vector<Row> rows(runs.size());
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < runs.size(); i = next++) {
      const fs::path dir = out / ("run_" + std::to_string(i));
      try {
        const auto r = run_simulate(runs[i], dir, "sweep");
        const auto& last = r.rows.back();
        const auto& g = r.setup.gamma;
        std::string line = std::to_string(i) + "," + cfg0.sweep_values[i] + "," + to_string(r.setup.regime) + ",";
        line += (g && g->positive ? fmt(g->value) : std::string("NA")) + ",";
        line += (r.setup.mu ? fmt(*r.setup.mu) : std::string("NA")) + ",";
        line += fmt(last.d.t) + "," + fmt(last.d.s_linf) + "," + fmt(last.d.c_linf) + "," + fmt(last.d.e_dev_linf) +
                "," + fmt(last.e.report.E);
        rows[i].line = line;
      } catch (const Error& e) {
        rows[i].error = e.what();
      }
    }
  };
  workers = std::max<std::size_t>(1, std::min(workers, runs.size()));
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();

  fs::create_directories(out);
  std::string csv = "index,value,regime,gamma,mu_opt,t_end,s_linf,c_linf,e_dev_linf,E\n";
  int status = kOk;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (!rows[i].error.empty()) {
      os << "run " << i << " (" << cfg0.sweep_param << "=" << cfg0.sweep_values[i] << ") failed: " << rows[i].error
         << "\n";
      status = kRuntimeError;
      continue;
    }
    csv += rows[i].line + "\n";
  }
  write_text(out / "sweep_summary.csv", csv);
  os << "wrote " << (out / "sweep_summary.csv").string() << " (" << runs.size() << " run(s), " << workers
     << " worker(s))\n";
  return status;
}

}  // namespace erd::cli
