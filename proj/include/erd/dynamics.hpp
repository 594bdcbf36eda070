// Reaction terms, Neumann Laplacian, IMEX (Lie splitting) time stepping and equilibria.
#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "erd/core.hpp"

namespace erd {

struct ReactionTerms {
  Field f_e, f_s, f_c, f_p;
};

/// Mass-action right-hand sides, evaluated per cell.
inline ReactionTerms reaction_terms(const SystemState& state, const RateConstants& rates) {
  const std::size_t n = state.e.size();
  state.e.require_same(state.s);
  state.e.require_same(state.c);
  ReactionTerms r{Field(n), Field(n), Field(n), Field(n)};
  for (std::size_t i = 0; i < n; ++i) {
    const double bind = rates.k_f * state.e[i] * state.s[i];
    const double c = state.c[i];
    r.f_e[i] = -bind + (rates.k_r + rates.k_c) * c;
    r.f_s[i] = -bind + rates.k_r * c;
    r.f_c[i] = bind - (rates.k_r + rates.k_c) * c;
    r.f_p[i] = rates.k_c * c;
  }
  return r;
}

/// Second difference with reflecting ghost cells (zero flux).
inline Field neumann_laplacian(const Field& f, const Grid1D& grid) {
  require_on_grid(f, grid);
  const std::size_t n = f.size();
  const double inv_h2 = 1.0 / (grid.h() * grid.h());
  Field out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double left = i == 0 ? f[0] : f[i - 1];
    const double right = i + 1 == n ? f[n - 1] : f[i + 1];
    out[i] = (left - 2.0 * f[i] + right) * inv_h2;
  }
  return out;
}

enum class DiffusionScheme { BackwardEuler, CrankNicolson };

inline const char* to_string(DiffusionScheme s) {
  return s == DiffusionScheme::BackwardEuler ? "backward_euler" : "crank_nicolson";
}

struct StepperConfig {
  double dt = 1e-3;
  double t_end = 1.0;
  std::size_t record_every = 1;
  double negativity_tolerance = 1e-12;
  DiffusionScheme scheme = DiffusionScheme::BackwardEuler;
  /// Upper limit for dt * (k_f * max(|e|,|s|) + k_r + k_c).
  double reaction_bound = 0.5;
  /// Maximum number of dt halvings the adaptive guard may apply to one step.
  int max_halvings = 20;

  void validate() const {
    if (!(dt > 0.0)) throw Error(ErrorKind::Config, "stepper.dt must be > 0");
    if (!(t_end > dt)) throw Error(ErrorKind::Config, "stepper.t_end must exceed stepper.dt");
    if (record_every == 0) throw Error(ErrorKind::Config, "stepper.record_every must be >= 1");
    if (!(negativity_tolerance >= 0.0)) throw Error(ErrorKind::Config, "stepper.negativity_tolerance must be >= 0");
  }
};

/// Explicit-reaction stability measure dt * (k_f * max(|e|_inf, |s|_inf) + k_r + k_c).
inline double reaction_stability_number(const SystemState& state, const RateConstants& rates, double dt) {
  const double amp = std::max(linf_norm(state.e), linf_norm(state.s));
  return dt * (rates.k_f * amp + rates.k_r + rates.k_c);
}

struct EquilibriumState {
  Regime regime = Regime::Full;
  Field e_inf;  // constant M0 (FULL) or e_0 + c_0 (DEGENERATE)
  double s_inf = 0.0;
  double c_inf = 0.0;
  double p_inf = 0.0;  // M1
};

inline EquilibriumState equilibrium(const SystemState& initial, const DiffusionCoeffs& diff, const Grid1D& grid) {
  initial.validate(grid);
  const auto masses = conserved_masses(initial, grid);
  EquilibriumState eq;
  eq.regime = diff.regime();
  eq.p_inf = masses.M1;
  if (eq.regime == Regime::Full) {
    eq.e_inf = Field(grid.n_cells(), masses.M0);
  } else {
    eq.e_inf = initial.e + initial.c;
  }
  return eq;
}

/// beta = min over cells of e_0 + c_0.
inline double check_min_enzyme(const SystemState& initial) { return min_value(initial.e + initial.c); }

struct Diagnostics {
  double t = 0.0;
  double M0 = 0.0;
  double M1 = 0.0;
  double e_dev_linf = 0.0;  // |e - e_inf|_inf
  double s_linf = 0.0;
  double c_linf = 0.0;
  double p_dev_linf = 0.0;  // |p - p_inf|_inf
  double p_l2_dev = 0.0;    // |p - mean(p)|_L2
  double c_l2_dev = 0.0;    // |c - mean(c)|_L2
};

inline Diagnostics diagnose(const SystemState& st, const EquilibriumState& eq, const Grid1D& grid) {
  const auto m = conserved_masses(st, grid);
  Diagnostics d;
  d.t = st.t;
  d.M0 = m.M0;
  d.M1 = m.M1;
  d.e_dev_linf = linf_distance(st.e, eq.e_inf);
  d.s_linf = linf_norm(st.s);
  d.c_linf = linf_norm(st.c);
  double pd = 0.0;
  for (double v : st.p) pd = std::max(pd, std::abs(v - eq.p_inf));
  d.p_dev_linf = pd;
  d.p_l2_dev = l2_deviation(st.p, grid);
  d.c_l2_dev = l2_deviation(st.c, grid);
  return d;
}

struct Trajectory {
  std::vector<SystemState> snapshots;
  std::vector<Diagnostics> diagnostics;
  EquilibriumState equilibrium;
  std::size_t n_cells = 0;
  std::uint64_t steps_taken = 0;
  std::uint64_t clamped_values = 0;
  std::uint64_t halved_steps = 0;
  std::vector<std::string> log;

  std::vector<double> times() const {
    std::vector<double> t;
    t.reserve(snapshots.size());
    for (const auto& s : snapshots) t.push_back(s.t);
    return t;
  }
};

namespace detail {

/// Factorised (I - a L) for the Neumann second difference, a = theta*dt*d/h^2 scaled by h^2.
class NeumannSolver {
 public:
  NeumannSolver() = default;
  NeumannSolver(std::size_t n, double r) : n_(n), r_(r), cp_(n), inv_den_(n) {
    // Thomas forward sweep coefficients; the matrix is strictly diagonally dominant for r >= 0.
    auto diag = [&](std::size_t i) { return (i == 0 || i + 1 == n) ? 1.0 + r : 1.0 + 2.0 * r; };
    const double off = -r;
    double den = diag(0);
    if (den == 0.0) throw Error(ErrorKind::Solver, "singular diffusion matrix");
    inv_den_[0] = 1.0 / den;
    cp_[0] = off * inv_den_[0];
    for (std::size_t i = 1; i < n; ++i) {
      den = diag(i) - off * cp_[i - 1];
      if (den == 0.0) throw Error(ErrorKind::Solver, "singular diffusion matrix");
      inv_den_[i] = 1.0 / den;
      cp_[i] = off * inv_den_[i];
    }
  }

  void solve_in_place(std::span<double> u) const {
    const double off = -r_;
    u[0] *= inv_den_[0];
    for (std::size_t i = 1; i < n_; ++i) u[i] = (u[i] - off * u[i - 1]) * inv_den_[i];
    for (std::size_t i = n_ - 1; i-- > 0;) u[i] -= cp_[i] * u[i + 1];
  }

 private:
  std::size_t n_ = 0;
  double r_ = 0.0;
  std::vector<double> cp_, inv_den_;
};

}  // namespace detail

/// Reusable IMEX stepper: explicit Euler reaction, then implicit diffusion per species.
class ImexStepper {
 public:
  ImexStepper(const Grid1D& grid, const RateConstants& rates, const DiffusionCoeffs& diff, const StepperConfig& config)
      : grid_(grid), rates_(rates), diff_(diff), config_(config), work_(grid.n_cells()) {
    rates_.validate();
    diff_.regime();
    config_.validate();
  }

  const StepperConfig& config() const noexcept { return config_; }

  /// Advances `state` by `dt` in place. Returns the number of values clamped from [-tol, 0) to 0.
  std::uint64_t advance(SystemState& state, double dt) {
    const std::size_t n = grid_.n_cells();
    const double krc = rates_.k_r + rates_.k_c;
    for (std::size_t i = 0; i < n; ++i) {
      const double e = state.e[i], s = state.s[i], c = state.c[i];
      const double bind = rates_.k_f * e * s;
      state.e[i] = e + dt * (-bind + krc * c);
      state.s[i] = s + dt * (-bind + rates_.k_r * c);
      state.c[i] = c + dt * (bind - krc * c);
      state.p[i] = state.p[i] + dt * rates_.k_c * c;
    }
    diffuse(state.e, diff_.d_e, dt);
    diffuse(state.s, diff_.d_s, dt);
    diffuse(state.c, diff_.d_c, dt);
    diffuse(state.p, diff_.d_p, dt);

    std::uint64_t clamped = 0;
    for (Species sp : {Species::E, Species::S, Species::C, Species::P}) {
      Field& f = state.field(sp);
      for (std::size_t i = 0; i < n; ++i) {
        if (f[i] >= 0.0) continue;
        if (f[i] < -config_.negativity_tolerance) {
          std::ostringstream msg;
          msg.precision(17);
          msg << "species " << to_string(sp) << " fell to " << f[i] << " in cell " << i << " at t=" << state.t + dt;
          throw Error(ErrorKind::Positivity, msg.str());
        }
        f[i] = 0.0;
        ++clamped;
      }
    }
    state.t += dt;
    return clamped;
  }

 private:
  void diffuse(Field& f, double d, double dt) {
    if (d == 0.0) return;
    const double h2 = grid_.h() * grid_.h();
    const bool cn = config_.scheme == DiffusionScheme::CrankNicolson;
    const double theta = cn ? 0.5 : 1.0;
    const double r = theta * dt * d / h2;
    if (cn) {
      // right-hand side (I + r L_h) f with L_h the unscaled second difference
      const std::size_t n = f.size();
      for (std::size_t i = 0; i < n; ++i) {
        const double left = i == 0 ? f[0] : f[i - 1];
        const double right = i + 1 == n ? f[n - 1] : f[i + 1];
        work_[i] = f[i] + r * (left - 2.0 * f[i] + right);
      }
      for (std::size_t i = 0; i < n; ++i) f[i] = work_[i];
    }
    solver_for(r).solve_in_place(f.values());
  }

  const detail::NeumannSolver& solver_for(double r) {
    auto it = solvers_.find(r);
    if (it == solvers_.end()) it = solvers_.emplace(r, detail::NeumannSolver(grid_.n_cells(), r)).first;
    return it->second;
  }

  Grid1D grid_;
  RateConstants rates_;
  DiffusionCoeffs diff_;
  StepperConfig config_;
  std::vector<double> work_;
  std::map<double, detail::NeumannSolver> solvers_;
};

/// One IMEX step of size config.dt.
inline SystemState step_imex(const SystemState& state, const RateConstants& rates, const DiffusionCoeffs& diff,
                             const StepperConfig& config, const Grid1D& grid) {
  state.validate(grid);
  for (Species sp : {Species::E, Species::S, Species::C, Species::P})
    if (min_value(state.field(sp)) < -config.negativity_tolerance)
      throw Error(ErrorKind::Positivity, std::string("negative input for species ") + to_string(sp));
  ImexStepper stepper(grid, rates, diff, config);
  SystemState next = state;
  stepper.advance(next, config.dt);
  return next;
}

/// Integrates from `initial` to config.t_end, recording every `record_every` steps and the final state.
inline Trajectory simulate(const SystemState& initial, const RateConstants& rates, const DiffusionCoeffs& diff,
                           const StepperConfig& config, const Grid1D& grid) {
  initial.validate(grid);
  config.validate();
  rates.validate();
  for (Species sp : {Species::E, Species::S, Species::C, Species::P})
    if (min_value(initial.field(sp)) < 0.0)
      throw Error(ErrorKind::Positivity, std::string("initial data for species ") + to_string(sp) + " is negative");
  const double sigma0 = reaction_stability_number(initial, rates, config.dt);
  if (sigma0 > config.reaction_bound) {
    std::ostringstream msg;
    msg << "dt=" << config.dt << " violates the reaction bound (" << sigma0 << " > " << config.reaction_bound
        << ") for the initial data";
    throw Error(ErrorKind::Config, msg.str());
  }

  Trajectory traj;
  traj.n_cells = grid.n_cells();
  traj.equilibrium = equilibrium(initial, diff, grid);
  ImexStepper stepper(grid, rates, diff, config);

  const double t0 = initial.t;
  const auto n_steps = static_cast<std::uint64_t>(std::ceil((config.t_end - t0) / config.dt - 1e-9));
  SystemState state = initial;
  traj.snapshots.push_back(state);
  traj.diagnostics.push_back(diagnose(state, traj.equilibrium, grid));

  for (std::uint64_t step = 1; step <= n_steps; ++step) {
    const double t_target = step == n_steps ? config.t_end : t0 + static_cast<double>(step) * config.dt;
    const double dt = t_target - state.t;
    try {
      int halvings = 0;
      while (reaction_stability_number(state, rates, dt / std::ldexp(1.0, halvings)) > config.reaction_bound) {
        if (++halvings > config.max_halvings)
          throw Error(ErrorKind::Solver, "adaptive dt guard exceeded max_halvings");
      }
      if (halvings > 0) {
        std::ostringstream msg;
        msg << "t=" << state.t << ": dt halved " << halvings << " time(s) to satisfy the reaction bound";
        traj.log.push_back(msg.str());
        ++traj.halved_steps;
      }
      const int substeps = 1 << halvings;
      const double sub_dt = dt / substeps;
      for (int k = 0; k < substeps; ++k) traj.clamped_values += stepper.advance(state, sub_dt);
    } catch (const Error& err) {
      std::ostringstream msg;
      msg << err.detail() << " (step " << step << ", t=" << state.t << ")";
      throw Error(err.kind(), msg.str());
    }
    state.t = t_target;
    ++traj.steps_taken;
    if (step % config.record_every == 0 || step == n_steps) {
      traj.snapshots.push_back(state);
      traj.diagnostics.push_back(diagnose(state, traj.equilibrium, grid));
    }
  }
  return traj;
}

}  // namespace erd
