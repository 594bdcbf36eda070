// Closed-form decay rates, default entropy parameters, Neumann spectra, the linearized
// spectral simulator, exponential fits and a numerical log-Sobolev estimate.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "erd/core.hpp"
#include "erd/dynamics.hpp"
#include "erd/entropy.hpp"

namespace erd {

/// Primary: eps_s from d_e C_LSI, eps_c coupled to it. Alternative: eps_c chosen first, eps_s coupled to it.
enum class ParamVariant { Primary, Alternative };

inline EntropyParams default_params_full(const RateConstants& rates, double M0, const GeometryConstants& geometry,
                                         double d_e, ParamVariant variant = ParamVariant::Primary) {
  rates.validate();
  geometry.validate();
  if (!(M0 > 0.0)) throw Error(ErrorKind::Domain, "M0 must be > 0");
  if (!(d_e > 0.0)) throw Error(ErrorKind::Domain, "d_e must be > 0 for the full-diffusion parameters");
  const double kf = rates.k_f, kr = rates.k_r, kc = rates.k_c;
  EntropyParams p;
  if (variant == ParamVariant::Primary) {
    p.eps_s = d_e * geometry.C_LSI * M0 / (12.0 * (kc + kr + M0 * kf) * std::max(1.0, M0 * kf / kr));
    p.eps_c = Threshold(M0 * kf / kr * p.eps_s);
    p.k = 4.0 * (kc + kr + 2.0 * kf * p.eps_s) / kc;
  } else {
    const double eps_c = geometry.C_LSI * M0 / (12.0 * (kc + kr + M0 * kf) * std::max(1.0, kr / (M0 * kf)));
    p.eps_c = Threshold(eps_c);
    p.eps_s = kr / (M0 * kf) * eps_c;
    p.k = 4.0 * (kc + kr + kf * p.eps_s) / kc;
  }
  return p;
}

inline EntropyParams default_params_degenerate(const RateConstants& rates, double eps_s, const Field& e_inf) {
  rates.validate();
  if (!(eps_s > 0.0)) throw Error(ErrorKind::Domain, "eps_s must be > 0");
  EntropyParams p;
  p.eps_s = eps_s;
  Field eps_c(e_inf.size());
  for (std::size_t i = 0; i < e_inf.size(); ++i) eps_c[i] = rates.k_f * eps_s / rates.k_r * e_inf[i];
  p.eps_c = Threshold(std::move(eps_c));
  p.k = 4.0 * rates.k_f * eps_s / rates.k_c;
  return p;
}

/// Form of the second full-regime branch. TheoremDisplay swaps the eps_s and eps_c log arguments.
enum class GammaForm { Proof, TheoremDisplay };

struct GammaInputs {
  RateConstants rates;
  DiffusionCoeffs diff;
  double M0 = 0.0;
  double M1 = 0.0;
  double beta = 0.0;
  GeometryConstants geometry;
  EntropyParams params;
  std::optional<Field> e_inf;  // used for the pointwise threshold coupling check in the degenerate regime
  GammaForm form = GammaForm::Proof;
};

struct GammaResult {
  double value = 0.0;
  std::vector<double> branches;
  std::size_t binding_branch = 0;
  bool positive = false;
};

namespace detail {

inline GammaResult min_of_branches(std::vector<double> b) {
  GammaResult r;
  r.branches = std::move(b);
  const auto it = std::min_element(r.branches.begin(), r.branches.end());
  r.binding_branch = static_cast<std::size_t>(it - r.branches.begin());
  r.value = *it;
  r.positive = r.value > 0.0;
  return r;
}

inline double rel_diff(double a, double b) { return std::abs(a - b) / std::max(std::abs(a), std::abs(b)); }

}  // namespace detail

inline GammaResult gamma_full(const GammaInputs& in) {
  if (in.diff.regime() != Regime::Full) throw Error(ErrorKind::Regime, "gamma_full needs every diffusion coefficient > 0");
  in.rates.validate();
  if (!(in.M0 > 0.0) || !(in.M1 > 0.0)) throw Error(ErrorKind::Domain, "M0 and M1 must be > 0");
  if (!in.params.eps_c.is_uniform()) throw Error(ErrorKind::Domain, "full regime needs a constant eps_c");
  const double kf = in.rates.k_f, kr = in.rates.k_r, kc = in.rates.k_c;
  const double es = in.params.eps_s, ec = in.params.eps_c.uniform_value(), k = in.params.k;
  const double M0 = in.M0, M1 = in.M1, C = in.geometry.C_LSI;
  if (!(es > 0.0) || !(ec > 0.0) || !(k > 0.0)) throw Error(ErrorKind::Domain, "eps_s, eps_c and k must be > 0");
  if (detail::rel_diff(ec / (M0 * es), kf / kr) > 1e-9)
    throw Error(ErrorKind::Hypothesis, "eps_c / (M0 eps_s) must equal k_f / k_r");

  const double L = std::log1p(M1 / es);
  const double W = k * (2.0 * kr + kc) / (2.0 * kr);
  const double Q = 16.0 * (es + M1) / ((1.0 - std::numbers::ln2) * M0);

  const double b1 = (in.diff.d_e * C - 6.0 * ((kc + kr) / M0 + kf) * std::max(ec, es)) / (1.0 + (L + W) * Q);
  double b2;
  if (in.form == GammaForm::Proof) {
    b2 = (k * kc / 2.0 - kc - kr - 2.0 * kf * es) /
         (1.0 + k + std::log1p(M0 / ec) + (L + W) * (2.0 * kr / (kf * M0) + Q));
  } else {
    const double L_swapped = std::log1p(M1 / ec);
    b2 = (k * kc / 2.0 - kc - kr - 2.0 * kf * es) /
         (1.0 + k + std::log1p(M0 / es) + (L_swapped + W) * (2.0 * kr / (kf * M0) + Q));
  }
  const double ds = in.diff.d_s, dc = in.diff.d_c;
  const double b3 = dc * ds * C / (ds + dc * (1.0 + L + W));
  return detail::min_of_branches({b1, b2, b3});
}

inline GammaResult gamma_degenerate(const GammaInputs& in) {
  if (in.diff.regime() != Regime::Degenerate) throw Error(ErrorKind::Regime, "gamma_degenerate needs d_e = d_c = 0");
  in.rates.validate();
  if (!(in.beta > 0.0)) throw Error(ErrorKind::Hypothesis, "enzyme lower bound beta must be > 0 (min of e0 + c0)");
  if (!(in.M1 > 0.0)) throw Error(ErrorKind::Domain, "M1 must be > 0");
  const double kf = in.rates.k_f, kr = in.rates.k_r, kc = in.rates.k_c;
  const double es = in.params.eps_s, k = in.params.k, M1 = in.M1, beta = in.beta;
  if (!(es > 0.0) || !(k > 0.0)) throw Error(ErrorKind::Domain, "eps_s and k must be > 0");
  if (in.e_inf) {
    const Field& einf = *in.e_inf;
    for (std::size_t i = 0; i < einf.size(); ++i) {
      const double ec = in.params.eps_c.at(i);
      if (einf[i] > 0.0 && detail::rel_diff(ec / einf[i], kf / kr * es) > 1e-9)
        throw Error(ErrorKind::Hypothesis, "eps_c(x) / e_inf(x) must equal (k_f / k_r) eps_s; violated in cell " +
                                               std::to_string(i));
    }
  }
  const double L = std::log1p(M1 / es);
  const double W = k * (2.0 * kr + kc) / (2.0 * kr);
  const double b1 = (k * kc / 2.0 - kf * es) /
                    (1.0 + k + std::log1p(kr / (kf * es)) +
                     (L + W) * (2.0 * kr / (kf * beta) + 16.0 * (es + M1) / ((1.0 - std::numbers::ln2) * beta)));
  const double b2 = in.diff.d_s * in.geometry.C_LSI / (1.0 + L + W);
  return detail::min_of_branches({b1, b2});
}

inline double mu_opt(const RateConstants& rates, double e_inf) {
  rates.validate();
  if (!(e_inf > 0.0)) throw Error(ErrorKind::Domain, "e_inf must be > 0");
  const double a = rates.k_f * e_inf;
  const double b = rates.k_r + rates.k_c;
  const double disc = std::sqrt((a - b) * (a - b) + 4.0 * rates.k_r * a);
  // factored form of ((a+b) - disc)/2, free of cancellation
  return 2.0 * a * rates.k_c / (a + b + disc);
}

struct ModeEigenvalues {
  double tau_plus = 0.0;
  double tau_minus = 0.0;
  double tau_max() const { return std::max(tau_plus, tau_minus); }
};

inline ModeEigenvalues mode_eigenvalues(const RateConstants& rates, const DiffusionCoeffs& diff, double e_inf,
                                        double lambda) {
  if (lambda < 0.0) throw Error(ErrorKind::Domain, "lambda must be >= 0");
  const double a = diff.d_s * lambda + rates.k_f * e_inf;
  const double d = diff.d_c * lambda + rates.k_r + rates.k_c;
  const double B = a + d;
  // a d - k_r k_f e_inf, expanded so every summand is non-negative
  const double Cq = diff.d_s * lambda * d + rates.k_f * e_inf * (diff.d_c * lambda + rates.k_c);
  const double root = std::sqrt((a - d) * (a - d) + 4.0 * rates.k_r * rates.k_f * e_inf);
  ModeEigenvalues ev;
  ev.tau_minus = -(B + root) / 2.0;
  ev.tau_plus = -2.0 * Cq / (B + root);
  return ev;
}

inline std::vector<double> neumann_eigenvalues(std::size_t count) {
  if (count < 1) throw Error(ErrorKind::Domain, "count must be >= 1");
  std::vector<double> out(count);
  for (std::size_t j = 0; j < count; ++j) {
    const double w = static_cast<double>(j) * std::numbers::pi;
    out[j] = w * w;
  }
  return out;
}

struct SpectrumMode {
  double lambda = 0.0;
  double tau_plus = 0.0;
  double tau_minus = 0.0;
};

struct LinearizedSpectrum {
  std::vector<SpectrumMode> modes;
  double mu_opt = 0.0;
};

inline LinearizedSpectrum linearized_spectrum(const RateConstants& rates, const DiffusionCoeffs& diff, double e_inf,
                                              std::size_t count) {
  LinearizedSpectrum sp;
  for (double lam : neumann_eigenvalues(count)) {
    const auto ev = mode_eigenvalues(rates, diff, e_inf, lam);
    sp.modes.push_back({lam, ev.tau_plus, ev.tau_minus});
  }
  sp.mu_opt = mu_opt(rates, e_inf);
  return sp;
}

namespace detail {

/// (e^{a t} - e^{b t}) / (a - b), continuous at a = b.
inline double exp_difference(double a, double b, double t) {
  const double d = a - b;
  if (d == 0.0) return t * std::exp(b * t);
  return std::exp(b * t) * std::expm1(d * t) / d;
}

/// Modal coefficients with weights 1 (j = 0) and 2 (j >= 1), matching midpoint quadrature.
inline std::vector<double> cosine_project(const Field& f, const Grid1D& grid, std::size_t n_modes) {
  std::vector<double> a(n_modes, 0.0);
  for (std::size_t j = 0; j < n_modes; ++j) {
    double sum = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i)
      sum += f[i] * std::cos(static_cast<double>(j) * std::numbers::pi * grid.center(i));
    a[j] = (j == 0 ? 1.0 : 2.0) * sum * grid.h();
  }
  return a;
}

}  // namespace detail

/// Exact solution of one mode of the linearized system at time t.
struct ModeState {
  double e = 0.0, s = 0.0, c = 0.0, p = 0.0;
};

inline ModeState evolve_mode(const RateConstants& rates, const DiffusionCoeffs& diff, double e_inf, double lambda,
                             const ModeState& x0, double t) {
  const double a11 = -diff.d_s * lambda - rates.k_f * e_inf;
  const double a12 = rates.k_r;
  const auto ev = mode_eigenvalues(rates, diff, e_inf, lambda);
  const double t1 = ev.tau_plus, t2 = ev.tau_minus;
  // (s, c) = alpha (k_r, t1 - a11) e^{t1 t} + beta (k_r, t2 - a11) e^{t2 t}
  const double v1c = t1 - a11, v2c = t2 - a11;
  const double det = a12 * (v2c - v1c);
  const double alpha = (x0.s * v2c - a12 * x0.c) / det;
  const double beta = (a12 * x0.c - x0.s * v1c) / det;
  const double E1 = std::exp(t1 * t), E2 = std::exp(t2 * t);
  ModeState out;
  out.s = alpha * a12 * E1 + beta * a12 * E2;
  out.c = alpha * v1c * E1 + beta * v2c * E2;

  // forcing of e: -k_f e_inf s + (k_r + k_c) c, as a sum of the two exponentials
  const double ke = rates.k_r + rates.k_c;
  const double g1 = alpha * (-rates.k_f * e_inf * a12 + ke * v1c);
  const double g2 = beta * (-rates.k_f * e_inf * a12 + ke * v2c);
  const double be = -diff.d_e * lambda;
  out.e = std::exp(be * t) * x0.e + g1 * detail::exp_difference(t1, be, t) + g2 * detail::exp_difference(t2, be, t);
  const double gp1 = alpha * rates.k_c * v1c;
  const double gp2 = beta * rates.k_c * v2c;
  const double bp = -diff.d_p * lambda;
  out.p = std::exp(bp * t) * x0.p + gp1 * detail::exp_difference(t1, bp, t) + gp2 * detail::exp_difference(t2, bp, t);
  return out;
}

struct LinearizedRun {
  std::vector<SystemState> snapshots;  // perturbation fields
  std::vector<std::vector<ModeState>> modes;  // modal coefficients per snapshot
  std::size_t n_modes = 0;

  std::vector<double> times() const {
    std::vector<double> t;
    t.reserve(snapshots.size());
    for (const auto& s : snapshots) t.push_back(s.t);
    return t;
  }
};

/// Spectral solution of the linearized system. n_modes = 0 selects n_cells / 2. Snapshots every dt up to t_end.
inline LinearizedRun simulate_linearized(const SystemState& perturbation, const RateConstants& rates,
                                         const DiffusionCoeffs& diff, double e_inf, std::size_t n_modes, double t_end,
                                         double dt, const Grid1D& grid) {
  perturbation.validate(grid);
  rates.validate();
  if (diff.regime() != Regime::Full) throw Error(ErrorKind::Regime, "linearized simulator needs every diffusion coefficient > 0");
  if (!(e_inf > 0.0)) throw Error(ErrorKind::Domain, "e_inf must be > 0");
  if (n_modes == 0) n_modes = grid.n_cells() / 2;
  if (n_modes > grid.n_cells())
    throw Error(ErrorKind::Aliasing, "n_modes " + std::to_string(n_modes) + " exceeds grid resolution " +
                                         std::to_string(grid.n_cells()));
  if (!(dt > 0.0) || !(t_end >= 0.0)) throw Error(ErrorKind::Config, "linearized run needs dt > 0 and t_end >= 0");

  const auto ae = detail::cosine_project(perturbation.e, grid, n_modes);
  const auto as = detail::cosine_project(perturbation.s, grid, n_modes);
  const auto ac = detail::cosine_project(perturbation.c, grid, n_modes);
  const auto ap = detail::cosine_project(perturbation.p, grid, n_modes);
  const auto lambdas = neumann_eigenvalues(n_modes);

  const std::size_t n = grid.n_cells();
  std::vector<double> basis(n_modes * n);
  for (std::size_t j = 0; j < n_modes; ++j)
    for (std::size_t i = 0; i < n; ++i)
      basis[j * n + i] = std::cos(static_cast<double>(j) * std::numbers::pi * grid.center(i));

  LinearizedRun run;
  run.n_modes = n_modes;
  const auto n_steps = static_cast<std::size_t>(std::ceil(t_end / dt - 1e-9));
  for (std::size_t step = 0; step <= n_steps; ++step) {
    const double t = step == n_steps ? t_end : static_cast<double>(step) * dt;
    SystemState st = SystemState::zeros(grid);
    st.t = t;
    std::vector<ModeState> coeffs(n_modes);
    for (std::size_t j = 0; j < n_modes; ++j) {
      coeffs[j] = evolve_mode(rates, diff, e_inf, lambdas[j], ModeState{ae[j], as[j], ac[j], ap[j]}, t);
      const double* b = &basis[j * n];
      for (std::size_t i = 0; i < n; ++i) {
        st.e[i] += coeffs[j].e * b[i];
        st.s[i] += coeffs[j].s * b[i];
        st.c[i] += coeffs[j].c * b[i];
        st.p[i] += coeffs[j].p * b[i];
      }
    }
    run.snapshots.push_back(std::move(st));
    run.modes.push_back(std::move(coeffs));
  }
  return run;
}

struct FitWindow {
  double t_lo = 0.0;
  double t_hi = 0.0;
};

struct FitResult {
  double rate = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  FitWindow window;
  std::size_t samples = 0;
};

/// Last half of the sampled time range.
inline FitWindow default_fit_window(const std::vector<double>& times) {
  if (times.empty()) throw Error(ErrorKind::InsufficientData, "empty time series");
  const auto [lo, hi] = std::minmax_element(times.begin(), times.end());
  return {*lo + 0.5 * (*hi - *lo), *hi};
}

/// Least-squares decay rate of log(value) against t over the window; samples at or below floor are ignored.
inline FitResult fit_decay_rate(const std::vector<double>& times, const std::vector<double>& values, FitWindow window,
                                double floor = 1e-12) {
  if (times.size() != values.size()) throw Error(ErrorKind::Shape, "time and value series differ in length");
  if (!(floor > 0.0)) throw Error(ErrorKind::Domain, "fit floor must be > 0");
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (times[i] < window.t_lo || times[i] > window.t_hi) continue;
    if (!(values[i] > 0.0))
      throw Error(ErrorKind::Domain, "non-positive value " + std::to_string(values[i]) + " in fit window");
    if (values[i] <= floor) continue;
    xs.push_back(times[i]);
    ys.push_back(std::log(values[i]));
  }
  if (xs.size() < 5)
    throw Error(ErrorKind::InsufficientData, "need >= 5 samples above floor in fit window, got " + std::to_string(xs.size()));
  const double m = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= m;
  my /= m;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  if (!(sxx > 0.0)) throw Error(ErrorKind::InsufficientData, "fit window has no time spread");
  FitResult r;
  const double slope = sxy / sxx;
  r.rate = -slope;
  r.intercept = my - slope * mx;
  double ss_res = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double res = ys[i] - (r.intercept + slope * xs[i]);
    ss_res += res * res;
  }
  r.r_squared = syy > 0.0 ? std::clamp(1.0 - ss_res / syy, 0.0, 1.0) : 1.0;
  r.window = {xs.front(), xs.back()};
  r.samples = xs.size();
  return r;
}

inline FitResult fit_decay_rate(const std::vector<double>& times, const std::vector<double>& values) {
  return fit_decay_rate(times, values, default_fit_window(times));
}

/// Exponents of the L-infinity decay estimates. For the full regime rate_s = rate_c; for the degenerate regime
/// rate_e = rate_c. A tie flag marks a polynomial-times-exponential bound.
struct RatePredictions {
  Regime regime = Regime::Full;
  double gamma = 0.0;
  double eta = 0.0;
  int dim = 1;
  double rate_s = 0.0;
  double rate_c = 0.0;
  double rate_e = 0.0;
  std::optional<double> rate_p;
  bool ec_polynomial_prefactor = false;
  bool p_polynomial_prefactor = false;
};

struct RatePredictionInputs {
  Regime regime = Regime::Full;
  double gamma = 0.0;
  int dim = 1;
  double eta = 1.0;
  double d_p = 1.0;
  double C_P = 1.0 / (std::numbers::pi * std::numbers::pi);
  double eps = 0.1;
  double k_r_plus_k_c = 0.0;  // degenerate regime only
  bool with_p = true;
};

namespace detail {
inline bool nearly_equal(double a, double b) { return std::abs(a - b) <= 1e-12 * std::max(std::abs(a), std::abs(b)); }
}  // namespace detail

inline RatePredictions linf_rate_predictions(const RatePredictionInputs& in) {
  if (!(in.gamma > 0.0)) throw Error(ErrorKind::Hypothesis, "gamma must be > 0 for rate predictions");
  if (!(in.eta > 0.0)) throw Error(ErrorKind::Domain, "eta must be > 0");
  if (in.dim < 1) throw Error(ErrorKind::Domain, "dimension must be >= 1");
  const double n1e = static_cast<double>(in.dim) * (1.0 + in.eta);
  RatePredictions r;
  r.regime = in.regime;
  r.gamma = in.gamma;
  r.eta = in.eta;
  r.dim = in.dim;
  const double base = 2.0 * in.gamma / n1e;
  if (in.regime == Regime::Full) {
    r.rate_s = r.rate_c = base;
    r.rate_e = in.gamma / n1e;
  } else {
    if (!(in.k_r_plus_k_c > 0.0)) throw Error(ErrorKind::Domain, "k_r + k_c must be > 0");
    r.rate_s = base;
    r.rate_e = r.rate_c = std::min(in.k_r_plus_k_c, base);
    r.ec_polynomial_prefactor = detail::nearly_equal(in.k_r_plus_k_c, base);
  }
  if (in.with_p) {
    if (n1e < 4.0) throw Error(ErrorKind::Hypothesis, "product rate needs n(1+eta) >= 4");
    if (!(in.eps > 0.0 && in.eps < 1.0)) throw Error(ErrorKind::Domain, "eps must lie in (0,1)");
    if (!(in.d_p > 0.0) || !(in.C_P > 0.0)) throw Error(ErrorKind::Domain, "d_p and C_P must be > 0");
    r.rate_p = std::min(4.0 * in.d_p * (1.0 - in.eps) / (static_cast<double>(in.dim) * in.C_P * (1.0 + in.eta)), base);
    r.p_polynomial_prefactor = detail::nearly_equal(2.0 * in.d_p * (1.0 - in.eps) / in.C_P, in.gamma);
  }
  return r;
}

struct ClsiEstimate {
  double value = 0.0;
  std::size_t samples_used = 0;
  std::size_t samples_skipped = 0;
  std::string marker = "numerical estimate, not a proof";
};

/// Discrete ratio of the Fisher-type information to the relative entropy with respect to the mean.
/// Returns nullopt for (numerically) constant fields.
inline std::optional<double> lsi_ratio(const Field& f, const Grid1D& grid) {
  require_on_grid(f, grid);
  const double h = grid.h();
  double fisher = 0.0;
  for (std::size_t i = 0; i + 1 < f.size(); ++i) {
    const double g = (f[i + 1] - f[i]) / h;
    fisher += g * g / (0.5 * (f[i] + f[i + 1]));
  }
  fisher *= h;
  const double mean = integrate(f, grid);
  double ent = 0.0;
  for (double v : f) ent += kernel::relative(v, mean);
  ent *= h;
  if (!(ent > 1e-14 * mean) || !(fisher > 0.0)) return std::nullopt;
  return fisher / ent;
}

/// Random positive cosine fields refined by stochastic descent on their coefficients; returns the smallest ratio.
inline ClsiEstimate estimate_clsi_lower_bound(const Grid1D& grid, std::size_t n_samples, std::size_t n_descent_steps,
                                              std::uint64_t seed = 1) {
  if (n_samples < 1) throw Error(ErrorKind::Domain, "n_samples must be >= 1");
  constexpr std::size_t kModes = 8;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const std::size_t n = grid.n_cells();

  auto build = [&](const std::vector<double>& a) -> std::optional<Field> {
    Field f(n, 1.0);
    for (std::size_t j = 1; j <= kModes; ++j)
      for (std::size_t i = 0; i < n; ++i) f[i] += a[j - 1] * std::cos(static_cast<double>(j) * std::numbers::pi * grid.center(i));
    if (!(min_value(f) > 1e-3)) return std::nullopt;
    return f;
  };

  ClsiEstimate est;
  est.value = std::numeric_limits<double>::infinity();
  for (std::size_t sample = 0; sample < n_samples; ++sample) {
    std::vector<double> a(kModes);
    for (std::size_t j = 0; j < kModes; ++j) a[j] = 0.9 * unit(rng) / static_cast<double>(j + 1);
    auto f = build(a);
    std::optional<double> best = f ? lsi_ratio(*f, grid) : std::nullopt;
    if (!best) {
      ++est.samples_skipped;
      continue;
    }
    double step = 0.1;
    for (std::size_t it = 0; it < n_descent_steps; ++it) {
      std::vector<double> trial = a;
      for (double& x : trial) x += step * gauss(rng);
      auto g = build(trial);
      const auto r = g ? lsi_ratio(*g, grid) : std::nullopt;
      if (r && *r < *best) {
        best = r;
        a = std::move(trial);
        step *= 1.2;
      } else {
        step = std::max(step * 0.9, 1e-6);
      }
    }
    ++est.samples_used;
    est.value = std::min(est.value, *best);
  }
  if (est.samples_used == 0) throw Error(ErrorKind::InsufficientData, "every sample was degenerate");
  return est;
}

}  // namespace erd
