// Entropy kernels, the mass / partial / total entropy functionals and the production densities.
#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "erd/core.hpp"
#include "erd/dynamics.hpp"

namespace erd {

enum class KernelKind { Boltzmann, Relative, CutRelative, Dissip, Bold };

namespace kernel {

/// x log x - x + 1, with the x -> 0 limit 1.
inline double boltzmann(double x) {
  if (x < 0.0) throw Error(ErrorKind::Domain, "boltzmann kernel needs x >= 0");
  if (x == 0.0) return 1.0;
  return x * std::log(x) - x + 1.0;
}

/// h(x|y) = x log(x/y) - x + y for x >= 0, y > 0; h(0|y) = y.
inline double relative(double x, double y) {
  if (x < 0.0 || !(y > 0.0)) throw Error(ErrorKind::Domain, "relative entropy needs x >= 0, y > 0");
  if (x == 0.0) return y;
  return x * std::log(x / y) - x + y;
}

/// Relative entropy cut to zero below the threshold eps.
inline double cut_relative(double x, double eps) {
  if (x < 0.0 || !(eps > 0.0)) throw Error(ErrorKind::Domain, "cut relative entropy needs x >= 0, eps > 0");
  if (x < eps) return 0.0;
  return x * std::log(x / eps) - x + eps;
}

/// x - log x - 1 for x > 0.
inline double dissip(double x) {
  if (!(x > 0.0)) throw Error(ErrorKind::Domain, "dissipation kernel needs x > 0");
  return x - std::log(x) - 1.0;
}

/// (x - y) log(x/y); +infinity when exactly one argument vanishes.
inline double bold(double x, double y) {
  if (x < 0.0 || y < 0.0) throw Error(ErrorKind::Domain, "bold kernel needs x, y >= 0");
  if (x == y) return 0.0;
  if (x == 0.0 || y == 0.0) return std::numeric_limits<double>::infinity();
  return (x - y) * std::log(x / y);
}

}  // namespace kernel

/// Relative slack of x - 1 <= 6 (sqrt(x) - 1)^2, valid for x >= 2.
inline double important_inequality_margin(double x) {
  if (!(x >= 2.0)) throw Error(ErrorKind::Domain, "inequality is stated for x >= 2");
  const double r = std::sqrt(x) - 1.0;
  return (6.0 * r * r - (x - 1.0)) / (x - 1.0);
}

inline double eval_kernel(KernelKind kind, double x, double y = 1.0) {
  switch (kind) {
    case KernelKind::Boltzmann: return kernel::boltzmann(x);
    case KernelKind::Relative: return kernel::relative(x, y);
    case KernelKind::CutRelative: return kernel::cut_relative(x, y);
    case KernelKind::Dissip: return kernel::dissip(x);
    case KernelKind::Bold: return kernel::bold(x, y);
  }
  return std::numeric_limits<double>::quiet_NaN();
}

/// A complex threshold that is either uniform or varies per cell.
class Threshold {
 public:
  Threshold(double value = 0.0) : v_(value) {}  // NOLINT(google-explicit-constructor)
  Threshold(Field values) : v_(std::move(values)) {}  // NOLINT(google-explicit-constructor)

  bool is_uniform() const noexcept { return std::holds_alternative<double>(v_); }
  double at(std::size_t i) const { return is_uniform() ? std::get<double>(v_) : std::get<Field>(v_)[i]; }
  double uniform_value() const { return std::get<double>(v_); }
  const Field& field() const { return std::get<Field>(v_); }

  Field to_field(std::size_t n) const { return is_uniform() ? Field(n, std::get<double>(v_)) : std::get<Field>(v_); }

 private:
  std::variant<double, Field> v_;
};

struct EntropyParams {
  double eps_s = 0.0;
  Threshold eps_c;
  double k = 0.0;
};

enum class DomainLabel : unsigned char { Omega1 = 1, Omega2 = 2, Omega3 = 3, Omega4 = 4 };

struct DomainPartition {
  std::vector<DomainLabel> labels;

  std::array<std::size_t, 4> counts() const {
    std::array<std::size_t, 4> out{};
    for (auto l : labels) ++out[static_cast<std::size_t>(l) - 1];
    return out;
  }
};

namespace detail {

/// Whether c sits at or above the complex threshold. A zero threshold (e_inf = 0 cells) only admits c = 0,
/// which is classified as below threshold.
inline bool complex_above(double c, double eps_c, std::size_t cell) {
  if (eps_c > 0.0) return c >= eps_c;
  if (c == 0.0) return false;
  throw Error(ErrorKind::Domain,
              "cell " + std::to_string(cell) + " has zero complex threshold but positive complex concentration");
}

}  // namespace detail

inline DomainPartition partition_domains(const SystemState& state, const EntropyParams& params) {
  const std::size_t n = state.c.size();
  DomainPartition part;
  part.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const bool c_hi = detail::complex_above(state.c[i], params.eps_c.at(i), i);
    const bool s_hi = state.s[i] >= params.eps_s;
    part.labels[i] = c_hi ? (s_hi ? DomainLabel::Omega1 : DomainLabel::Omega3)
                          : (s_hi ? DomainLabel::Omega2 : DomainLabel::Omega4);
  }
  return part;
}

/// Integral of c + ((2 k_r + k_c) / (2 k_r)) s.
inline double mass_functional(const SystemState& state, const RateConstants& rates, const Grid1D& grid) {
  require_on_grid(state.c, grid, "c");
  require_on_grid(state.s, grid, "s");
  const double w = (2.0 * rates.k_r + rates.k_c) / (2.0 * rates.k_r);
  double sum = 0.0;
  for (std::size_t i = 0; i < grid.n_cells(); ++i) sum += state.c[i] + w * state.s[i];
  return sum * grid.h();
}

/// Pointwise (k_f / k_r) e s + c.
inline Field mass_density(const SystemState& state, const RateConstants& rates) {
  const std::size_t n = state.e.size();
  Field out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = rates.k_f / rates.k_r * state.e[i] * state.s[i] + state.c[i];
  return out;
}

/// Integral of max(f, eps).
inline double truncated_mean(const Field& f, const Threshold& eps, const Grid1D& grid) {
  require_on_grid(f, grid);
  double sum = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    const double e = eps.at(i);
    if (e < 0.0) throw Error(ErrorKind::Domain, "truncation level must be non-negative");
    sum += std::max(f[i], e);
  }
  return sum * grid.h();
}

struct EntropyReport {
  double H = 0.0;
  double M = 0.0;
  double E = 0.0;
  double e_term = 0.0;
  double c_term = 0.0;
  double s_term = 0.0;
};

namespace detail {

inline double relative_allow_zero(double x, double y, std::size_t cell, const char* what) {
  if (y > 0.0) return kernel::relative(x, y);
  if (x == 0.0) return 0.0;
  throw Error(ErrorKind::Domain, std::string(what) + ": zero reference with positive value in cell " + std::to_string(cell));
}

inline double cut_allow_zero(double x, double eps, std::size_t cell) {
  if (eps > 0.0) return kernel::cut_relative(x, eps);
  if (x == 0.0) return 0.0;
  throw Error(ErrorKind::Domain, "zero complex threshold with positive complex in cell " + std::to_string(cell));
}

}  // namespace detail

inline EntropyReport total_entropy(const SystemState& state, const EntropyParams& params, const EquilibriumState& eq,
                                   const RateConstants& rates, const Grid1D& grid) {
  state.validate(grid);
  require_on_grid(eq.e_inf, grid, "e_inf");
  EntropyReport r;
  for (std::size_t i = 0; i < grid.n_cells(); ++i) {
    r.e_term += detail::relative_allow_zero(state.e[i], eq.e_inf[i], i, "h(e|e_inf)");
    r.c_term += detail::cut_allow_zero(state.c[i], params.eps_c.at(i), i);
    r.s_term += kernel::cut_relative(state.s[i], params.eps_s);
  }
  r.e_term *= grid.h();
  r.c_term *= grid.h();
  r.s_term *= grid.h();
  r.H = r.e_term + r.c_term + r.s_term;
  r.M = mass_functional(state, rates, grid);
  r.E = r.H + params.k * r.M;
  return r;
}

inline double partial_entropy(const SystemState& state, const EntropyParams& params, const EquilibriumState& eq,
                              const Grid1D& grid) {
  return total_entropy(state, params, eq, RateConstants{}, grid).H;
}

struct SkippedCell {
  std::size_t cell = 0;
  DomainLabel label = DomainLabel::Omega4;
  std::string term;
};

/// Production density split by origin: reaction terms, substrate LSI term, complex LSI term.
struct ProductionDensity {
  Field total;
  Field reaction;
  Field lsi_s;
  Field lsi_c;
  DomainPartition partition;
  std::vector<SkippedCell> skipped;
};

namespace detail {

struct IndeterminateTerm {
  const char* term;
};

/// weight * g, where a zero weight wins over any value of g; an unbounded g with positive weight is indeterminate.
template <class G>
double weighted_term(double weight, G&& g, const char* term) {
  if (weight == 0.0) return 0.0;
  const double v = g();
  if (!std::isfinite(v)) throw IndeterminateTerm{term};
  return weight * v;
}

}  // namespace detail

/// Evaluates the piecewise production density. Cells where a term is indeterminate are recorded in
/// `skipped` and carry NaN.
inline ProductionDensity production_density_detailed(const SystemState& state, const EntropyParams& params,
                                                     const EquilibriumState& eq, const RateConstants& rates,
                                                     const DiffusionCoeffs& diff, const GeometryConstants& geometry,
                                                     const Grid1D& grid) {
  state.validate(grid);
  require_on_grid(eq.e_inf, grid, "e_inf");
  const std::size_t n = grid.n_cells();
  const double kf = rates.k_f, kr = rates.k_r, kc = rates.k_c;
  const double eps_s = params.eps_s;

  ProductionDensity out{Field(n), Field(n), Field(n), Field(n), partition_domains(state, params), {}};
  const double s_bar = truncated_mean(state.s, Threshold(eps_s), grid);
  const bool use_c_lsi = diff.d_c > 0.0;
  const double c_bar = use_c_lsi ? truncated_mean(state.c, params.eps_c, grid) : 0.0;

  using detail::weighted_term;
  const auto inf = std::numeric_limits<double>::infinity();
  // ratio a/b that is infinite when b vanishes and a does not
  auto ratio = [inf](double a, double b) { return b > 0.0 ? a / b : (a == 0.0 ? 0.0 : inf); };
  auto h_or_inf = [inf](double x, double y) {
    if (!std::isfinite(x) || !std::isfinite(y)) return inf;
    if (y > 0.0) return kernel::relative(x, y);
    return x == 0.0 ? 0.0 : inf;
  };
  auto dissip_or_inf = [inf](double x) { return x > 0.0 && std::isfinite(x) ? kernel::dissip(x) : inf; };

  for (std::size_t i = 0; i < n; ++i) {
    const double e = state.e[i], s = state.s[i], c = state.c[i];
    const double einf = eq.e_inf[i];
    const double epc = params.eps_c.at(i);
    const DomainLabel label = out.partition.labels[i];
    double react = 0.0, ls = 0.0, lc = 0.0;
    try {
      switch (label) {
        case DomainLabel::Omega1:
          react += weighted_term(kf * c, [&] { return kernel::bold(e * s / c, einf * eps_s / epc); }, "k_f c bold(es/c|.)");
          react += weighted_term(kc, [&] { return e > 0.0 ? e * kernel::relative(c / e, epc / einf) : inf; },
                                 "k_c e h(c/e|.)");
          ls = geometry.C_LSI * diff.d_s * kernel::relative(s, s_bar);
          if (use_c_lsi) lc = geometry.C_LSI * diff.d_c * kernel::relative(c, c_bar);
          break;
        case DomainLabel::Omega2:
          react += weighted_term(kr * c, [&] { return dissip_or_inf(ratio(e * s, einf * eps_s)); }, "k_r c dissip(.)");
          react += weighted_term(kc * c, [&] { return dissip_or_inf(ratio(e, einf)); }, "k_c c dissip(e/e_inf)");
          react += weighted_term(kf, [&] { return h_or_inf(e * s, einf * eps_s); }, "k_f h(es|e_inf eps_s)");
          ls = geometry.C_LSI * diff.d_s * kernel::relative(s, s_bar);
          break;
        case DomainLabel::Omega3:
          react += weighted_term(kr + kc, [&] { return e > 0.0 ? e * kernel::relative(c / e, epc / einf) : inf; },
                                 "(k_r+k_c) e h(c/e|.)");
          react += weighted_term(kf * c * s, [&] { return h_or_inf(e / c, ratio(einf, epc)); }, "k_f c s h(e/c|.)");
          if (use_c_lsi) lc = geometry.C_LSI * diff.d_c * kernel::relative(c, c_bar);
          break;
        case DomainLabel::Omega4:
          react += weighted_term(kf * s, [&] { return h_or_inf(e, einf); }, "k_f s h(e|e_inf)");
          react += weighted_term((kr + kc) * c, [&] { return dissip_or_inf(ratio(e, einf)); }, "(k_r+k_c) c dissip(e/e_inf)");
          break;
      }
      out.reaction[i] = react;
      out.lsi_s[i] = ls;
      out.lsi_c[i] = lc;
      out.total[i] = react + ls + lc;
    } catch (const detail::IndeterminateTerm& bad) {
      out.skipped.push_back({i, label, bad.term});
      const double nan = std::numeric_limits<double>::quiet_NaN();
      out.reaction[i] = out.lsi_s[i] = out.lsi_c[i] = out.total[i] = nan;
    }
  }
  return out;
}

/// Production density; throws IndeterminateRatio naming the first offending cell and term.
inline Field production_density(const SystemState& state, const EntropyParams& params, const EquilibriumState& eq,
                                const RateConstants& rates, const DiffusionCoeffs& diff,
                                const GeometryConstants& geometry, const Grid1D& grid) {
  auto pd = production_density_detailed(state, params, eq, rates, diff, geometry, grid);
  if (!pd.skipped.empty()) {
    const auto& sk = pd.skipped.front();
    std::ostringstream msg;
    msg << "cell " << sk.cell << " (Omega" << static_cast<int>(sk.label) << ") term " << sk.term << "; "
        << pd.skipped.size() << " cell(s) affected";
    throw Error(ErrorKind::IndeterminateRatio, msg.str());
  }
  return std::move(pd.total);
}

/// Integral of a field ignoring NaN cells (those are reported separately as skipped).
inline double integrate_finite(const Field& f, const Grid1D& grid) {
  require_on_grid(f, grid);
  double sum = 0.0;
  for (double v : f)
    if (!std::isnan(v)) sum += v;
  return sum * grid.h();
}

struct EntropySample {
  double t = 0.0;
  EntropyReport report;
  double int_mass_density = 0.0;
  double int_production = 0.0;
  double int_h_e_mean = 0.0;  // integral of h(e | mean(e))
  std::size_t skipped_cells = 0;
};

/// Integral of h(e | mean e).
inline double e_mean_relative_entropy(const Field& e, const Grid1D& grid) {
  const double mean = integrate(e, grid);
  if (!(mean > 0.0)) return 0.0;
  double sum = 0.0;
  for (double v : e) sum += kernel::relative(std::max(v, 0.0), mean);
  return sum * grid.h();
}

inline EntropySample entropy_sample(const SystemState& st, const EntropyParams& params, const EquilibriumState& eq,
                                    const RateConstants& rates, const DiffusionCoeffs& diff,
                                    const GeometryConstants& geometry, const Grid1D& grid) {
  EntropySample smp;
  smp.t = st.t;
  smp.report = total_entropy(st, params, eq, rates, grid);
  smp.int_mass_density = integrate(mass_density(st, rates), grid);
  const auto pd = production_density_detailed(st, params, eq, rates, diff, geometry, grid);
  smp.int_production = integrate_finite(pd.total, grid);
  smp.skipped_cells = pd.skipped.size();
  smp.int_h_e_mean = e_mean_relative_entropy(st.e, grid);
  return smp;
}

inline std::vector<EntropySample> entropy_trajectory(const Trajectory& traj, const EntropyParams& params,
                                                     const EquilibriumState& eq, const RateConstants& rates,
                                                     const DiffusionCoeffs& diff, const GeometryConstants& geometry,
                                                     const Grid1D& grid) {
  std::vector<EntropySample> out;
  out.reserve(traj.snapshots.size());
  for (const auto& st : traj.snapshots) {
    try {
      out.push_back(entropy_sample(st, params, eq, rates, diff, geometry, grid));
    } catch (const Error& err) {
      std::ostringstream msg;
      msg.precision(17);
      msg << err.detail() << " (snapshot t=" << st.t << ")";
      throw Error(err.kind(), msg.str());
    }
  }
  return out;
}

}  // namespace erd
