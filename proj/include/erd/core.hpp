// Grids, fields, quadrature and conserved-mass bookkeeping on the unit interval.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace erd {

enum class ErrorKind {
  InvalidGrid,
  InvalidInterval,
  Shape,
  Domain,
  Positivity,
  IndeterminateRatio,
  Regime,
  Hypothesis,
  InsufficientData,
  Aliasing,
  Config,
  Solver,
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidGrid: return "invalid-grid";
    case ErrorKind::InvalidInterval: return "invalid-interval";
    case ErrorKind::Shape: return "shape";
    case ErrorKind::Domain: return "domain";
    case ErrorKind::Positivity: return "positivity";
    case ErrorKind::IndeterminateRatio: return "indeterminate-ratio";
    case ErrorKind::Regime: return "regime";
    case ErrorKind::Hypothesis: return "hypothesis";
    case ErrorKind::InsufficientData: return "insufficient-data";
    case ErrorKind::Aliasing: return "aliasing";
    case ErrorKind::Config: return "config";
    case ErrorKind::Solver: return "solver";
  }
  return "unknown";
}

/// Single exception type for the library; `kind()` distinguishes the failure class.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& detail)
      : std::runtime_error(std::string(to_string(kind)) + ": " + detail), kind_(kind), detail_(detail) {}
  ErrorKind kind() const noexcept { return kind_; }
  /// Message without the kind prefix.
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorKind kind_;
  std::string detail_;
};

/// Uniform cell-centred grid on the unit interval (0,1).
class Grid1D {
 public:
  explicit Grid1D(std::size_t n_cells) : n_(n_cells) {
    if (n_cells < 2) throw Error(ErrorKind::InvalidGrid, "n_cells must be >= 2, got " + std::to_string(n_cells));
    h_ = 1.0 / static_cast<double>(n_cells);
    centers_.resize(n_cells);
    for (std::size_t i = 0; i < n_cells; ++i) centers_[i] = (static_cast<double>(i) + 0.5) * h_;
  }

  std::size_t n_cells() const noexcept { return n_; }
  double h() const noexcept { return h_; }
  std::span<const double> cell_centers() const noexcept { return centers_; }
  double center(std::size_t i) const { return centers_[i]; }
  double left_edge(std::size_t i) const { return static_cast<double>(i) / static_cast<double>(n_); }
  double right_edge(std::size_t i) const { return static_cast<double>(i + 1) / static_cast<double>(n_); }

  friend bool operator==(const Grid1D& a, const Grid1D& b) { return a.n_ == b.n_; }

 private:
  std::size_t n_;
  double h_;
  std::vector<double> centers_;
};

inline Grid1D build_grid(std::size_t n_cells) { return Grid1D(n_cells); }

/// Cell-average values of one scalar quantity.
class Field {
 public:
  Field() = default;
  explicit Field(std::size_t n, double value = 0.0) : v_(n, value) {}
  explicit Field(std::vector<double> values) : v_(std::move(values)) {}
  Field(std::initializer_list<double> values) : v_(values) {}

  std::size_t size() const noexcept { return v_.size(); }
  bool empty() const noexcept { return v_.empty(); }
  double& operator[](std::size_t i) { return v_[i]; }
  double operator[](std::size_t i) const { return v_[i]; }
  std::span<double> values() noexcept { return v_; }
  std::span<const double> values() const noexcept { return v_; }
  const std::vector<double>& vec() const noexcept { return v_; }
  auto begin() noexcept { return v_.begin(); }
  auto end() noexcept { return v_.end(); }
  auto begin() const noexcept { return v_.begin(); }
  auto end() const noexcept { return v_.end(); }

  Field& operator+=(const Field& o) {
    require_same(o);
    for (std::size_t i = 0; i < v_.size(); ++i) v_[i] += o.v_[i];
    return *this;
  }
  Field& operator-=(const Field& o) {
    require_same(o);
    for (std::size_t i = 0; i < v_.size(); ++i) v_[i] -= o.v_[i];
    return *this;
  }
  Field& operator*=(double a) {
    for (double& x : v_) x *= a;
    return *this;
  }
  friend Field operator+(Field a, const Field& b) { return a += b; }
  friend Field operator-(Field a, const Field& b) { return a -= b; }
  friend Field operator*(double a, Field f) { return f *= a; }
  friend Field operator*(Field f, double a) { return f *= a; }
  friend bool operator==(const Field&, const Field&) = default;

  void require_same(const Field& o) const {
    if (o.size() != size())
      throw Error(ErrorKind::Shape, "field length mismatch: " + std::to_string(size()) + " vs " + std::to_string(o.size()));
  }

 private:
  std::vector<double> v_;
};

inline void require_on_grid(const Field& f, const Grid1D& grid, const char* what = "field") {
  if (f.size() != grid.n_cells())
    throw Error(ErrorKind::Shape, std::string(what) + " has " + std::to_string(f.size()) + " cells, grid has " +
                                      std::to_string(grid.n_cells()));
}

enum class Species { E, S, C, P };

inline const char* to_string(Species s) {
  switch (s) {
    case Species::E: return "e";
    case Species::S: return "s";
    case Species::C: return "c";
    case Species::P: return "p";
  }
  return "?";
}

/// Concentrations of enzyme, substrate, complex and product at one time.
struct SystemState {
  double t = 0.0;
  Field e, s, c, p;

  std::size_t n_cells() const noexcept { return e.size(); }
  Field& field(Species sp) {
    switch (sp) {
      case Species::E: return e;
      case Species::S: return s;
      case Species::C: return c;
      case Species::P: return p;
    }
    return e;
  }
  const Field& field(Species sp) const { return const_cast<SystemState*>(this)->field(sp); }

  void validate(const Grid1D& grid) const {
    require_on_grid(e, grid, "e");
    require_on_grid(s, grid, "s");
    require_on_grid(c, grid, "c");
    require_on_grid(p, grid, "p");
    if (!(t >= 0.0)) throw Error(ErrorKind::Domain, "state time must be >= 0");
  }

  static SystemState zeros(const Grid1D& grid) {
    const auto n = grid.n_cells();
    return SystemState{0.0, Field(n), Field(n), Field(n), Field(n)};
  }
};

struct RateConstants {
  double k_f = 1.0;
  double k_r = 1.0;
  double k_c = 1.0;

  void validate() const {
    if (!(k_f > 0.0)) throw Error(ErrorKind::Domain, "rates.k_f must be > 0");
    if (!(k_r > 0.0)) throw Error(ErrorKind::Domain, "rates.k_r must be > 0");
    if (!(k_c > 0.0)) throw Error(ErrorKind::Domain, "rates.k_c must be > 0");
  }
};

enum class Regime { Full, Degenerate };

inline const char* to_string(Regime r) { return r == Regime::Full ? "FULL" : "DEGENERATE"; }

struct DiffusionCoeffs {
  double d_e = 1.0;
  double d_s = 1.0;
  double d_c = 1.0;
  double d_p = 1.0;

  /// FULL when every coefficient is positive, DEGENERATE when d_e = d_c = 0; anything else throws.
  Regime regime() const {
    if (!(d_s > 0.0)) throw Error(ErrorKind::Regime, "diffusion.d_s must be > 0");
    if (!(d_p > 0.0)) throw Error(ErrorKind::Regime, "diffusion.d_p must be > 0");
    if (d_e < 0.0 || d_c < 0.0) throw Error(ErrorKind::Regime, "diffusion coefficients must be non-negative");
    if (d_e > 0.0 && d_c > 0.0) return Regime::Full;
    if (d_e == 0.0 && d_c == 0.0) return Regime::Degenerate;
    throw Error(ErrorKind::Regime, "mixed diffusion regime (exactly one of d_e, d_c is zero) is not supported");
  }
};

struct ConservedMasses {
  double M0 = 0.0;  // enzyme family: e + c
  double M1 = 0.0;  // substrate family: s + c + p
};

/// Domain constants. C_P uses the squared convention ||f - mean||^2 <= C_P ||f'||^2.
struct GeometryConstants {
  double C_LSI = std::numbers::pi * std::numbers::pi;
  double C_P = 1.0 / (std::numbers::pi * std::numbers::pi);
  double C_CKP = 2.0;

  void validate() const {
    if (!(C_LSI > 0.0)) throw Error(ErrorKind::Domain, "geometry.C_LSI must be > 0");
    if (!(C_P > 0.0)) throw Error(ErrorKind::Domain, "geometry.C_P must be > 0");
    if (!(C_CKP > 0.0)) throw Error(ErrorKind::Domain, "geometry.C_CKP must be > 0");
  }
};

/// Exact cell averages of height * indicator((a,b)).
inline Field project_indicator(double a, double b, double height, const Grid1D& grid) {
  if (!(a < b)) throw Error(ErrorKind::InvalidInterval, "indicator needs a < b");
  if (a < 0.0 || b > 1.0) throw Error(ErrorKind::InvalidInterval, "indicator interval must lie in [0,1]");
  if (height < 0.0) throw Error(ErrorKind::Domain, "indicator height must be >= 0");
  Field f(grid.n_cells());
  const double h = grid.h();
  for (std::size_t i = 0; i < grid.n_cells(); ++i) {
    const double lo = std::max(a, grid.left_edge(i));
    const double hi = std::min(b, grid.right_edge(i));
    const double overlap = hi - lo;
    // edges that coincide with cell edges up to rounding give exact 0 or full-cell values
    if (overlap <= 1e-12 * h) continue;
    f[i] = std::abs(overlap - h) <= 1e-12 * h ? height : height * overlap / h;
  }
  return f;
}

/// Midpoint quadrature over (0,1).
inline double integrate(const Field& f, const Grid1D& grid) {
  require_on_grid(f, grid);
  double sum = 0.0;
  for (double v : f) sum += v;
  return sum * grid.h();
}

inline double linf_norm(const Field& f) {
  if (f.empty()) throw Error(ErrorKind::Shape, "linf_norm of empty field");
  double m = 0.0;
  for (double v : f) m = std::max(m, std::abs(v));
  return m;
}

inline double l2_norm(const Field& f, const Grid1D& grid) {
  require_on_grid(f, grid);
  double sum = 0.0;
  for (double v : f) sum += v * v;
  return std::sqrt(sum * grid.h());
}

/// ||f - mean(f)||_{L2}
inline double l2_deviation(const Field& f, const Grid1D& grid) {
  const double mean = integrate(f, grid);
  double sum = 0.0;
  for (double v : f) sum += (v - mean) * (v - mean);
  return std::sqrt(sum * grid.h());
}

inline double linf_distance(const Field& a, const Field& b) {
  a.require_same(b);
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

inline double min_value(const Field& f) {
  if (f.empty()) throw Error(ErrorKind::Shape, "min of empty field");
  return *std::min_element(f.begin(), f.end());
}

inline ConservedMasses conserved_masses(const SystemState& state, const Grid1D& grid) {
  state.validate(grid);
  double m0 = 0.0, m1 = 0.0;
  for (std::size_t i = 0; i < grid.n_cells(); ++i) {
    m0 += state.e[i] + state.c[i];
    m1 += state.s[i] + state.c[i] + state.p[i];
  }
  return {m0 * grid.h(), m1 * grid.h()};
}

}  // namespace erd
