// Flat key-value run configuration: parsing, validation, echo and presets.
#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "erd/core.hpp"
#include "erd/dynamics.hpp"
#include "erd/rates.hpp"

namespace erd {

/// Ordered list of key = value pairs as read from a config file.
using KeyValues = std::vector<std::pair<std::string, std::string>>;

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : s) {
    if (ch == ',' || ch == ' ' || ch == '\t') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

inline double parse_double(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size() || t.empty())
    throw Error(ErrorKind::Config, key + ": expected a number, got '" + text + "'");
  if (!std::isfinite(v)) throw Error(ErrorKind::Config, key + ": value must be finite");
  return v;
}

inline std::size_t parse_count(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  unsigned long long v = 0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size() || t.empty())
    throw Error(ErrorKind::Config, key + ": expected a non-negative integer, got '" + text + "'");
  return static_cast<std::size_t>(v);
}

inline bool parse_bool(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  if (t == "true" || t == "1" || t == "yes") return true;
  if (t == "false" || t == "0" || t == "no") return false;
  throw Error(ErrorKind::Config, key + ": expected true or false, got '" + text + "'");
}

/// Shortest text that parses back to the same double.
inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace detail

/// Parses `key = value` lines; '#' starts a comment, blank lines are ignored.
inline KeyValues parse_key_values(const std::string& text) {
  KeyValues kv;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw Error(ErrorKind::Config, "line " + std::to_string(lineno) + ": expected 'key = value'");
    std::string key = detail::trim(line.substr(0, eq));
    std::string value = detail::trim(line.substr(eq + 1));
    if (key.empty()) throw Error(ErrorKind::Config, "line " + std::to_string(lineno) + ": empty key");
    for (const auto& [k, v] : kv)
      if (k == key) throw Error(ErrorKind::Config, key + ": duplicate key");
    kv.emplace_back(std::move(key), std::move(value));
  }
  return kv;
}

/// Reads a key-value file, or the "config" object of a run manifest when the file is JSON.
inline KeyValues load_key_values(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Config, "cannot open config file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  if (detail::trim(text).starts_with("{")) {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& ex) {
      throw Error(ErrorKind::Config, path + ": invalid JSON (" + ex.what() + ")");
    }
    if (!j.contains("config") || !j["config"].is_object())
      throw Error(ErrorKind::Config, path + ": manifest has no \"config\" object");
    KeyValues kv;
    for (const auto& [k, v] : j["config"].items()) {
      if (!v.is_string()) throw Error(ErrorKind::Config, k + ": manifest config values must be strings");
      kv.emplace_back(k, v.get<std::string>());
    }
    return kv;
  }
  return parse_key_values(text);
}

enum class InitialKind { Constant, Indicator, CosineBump };

/// One additive term of the initial data for one species.
struct InitialTerm {
  std::size_t index = 0;  // position from the key initial.N
  Species species = Species::E;
  InitialKind kind = InitialKind::Constant;
  std::vector<double> params;

  std::string to_text() const {
    std::string s = to_string(species);
    s += kind == InitialKind::Constant ? " constant" : kind == InitialKind::Indicator ? " indicator" : " cosine_bump";
    for (double p : params) s += " " + detail::format_double(p);
    return s;
  }
};

struct RunConfig {
  std::size_t n_cells = 100;
  RateConstants rates;
  GammaForm gamma_form = GammaForm::Proof;
  DiffusionCoeffs diff;
  std::vector<InitialTerm> initial;
  StepperConfig stepper;
  bool entropy_use_defaults = true;
  std::optional<double> entropy_eps_s;
  std::optional<double> entropy_k;
  ParamVariant entropy_variant = ParamVariant::Primary;
  GeometryConstants geometry;
  std::string out_directory = "out";
  bool write_csv = true;
  bool write_json = true;
  std::vector<double> field_times;  // empty: first and last snapshot
  std::uint64_t seed = 1;
  double gamma_scale = 1.0;
  double eta = 3.0;
  double eps = 0.5;
  std::size_t audit_states = 100;
  std::size_t tight_restarts = 0;
  std::size_t tight_iterations = 4000;
  std::size_t tight_cells = 64;
  double rate_floor = 1e-10;
  std::string sweep_param;
  std::vector<std::string> sweep_values;
};

namespace detail {

inline Species parse_species(const std::string& key, const std::string& s) {
  if (s == "e") return Species::E;
  if (s == "s") return Species::S;
  if (s == "c") return Species::C;
  if (s == "p") return Species::P;
  throw Error(ErrorKind::Config, key + ": unknown species '" + s + "' (expected e, s, c or p)");
}

inline InitialTerm parse_initial(const std::string& key, const std::string& value) {
  InitialTerm term;
  term.index = parse_count(key, key.substr(std::string("initial.").size()));
  const auto words = split_list(value);
  if (words.size() < 2) throw Error(ErrorKind::Config, key + ": expected '<species> <kind> <parameters>'");
  term.species = parse_species(key, words[0]);
  std::size_t expected = 0;
  if (words[1] == "constant") {
    term.kind = InitialKind::Constant;
    expected = 1;
  } else if (words[1] == "indicator") {
    term.kind = InitialKind::Indicator;
    expected = 3;
  } else if (words[1] == "cosine_bump") {
    term.kind = InitialKind::CosineBump;
    expected = 3;
  } else {
    throw Error(ErrorKind::Config, key + ": unknown kind '" + words[1] + "' (expected constant, indicator or cosine_bump)");
  }
  if (words.size() != expected + 2)
    throw Error(ErrorKind::Config, key + ": " + words[1] + " takes " + std::to_string(expected) + " parameter(s)");
  for (std::size_t i = 2; i < words.size(); ++i) term.params.push_back(parse_double(key, words[i]));
  const auto& p = term.params;
  if (term.kind == InitialKind::Constant && p[0] < 0.0) throw Error(ErrorKind::Config, key + ": value must be >= 0");
  if (term.kind == InitialKind::Indicator) {
    if (!(0.0 <= p[0] && p[0] < p[1] && p[1] <= 1.0))
      throw Error(ErrorKind::Config, key + ": indicator needs 0 <= a < b <= 1");
    if (p[2] < 0.0) throw Error(ErrorKind::Config, key + ": height must be >= 0");
  }
  if (term.kind == InitialKind::CosineBump) {
    if (!(p[1] > 0.0)) throw Error(ErrorKind::Config, key + ": width must be > 0");
    if (p[2] < 0.0) throw Error(ErrorKind::Config, key + ": height must be >= 0");
  }
  return term;
}

}  // namespace detail

/// Builds and validates a RunConfig; every error names the offending key.
inline RunConfig run_config_from(const KeyValues& kv) {
  using namespace detail;
  RunConfig cfg;
  for (const auto& [key, value] : kv) {
    if (key == "grid.n_cells") cfg.n_cells = parse_count(key, value);
    else if (key == "rates.k_f") cfg.rates.k_f = parse_double(key, value);
    else if (key == "rates.k_r") cfg.rates.k_r = parse_double(key, value);
    else if (key == "rates.k_c") cfg.rates.k_c = parse_double(key, value);
    else if (key == "rates.gamma_form") {
      if (value == "proof") cfg.gamma_form = GammaForm::Proof;
      else if (value == "theorem_display") cfg.gamma_form = GammaForm::TheoremDisplay;
      else throw Error(ErrorKind::Config, key + ": expected proof or theorem_display");
    }
    else if (key == "diffusion.d_e") cfg.diff.d_e = parse_double(key, value);
    else if (key == "diffusion.d_s") cfg.diff.d_s = parse_double(key, value);
    else if (key == "diffusion.d_c") cfg.diff.d_c = parse_double(key, value);
    else if (key == "diffusion.d_p") cfg.diff.d_p = parse_double(key, value);
    else if (key.starts_with("initial.")) cfg.initial.push_back(parse_initial(key, value));
    else if (key == "stepper.dt") cfg.stepper.dt = parse_double(key, value);
    else if (key == "stepper.t_end") cfg.stepper.t_end = parse_double(key, value);
    else if (key == "stepper.record_every") cfg.stepper.record_every = parse_count(key, value);
    else if (key == "stepper.reaction_bound") cfg.stepper.reaction_bound = parse_double(key, value);
    else if (key == "stepper.scheme") {
      if (value == "backward_euler") cfg.stepper.scheme = DiffusionScheme::BackwardEuler;
      else if (value == "crank_nicolson") cfg.stepper.scheme = DiffusionScheme::CrankNicolson;
      else throw Error(ErrorKind::Config, key + ": expected backward_euler or crank_nicolson");
    }
    else if (key == "entropy.use_defaults") cfg.entropy_use_defaults = parse_bool(key, value);
    else if (key == "entropy.eps_s") cfg.entropy_eps_s = parse_double(key, value);
    else if (key == "entropy.k") cfg.entropy_k = parse_double(key, value);
    else if (key == "entropy.variant") {
      if (value == "primary") cfg.entropy_variant = ParamVariant::Primary;
      else if (value == "alternative") cfg.entropy_variant = ParamVariant::Alternative;
      else throw Error(ErrorKind::Config, key + ": expected primary or alternative");
    }
    else if (key == "geometry.C_LSI") cfg.geometry.C_LSI = parse_double(key, value);
    else if (key == "geometry.C_P") cfg.geometry.C_P = parse_double(key, value);
    else if (key == "geometry.C_CKP") cfg.geometry.C_CKP = parse_double(key, value);
    else if (key == "outputs.directory") cfg.out_directory = value;
    else if (key == "outputs.formats") {
      cfg.write_csv = cfg.write_json = false;
      for (const auto& f : split_list(value)) {
        if (f == "csv") cfg.write_csv = true;
        else if (f == "json") cfg.write_json = true;
        else throw Error(ErrorKind::Config, key + ": unknown format '" + f + "' (expected csv, json)");
      }
    }
    else if (key == "outputs.field_times") {
      cfg.field_times.clear();
      for (const auto& t : split_list(value)) cfg.field_times.push_back(parse_double(key, t));
    }
    else if (key == "run.seed") cfg.seed = parse_count(key, value);
    else if (key == "verify.gamma_scale") cfg.gamma_scale = parse_double(key, value);
    else if (key == "verify.eta") cfg.eta = parse_double(key, value);
    else if (key == "verify.eps") cfg.eps = parse_double(key, value);
    else if (key == "verify.audit_states") cfg.audit_states = parse_count(key, value);
    else if (key == "verify.tight_restarts") cfg.tight_restarts = parse_count(key, value);
    else if (key == "verify.tight_iterations") cfg.tight_iterations = parse_count(key, value);
    else if (key == "verify.tight_cells") cfg.tight_cells = parse_count(key, value);
    else if (key == "verify.rate_floor") cfg.rate_floor = parse_double(key, value);
    else if (key == "sweep.param") cfg.sweep_param = value;
    else if (key == "sweep.values") cfg.sweep_values = split_list(value);
    else throw Error(ErrorKind::Config, key + ": unknown key");
  }
  std::sort(cfg.initial.begin(), cfg.initial.end(), [](const auto& a, const auto& b) { return a.index < b.index; });
  for (std::size_t i = 1; i < cfg.initial.size(); ++i)
    if (cfg.initial[i].index == cfg.initial[i - 1].index)
      throw Error(ErrorKind::Config, "initial." + std::to_string(cfg.initial[i].index) + ": duplicate index");

  if (cfg.n_cells < 2) throw Error(ErrorKind::Config, "grid.n_cells must be >= 2");
  try {
    cfg.rates.validate();
    cfg.geometry.validate();
  } catch (const Error& e) {
    throw Error(ErrorKind::Config, e.detail());
  }
  for (auto [name, v] : {std::pair{"diffusion.d_e", cfg.diff.d_e}, {"diffusion.d_s", cfg.diff.d_s},
                         {"diffusion.d_c", cfg.diff.d_c}, {"diffusion.d_p", cfg.diff.d_p}})
    if (v < 0.0) throw Error(ErrorKind::Config, std::string(name) + " must be >= 0");
  try {
    cfg.diff.regime();
  } catch (const Error& e) {
    throw Error(ErrorKind::Config, "diffusion: " + e.detail());
  }
  cfg.stepper.validate();
  if (!(cfg.stepper.reaction_bound > 0.0)) throw Error(ErrorKind::Config, "stepper.reaction_bound must be > 0");
  if (cfg.entropy_eps_s && !(*cfg.entropy_eps_s > 0.0)) throw Error(ErrorKind::Config, "entropy.eps_s must be > 0");
  if (cfg.entropy_k && !(*cfg.entropy_k > 0.0)) throw Error(ErrorKind::Config, "entropy.k must be > 0");
  for (double t : cfg.field_times)
    if (t < 0.0 || t > cfg.stepper.t_end) throw Error(ErrorKind::Config, "outputs.field_times must lie in [0, t_end]");
  if (!(cfg.gamma_scale > 0.0)) throw Error(ErrorKind::Config, "verify.gamma_scale must be > 0");
  if (!(cfg.eta > 0.0)) throw Error(ErrorKind::Config, "verify.eta must be > 0");
  if (!(cfg.eps > 0.0 && cfg.eps < 1.0)) throw Error(ErrorKind::Config, "verify.eps must lie in (0,1)");
  if (cfg.tight_cells < 8) throw Error(ErrorKind::Config, "verify.tight_cells must be >= 8");
  if (!(cfg.rate_floor > 0.0)) throw Error(ErrorKind::Config, "verify.rate_floor must be > 0");
  return cfg;
}

/// Every setting as key-value text; feeding it back to run_config_from reproduces the config exactly.
inline KeyValues to_key_values(const RunConfig& cfg) {
  using detail::format_double;
  KeyValues kv;
  auto put = [&](std::string k, std::string v) { kv.emplace_back(std::move(k), std::move(v)); };
  put("grid.n_cells", std::to_string(cfg.n_cells));
  put("rates.k_f", format_double(cfg.rates.k_f));
  put("rates.k_r", format_double(cfg.rates.k_r));
  put("rates.k_c", format_double(cfg.rates.k_c));
  put("rates.gamma_form", cfg.gamma_form == GammaForm::Proof ? "proof" : "theorem_display");
  put("diffusion.d_e", format_double(cfg.diff.d_e));
  put("diffusion.d_s", format_double(cfg.diff.d_s));
  put("diffusion.d_c", format_double(cfg.diff.d_c));
  put("diffusion.d_p", format_double(cfg.diff.d_p));
  for (const auto& term : cfg.initial) put("initial." + std::to_string(term.index), term.to_text());
  put("stepper.dt", format_double(cfg.stepper.dt));
  put("stepper.t_end", format_double(cfg.stepper.t_end));
  put("stepper.record_every", std::to_string(cfg.stepper.record_every));
  put("stepper.reaction_bound", format_double(cfg.stepper.reaction_bound));
  put("stepper.scheme", cfg.stepper.scheme == DiffusionScheme::BackwardEuler ? "backward_euler" : "crank_nicolson");
  put("entropy.use_defaults", cfg.entropy_use_defaults ? "true" : "false");
  if (cfg.entropy_eps_s) put("entropy.eps_s", format_double(*cfg.entropy_eps_s));
  if (cfg.entropy_k) put("entropy.k", format_double(*cfg.entropy_k));
  put("entropy.variant", cfg.entropy_variant == ParamVariant::Primary ? "primary" : "alternative");
  put("geometry.C_LSI", format_double(cfg.geometry.C_LSI));
  put("geometry.C_P", format_double(cfg.geometry.C_P));
  put("geometry.C_CKP", format_double(cfg.geometry.C_CKP));
  put("outputs.directory", cfg.out_directory);
  std::string formats;
  if (cfg.write_csv) formats = "csv";
  if (cfg.write_json) formats += formats.empty() ? "json" : ",json";
  put("outputs.formats", formats);
  std::string times;
  for (double t : cfg.field_times) times += (times.empty() ? "" : ",") + format_double(t);
  put("outputs.field_times", times);
  put("run.seed", std::to_string(cfg.seed));
  put("verify.gamma_scale", format_double(cfg.gamma_scale));
  put("verify.eta", format_double(cfg.eta));
  put("verify.eps", format_double(cfg.eps));
  put("verify.audit_states", std::to_string(cfg.audit_states));
  put("verify.tight_restarts", std::to_string(cfg.tight_restarts));
  put("verify.tight_iterations", std::to_string(cfg.tight_iterations));
  put("verify.tight_cells", std::to_string(cfg.tight_cells));
  put("verify.rate_floor", format_double(cfg.rate_floor));
  if (!cfg.sweep_param.empty()) {
    put("sweep.param", cfg.sweep_param);
    std::string vals;
    for (const auto& v : cfg.sweep_values) vals += (vals.empty() ? "" : ",") + v;
    put("sweep.values", vals);
  }
  return kv;
}

inline std::string to_text(const KeyValues& kv) {
  std::string out;
  for (const auto& [k, v] : kv) out += k + " = " + v + "\n";
  return out;
}

/// Replaces (or appends) one key.
inline KeyValues with_override(KeyValues kv, const std::string& key, const std::string& value) {
  for (auto& [k, v] : kv)
    if (k == key) {
      v = value;
      return kv;
    }
  kv.emplace_back(key, value);
  return kv;
}

namespace detail {

/// Exact cell averages of height * (1 + cos(pi (x - center) / width)) / 2 on |x - center| < width.
inline Field project_cosine_bump(double center, double width, double height, const Grid1D& grid) {
  Field f(grid.n_cells());
  const double k = std::numbers::pi / width;
  auto antiderivative = [&](double x) { return 0.5 * height * ((x - center) + std::sin(k * (x - center)) / k); };
  for (std::size_t i = 0; i < grid.n_cells(); ++i) {
    const double lo = std::max(grid.left_edge(i), center - width);
    const double hi = std::min(grid.right_edge(i), center + width);
    if (hi > lo) f[i] = (antiderivative(hi) - antiderivative(lo)) / grid.h();
  }
  return f;
}

}  // namespace detail

/// Initial state on the grid: the sum of all configured terms per species.
inline SystemState build_initial_state(const RunConfig& cfg, const Grid1D& grid) {
  SystemState st = SystemState::zeros(grid);
  for (const auto& term : cfg.initial) {
    const auto& p = term.params;
    Field add;
    try {
      switch (term.kind) {
        case InitialKind::Constant: add = Field(grid.n_cells(), p[0]); break;
        case InitialKind::Indicator: add = project_indicator(p[0], p[1], p[2], grid); break;
        case InitialKind::CosineBump: add = detail::project_cosine_bump(p[0], p[1], p[2], grid); break;
      }
    } catch (const Error& e) {
      throw Error(ErrorKind::Config, "initial." + std::to_string(term.index) + ": " + e.detail());
    }
    st.field(term.species) += add;
  }
  return st;
}

/// Built-in configurations.
namespace presets {

inline std::vector<std::string> names() { return {"fig1", "full_benchmark", "degenerate_benchmark", "negative_control"}; }

/// Zero enzyme and complex diffusion, k_f = 100, enzyme and substrate as disjoint indicators.
inline std::string fig1() {
  return R"(grid.n_cells = 200
rates.k_f = 100
rates.k_r = 1
rates.k_c = 1
diffusion.d_e = 0
diffusion.d_s = 0.02
diffusion.d_c = 0
diffusion.d_p = 0.02
initial.0 = e indicator 0.4 0.6 0.2
initial.1 = s indicator 0.1 0.3 1.5
stepper.dt = 1e-4
stepper.t_end = 200
stepper.record_every = 1000
stepper.scheme = backward_euler
outputs.directory = out/fig1
outputs.field_times = 0,10,80,200
)";
}

inline std::string full_benchmark() {
  return R"(grid.n_cells = 100
rates.k_f = 1
rates.k_r = 1
rates.k_c = 1
diffusion.d_e = 1
diffusion.d_s = 1
diffusion.d_c = 1
diffusion.d_p = 1
initial.0 = e constant 0.3
initial.1 = e cosine_bump 0.3 0.2 0.5
initial.2 = c indicator 0.6 0.9 0.2
initial.3 = s cosine_bump 0.7 0.25 1
initial.4 = p constant 0.1
stepper.dt = 1e-3
stepper.t_end = 20
stepper.record_every = 20
outputs.directory = out/full_benchmark
outputs.field_times = 0,1,20
)";
}

inline std::string degenerate_benchmark() {
  return R"(grid.n_cells = 100
rates.k_f = 1
rates.k_r = 1
rates.k_c = 1
diffusion.d_e = 0
diffusion.d_s = 1
diffusion.d_c = 0
diffusion.d_p = 1
initial.0 = e constant 0.4
initial.1 = e cosine_bump 0.5 0.3 0.6
initial.2 = c constant 0.1
initial.3 = s indicator 0.1 0.4 1
initial.4 = p constant 0.05
stepper.dt = 1e-3
stepper.t_end = 40
stepper.record_every = 20
entropy.eps_s = 1
outputs.directory = out/degenerate_benchmark
outputs.field_times = 0,1,40
)";
}

/// Small enzyme diffusion and a tiny substrate budget; verify.gamma_scale = 2 makes verification fail.
inline std::string negative_control() {
  return R"(grid.n_cells = 64
rates.k_f = 1
rates.k_r = 1
rates.k_c = 1.5
diffusion.d_e = 0.003
diffusion.d_s = 1
diffusion.d_c = 1
diffusion.d_p = 1
initial.0 = e constant 1
initial.1 = s indicator 0 0.5 2e-5
stepper.dt = 1e-2
stepper.t_end = 5
stepper.record_every = 10
outputs.directory = out/negative_control
verify.gamma_scale = 2
verify.audit_states = 0
verify.tight_restarts = 8
verify.tight_iterations = 6000
)";
}

inline std::string text(const std::string& name) {
  if (name == "fig1") return fig1();
  if (name == "full_benchmark") return full_benchmark();
  if (name == "degenerate_benchmark") return degenerate_benchmark();
  if (name == "negative_control") return negative_control();
  throw Error(ErrorKind::Config, "unknown preset '" + name + "'");
}

inline RunConfig load(const std::string& name) { return run_config_from(parse_key_values(text(name))); }

}  // namespace presets

}  // namespace erd
