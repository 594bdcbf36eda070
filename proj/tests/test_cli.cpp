#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include "erd/cli.hpp"

using namespace erd;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("erd_test_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string first_line(const std::string& s) { return s.substr(0, s.find('\n')); }

const char* kSmall = R"(# small FULL run
grid.n_cells = 20
initial.0 = e constant 1
initial.1 = s indicator 0 0.5 0.8
stepper.dt = 0.01
stepper.t_end = 0.5
stepper.record_every = 5
outputs.field_times = 0, 0.5
)";

std::string config_error(const std::string& text) {
  try {
    run_config_from(parse_key_values(text));
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Config);
    return e.what();
  }
  return "";
}

int run_binary(const std::string& args) {
  const int status = std::system((std::string(ERD_BINARY) + " " + args + " >/dev/null 2>&1").c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(Config, ParsesCommentsAndRejectsDuplicates) {
  const auto kv = parse_key_values("a = 1 # tail\n\n  # only comment\nb=two words\n");
  ASSERT_EQ(kv.size(), 2u);
  EXPECT_EQ(kv[0].second, "1");
  EXPECT_EQ(kv[1].second, "two words");
  EXPECT_THROW(parse_key_values("a = 1\na = 2\n"), Error);
  EXPECT_THROW(parse_key_values("no equals sign\n"), Error);
}

TEST(Config, ErrorsNameTheKey) {
  EXPECT_NE(config_error("rates.k_f = -1\n").find("rates.k_f"), std::string::npos);
  EXPECT_NE(config_error("rates.k_f = nan\n").find("rates.k_f"), std::string::npos);
  EXPECT_NE(config_error("grid.n_cells = 0\n").find("grid.n_cells"), std::string::npos);
  EXPECT_NE(config_error("rates.colour = red\n").find("rates.colour: unknown key"), std::string::npos);
  EXPECT_NE(config_error("initial.0 = q constant 1\n").find("initial.0"), std::string::npos);
  EXPECT_NE(config_error("initial.0 = e indicator 0.6 0.4 1\n").find("initial.0"), std::string::npos);
  EXPECT_NE(config_error("diffusion.d_e = 0\n").find("diffusion"), std::string::npos);
  EXPECT_NE(config_error("stepper.scheme = leapfrog\n").find("stepper.scheme"), std::string::npos);
}

TEST(Config, KeyValueRoundTrip) {
  for (const auto& name : presets::names()) {
    const auto cfg = presets::load(name);
    const auto kv = to_key_values(cfg);
    EXPECT_EQ(to_key_values(run_config_from(kv)), kv) << name;
  }
}

TEST(Config, OverrideReplacesOrAppends) {
  auto kv = parse_key_values(kSmall);
  kv = with_override(kv, "rates.k_f", "3");
  kv = with_override(kv, "grid.n_cells", "40");
  const auto cfg = run_config_from(kv);
  EXPECT_EQ(cfg.rates.k_f, 3.0);
  EXPECT_EQ(cfg.n_cells, 40u);
}

TEST(Config, CosineBumpCellAveragesAreExact) {
  const Grid1D g(37);
  const double c = 0.41, w = 0.23, H = 1.7;
  const Field f = detail::project_cosine_bump(c, w, H, g);
  const int sub = 4000;
  for (std::size_t i = 0; i < g.n_cells(); ++i) {
    double q = 0.0;
    for (int k = 0; k < sub; ++k) {
      const double x = g.left_edge(i) + (k + 0.5) * g.h() / sub;
      if (std::abs(x - c) < w) q += 0.5 * H * (1.0 + std::cos(std::numbers::pi * (x - c) / w));
    }
    EXPECT_NEAR(f[i], q / sub, 1e-7) << "cell " << i;
  }
  EXPECT_NEAR(integrate(f, g), H * w, 1e-14);
}

TEST(Config, BuildsPresetInitialData) {
  const auto cfg = presets::load("full_benchmark");
  const Grid1D g(cfg.n_cells);
  const auto st = build_initial_state(cfg, g);
  const auto m = conserved_masses(st, g);
  EXPECT_NEAR(m.M0, 0.3 + 0.5 * 0.2 + 0.2 * 0.3, 1e-14);
  EXPECT_NEAR(m.M1, 0.25 + 0.2 * 0.3 + 0.1, 1e-14);
}

TEST(Outputs, NamesAndHeaders) {
  EXPECT_EQ(cli::fields_name(10.0), "fields_t10.csv");
  EXPECT_EQ(cli::fields_name(0.5), "fields_t0.5.csv");
  const fs::path out = scratch("headers");
  const auto r = cli::run_simulate(run_config_from(parse_key_values(kSmall)), out);
  const auto traj = slurp(out / "trajectory.csv");
  EXPECT_EQ(first_line(traj), "t,M0,M1,s_linf,c_linf,e_dev_linf,p_dev_linf,E,H,M,int_dM,int_d");
  EXPECT_EQ(std::count(traj.begin(), traj.end(), '\n'), static_cast<long>(r.traj.snapshots.size()) + 1);
  const auto f0 = slurp(out / "fields_t0.csv");
  EXPECT_EQ(first_line(f0), "x,e,s,c,p");
  EXPECT_TRUE(fs::exists(out / "fields_t0.5.csv"));
  const auto m = nlohmann::json::parse(slurp(out / "manifest.json"));
  EXPECT_EQ(m["schema"], "erd-run-manifest/1");
  EXPECT_EQ(m["regime"], "FULL");
  EXPECT_EQ(m["gamma"]["status"], "OK");
  // 17 significant digits survive a text round trip
  std::istringstream rows(traj);
  std::string line;
  std::getline(rows, line);
  std::getline(rows, line);
  std::getline(rows, line);
  const double t = std::stod(line.substr(0, line.find(',')));
  EXPECT_EQ(t, r.traj.snapshots[1].t);
}

TEST(Outputs, ZeroDataStaysZero) {
  const fs::path out = scratch("zero");
  const auto r = cli::run_simulate(run_config_from(parse_key_values(
                                       "grid.n_cells = 8\nstepper.dt = 0.1\nstepper.t_end = 1\n")),
                                   out);
  for (const auto& st : r.traj.snapshots)
    for (Species sp : {Species::E, Species::S, Species::C, Species::P})
      for (double v : st.field(sp)) EXPECT_EQ(v, 0.0);
  EXPECT_TRUE(fs::exists(out / "trajectory.csv"));
  EXPECT_FALSE(r.setup.gamma);
}

TEST(Outputs, ManifestReproducesRunBitForBit) {
  const fs::path a = scratch("manifest_a"), b = scratch("manifest_b");
  cli::run_simulate(presets::load("degenerate_benchmark"), a);
  const auto kv = load_key_values((a / "manifest.json").string());
  cli::run_simulate(run_config_from(kv), b);
  EXPECT_EQ(slurp(a / "trajectory.csv"), slurp(b / "trajectory.csv"));
  EXPECT_EQ(slurp(a / "fields_t40.csv"), slurp(b / "fields_t40.csv"));
}

TEST(RateReport, DegenerateFig1HasNoGamma) {
  const auto j = cli::rate_report(presets::load("fig1"));
  EXPECT_EQ(j["regime"], "DEGENERATE");
  EXPECT_EQ(j["gamma"]["status"], "NOT_APPLICABLE");
  EXPECT_FALSE(j.contains("mu_opt"));
  EXPECT_EQ(j["predictions"]["status"], "NOT_APPLICABLE");
  ASSERT_EQ(j["modes"].size(), 10u);
  EXPECT_DOUBLE_EQ(j["modes"][1]["substrate"].get<double>(), -0.02 * std::numbers::pi * std::numbers::pi);
}

TEST(RateReport, FullBenchmark) {
  const auto j = cli::rate_report(presets::load("full_benchmark"));
  EXPECT_EQ(j["regime"], "FULL");
  EXPECT_EQ(j["gamma"]["status"], "OK");
  EXPECT_GT(j["gamma"]["value"].get<double>(), 0.0);
  // slowest eigenvalue of [[-a, 1], [a, -2]] with a = k_f M0
  const double a = 0.46;
  const double mu = (a + 2.0 - std::sqrt((a - 2.0) * (a - 2.0) + 4.0 * a)) / 2.0;
  EXPECT_NEAR(j["mu_opt"].get<double>(), mu, 1e-14);
  const auto& table = j["predictions"]["table"];
  ASSERT_EQ(table.size(), 7u);
  for (std::size_t i = 1; i < table.size(); ++i) {
    EXPECT_LT(table[i]["rate_s"].get<double>(), table[i - 1]["rate_s"].get<double>());
    EXPECT_EQ(table[i]["rate_p"].is_null(), table[i]["eta"].get<double>() < 3.0);
  }
  for (const auto& m : j["modes"]) EXPECT_LT(m["tau_max"].get<double>(), 0.0);
}

TEST(Sweep, WritesSummaryPerValue) {
  const fs::path out = scratch("sweep");
  auto kv = parse_key_values(kSmall);
  kv = with_override(kv, "sweep.param", "diffusion.d_s");
  kv = with_override(kv, "sweep.values", "0.5, 1, 2");
  std::ostringstream log;
  EXPECT_EQ(cli::run_sweep(kv, out, 2, log), cli::kOk);
  const auto csv = slurp(out / "sweep_summary.csv");
  EXPECT_EQ(first_line(csv), "index,value,regime,gamma,mu_opt,t_end,s_linf,c_linf,e_dev_linf,E");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 4);
  for (int i = 0; i < 3; ++i) EXPECT_TRUE(fs::exists(out / ("run_" + std::to_string(i)) / "manifest.json"));

  kv = with_override(kv, "sweep.values", "0.5, -1");
  try {
    cli::run_sweep(kv, out, 1, log);
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("sweep.values"), std::string::npos);
  }
}

TEST(Binary, ExitCodes) {
  const fs::path dir = scratch("binary");
  fs::create_directories(dir);
  std::ofstream(dir / "bad.cfg") << "rates.k_f = -1\n";
  std::ofstream(dir / "good.cfg") << kSmall;
  EXPECT_EQ(run_binary("simulate --config " + (dir / "bad.cfg").string()), 2);
  EXPECT_EQ(run_binary("simulate --config " + (dir / "missing.cfg").string()), 2);
  EXPECT_EQ(run_binary("simulate --config " + (dir / "good.cfg").string() + " --out " + (dir / "o").string()), 0);
  EXPECT_EQ(run_binary("rates --config " + (dir / "good.cfg").string() + " --out " + (dir / "r").string()), 0);
  EXPECT_TRUE(fs::exists(dir / "r" / "rates.json"));
  auto long_run = with_override(parse_key_values(kSmall), "stepper.t_end", "15");
  long_run = with_override(long_run, "outputs.field_times", "0, 15");
  std::ofstream(dir / "long.cfg") << to_text(with_override(long_run, "verify.audit_states", "20"));
  EXPECT_EQ(run_binary("verify --config " + (dir / "long.cfg").string() + " --out " + (dir / "v").string()), 0);
  EXPECT_TRUE(fs::exists(dir / "v" / "checks.json"));
}
