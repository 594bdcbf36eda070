#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "erd/cli.hpp"

namespace {

struct Options {
  std::string config;
  std::string preset;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::size_t workers = 1;
};

void add_common(CLI::App* sub, Options& o) {
  sub->add_option("--config", o.config, "key-value config file or run manifest");
  sub->add_option("--preset", o.preset, "built-in config: fig1, full_benchmark, degenerate_benchmark, negative_control");
  sub->add_option("--out", o.out, "output directory (overrides outputs.directory)");
  sub->add_option("--seed", o.seed, "seed for randomised audits (overrides run.seed)");
  sub->add_option("--workers", o.workers, "worker threads for sweep")->check(CLI::PositiveNumber);
}

erd::KeyValues load(const Options& o, const std::string& fallback_preset) {
  if (!o.config.empty() && !o.preset.empty()) throw erd::Error(erd::ErrorKind::Config, "use either --config or --preset");
  erd::KeyValues kv;
  if (!o.config.empty()) kv = erd::load_key_values(o.config);
  else if (!o.preset.empty()) kv = erd::parse_key_values(erd::presets::text(o.preset));
  else if (!fallback_preset.empty()) kv = erd::parse_key_values(erd::presets::text(fallback_preset));
  else throw erd::Error(erd::ErrorKind::Config, "--config or --preset is required");
  if (!o.out.empty()) kv = erd::with_override(kv, "outputs.directory", o.out);
  if (o.seed) kv = erd::with_override(kv, "run.seed", std::to_string(*o.seed));
  return kv;
}

}  // namespace

int main(int argc, char** argv) {
  using namespace erd::cli;
  CLI::App app{"Enzyme reaction-diffusion simulator and entropy-method verifier"};
  app.require_subcommand(1);
  Options o;
  auto* sim = app.add_subcommand("simulate", "integrate the system and write trajectory, fields and manifest");
  auto* rates = app.add_subcommand("rates", "entropy parameters, decay rate gamma, mu_opt and mode table as JSON");
  auto* ver = app.add_subcommand("verify", "simulate and run the verification battery");
  auto* fig = app.add_subcommand("fig1", "reproduce the k_f = 100 degenerate-diffusion experiment");
  auto* sweep = app.add_subcommand("sweep", "run one simulation per value of sweep.param");
  for (auto* s : {sim, rates, ver, fig, sweep}) add_common(s, o);
  CLI11_PARSE(app, argc, argv);

  try {
    if (*sweep) {
      const auto kv = load(o, "");
      const auto cfg = erd::run_config_from(kv);
      return run_sweep(kv, cfg.out_directory, o.workers, std::cout);
    }
    const auto kv = load(o, *fig ? "fig1" : "");
    const auto cfg = erd::run_config_from(kv);
    const std::filesystem::path out = cfg.out_directory;
    if (*sim) {
      const auto r = run_simulate(cfg, out);
      std::cout << "wrote " << out.string() << " (" << r.traj.snapshots.size() << " snapshots, "
                << r.traj.steps_taken << " steps)\n";
      return kOk;
    }
    if (*rates) {
      const auto report = rate_report(cfg);
      std::filesystem::create_directories(out);
      write_text(out / "rates.json", report.dump(2) + "\n");
      std::cout << report.dump(2) << "\n";
      return kOk;
    }
    if (*ver) return run_verify(cfg, out, std::cout);
    if (*fig) return run_fig1(cfg, out, std::cout);
  } catch (const erd::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.kind() == erd::ErrorKind::Config ? kConfigError : kRuntimeError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntimeError;
  }
  return kOk;
}
