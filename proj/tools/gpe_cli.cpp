// Command-line front end: gpe {solve|iso|scan} --config FILE [options].
//
// Precedence: command-line flags override fields of the configuration
// file, which override built-in defaults. The subcommand selects the
// experiment regardless of the file's "command" field.

#include <cstdlib>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "gpe/parallel.hpp"
#include "gpe/runner.hpp"

namespace {

struct Flags {
  std::string config;
  std::string out;
  long long seed = -1;
  int workers = 0;
  bool no_timestamp = false;
};

void add_flags(CLI::App* sub, Flags& f) {
  sub->add_option("--config", f.config, "JSON run configuration")->required();
  sub->add_option("--out", f.out, "output directory");
  sub->add_option("--seed", f.seed, "random seed")->check(CLI::NonNegativeNumber);
  sub->add_option("--workers", f.workers, "worker threads (default: GPE_WORKERS or all cores)")
      ->check(CLI::PositiveNumber);
  sub->add_flag("--no-timestamp", f.no_timestamp, "omit the generation time from outputs");
}

unsigned env_workers() {
  if (const char* env = std::getenv("GPE_WORKERS")) {
    try {
      const int w = std::stoi(env);
      if (w >= 1) return static_cast<unsigned>(w);
    } catch (const std::exception&) {
    }
    std::cerr << "ignoring invalid GPE_WORKERS value '" << env << "'\n";
  }
  return gpe::default_workers();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spectral solver for quasi-periodic Gross-Pitaevskii solutions"};
  app.require_subcommand(1);
  Flags flags;
  auto* solve = app.add_subcommand("solve", "fixed-point solve at one quasimomentum");
  auto* iso = app.add_subcommand("iso", "isoenergetic surface and measure estimate");
  auto* scan = app.add_subcommand("scan", "non-resonance scan over a direction grid");
  for (auto* sub : {solve, iso, scan}) add_flags(sub, flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : gpe::kExitConfig;
  }

  gpe::RunConfig cfg;
  try {
    cfg = gpe::load_config(flags.config);
  } catch (const gpe::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return gpe::kExitConfig;
  }
  if (solve->parsed()) cfg.command = gpe::Command::Solve;
  if (iso->parsed()) cfg.command = gpe::Command::Iso;
  if (scan->parsed()) cfg.command = gpe::Command::Scan;
  if (!flags.out.empty()) cfg.out = flags.out;
  if (flags.seed >= 0) cfg.seed = static_cast<std::uint64_t>(flags.seed);
  cfg.workers = flags.workers > 0 ? static_cast<unsigned>(flags.workers) : env_workers();
  if (flags.no_timestamp) cfg.timestamp = false;
  return gpe::run(cfg);
}
