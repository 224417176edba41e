#pragma once

// Batch front end: a JSON run configuration, validated up front, drives
// one of three experiments and writes deterministic reports.

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

#include "gpe/isosurf.hpp"
#include "gpe/nonres.hpp"
#include "json.hpp"

namespace gpe {

/// Raised for anything wrong with the configuration or its inputs.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Command { Solve, Iso, Scan };

struct RunConfig {
  Command command = Command::Solve;
  std::string potential;  ///< resolved path
  double k = 0.0;
  double delta = 1.0 / 300.0;
  double sigma = 0.0;
  double A_modulus = 1.0;
  double A_phase = 0.0;
  std::optional<Vec3> nu;
  std::optional<Vec3> t;
  std::optional<Frequency> j;
  double j_max = 3.0;
  double R0 = 0.0;
  double coeff = 1.0;
  int nodes = 64;
  int r_max = 12;
  double fp_tol = 0.0;
  int max_iters = 50;
  double cutoff = 0.0;
  bool enforce_smallness = true;
  int attempts = 8;
  int samples = 500;
  int directions = 500;
  std::uint64_t seed = 0;
  double root_tol = 1e-11;
  std::string out = "out";
  unsigned workers = 1;
  bool timestamp = true;

  /// The resolved configuration as written into every output.
  nlohmann::json to_json() const;
  SolverSettings settings() const;
  void validate() const;
};

const char* command_name(Command c);

/// Parses and validates a configuration document. Relative potential
/// paths are resolved against `base_dir`. Unknown fields are rejected.
RunConfig parse_config(const nlohmann::json& doc, const std::string& base_dir);
RunConfig load_config(const std::string& path);

/// Exit statuses.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 1;
inline constexpr int kExitMath = 2;

int run_solve(const RunConfig& cfg);
int run_isoenergetic(const RunConfig& cfg);
int run_nonres_scan(const RunConfig& cfg);

/// Dispatches on cfg.command; converts exceptions into exit statuses and
/// writes diagnostics to standard error.
int run(const RunConfig& cfg);

}  // namespace gpe
