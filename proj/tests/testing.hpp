#pragma once

// Shared helpers for the unit tests and the acceptance driver.

#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "gpe/gpfix.hpp"
#include "gpe/nonres.hpp"
#include "gpe/trigpoly.hpp"

namespace gpe::testing {

using Terms = std::vector<std::pair<Frequency, Complex>>;

/// Uniform double in [0, 1) with an explicit 53-bit conversion.
double uniform(std::mt19937_64& rng);

Vec3 random_direction(std::mt19937_64& rng);

/// Real, mean-free potential on {0 < |q|^2 <= max_norm2}; each conjugate
/// pair is present with probability 1/2 and the result is scaled to the
/// requested star norm.
TrigPolynomial random_potential(std::mt19937_64& rng, int max_norm2, double star);

/// Admissible setup near direction nu and a GPE configuration around it.
GPEConfig gpe_config(const TrigPolynomial& v, const Vec3& nu, double k, double sigma, Complex a,
                     const SolverSettings& s, bool full_matrices = false);

/// Fresh empty directory below the system temporary directory.
std::string temp_dir(const std::string& tag);

std::string read_file(const std::string& path);
void write_text(const std::string& path, const std::string& text);

/// Runs a shell command and returns its exit status.
int run_command(const std::string& cmd);

}  // namespace gpe::testing
