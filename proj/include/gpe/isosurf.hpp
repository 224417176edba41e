#pragma once

// Isoenergetic surfaces lambda(kappa nu, A) = lambda: the radius kappa per
// direction, its deviation h from k~ = sqrt(lambda - sigma |A|^2), the
// tangential gradient of h, and Monte-Carlo estimates of the admissible
// direction set.

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "gpe/gpfix.hpp"
#include "gpe/nonres.hpp"
#include "json.hpp"

namespace gpe {

struct IsoConfig {
  TrigPolynomial V;
  double sigma = 0.0;
  Complex A{1.0, 0.0};
  SolverSettings settings;
  int max_iters = 50;
  double fp_tol = 0.0;
  double cutoff = 0.0;
  bool enforce_smallness = true;
  int attempts = 8;         ///< find_admissible_t budget per direction
  double tol = 1e-11;       ///< on |lambda(kappa nu, A) - lambda|
  int root_iters = 60;
  std::uint64_t seed = 0;   ///< k-perturbation sequence offset
  int neighbours = 6;       ///< stencil size for grad_h
  unsigned workers = 1;

  void validate() const;
};

struct IsoSample {
  Vec3 nu{};
  double kappa = 0.0;
  double h = 0.0;
  std::array<double, 2> grad_h{0.0, 0.0};
  bool passed = false;
  double newton_residual = 0.0;
  int evaluations = 0;
  std::string failure;  ///< empty when passed
};

struct MeasureEstimate {
  double lambda = 0.0;
  int samples = 0;
  int passes = 0;
  double pass_fraction = 0.0;
  double surface_area_estimate = 0.0;
  double confidence_halfwidth = 0.0;
  double mean_kappa2 = 0.0;
  double max_abs_h = 0.0;
};

/// lambda(kappa nu, A) - lambda for fixed j*, basis and model blocks,
/// computed without forming the difference of two large numbers.
double iso_function(double kappa, double lambda, const Vec3& nu, const SpectralSetup& base,
                    const IsoConfig& cfg);

/// Safeguarded Newton with f'(kappa) ~ 2 kappa on I = [k - k^{-2-2 delta},
/// k + k^{-2-2 delta}], k = sqrt(lambda). Throws NoAdmissiblePoint,
/// NoRootInInterval or NotConverged.
IsoSample solve_kappa(double lambda, const Vec3& nu, const IsoConfig& cfg);

/// solve_kappa per direction; failures become holes, then grad_h from the
/// nearest passing neighbours. Output order equals input order.
std::vector<IsoSample> trace_surface(double lambda, const std::vector<Vec3>& directions,
                                     const IsoConfig& cfg);

/// Spherical Fibonacci lattice of n unit vectors.
std::vector<Vec3> fibonacci_directions(std::size_t n);

/// n directions uniform on the sphere from a 64-bit Mersenne twister.
std::vector<Vec3> random_directions(std::size_t n, std::uint64_t seed);

/// Least-squares tangential gradient of h at sample i from its nearest
/// passing neighbours; NaN when fewer than three are available.
std::array<double, 2> tangential_gradient(const std::vector<IsoSample>& samples, std::size_t i,
                                          int neighbours);

/// Orthonormal tangent pair at nu, fixed by a deterministic rule.
std::array<Vec3, 2> tangent_basis(const Vec3& nu);

MeasureEstimate estimate_measure(double lambda, int samples, std::uint64_t seed, const IsoConfig& cfg);

nlohmann::json to_json(const MeasureEstimate& m);

}  // namespace gpe
