#pragma once

// Verifiable stand-in for membership of a quasimomentum in the
// non-resonant set: a unique eigenvalue in the spectral window for both
// H0 and H_hat, clearance of the contour, and the resolvent norm bounds
// evaluated on the finite matrices.

#include <cstdint>
#include <optional>

#include "gpe/lattice.hpp"
#include "gpe/linop.hpp"
#include "gpe/trigpoly.hpp"
#include "json.hpp"

namespace gpe {

/// Numerical settings shared by every stage that builds a finite problem.
struct SolverSettings {
  double delta = 1.0 / 300.0;
  double j_max = 3.0;  ///< basis radius about j*
  double R0 = 0.0;     ///< 0 selects support radius + 0.5 (at least 1.5)
  double coeff = 1.0;  ///< resonance threshold coefficient
  int nodes = 64;
  int r_max = 12;
  double guard_band = 0.1;
  double norm_constant = 10.0;
  int check_nodes = 16;
  std::size_t max_basis = LatticeBasis::kDefaultMaxSize;

  void validate() const;
  double resolved_R0(const TrigPolynomial& v) const;
};

/// Everything fixed by (V, kvec): index split, basis about j*, the model
/// blocks and the assembled operators.
struct SpectralSetup {
  double k = 0.0;
  Vec3 kvec{};
  KSplit split;
  LatticeBasis basis;
  ModelDecomposition model;
  ModelOperators ops;
  std::size_t j_ordinal = 0;
  ContourSpec contour;
};

SpectralSetup build_setup(const TrigPolynomial& v, const Vec3& kvec, const SolverSettings& s);

/// Same basis, j* and model blocks, moved to a nearby momentum: t is
/// recomputed as kvec - j* (it may leave the unit cell) and the contour is
/// recentred at |kvec|^2.
SpectralSetup retarget(const SpectralSetup& base, const TrigPolynomial& v, const Vec3& kvec,
                       const SolverSettings& s);

struct NonResReport {
  double k = 0.0;
  double delta = 0.0;
  double window_lo = 0.0;
  double window_hi = 0.0;
  bool unique_unperturbed = false;
  /// Distance of the nearest competing |t + j|^2 to the window (negative inside).
  double unperturbed_margin = 0.0;
  bool unique_model = false;
  double model_margin = 0.0;
  /// The enclosed eigenvector of H_hat is carried by j*.
  bool model_tracks_jstar = false;
  double contour_clearance = 0.0;  ///< min | |d - k^2| - r | / r over spec(H_hat)
  bool clearance_ok = false;
  double guard_band = 0.0;
  double normA = 0.0;
  double normA_bound = 0.0;
  double normA3 = 0.0;
  double normA3_bound = 0.0;
  double resolvent_half_norm = 0.0;
  double resolvent_half_bound = 0.0;
  bool norms_ok = false;
  bool passed = false;

  /// Smallest of the spectral margins in units of the contour radius and
  /// the clearance excess over the guard band; negative when a spectral
  /// check fails.
  double margin_min() const;
};

NonResReport check_nonresonance(const PreparedModel& model, const Matrix& w_hat,
                                const Eigen::VectorXd& free_diagonal, const ContourSpec& contour,
                                std::size_t j_star, double k, const SolverSettings& s);

/// Builds H_hat from the setup and runs the checks.
NonResReport check_nonresonance(const SpectralSetup& setup, const SolverSettings& s);

struct AdmissiblePoint {
  SpectralSetup setup;
  NonResReport report;
  int attempt = 0;  ///< 0 for the unperturbed k
};

/// Tries k nu, then k' nu for k' = k + k^{-2-2 delta} (2 x_i - 1) with the
/// golden-ratio sequence x_i = frac(x_0 + i phi), x_0 derived from `seed`.
AdmissiblePoint find_admissible_t(const Vec3& nu, double k, const TrigPolynomial& v,
                                  const SolverSettings& s, int attempts, std::uint64_t seed = 0);

nlohmann::json to_json(const NonResReport& r);

}  // namespace gpe
