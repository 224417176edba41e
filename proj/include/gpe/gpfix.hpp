#pragma once

// Fixed-point construction of quasi-periodic solutions
//   -Laplace u + V u + sigma |u|^2 u = lambda u,
//   u = A exp(i <t + j*, x>) (1 + u~(x)),
// through the map W -> V + sigma |psi_W~|^2 where psi_W~ is column j* of
// the spectral projector of H0(t) + W~ scaled by A.

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "gpe/linop.hpp"
#include "gpe/nonres.hpp"
#include "gpe/trigpoly.hpp"
#include "json.hpp"

namespace gpe {

struct GPEConfig {
  TrigPolynomial V;
  double sigma = 0.0;
  Complex A{1.0, 0.0};
  SolverSettings settings;
  SpectralSetup setup;
  int max_iters = 50;
  /// 0 selects 1e-12 * ||V||_* (1e-12 when V = 0).
  double fp_tol = 0.0;
  /// Frequency cutoff for |psi|^2; 0 selects 4 R0.
  double cutoff = 0.0;
  bool enforce_smallness = true;
  /// Full projector matrices (needed for the projector differences) or
  /// only column j* of each series term.
  bool full_matrices = true;

  double resolved_fp_tol() const;
  double resolved_cutoff() const;
  /// |sigma| |A|^2 against k^{-1-6 delta}.
  double smallness_bound() const;
  /// Throws std::invalid_argument on inconsistent parameters.
  void validate() const;
};

struct MapResult {
  TrigPolynomial W_next;
  double lambda_W = 0.0;
  TrigPolynomial psi;  ///< keyed by q, coefficient A E_{j*+q, j*}
  SpectralSeries series;
  double dropped_mass = 0.0;
};

struct FixedPointStep {
  int m = 0;
  double diff_norm = 0.0;  ///< ||W_m - W_{m-1}||_*
  double ratio = 0.0;      ///< diff_norm[m] / diff_norm[m-1]; NaN at m = 1
  double lambda_m = 0.0;   ///< eigenvalue for W~_{m-1}, the input of this step
  double proj_diff = 0.0;  ///< ||E(W~_{m-1}) - E(W~_{m-2})||_1; NaN at m = 1
  double dropped_mass = 0.0;
};

struct FixedPointReport {
  std::vector<FixedPointStep> steps;
  bool converged = false;
  TrigPolynomial W_final;
  double contraction_bound = 0.0;  ///< 2^6 |sigma| |A|^2 k^{1+5 delta}
  double fp_tol = 0.0;
  std::vector<std::string> warnings;
};

struct BoundCheck {
  double value = 0.0;
  double bound = 0.0;
  bool pass = false;
};

struct SolutionRecord {
  TrigPolynomial u_tilde;
  TrigPolynomial psi;
  double lambda = 0.0;
  double lambda_W = 0.0;
  /// lambda - p_{j*}^2 - sigma |A|^2 Re(Ejj) summed without forming lambda.
  double series_correction = 0.0;
  double p2 = 0.0;
  Complex Ejj{0.0, 0.0};
  /// |sum_q |E_{qj}|^2 - Ejj|, the rank-one identity used for lambda.
  double ejj_identity_deviation = 0.0;
  double residual_star = 0.0;
  double truncation_mass = 0.0;
  std::map<std::string, BoundCheck> bound_checks;
  SpectralSeries series;
};

struct ResidualReport {
  double total = 0.0;     ///< ||r||_* / |A| over all frequencies
  double in_basis = 0.0;  ///< part with j* + q in the basis
  double tail = 0.0;      ///< remainder; total = in_basis + tail
  /// tail plus the first-order effect of W coefficients beyond the cutoff.
  double truncation_mass = 0.0;
};

struct NewtonResult {
  TrigPolynomial psi;
  double lambda = 0.0;
  double distance = 0.0;
  int iterations = 0;
  double final_residual = 0.0;
};

class GPESolver {
 public:
  explicit GPESolver(GPEConfig cfg);

  const GPEConfig& config() const { return cfg_; }
  const PreparedModel& model() const { return model_; }

  /// One application of W -> V + sigma |psi_W~|^2.
  MapResult map_M(const TrigPolynomial& W) const;

  /// Iterates from W_0 = V + sigma |A|^2.
  FixedPointReport iterate() const;

  SolutionRecord assemble_solution(const FixedPointReport& report) const;

  ResidualReport residual(const SolutionRecord& sol) const;
  ResidualReport residual(const TrigPolynomial& psi, double lambda) const;

  /// Damped Gauss-Newton on the truncated coefficient equations with
  /// psi_{j*} pinned to the series value (fixes phase and amplitude).
  NewtonResult oracle_newton(const SolutionRecord& sol) const;

  /// Spectral series of H0(t) + W~ about the eigenvalue near |t + j*|^2.
  SpectralSeries series_for(const TrigPolynomial& w_tilde) const;

  /// lambda_W~(t') - |t' + j*|^2 with W~ fixed and the contour recentred
  /// at |t' + j*|^2.
  double correction_at(const TrigPolynomial& w_tilde, const Vec3& t) const;

  /// psi from the projector column: psi_q = A E_{j*+q, j*}.
  TrigPolynomial psi_from_column(const Vector& column) const;

 private:
  SeriesOptions series_options() const;

  GPEConfig cfg_;
  PreparedModel model_;
};

nlohmann::json to_json(const FixedPointReport& r);
nlohmann::json to_json(const SolutionRecord& s);

}  // namespace gpe
