#pragma once

// Finite plane-wave matrices of H(t) = H0(t) + V and of the model split
// H = H_hat + W_hat, the contour-integral perturbation series for the
// eigenvalue and spectral projector enclosed by C0, and a dense
// eigensolver oracle.

#include <Eigen/Dense>
#include <cstddef>
#include <functional>
#include <vector>

#include "gpe/errors.hpp"
#include "gpe/lattice.hpp"
#include "gpe/trigpoly.hpp"
#include "json.hpp"

namespace gpe {

using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;

/// Entry (m, j) = |t + m|^2 [m = j] + v_{m - j}.
Matrix assemble_full(const TrigPolynomial& v, const QuasiMomentum& t, const LatticeBasis& basis);

/// Diagonal free operator H0(t).
Matrix assemble_free(const QuasiMomentum& t, const LatticeBasis& basis);

struct ModelOperators {
  Matrix H_hat;  ///< H0 + sum_q P_q V_q P_q
  Matrix W_hat;  ///< V - sum_q P_q V_q P_q
};

ModelOperators assemble_model(const TrigPolynomial& v, const QuasiMomentum& t,
                              const ModelDecomposition& model, const LatticeBasis& basis);

/// W_hat for a potential W~ that differs from the one the model was cut
/// from: entry (m, j) = w~_{m-j} minus the block entry of sum_q P_q V_q P_q.
Matrix assemble_perturbation(const TrigPolynomial& w_tilde, const ModelDecomposition& model,
                             const LatticeBasis& basis);

/// max over columns of the column sum of moduli.
double norm_one(const Matrix& m);
double norm_one(const Vector& v);

/// Circle of radius k^{-1-delta} about k^2, discretised by `nodes`
/// equispaced trapezoid points.
struct ContourSpec {
  double center = 0.0;
  double radius = 0.0;
  int nodes = 64;

  static ContourSpec around(double k, double delta, int nodes = 64);
  void validate() const;
  /// Spectral window epsilon(k, delta) = [center - radius, center + radius].
  double lo() const { return center - radius; }
  double hi() const { return center + radius; }
};

/// H_hat together with its Hermitian eigendecomposition. A diagonal H_hat
/// (no resonant blocks) is kept in the plane-wave basis without rotation.
class PreparedModel {
 public:
  explicit PreparedModel(Matrix h_hat);

  const Matrix& h_hat() const { return h_hat_; }
  const Eigen::VectorXd& eigenvalues() const { return eigenvalues_; }
  /// Eigenvectors as columns; empty when diagonal.
  const Matrix& eigenvectors() const { return eigenvectors_; }
  bool diagonal() const { return diagonal_; }
  std::size_t size() const { return static_cast<std::size_t>(h_hat_.rows()); }

  /// W in the eigenbasis of H_hat.
  Matrix to_eigenbasis(const Matrix& w) const;
  Matrix from_eigenbasis(const Matrix& m) const;
  Vector vector_from_eigenbasis(const Vector& v) const;
  Vector vector_to_eigenbasis(const Vector& v) const;

 private:
  Matrix h_hat_;
  Eigen::VectorXd eigenvalues_;
  Matrix eigenvectors_;
  bool diagonal_ = true;
};

struct SeriesOptions {
  bool full_matrices = true;  ///< otherwise only column j* of each G_r
  double guard_band = 0.1;    ///< fraction of the contour radius
  double stop_norm = 1e-14;
  /// Also evaluate g_r from the literal trace integrand (full mode only).
  bool literal_trace = false;
};

struct SpectralSeries {
  std::size_t j_star = 0;
  /// g_r for r = 1..r_used; index 0 holds r = 1.
  std::vector<Complex> g_terms;
  /// G_r (full mode); same indexing.
  std::vector<Matrix> G_terms;
  /// Column j* of G_r.
  std::vector<Vector> G_columns;
  std::vector<double> term_norms;
  /// Unperturbed eigenvalue enclosed by C0 (p_{j*}^2 when H_hat is diagonal there).
  double lambda0 = 0.0;
  /// sum_{r >= 1} Re g_r, accumulated directly.
  double correction = 0.0;
  double lambda = 0.0;
  Matrix E;         ///< full projector (full mode)
  Vector E_column;  ///< column j* of the projector
  int r_max = 0;
  int r_used = 0;
  bool full = true;
  bool stopped_early = false;
  double max_imag_g = 0.0;
  /// max_r |g_r(trace form) - g_r(pole-extracted form)|, when computed.
  double literal_trace_deviation = 0.0;
  std::vector<Complex> g_terms_literal;
};

/// Contour-quadrature evaluation of the perturbation series about the
/// eigenvalue of H_hat inside C0.
///
/// g_r = (-1)^r / (2 pi i r) Tr oint ((H_hat - z)^{-1} W)^r dz and
/// G_r = (-1)^{r+1} / (2 pi i) oint ((H_hat - z)^{-1} W)^r (H_hat - z)^{-1} dz.
/// The trace integrand is evaluated through det(I + eps R W) with the
/// enclosed rank-one pole factored out; the part holomorphic inside C0
/// has zero integral and is dropped.
SpectralSeries series_terms(const PreparedModel& model, const Matrix& w_hat,
                            const ContourSpec& contour, std::size_t j_star, int r_max,
                            const SeriesOptions& options = {});

struct OracleEigenpair {
  double lambda = 0.0;
  Matrix E;
  Vector eigenvector;
};

/// Dense Hermitian eigendecomposition; the unique eigenvalue in [lo, hi].
OracleEigenpair oracle_eigenpair(const Matrix& h, double lo, double hi);

struct ContourNorms {
  double resolvent_half_norm = 0.0;  ///< max_z ||(H_hat - z)^{-1/2}||_1
  double normA = 0.0;                ///< max_z ||B0(z)||_1
  double normA3 = 0.0;               ///< max_z ||B0(z)^3||_1
};

/// Norms of the sandwiched operator B0(z) = (H_hat - z)^{-1/2} W (H_hat - z)^{-1/2}
/// over `nodes` equispaced points of C0 (principal square root per eigenvalue).
ContourNorms contour_norms(const PreparedModel& model, const Matrix& w_hat,
                           const ContourSpec& contour, int nodes);

struct GradientCheck {
  Vec3 grad{};
  double deviation = 0.0;
};

/// Central differences of lambda(t). `correction` returns lambda(t) - p_{j*}(t)^2;
/// the quadratic part is differentiated exactly, which is what the central
/// stencil yields for it, without the cancellation in lambda ~ k^2.
GradientCheck gradient_check(const std::function<double(const Vec3&)>& correction,
                             const QuasiMomentum& t, const Frequency& j_star, double step);

nlohmann::json to_json(const SpectralSeries& s);

}  // namespace gpe
