#pragma once

// Dual-lattice geometry: truncated plane-wave bases, momenta p_j(t) = t + j,
// the generator set Gamma(R0), the one-dimensional parts V_q of a potential,
// and the resonance index sets that define the block projectors P_q.
//
// Convention: frequencies and lattice indices live in Z^3, the cell is
// [0, 2 pi]^3 and p_j(t) = t + j with t in [0, 1)^3. Every inner product
// <p_j(0), p_q(0)> therefore reduces to the integer product <j, q>.

#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <stdexcept>
#include <vector>

#include "gpe/trigpoly.hpp"
#include "json.hpp"

namespace gpe {

using Vec3 = std::array<double, 3>;

inline double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
inline Vec3 to_vec(const Frequency& j) {
  return {static_cast<double>(j[0]), static_cast<double>(j[1]), static_cast<double>(j[2])};
}

/// Quasimomentum. Components are in [0, 1) when produced by split_k; the
/// assembly routines accept any real vector so a fixed index j can be
/// followed slightly across a cell face.
struct QuasiMomentum {
  Vec3 t{0.0, 0.0, 0.0};
  bool in_cell() const;
};

struct Momentum {
  Vec3 vector;
  double square;
};

Momentum momentum(const Frequency& j, const QuasiMomentum& t);

struct KSplit {
  Frequency j;
  QuasiMomentum t;
};

/// k = t + j with t in [0, 1)^3 (componentwise floor).
KSplit split_k(const Vec3& kvec);

class BasisTooLarge : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Plane-wave basis {center + d : |d| <= radius}, indices sorted
/// lexicographically. With center 0 the basis is closed under negation.
class LatticeBasis {
 public:
  static constexpr std::size_t kDefaultMaxSize = 20000;

  static LatticeBasis build(double radius, Frequency center = kZeroFrequency,
                            std::size_t max_size = kDefaultMaxSize);

  std::size_t size() const { return indices_.size(); }
  const Frequency& index(std::size_t ordinal) const { return indices_[ordinal]; }
  const std::vector<Frequency>& indices() const { return indices_; }
  std::optional<std::size_t> ordinal_of(const Frequency& j) const;
  double radius() const { return radius_; }
  const Frequency& center() const { return center_; }

 private:
  double radius_ = 0.0;
  Frequency center_{0, 0, 0};
  std::vector<Frequency> indices_;
  std::map<Frequency, std::size_t> ordinal_;
};

/// Minimal representatives of the scalar-multiple families of {q : 0 < |q| < R0}.
/// From each family {m q0} the representative with positive leading
/// nonzero component is returned; output is sorted lexicographically.
std::vector<Frequency> gamma_set(const TrigPolynomial& v, double r0);

class DecompositionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Splits V into the parts V_q carrying the frequencies n q, n != 0, |n q| < R0.
std::map<Frequency, TrigPolynomial> decompose_potential(const TrigPolynomial& v,
                                                        const std::vector<Frequency>& gamma,
                                                        double r0);

/// Threshold coeff * k^p used by the resonance sets.
double resonance_threshold(double k, double coeff, double power);

/// Ordinals j with |<j, q0>| < coeff * k^{1/5}.
std::vector<std::size_t> pi_set(const Frequency& q0, double k, const LatticeBasis& basis,
                                double coeff = 1.0);

/// Ordinals j with |<j,q>| < coeff k^{1/5} and |<j,q'>| < coeff k^{3/5} for
/// some pair q != q' of generators.
std::vector<std::size_t> resonance_T(const std::vector<Frequency>& gamma, double k,
                                     const LatticeBasis& basis, double coeff = 1.0);

struct ModelDecomposition {
  std::vector<Frequency> gamma;
  std::map<Frequency, TrigPolynomial> parts;
  std::map<Frequency, std::vector<std::size_t>> supports;
  std::vector<std::size_t> T_set;
  double k = 0.0;
  double R0 = 0.0;
  double pi_coefficient = 1.0;

  /// Generator whose support contains `ordinal`, if any.
  std::optional<Frequency> block_of(std::size_t ordinal) const;
  bool has_blocks() const;
};

ModelDecomposition build_model(const TrigPolynomial& v, const std::vector<Frequency>& gamma,
                               double k, double r0, const LatticeBasis& basis,
                               double coeff = 1.0);

nlohmann::json to_json(const ModelDecomposition& model);

}  // namespace gpe
