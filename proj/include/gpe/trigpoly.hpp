#pragma once

// Sparse trigonometric polynomials on Z^3 frequencies.
//
// A TrigPolynomial stores finitely many nonzero Fourier coefficients
// f(x) = sum_q f_q exp(i <q, x>), keyed by integer frequency in
// lexicographic order. All algebra stays in coefficient space.

#include <array>
#include <complex>
#include <cstddef>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

namespace gpe {

using Complex = std::complex<double>;
using Frequency = std::array<int, 3>;

inline Frequency operator+(const Frequency& a, const Frequency& b) {
  return {a[0] + b[0], a[1] + b[1], a[2] + b[2]};
}
inline Frequency operator-(const Frequency& a, const Frequency& b) {
  return {a[0] - b[0], a[1] - b[1], a[2] - b[2]};
}
inline Frequency operator-(const Frequency& a) { return {-a[0], -a[1], -a[2]}; }
inline long long norm2(const Frequency& q) {
  return 1LL * q[0] * q[0] + 1LL * q[1] * q[1] + 1LL * q[2] * q[2];
}
inline long long dot(const Frequency& a, const Frequency& b) {
  return 1LL * a[0] * b[0] + 1LL * a[1] * b[1] + 1LL * a[2] * b[2];
}
inline constexpr Frequency kZeroFrequency{0, 0, 0};

/// True when q is the lexicographically positive member of {q, -q}.
inline bool is_canonical_half(const Frequency& q) { return q > -q; }

class TrigPolynomial {
 public:
  using Map = std::map<Frequency, Complex>;

  TrigPolynomial() = default;
  /// Builds from (frequency, coefficient) pairs; repeated frequencies are
  /// summed and exact zeros are dropped.
  explicit TrigPolynomial(const std::vector<std::pair<Frequency, Complex>>& terms);
  explicit TrigPolynomial(Map coeffs);

  static TrigPolynomial constant(Complex c);

  const Map& terms() const { return coeffs_; }
  std::size_t size() const { return coeffs_.size(); }
  bool empty() const { return coeffs_.empty(); }
  Complex coeff(const Frequency& q) const;

  /// Max Euclidean |q| over the support; 0 for the zero polynomial.
  double support_radius() const;

  bool is_real_valued() const;
  bool is_mean_free() const { return coeffs_.find(kZeroFrequency) == coeffs_.end(); }

  /// Coefficient at q mapped to conj at -q, i.e. the pointwise complex
  /// conjugate of the function.
  TrigPolynomial conjugate_reflect() const;
  TrigPolynomial scaled(Complex s) const;

  /// Drops coefficients with modulus <= tol.
  TrigPolynomial truncate(double tol) const;

  /// Keeps coefficients with |q| <= radius. The star norm of the dropped
  /// part is written to `dropped_mass` when given.
  TrigPolynomial restrict_radius(double radius, double* dropped_mass = nullptr) const;

  friend TrigPolynomial operator+(const TrigPolynomial& a, const TrigPolynomial& b);
  friend TrigPolynomial operator-(const TrigPolynomial& a, const TrigPolynomial& b);
  friend bool operator==(const TrigPolynomial& a, const TrigPolynomial& b) {
    return a.coeffs_ == b.coeffs_;
  }

 private:
  Map coeffs_;
};

/// sum_q |f_q| with compensated summation.
double star_norm(const TrigPolynomial& f);

/// Coefficients of the pointwise product: (fg)_q = sum_p f_p g_{q-p}.
TrigPolynomial convolve(const TrigPolynomial& f, const TrigPolynomial& g);

/// Deletes the q = 0 coefficient.
TrigPolynomial remove_mean(const TrigPolynomial& w);

/// Coefficients of |psi|^2. The result is conjugate-symmetric bit for bit:
/// only the canonical half is summed and the other half is its conjugate.
TrigPolynomial mod_squared(const TrigPolynomial& psi);

// Serialization: [{"q":[a,b,c],"re":x,"im":y}, ...] sorted by q.

struct PotentialRequirements {
  bool real_valued = false;
  bool mean_free = false;
};

class PotentialFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

nlohmann::json to_json(const TrigPolynomial& f);
TrigPolynomial trigpoly_from_json(const nlohmann::json& j, PotentialRequirements req = {});
TrigPolynomial load_potential(const std::string& path, PotentialRequirements req = {});

}  // namespace gpe
