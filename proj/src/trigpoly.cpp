#include "gpe/trigpoly.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace gpe {

namespace {

void insert_or_add(TrigPolynomial::Map& m, const Frequency& q, Complex c) {
  auto [it, inserted] = m.emplace(q, c);
  if (!inserted) it->second += c;
}

void drop_zeros(TrigPolynomial::Map& m) {
  for (auto it = m.begin(); it != m.end();) {
    if (it->second == Complex(0.0, 0.0))
      it = m.erase(it);
    else
      ++it;
  }
}

}  // namespace

TrigPolynomial::TrigPolynomial(const std::vector<std::pair<Frequency, Complex>>& terms) {
  for (const auto& [q, c] : terms) insert_or_add(coeffs_, q, c);
  drop_zeros(coeffs_);
}

TrigPolynomial::TrigPolynomial(Map coeffs) : coeffs_(std::move(coeffs)) { drop_zeros(coeffs_); }

TrigPolynomial TrigPolynomial::constant(Complex c) {
  Map m;
  m.emplace(kZeroFrequency, c);
  return TrigPolynomial(std::move(m));
}

Complex TrigPolynomial::coeff(const Frequency& q) const {
  auto it = coeffs_.find(q);
  return it == coeffs_.end() ? Complex(0.0, 0.0) : it->second;
}

double TrigPolynomial::support_radius() const {
  long long best = 0;
  for (const auto& [q, c] : coeffs_) best = std::max(best, norm2(q));
  return std::sqrt(static_cast<double>(best));
}

bool TrigPolynomial::is_real_valued() const {
  for (const auto& [q, c] : coeffs_) {
    if (coeff(-q) != std::conj(c)) return false;
  }
  return true;
}

TrigPolynomial TrigPolynomial::conjugate_reflect() const {
  Map m;
  for (const auto& [q, c] : coeffs_) m.emplace(-q, std::conj(c));
  return TrigPolynomial(std::move(m));
}

TrigPolynomial TrigPolynomial::scaled(Complex s) const {
  Map m;
  for (const auto& [q, c] : coeffs_) m.emplace(q, s * c);
  return TrigPolynomial(std::move(m));
}

TrigPolynomial TrigPolynomial::truncate(double tol) const {
  Map m;
  for (const auto& [q, c] : coeffs_) {
    if (std::abs(c) > tol) m.emplace(q, c);
  }
  return TrigPolynomial(std::move(m));
}

TrigPolynomial TrigPolynomial::restrict_radius(double radius, double* dropped_mass) const {
  Map kept;
  Map dropped;
  const double r2 = radius * radius;
  for (const auto& [q, c] : coeffs_) {
    if (static_cast<double>(norm2(q)) <= r2)
      kept.emplace(q, c);
    else
      dropped.emplace(q, c);
  }
  if (dropped_mass) *dropped_mass = star_norm(TrigPolynomial(std::move(dropped)));
  return TrigPolynomial(std::move(kept));
}

TrigPolynomial operator+(const TrigPolynomial& a, const TrigPolynomial& b) {
  TrigPolynomial::Map m = a.coeffs_;
  for (const auto& [q, c] : b.coeffs_) insert_or_add(m, q, c);
  return TrigPolynomial(std::move(m));
}

TrigPolynomial operator-(const TrigPolynomial& a, const TrigPolynomial& b) {
  TrigPolynomial::Map m = a.coeffs_;
  for (const auto& [q, c] : b.coeffs_) insert_or_add(m, q, -c);
  return TrigPolynomial(std::move(m));
}

double star_norm(const TrigPolynomial& f) {
  double sum = 0.0;
  double comp = 0.0;
  for (const auto& [q, c] : f.terms()) {
    const double y = std::abs(c) - comp;
    const double t = sum + y;
    comp = (t - sum) - y;
    sum = t;
  }
  return sum;
}

TrigPolynomial convolve(const TrigPolynomial& f, const TrigPolynomial& g) {
  TrigPolynomial::Map m;
  for (const auto& [p, a] : f.terms()) {
    for (const auto& [s, b] : g.terms()) insert_or_add(m, p + s, a * b);
  }
  return TrigPolynomial(std::move(m));
}

TrigPolynomial remove_mean(const TrigPolynomial& w) {
  TrigPolynomial::Map m = w.terms();
  m.erase(kZeroFrequency);
  return TrigPolynomial(std::move(m));
}

TrigPolynomial mod_squared(const TrigPolynomial& psi) {
  // (|psi|^2)_q = sum_p psi_{p+q} conj(psi_p), accumulated in a fixed order.
  TrigPolynomial::Map half;
  double zero_coeff = 0.0;
  for (const auto& [p, a] : psi.terms()) {
    zero_coeff += std::norm(a);
    for (const auto& [s, b] : psi.terms()) {
      const Frequency q = s - p;
      if (is_canonical_half(q)) insert_or_add(half, q, b * std::conj(a));
    }
  }
  TrigPolynomial::Map m;
  if (zero_coeff != 0.0) m.emplace(kZeroFrequency, Complex(zero_coeff, 0.0));
  for (const auto& [q, c] : half) {
    if (c == Complex(0.0, 0.0)) continue;
    m.emplace(q, c);
    m.emplace(-q, std::conj(c));
  }
  return TrigPolynomial(std::move(m));
}

nlohmann::json to_json(const TrigPolynomial& f) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& [q, c] : f.terms()) {
    arr.push_back({{"q", {q[0], q[1], q[2]}}, {"re", c.real()}, {"im", c.imag()}});
  }
  return arr;
}

TrigPolynomial trigpoly_from_json(const nlohmann::json& j, PotentialRequirements req) {
  if (!j.is_array()) throw PotentialFormatError("potential must be a JSON array of records");
  std::vector<std::pair<Frequency, Complex>> terms;
  std::map<Frequency, int> seen;
  for (const auto& rec : j) {
    if (!rec.is_object()) throw PotentialFormatError("potential record must be an object");
    for (const auto& [key, val] : rec.items()) {
      if (key != "q" && key != "re" && key != "im")
        throw PotentialFormatError("unknown field in potential record: " + key);
    }
    if (!rec.contains("q") || !rec["q"].is_array() || rec["q"].size() != 3)
      throw PotentialFormatError("record field q must be an array of three integers");
    Frequency q{};
    for (int a = 0; a < 3; ++a) {
      if (!rec["q"][a].is_number_integer())
        throw PotentialFormatError("record field q must be an array of three integers");
      q[a] = rec["q"][a].get<int>();
    }
    auto num = [&](const char* key) {
      if (!rec.contains(key)) return 0.0;
      if (!rec[key].is_number()) throw PotentialFormatError(std::string("field ") + key + " must be numeric");
      return rec[key].get<double>();
    };
    if (!rec.contains("re") && !rec.contains("im"))
      throw PotentialFormatError("record needs re and/or im");
    if (seen[q]++) throw PotentialFormatError("duplicate frequency in potential");
    if (req.mean_free && q == kZeroFrequency)
      throw PotentialFormatError("mean-free potential must not carry a q = 0 coefficient");
    terms.emplace_back(q, Complex(num("re"), num("im")));
  }
  TrigPolynomial f(terms);
  if (req.real_valued && !f.is_real_valued())
    throw PotentialFormatError("potential is not real valued: coefficients at -q must be conjugates");
  return f;
}

TrigPolynomial load_potential(const std::string& path, PotentialRequirements req) {
  std::ifstream in(path);
  if (!in) throw PotentialFormatError("cannot open potential file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw PotentialFormatError("malformed potential JSON: " + std::string(e.what()));
  }
  return trigpoly_from_json(j, req);
}

}  // namespace gpe
