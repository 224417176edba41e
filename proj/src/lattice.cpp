#include "gpe/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <string>

namespace gpe {

bool QuasiMomentum::in_cell() const {
  return std::all_of(t.begin(), t.end(), [](double c) { return c >= 0.0 && c < 1.0; });
}

Momentum momentum(const Frequency& j, const QuasiMomentum& t) {
  Vec3 p{t.t[0] + j[0], t.t[1] + j[1], t.t[2] + j[2]};
  return {p, dot(p, p)};
}

KSplit split_k(const Vec3& kvec) {
  KSplit out{};
  for (int a = 0; a < 3; ++a) {
    const double f = std::floor(kvec[a]);
    out.j[a] = static_cast<int>(f);
    double t = kvec[a] - f;
    // kvec slightly below an integer can round up to exactly 1.
    if (t >= 1.0) {
      t = 0.0;
      out.j[a] += 1;
    }
    out.t.t[a] = t;
  }
  return out;
}

LatticeBasis LatticeBasis::build(double radius, Frequency center, std::size_t max_size) {
  if (!(radius >= 1.0)) throw std::invalid_argument("basis radius must be >= 1");
  const int r = static_cast<int>(std::floor(radius));
  const double r2 = radius * radius;
  // 4/3 pi (r - 1)^3 is a lower estimate of the count; reject before enumerating.
  if (4.18 * std::pow(radius - 1.0, 3) > static_cast<double>(max_size))
    throw BasisTooLarge("basis radius " + std::to_string(radius) + " exceeds the maximum basis size");
  LatticeBasis b;
  b.radius_ = radius;
  b.center_ = center;
  for (int x = -r; x <= r; ++x)
    for (int y = -r; y <= r; ++y)
      for (int z = -r; z <= r; ++z) {
        const Frequency d{x, y, z};
        if (static_cast<double>(norm2(d)) <= r2) b.indices_.push_back(center + d);
      }
  if (b.indices_.size() > max_size)
    throw BasisTooLarge("basis of radius " + std::to_string(radius) + " has " +
                        std::to_string(b.indices_.size()) + " elements, above the maximum " +
                        std::to_string(max_size));
  std::sort(b.indices_.begin(), b.indices_.end());
  for (std::size_t i = 0; i < b.indices_.size(); ++i) b.ordinal_.emplace(b.indices_[i], i);
  return b;
}

std::optional<std::size_t> LatticeBasis::ordinal_of(const Frequency& j) const {
  auto it = ordinal_.find(j);
  if (it == ordinal_.end()) return std::nullopt;
  return it->second;
}

namespace {

Frequency primitive(const Frequency& q) {
  int g = std::gcd(std::gcd(std::abs(q[0]), std::abs(q[1])), std::abs(q[2]));
  Frequency p{q[0] / g, q[1] / g, q[2] / g};
  if (!is_canonical_half(p)) p = -p;
  return p;
}

}  // namespace

std::vector<Frequency> gamma_set(const TrigPolynomial& /*v*/, double r0) {
  std::set<Frequency> reps;
  const int r = static_cast<int>(std::ceil(r0));
  const double r2 = r0 * r0;
  for (int x = -r; x <= r; ++x)
    for (int y = -r; y <= r; ++y)
      for (int z = -r; z <= r; ++z) {
        const Frequency q{x, y, z};
        const auto n2 = norm2(q);
        if (n2 == 0 || static_cast<double>(n2) >= r2) continue;
        reps.insert(primitive(q));
      }
  return {reps.begin(), reps.end()};
}

std::map<Frequency, TrigPolynomial> decompose_potential(const TrigPolynomial& v,
                                                        const std::vector<Frequency>& gamma,
                                                        double r0) {
  const std::set<Frequency> generators(gamma.begin(), gamma.end());
  std::map<Frequency, TrigPolynomial::Map> parts;
  for (const auto& [q, c] : v.terms()) {
    if (q == kZeroFrequency) throw DecompositionError("potential is not mean free");
    if (static_cast<double>(norm2(q)) >= r0 * r0)
      throw DecompositionError("potential frequency outside the R0 ball");
    const Frequency g = primitive(q);
    if (!generators.count(g)) throw DecompositionError("potential frequency matches no generator");
    parts[g].emplace(q, c);
  }
  std::map<Frequency, TrigPolynomial> out;
  for (auto& [g, m] : parts) out.emplace(g, TrigPolynomial(std::move(m)));
  return out;
}

double resonance_threshold(double k, double coeff, double power) {
  return coeff * std::pow(k, power);
}

std::vector<std::size_t> pi_set(const Frequency& q0, double k, const LatticeBasis& basis,
                                double coeff) {
  const double thr = resonance_threshold(k, coeff, 0.2);
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < basis.size(); ++i) {
    if (std::abs(static_cast<double>(dot(basis.index(i), q0))) < thr) out.push_back(i);
  }
  return out;
}

std::vector<std::size_t> resonance_T(const std::vector<Frequency>& gamma, double k,
                                     const LatticeBasis& basis, double coeff) {
  std::vector<std::size_t> out;
  if (gamma.size() < 2) return out;
  const double small = resonance_threshold(k, coeff, 0.2);
  const double large = resonance_threshold(k, coeff, 0.6);
  std::vector<double> ip(gamma.size());
  for (std::size_t i = 0; i < basis.size(); ++i) {
    for (std::size_t g = 0; g < gamma.size(); ++g)
      ip[g] = std::abs(static_cast<double>(dot(basis.index(i), gamma[g])));
    bool hit = false;
    for (std::size_t a = 0; a < gamma.size() && !hit; ++a) {
      if (ip[a] >= small) continue;
      for (std::size_t b = 0; b < gamma.size(); ++b) {
        if (b != a && ip[b] < large) {
          hit = true;
          break;
        }
      }
    }
    if (hit) out.push_back(i);
  }
  return out;
}

std::optional<Frequency> ModelDecomposition::block_of(std::size_t ordinal) const {
  for (const auto& [g, s] : supports) {
    if (std::binary_search(s.begin(), s.end(), ordinal)) return g;
  }
  return std::nullopt;
}

bool ModelDecomposition::has_blocks() const {
  return std::any_of(supports.begin(), supports.end(), [](const auto& kv) { return !kv.second.empty(); });
}

ModelDecomposition build_model(const TrigPolynomial& v, const std::vector<Frequency>& gamma,
                               double k, double r0, const LatticeBasis& basis, double coeff) {
  ModelDecomposition m;
  m.gamma = gamma;
  m.k = k;
  m.R0 = r0;
  m.pi_coefficient = coeff;
  m.parts = decompose_potential(v, gamma, r0);
  m.T_set = resonance_T(gamma, k, basis, coeff);
  for (const auto& [g, part] : m.parts) {
    std::vector<std::size_t> pi = pi_set(g, k, basis, coeff);
    std::vector<std::size_t> supp;
    std::set_difference(pi.begin(), pi.end(), m.T_set.begin(), m.T_set.end(), std::back_inserter(supp));
    m.supports.emplace(g, std::move(supp));
  }
  return m;
}

nlohmann::json to_json(const ModelDecomposition& model) {
  nlohmann::json gens = nlohmann::json::array();
  for (const auto& g : model.gamma) {
    nlohmann::json rec{{"q", {g[0], g[1], g[2]}}};
    auto p = model.parts.find(g);
    rec["part_terms"] = p == model.parts.end() ? 0 : p->second.size();
    auto s = model.supports.find(g);
    rec["support_size"] = s == model.supports.end() ? 0 : s->second.size();
    gens.push_back(rec);
  }
  return {{"k", model.k},
          {"R0", model.R0},
          {"pi_coefficient", model.pi_coefficient},
          {"generators", gens},
          {"T_size", model.T_set.size()}};
}

}  // namespace gpe
