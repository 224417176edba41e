#include "gpe/nonres.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace gpe {

void SolverSettings::validate() const {
  if (!(delta > 0.0 && delta < 1.0 / 200.0)) throw std::invalid_argument("delta must lie in (0, 1/200)");
  if (!(j_max >= 1.0)) throw std::invalid_argument("j_max must be >= 1");
  if (R0 < 0.0) throw std::invalid_argument("R0 must be positive");
  if (!(coeff > 0.0)) throw std::invalid_argument("coeff must be positive");
  if (nodes < 8 || nodes % 2 != 0) throw std::invalid_argument("nodes must be even and >= 8");
  if (r_max < 2) throw std::invalid_argument("r_max must be >= 2");
  if (!(guard_band >= 0.0 && guard_band < 1.0)) throw std::invalid_argument("guard_band must lie in [0, 1)");
  if (!(norm_constant > 0.0)) throw std::invalid_argument("norm_constant must be positive");
  if (check_nodes < 1) throw std::invalid_argument("check_nodes must be >= 1");
}

double SolverSettings::resolved_R0(const TrigPolynomial& v) const {
  if (R0 > 0.0) return R0;
  return std::max(1.5, v.support_radius() + 0.5);
}

SpectralSetup build_setup(const TrigPolynomial& v, const Vec3& kvec, const SolverSettings& s) {
  SpectralSetup out;
  out.kvec = kvec;
  out.k = std::sqrt(dot(kvec, kvec));
  out.split = split_k(kvec);
  out.basis = LatticeBasis::build(s.j_max, out.split.j, s.max_basis);
  const double r0 = s.resolved_R0(v);
  out.model = build_model(v, gamma_set(v, r0), out.k, r0, out.basis, s.coeff);
  out.ops = assemble_model(v, out.split.t, out.model, out.basis);
  out.j_ordinal = *out.basis.ordinal_of(out.split.j);
  out.contour = ContourSpec::around(out.k, s.delta, s.nodes);
  return out;
}

SpectralSetup retarget(const SpectralSetup& base, const TrigPolynomial& v, const Vec3& kvec,
                       const SolverSettings& s) {
  SpectralSetup out = base;
  out.kvec = kvec;
  out.k = std::sqrt(dot(kvec, kvec));
  const Vec3 j = to_vec(base.split.j);
  out.split.t.t = {kvec[0] - j[0], kvec[1] - j[1], kvec[2] - j[2]};
  out.ops = assemble_model(v, out.split.t, out.model, out.basis);
  out.contour = ContourSpec::around(out.k, s.delta, s.nodes);
  return out;
}

double NonResReport::margin_min() const {
  const double r = 0.5 * (window_hi - window_lo);
  return std::min({unperturbed_margin / r, model_margin / r, contour_clearance - guard_band});
}

namespace {

struct WindowCount {
  int count = 0;
  Eigen::Index hit = -1;
  double margin = std::numeric_limits<double>::infinity();
};

// Eigenvalues inside [lo, hi]; margin is the distance of the nearest other
// value to the window, negative if a second value is inside.
WindowCount count_in_window(const Eigen::VectorXd& d, double lo, double hi, Eigen::Index expected) {
  WindowCount w;
  for (Eigen::Index i = 0; i < d.size(); ++i) {
    const bool in = d(i) >= lo && d(i) <= hi;
    if (in) {
      ++w.count;
      if (w.hit < 0 || i == expected) w.hit = i;
    }
  }
  for (Eigen::Index i = 0; i < d.size(); ++i) {
    if (i == w.hit) continue;
    const double dist = d(i) < lo ? lo - d(i) : (d(i) > hi ? d(i) - hi : -std::min(d(i) - lo, hi - d(i)));
    w.margin = std::min(w.margin, dist);
  }
  return w;
}

}  // namespace

NonResReport check_nonresonance(const PreparedModel& model, const Matrix& w_hat,
                                const Eigen::VectorXd& free_diagonal, const ContourSpec& contour,
                                std::size_t j_star, double k, const SolverSettings& s) {
  NonResReport r;
  r.k = k;
  r.delta = s.delta;
  r.window_lo = contour.lo();
  r.window_hi = contour.hi();
  const auto js = static_cast<Eigen::Index>(j_star);

  const WindowCount free = count_in_window(free_diagonal, r.window_lo, r.window_hi, js);
  r.unique_unperturbed = free.count == 1 && free.hit == js;
  r.unperturbed_margin = free.margin;

  const Eigen::VectorXd& d = model.eigenvalues();
  Eigen::Index expected = model.diagonal() ? js : -1;
  const WindowCount mod = count_in_window(d, r.window_lo, r.window_hi, expected);
  r.unique_model = mod.count == 1;
  r.model_margin = mod.margin;
  if (r.unique_model) {
    r.model_tracks_jstar = model.diagonal() ? mod.hit == js
                                            : std::norm(model.eigenvectors()(js, mod.hit)) >= 0.5;
  }

  double clearance = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < d.size(); ++i)
    clearance = std::min(clearance, std::abs(std::abs(d(i) - contour.center) - contour.radius) / contour.radius);
  r.contour_clearance = clearance;
  r.guard_band = s.guard_band;
  r.clearance_ok = clearance >= s.guard_band;

  const ContourNorms norms = contour_norms(model, w_hat, contour, s.check_nodes);
  r.resolvent_half_norm = norms.resolvent_half_norm;
  r.normA = norms.normA;
  r.normA3 = norms.normA3;
  r.resolvent_half_bound = s.norm_constant * std::pow(k, 0.5 * (1.0 + s.delta));
  r.normA_bound = s.norm_constant * std::pow(k, 2.0 * s.delta);
  r.normA3_bound = s.norm_constant * std::pow(k, -0.2 + 21.0 * s.delta);
  r.norms_ok = r.resolvent_half_norm < r.resolvent_half_bound && r.normA < r.normA_bound &&
               r.normA3 < r.normA3_bound;

  r.passed = r.unique_unperturbed && r.unique_model && r.model_tracks_jstar && r.clearance_ok && r.norms_ok;
  return r;
}

NonResReport check_nonresonance(const SpectralSetup& setup, const SolverSettings& s) {
  const PreparedModel model(setup.ops.H_hat);
  const Eigen::VectorXd free = setup.ops.H_hat.diagonal().real();
  // H_hat keeps the free diagonal because V is mean free.
  return check_nonresonance(model, setup.ops.W_hat, free, setup.contour, setup.j_ordinal, setup.k, s);
}

AdmissiblePoint find_admissible_t(const Vec3& nu, double k, const TrigPolynomial& v,
                                  const SolverSettings& s, int attempts, std::uint64_t seed) {
  if (attempts < 1) throw std::invalid_argument("attempts must be >= 1");
  const double len = std::sqrt(dot(nu, nu));
  if (!(std::abs(len - 1.0) < 1e-9)) throw std::invalid_argument("direction must be a unit vector");
  if (!(k > 1.0)) throw std::invalid_argument("k must exceed 1");

  const double width = std::pow(k, -2.0 - 2.0 * s.delta);
  const double x0 = static_cast<double>((seed * 0x9E3779B97F4A7C15ULL) >> 11) * 0x1.0p-53;
  const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
  std::string last;
  for (int i = 0; i < attempts; ++i) {
    double kk = k;
    if (i > 0) {
      double x = x0 + i * phi;
      x -= std::floor(x);
      kk = k + width * (2.0 * x - 1.0);
    }
    const Vec3 kvec{kk * nu[0], kk * nu[1], kk * nu[2]};
    AdmissiblePoint p;
    p.setup = build_setup(v, kvec, s);
    p.report = check_nonresonance(p.setup, s);
    p.attempt = i;
    if (p.report.passed) return p;
    last = "margin " + std::to_string(p.report.margin_min());
  }
  throw NoAdmissiblePoint("no admissible quasimomentum near direction after " +
                          std::to_string(attempts) + " attempts (" + last + ")");
}

nlohmann::json to_json(const NonResReport& r) {
  return {{"k", r.k},
          {"delta", r.delta},
          {"window", {r.window_lo, r.window_hi}},
          {"unique_unperturbed", {{"passed", r.unique_unperturbed}, {"margin", r.unperturbed_margin}}},
          {"unique_model", {{"passed", r.unique_model}, {"margin", r.model_margin}}},
          {"model_tracks_jstar", r.model_tracks_jstar},
          {"contour_clearance", {{"value", r.contour_clearance}, {"passed", r.clearance_ok}}},
          {"normA", {{"value", r.normA}, {"bound", r.normA_bound}}},
          {"normA3", {{"value", r.normA3}, {"bound", r.normA3_bound}}},
          {"resolvent_half_norm", {{"value", r.resolvent_half_norm}, {"bound", r.resolvent_half_bound}}},
          {"norms_passed", r.norms_ok},
          {"margin_min", r.margin_min()},
          {"passed", r.passed}};
}

}  // namespace gpe
