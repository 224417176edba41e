#include "gpe/gpfix.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace gpe {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string step_prefix(int m) { return "step " + std::to_string(m) + ": "; }

// Re-raises a series failure with the iteration index attached.
[[noreturn]] void rethrow_at_step(int m) {
  try {
    throw;
  } catch (const ResonantContour& e) {
    throw ResonantContour(step_prefix(m) + e.what());
  } catch (const SeriesDiverging& e) {
    throw SeriesDiverging(step_prefix(m) + e.what());
  } catch (const IndexDrift& e) {
    throw IndexDrift(step_prefix(m) + e.what());
  }
}

}  // namespace

double GPEConfig::resolved_fp_tol() const {
  if (fp_tol > 0.0) return fp_tol;
  const double vn = star_norm(V);
  return vn > 0.0 ? 1e-12 * vn : 1e-12;
}

double GPEConfig::resolved_cutoff() const {
  if (cutoff > 0.0) return cutoff;
  return 4.0 * setup.model.R0;
}

double GPEConfig::smallness_bound() const {
  return std::pow(setup.k, -1.0 - 6.0 * settings.delta);
}

void GPEConfig::validate() const {
  settings.validate();
  if (!V.is_real_valued()) throw std::invalid_argument("potential must be real valued");
  if (!V.is_mean_free()) throw std::invalid_argument("potential must be mean free");
  if (!std::isfinite(sigma)) throw std::invalid_argument("sigma must be finite");
  if (!(std::isfinite(A.real()) && std::isfinite(A.imag())) || std::abs(A) == 0.0)
    throw std::invalid_argument("amplitude A must be finite and nonzero");
  if (max_iters < 1) throw std::invalid_argument("max_iters must be >= 1");
  if (fp_tol < 0.0) throw std::invalid_argument("fp_tol must be positive");
  if (cutoff < 0.0) throw std::invalid_argument("cutoff must be positive");
  if (setup.basis.size() == 0) throw std::invalid_argument("setup has no basis");
  if (enforce_smallness && std::abs(sigma) * std::norm(A) >= smallness_bound())
    throw std::invalid_argument("|sigma| |A|^2 violates the smallness bound k^{-1-6 delta}");
}

GPESolver::GPESolver(GPEConfig cfg)
    : cfg_((cfg.validate(), std::move(cfg))), model_(cfg_.setup.ops.H_hat) {}

SeriesOptions GPESolver::series_options() const {
  SeriesOptions o;
  o.full_matrices = cfg_.full_matrices;
  o.guard_band = cfg_.settings.guard_band;
  return o;
}

SpectralSeries GPESolver::series_for(const TrigPolynomial& w_tilde) const {
  const Matrix w = assemble_perturbation(w_tilde, cfg_.setup.model, cfg_.setup.basis);
  return series_terms(model_, w, cfg_.setup.contour, cfg_.setup.j_ordinal, cfg_.settings.r_max,
                      series_options());
}

TrigPolynomial GPESolver::psi_from_column(const Vector& column) const {
  const auto& basis = cfg_.setup.basis;
  const Frequency& js = cfg_.setup.split.j;
  TrigPolynomial::Map m;
  for (std::size_t i = 0; i < basis.size(); ++i) {
    const Complex c = cfg_.A * column(static_cast<Eigen::Index>(i));
    if (c != Complex(0.0, 0.0)) m.emplace(basis.index(i) - js, c);
  }
  return TrigPolynomial(std::move(m));
}

MapResult GPESolver::map_M(const TrigPolynomial& W) const {
  MapResult out;
  const TrigPolynomial w_tilde = remove_mean(W);
  out.series = series_for(w_tilde);
  out.lambda_W = out.series.lambda;
  const ContourSpec& c = cfg_.setup.contour;
  if (!(out.lambda_W >= c.lo() && out.lambda_W <= c.hi())) {
    std::ostringstream os;
    os << "eigenvalue " << out.lambda_W << " left the window [" << c.lo() << ", " << c.hi() << "]";
    throw IndexDrift(os.str());
  }
  out.psi = psi_from_column(out.series.E_column);
  if (cfg_.sigma == 0.0) {
    out.W_next = cfg_.V;
    return out;
  }
  const TrigPolynomial rho = mod_squared(out.psi).restrict_radius(cfg_.resolved_cutoff(), &out.dropped_mass);
  out.W_next = cfg_.V + rho.scaled(cfg_.sigma);
  out.dropped_mass *= std::abs(cfg_.sigma);
  return out;
}

FixedPointReport GPESolver::iterate() const {
  FixedPointReport rep;
  rep.fp_tol = cfg_.resolved_fp_tol();
  const double s_a2 = cfg_.sigma * std::norm(cfg_.A);
  rep.contraction_bound = 64.0 * std::abs(s_a2) * std::pow(cfg_.setup.k, 1.0 + 5.0 * cfg_.settings.delta);
  if (std::abs(s_a2) >= cfg_.smallness_bound())
    rep.warnings.push_back("|sigma| |A|^2 exceeds k^{-1-6 delta}");

  TrigPolynomial W = cfg_.V + TrigPolynomial::constant(s_a2);
  Vector prev_col;
  Matrix prev_full;
  double prev_diff = kNaN;
  for (int m = 1; m <= cfg_.max_iters; ++m) {
    MapResult r;
    try {
      r = map_M(W);
    } catch (const SpectralError&) {
      rethrow_at_step(m);
    }
    FixedPointStep st;
    st.m = m;
    st.diff_norm = star_norm(r.W_next - W);
    st.ratio = m == 1 ? kNaN : st.diff_norm / prev_diff;
    st.lambda_m = r.lambda_W;
    st.dropped_mass = r.dropped_mass;
    if (m == 1) {
      st.proj_diff = kNaN;
    } else if (r.series.full) {
      st.proj_diff = norm_one(Matrix(r.series.E - prev_full));
    } else {
      st.proj_diff = norm_one(Vector(r.series.E_column - prev_col));
    }
    if (r.series.full)
      prev_full = std::move(r.series.E);
    else
      prev_col = std::move(r.series.E_column);
    prev_diff = st.diff_norm;
    rep.steps.push_back(st);
    W = std::move(r.W_next);
    if (st.diff_norm < rep.fp_tol) {
      rep.converged = true;
      break;
    }
  }
  rep.W_final = std::move(W);
  return rep;
}

SolutionRecord GPESolver::assemble_solution(const FixedPointReport& report) const {
  if (!report.converged)
    throw NotConverged("fixed-point iteration did not reach " + std::to_string(report.fp_tol) + " in " +
                       std::to_string(report.steps.size()) + " steps");
  SolutionRecord s;
  MapResult r;
  try {
    r = map_M(report.W_final);
  } catch (const SpectralError&) {
    rethrow_at_step(static_cast<int>(report.steps.size()) + 1);
  }
  const double k = cfg_.setup.k;
  const double delta = cfg_.settings.delta;
  const double a2 = std::norm(cfg_.A);
  const Eigen::Index js = static_cast<Eigen::Index>(cfg_.setup.j_ordinal);

  s.series = std::move(r.series);
  s.psi = std::move(r.psi);
  s.lambda_W = s.series.lambda;
  s.Ejj = s.series.E_column(js);
  s.ejj_identity_deviation = std::abs(s.series.E_column.squaredNorm() - s.Ejj.real());
  s.lambda = s.lambda_W + cfg_.sigma * a2 * s.Ejj.real();
  s.p2 = momentum(cfg_.setup.split.j, cfg_.setup.split.t).square;
  s.series_correction = (s.series.lambda0 - s.p2) + s.series.correction;

  TrigPolynomial::Map ut;
  for (const auto& [q, c] : s.psi.terms()) {
    Complex v = c / cfg_.A;
    if (q == kZeroFrequency) v -= 1.0;
    if (v != Complex(0.0, 0.0)) ut.emplace(q, v);
  }
  s.u_tilde = TrigPolynomial(std::move(ut));

  const ResidualReport res = residual(s.psi, s.lambda);
  s.residual_star = res.total;
  s.truncation_mass = res.truncation_mass;

  const double sa2 = std::abs(cfg_.sigma) * a2;
  // lambda - p^2 - sigma |A|^2 = series part + sigma |A|^2 (Re Ejj - 1).
  const double dev = s.series_correction + cfg_.sigma * a2 * (s.Ejj.real() - 1.0);
  const double c_fit = 10.0;
  auto check = [](double value, double bound) { return BoundCheck{value, bound, value <= bound}; };
  s.bound_checks["eigenvalue_expansion"] =
      check(std::abs(dev), c_fit * (std::pow(k, -1.0 + 72.0 * delta) + sa2) * std::pow(k, -1.0 + 8.0 * delta));
  s.bound_checks["u_tilde_star_norm"] = check(star_norm(s.u_tilde), std::pow(k, -1.0 + 8.0 * delta));
  s.bound_checks["linear_eigenvalue_shift"] =
      check(std::abs(s.series_correction), c_fit * std::pow(k, -2.0 + 80.0 * delta));
  return s;
}

ResidualReport GPESolver::residual(const SolutionRecord& sol) const { return residual(sol.psi, sol.lambda); }

ResidualReport GPESolver::residual(const TrigPolynomial& psi, double lambda) const {
  const auto& basis = cfg_.setup.basis;
  const Frequency& js = cfg_.setup.split.j;
  const QuasiMomentum& t = cfg_.setup.split.t;

  TrigPolynomial nonlinear;
  if (cfg_.sigma != 0.0) nonlinear = convolve(mod_squared(psi), psi).scaled(cfg_.sigma);
  const TrigPolynomial vpsi = convolve(cfg_.V, psi);

  TrigPolynomial::Map r;
  for (const auto& [q, c] : psi.terms()) r[q] += (momentum(js + q, t).square - lambda) * c;
  for (const auto& [q, c] : vpsi.terms()) r[q] += c;
  for (const auto& [q, c] : nonlinear.terms()) r[q] += c;

  double in = 0.0, in_c = 0.0, tail = 0.0, tail_c = 0.0;
  auto kahan = [](double& sum, double& comp, double x) {
    const double y = x - comp;
    const double tt = sum + y;
    comp = (tt - sum) - y;
    sum = tt;
  };
  for (const auto& [q, c] : r) {
    if (basis.ordinal_of(js + q))
      kahan(in, in_c, std::abs(c));
    else
      kahan(tail, tail_c, std::abs(c));
  }
  const double a = std::abs(cfg_.A);
  ResidualReport out;
  out.in_basis = in / a;
  out.tail = tail / a;
  out.total = out.in_basis + out.tail;

  // Coefficients of sigma |psi|^2 beyond the cutoff act on psi inside the
  // basis; bound their effect by the product of star norms.
  double dropped = 0.0;
  if (cfg_.sigma != 0.0) mod_squared(psi).restrict_radius(cfg_.resolved_cutoff(), &dropped);
  out.truncation_mass = out.tail + std::abs(cfg_.sigma) * dropped * star_norm(psi) / a;
  return out;
}

NewtonResult GPESolver::oracle_newton(const SolutionRecord& sol) const {
  const auto& basis = cfg_.setup.basis;
  const Frequency& js = cfg_.setup.split.j;
  const QuasiMomentum& t = cfg_.setup.split.t;
  const auto n = static_cast<Eigen::Index>(basis.size());
  const Eigen::Index jo = static_cast<Eigen::Index>(cfg_.setup.j_ordinal);
  const double sigma = cfg_.sigma;
  const double a = std::abs(cfg_.A);

  const Matrix hv = assemble_full(cfg_.V, t, basis);
  std::vector<Frequency> rel(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) rel[static_cast<std::size_t>(i)] = basis.index(static_cast<std::size_t>(i)) - js;

  Vector psi(n);
  for (Eigen::Index i = 0; i < n; ++i) psi(i) = sol.psi.coeff(rel[static_cast<std::size_t>(i)]);
  double lambda = sol.lambda;

  auto to_poly = [&](const Vector& v) {
    TrigPolynomial::Map m;
    for (Eigen::Index i = 0; i < n; ++i)
      if (v(i) != Complex(0.0, 0.0)) m.emplace(rel[static_cast<std::size_t>(i)], v(i));
    return TrigPolynomial(std::move(m));
  };

  // Residual restricted to the basis.
  auto eval = [&](const Vector& p, double lam, TrigPolynomial* rho_out) {
    Vector f = hv * p - lam * p;
    if (sigma != 0.0) {
      const TrigPolynomial pp = to_poly(p);
      const TrigPolynomial rho = mod_squared(pp);
      const TrigPolynomial cube = convolve(rho, pp);
      for (Eigen::Index i = 0; i < n; ++i) f(i) += sigma * cube.coeff(rel[static_cast<std::size_t>(i)]);
      if (rho_out) *rho_out = rho;
    }
    return f;
  };
  auto fnorm = [&](const Vector& f) { return f.cwiseAbs().sum() / a; };

  // Unknown layout: Re psi, Im psi for every ordinal except j*, then lambda.
  const Eigen::Index m_unk = 2 * (n - 1) + 1;
  auto col_of = [&](Eigen::Index i) { return i < jo ? i : i - 1; };

  NewtonResult out;
  TrigPolynomial rho;
  Vector f = eval(psi, lambda, &rho);
  double fn = fnorm(f);
  const double target = 1e-15 * (1.0 + std::abs(lambda));
  const int max_iter = 40;
  int it = 0;
  // At least one step is taken so that the reported distance reflects an
  // actual solve of the truncated equations.
  for (; it < max_iter && (it == 0 || fn > target); ++it) {
    Matrix mm = hv;
    mm.diagonal().array() -= lambda;
    Matrix bb = Matrix::Zero(n, n);
    if (sigma != 0.0) {
      const TrigPolynomial pp = to_poly(psi);
      const TrigPolynomial sq = convolve(pp, pp);
      for (Eigen::Index c = 0; c < n; ++c)
        for (Eigen::Index r = 0; r < n; ++r) {
          const Frequency& qr = rel[static_cast<std::size_t>(r)];
          const Frequency& qc = rel[static_cast<std::size_t>(c)];
          mm(r, c) += 2.0 * sigma * rho.coeff(qr - qc);
          bb(r, c) = sigma * sq.coeff(qr + qc);
        }
    }
    const Matrix plus = mm + bb;
    const Matrix minus = mm - bb;
    Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(2 * n, m_unk);
    for (Eigen::Index c = 0; c < n; ++c) {
      if (c == jo) continue;
      const Eigen::Index cx = col_of(c);
      const Eigen::Index cy = (n - 1) + col_of(c);
      jac.block(0, cx, n, 1) = plus.col(c).real();
      jac.block(n, cx, n, 1) = plus.col(c).imag();
      jac.block(0, cy, n, 1) = -minus.col(c).imag();
      jac.block(n, cy, n, 1) = minus.col(c).real();
    }
    jac.block(0, m_unk - 1, n, 1) = -psi.real();
    jac.block(n, m_unk - 1, n, 1) = -psi.imag();
    Eigen::VectorXd rhs(2 * n);
    rhs << -f.real(), -f.imag();
    const Eigen::VectorXd step = jac.colPivHouseholderQr().solve(rhs);

    double damping = 1.0;
    bool accepted = false;
    for (int tries = 0; tries < 30; ++tries) {
      Vector trial = psi;
      for (Eigen::Index c = 0; c < n; ++c) {
        if (c == jo) continue;
        trial(c) += damping * Complex(step(col_of(c)), step((n - 1) + col_of(c)));
      }
      const double lam_trial = lambda + damping * step(m_unk - 1);
      TrigPolynomial rho_trial;
      const Vector f_trial = eval(trial, lam_trial, &rho_trial);
      const double fn_trial = fnorm(f_trial);
      if (std::isfinite(fn_trial) && (fn_trial < fn || (it == 0 && fn_trial <= target))) {
        psi = trial;
        lambda = lam_trial;
        f = f_trial;
        fn = fn_trial;
        rho = std::move(rho_trial);
        accepted = true;
        break;
      }
      damping *= 0.5;
    }
    if (!accepted) break;  // stagnated at roundoff level
  }
  out.iterations = it;
  out.final_residual = fn;
  if (!(fn <= 1e-9))
    throw NewtonDiverged("truncated equations not solved: residual " + std::to_string(fn) + " after " +
                         std::to_string(it) + " iterations");
  out.psi = to_poly(psi);
  out.lambda = lambda;
  out.distance = star_norm(out.psi - sol.psi) + std::abs(lambda - sol.lambda);
  return out;
}

double GPESolver::correction_at(const TrigPolynomial& w_tilde, const Vec3& tv) const {
  const auto& basis = cfg_.setup.basis;
  const QuasiMomentum t{tv};
  Matrix h = cfg_.setup.ops.H_hat;
  for (std::size_t i = 0; i < basis.size(); ++i)
    h(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = momentum(basis.index(i), t).square;
  const PreparedModel pm(std::move(h));
  const Matrix w = assemble_perturbation(w_tilde, cfg_.setup.model, basis);
  ContourSpec c = cfg_.setup.contour;
  const double p2 = momentum(cfg_.setup.split.j, t).square;
  c.center = p2;
  SeriesOptions o = series_options();
  o.full_matrices = false;
  const SpectralSeries s = series_terms(pm, w, c, cfg_.setup.j_ordinal, cfg_.settings.r_max, o);
  return (s.lambda0 - p2) + s.correction;
}

nlohmann::json to_json(const FixedPointReport& r) {
  nlohmann::json steps = nlohmann::json::array();
  for (const auto& s : r.steps) {
    steps.push_back({{"m", s.m},
                     {"diff_norm", s.diff_norm},
                     {"ratio", std::isnan(s.ratio) ? nlohmann::json() : nlohmann::json(s.ratio)},
                     {"lambda_m", s.lambda_m},
                     {"proj_diff", std::isnan(s.proj_diff) ? nlohmann::json() : nlohmann::json(s.proj_diff)},
                     {"dropped_mass", s.dropped_mass}});
  }
  return {{"steps", steps},
          {"converged", r.converged},
          {"W_final", to_json(r.W_final)},
          {"contraction_bound", r.contraction_bound},
          {"fp_tol", r.fp_tol},
          {"warnings", r.warnings}};
}

nlohmann::json to_json(const SolutionRecord& s) {
  nlohmann::json checks = nlohmann::json::object();
  for (const auto& [name, b] : s.bound_checks)
    checks[name] = {{"value", b.value}, {"bound", b.bound}, {"pass", b.pass}};
  return {{"lambda", s.lambda},
          {"lambda_W", s.lambda_W},
          {"p2", s.p2},
          {"Ejj", {{"re", s.Ejj.real()}, {"im", s.Ejj.imag()}}},
          {"ejj_identity_deviation", s.ejj_identity_deviation},
          {"residual_star", s.residual_star},
          {"truncation_mass", s.truncation_mass},
          {"u_tilde_star_norm", star_norm(s.u_tilde)},
          {"u_tilde", to_json(s.u_tilde)},
          {"psi", to_json(s.psi)},
          {"bound_checks", checks},
          {"series", to_json(s.series)}};
}

}  // namespace gpe
