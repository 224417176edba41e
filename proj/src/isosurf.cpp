#include "gpe/isosurf.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>

#include "gpe/parallel.hpp"

namespace gpe {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

Vec3 normalized(const Vec3& v) {
  const double n = std::sqrt(dot(v, v));
  return {v[0] / n, v[1] / n, v[2] / n};
}

GPEConfig pipeline_config(const IsoConfig& cfg, SpectralSetup setup) {
  GPEConfig g;
  g.V = cfg.V;
  g.sigma = cfg.sigma;
  g.A = cfg.A;
  g.settings = cfg.settings;
  g.setup = std::move(setup);
  g.max_iters = cfg.max_iters;
  g.fp_tol = cfg.fp_tol;
  g.cutoff = cfg.cutoff;
  g.enforce_smallness = cfg.enforce_smallness;
  g.full_matrices = false;
  return g;
}

}  // namespace

void IsoConfig::validate() const {
  settings.validate();
  if (!V.is_real_valued() || !V.is_mean_free())
    throw std::invalid_argument("potential must be real valued and mean free");
  if (attempts < 1) throw std::invalid_argument("attempts must be >= 1");
  if (!(tol > 0.0)) throw std::invalid_argument("tol must be positive");
  if (root_iters < 1) throw std::invalid_argument("root_iters must be >= 1");
  if (neighbours < 3) throw std::invalid_argument("neighbours must be >= 3");
  if (max_iters < 1) throw std::invalid_argument("max_iters must be >= 1");
}

double iso_function(double kappa, double lambda, const Vec3& nu, const SpectralSetup& base,
                    const IsoConfig& cfg) {
  const Vec3 kvec{kappa * nu[0], kappa * nu[1], kappa * nu[2]};
  const GPESolver solver(pipeline_config(cfg, retarget(base, cfg.V, kvec, cfg.settings)));
  const SolutionRecord sol = solver.assemble_solution(solver.iterate());
  return (sol.p2 - lambda) + sol.series_correction + cfg.sigma * std::norm(cfg.A) * sol.Ejj.real();
}

IsoSample solve_kappa(double lambda, const Vec3& nu, const IsoConfig& cfg) {
  if (!(lambda > 1.0)) throw std::invalid_argument("lambda must exceed 1");
  IsoSample out;
  out.nu = nu;
  const double k = std::sqrt(lambda);
  const double a2 = std::norm(cfg.A);
  const double k_tilde = std::sqrt(lambda - cfg.sigma * a2);
  const AdmissiblePoint adm = find_admissible_t(nu, k, cfg.V, cfg.settings, cfg.attempts, cfg.seed);

  const double w = std::pow(k, -2.0 - 2.0 * cfg.settings.delta);
  double lo = k - w;
  double hi = k + w;
  auto f = [&](double x) {
    ++out.evaluations;
    return iso_function(x, lambda, nu, adm.setup, cfg);
  };

  double x = std::clamp(k_tilde, lo, hi);
  double fx = f(x);
  double best_x = x;
  double best_f = fx;
  if (std::abs(fx) > cfg.tol) {
    const double flo = f(lo);
    const double fhi = f(hi);
    if (flo > 0.0 || fhi < 0.0)
      throw NoRootInInterval("f(k - w) = " + std::to_string(flo) + ", f(k + w) = " + std::to_string(fhi));
    if (fx < 0.0)
      lo = x;
    else
      hi = x;
    for (int it = 0; it < cfg.root_iters && std::abs(fx) > cfg.tol; ++it) {
      double next = x - fx / (2.0 * x);
      if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
      if (next == x) break;  // no representable progress
      x = next;
      fx = f(x);
      if (std::abs(fx) < std::abs(best_f)) {
        best_x = x;
        best_f = fx;
      }
      if (fx < 0.0)
        lo = x;
      else
        hi = x;
    }
  }
  out.kappa = best_x;
  out.newton_residual = std::abs(best_f);
  out.h = best_x - k_tilde;
  if (!(out.newton_residual <= cfg.tol))
    throw NotConverged("root residual " + std::to_string(out.newton_residual) + " above tolerance");
  out.passed = true;
  return out;
}

std::vector<Vec3> fibonacci_directions(std::size_t n) {
  std::vector<Vec3> out(n);
  const double golden_angle = std::numbers::pi * (3.0 - std::sqrt(5.0));
  for (std::size_t i = 0; i < n; ++i) {
    const double z = 1.0 - (2.0 * static_cast<double>(i) + 1.0) / static_cast<double>(n);
    const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    const double phi = golden_angle * static_cast<double>(i);
    out[i] = normalized({r * std::cos(phi), r * std::sin(phi), z});
  }
  return out;
}

std::vector<Vec3> random_directions(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  // Explicit 53-bit conversion: std::uniform_real_distribution is not
  // specified bit for bit across standard libraries.
  auto uniform = [&rng] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
  std::vector<Vec3> out(n);
  for (auto& v : out) {
    const double z = 2.0 * uniform() - 1.0;
    const double phi = 2.0 * std::numbers::pi * uniform();
    const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    v = normalized({r * std::cos(phi), r * std::sin(phi), z});
  }
  return out;
}

std::array<Vec3, 2> tangent_basis(const Vec3& nu) {
  int axis = 0;
  for (int a = 1; a < 3; ++a)
    if (std::abs(nu[a]) < std::abs(nu[axis])) axis = a;
  Vec3 e{0.0, 0.0, 0.0};
  e[axis] = 1.0;
  const Vec3 e1 = normalized(cross(e, nu));
  const Vec3 e2 = cross(nu, e1);
  return {e1, e2};
}

std::array<double, 2> tangential_gradient(const std::vector<IsoSample>& samples, std::size_t i,
                                          int neighbours) {
  const IsoSample& s = samples[i];
  std::vector<std::pair<double, std::size_t>> nearest;
  for (std::size_t j = 0; j < samples.size(); ++j) {
    if (j == i) continue;
    nearest.emplace_back(-dot(samples[j].nu, s.nu), j);
  }
  const std::size_t m = std::min<std::size_t>(static_cast<std::size_t>(neighbours), nearest.size());
  std::partial_sort(nearest.begin(), nearest.begin() + static_cast<std::ptrdiff_t>(m), nearest.end());

  const auto basis = tangent_basis(s.nu);
  Eigen::MatrixXd a(static_cast<Eigen::Index>(m), 2);
  Eigen::VectorXd b(static_cast<Eigen::Index>(m));
  Eigen::Index rows = 0;
  for (std::size_t n = 0; n < m; ++n) {
    const IsoSample& o = samples[nearest[n].second];
    if (!o.passed) continue;
    const Vec3 d{o.nu[0] - s.nu[0], o.nu[1] - s.nu[1], o.nu[2] - s.nu[2]};
    a(rows, 0) = dot(d, basis[0]);
    a(rows, 1) = dot(d, basis[1]);
    b(rows) = o.h - s.h;
    ++rows;
  }
  if (rows < 3) return {kNaN, kNaN};
  const Eigen::Vector2d g = a.topRows(rows).colPivHouseholderQr().solve(b.head(rows));
  return {g(0), g(1)};
}

std::vector<IsoSample> trace_surface(double lambda, const std::vector<Vec3>& directions,
                                     const IsoConfig& cfg) {
  cfg.validate();
  std::vector<IsoSample> out(directions.size());
  parallel_for(directions.size(), cfg.workers, [&](std::size_t i) {
    try {
      out[i] = solve_kappa(lambda, directions[i], cfg);
    } catch (const SpectralError& e) {
      IsoSample hole;
      hole.nu = directions[i];
      hole.kappa = kNaN;
      hole.h = kNaN;
      hole.newton_residual = kNaN;
      hole.failure = e.what();
      out[i] = hole;
    }
  });
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (out[i].passed)
      out[i].grad_h = tangential_gradient(out, i, cfg.neighbours);
    else
      out[i].grad_h = {kNaN, kNaN};
  }
  return out;
}

MeasureEstimate estimate_measure(double lambda, int samples, std::uint64_t seed, const IsoConfig& cfg) {
  if (samples < 100) throw std::invalid_argument("estimate_measure needs at least 100 samples");
  cfg.validate();
  const auto dirs = random_directions(static_cast<std::size_t>(samples), seed);
  std::vector<IsoSample> res(dirs.size());
  parallel_for(dirs.size(), cfg.workers, [&](std::size_t i) {
    try {
      res[i] = solve_kappa(lambda, dirs[i], cfg);
    } catch (const SpectralError&) {
      res[i].passed = false;
    }
  });
  MeasureEstimate m;
  m.lambda = lambda;
  m.samples = samples;
  double sum_k2 = 0.0;
  for (const auto& s : res) {
    if (!s.passed) continue;
    ++m.passes;
    sum_k2 += s.kappa * s.kappa;
    m.max_abs_h = std::max(m.max_abs_h, std::abs(s.h));
  }
  const double n = static_cast<double>(samples);
  m.pass_fraction = static_cast<double>(m.passes) / n;
  m.confidence_halfwidth = 1.96 * std::sqrt(m.pass_fraction * (1.0 - m.pass_fraction) / n);
  m.mean_kappa2 = m.passes > 0 ? sum_k2 / m.passes : 0.0;
  m.surface_area_estimate = 4.0 * std::numbers::pi * m.pass_fraction * m.mean_kappa2;
  return m;
}

nlohmann::json to_json(const MeasureEstimate& m) {
  return {{"lambda", m.lambda},
          {"samples", m.samples},
          {"passes", m.passes},
          {"pass_fraction", m.pass_fraction},
          {"surface_area_estimate", m.surface_area_estimate},
          {"confidence_halfwidth", m.confidence_halfwidth},
          {"mean_kappa2", m.mean_kappa2},
          {"max_abs_h", m.max_abs_h}};
}

}  // namespace gpe
