#include "gpe/linop.hpp"

#include <cmath>
#include <numbers>
#include <sstream>
#include <string>

namespace gpe {

namespace {

bool in_same_block(const ModelDecomposition& model, std::size_t a, std::size_t b, Frequency* gen) {
  auto ga = model.block_of(a);
  if (!ga) return false;
  auto gb = model.block_of(b);
  if (!gb || *ga != *gb) return false;
  *gen = *ga;
  return true;
}

// Value of the block term P_q V_q P_q at (m, j), zero outside the blocks.
Complex block_entry(const ModelDecomposition& model, const LatticeBasis& basis, std::size_t m,
                    std::size_t j) {
  Frequency g{};
  if (!in_same_block(model, m, j, &g)) return {0.0, 0.0};
  auto it = model.parts.find(g);
  if (it == model.parts.end()) return {0.0, 0.0};
  return it->second.coeff(basis.index(m) - basis.index(j));
}

std::string fmt(double x) {
  std::ostringstream os;
  os.precision(6);
  os << x;
  return os.str();
}

}  // namespace

Matrix assemble_free(const QuasiMomentum& t, const LatticeBasis& basis) {
  const auto n = static_cast<Eigen::Index>(basis.size());
  Matrix h = Matrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) h(i, i) = momentum(basis.index(i), t).square;
  return h;
}

Matrix assemble_full(const TrigPolynomial& v, const QuasiMomentum& t, const LatticeBasis& basis) {
  Matrix h = assemble_free(t, basis);
  for (std::size_t j = 0; j < basis.size(); ++j) {
    for (const auto& [q, c] : v.terms()) {
      if (auto m = basis.ordinal_of(basis.index(j) + q)) h(*m, j) += c;
    }
  }
  return h;
}

ModelOperators assemble_model(const TrigPolynomial& v, const QuasiMomentum& t,
                              const ModelDecomposition& model, const LatticeBasis& basis) {
  ModelOperators ops;
  ops.H_hat = assemble_free(t, basis);
  const auto n = static_cast<Eigen::Index>(basis.size());
  ops.W_hat = Matrix::Zero(n, n);
  for (std::size_t j = 0; j < basis.size(); ++j) {
    for (const auto& [q, c] : v.terms()) {
      auto m = basis.ordinal_of(basis.index(j) + q);
      if (!m) continue;
      if (block_entry(model, basis, *m, j) != Complex(0.0, 0.0))
        ops.H_hat(*m, j) += c;
      else
        ops.W_hat(*m, j) += c;
    }
  }
  return ops;
}

Matrix assemble_perturbation(const TrigPolynomial& w_tilde, const ModelDecomposition& model,
                             const LatticeBasis& basis) {
  const auto n = static_cast<Eigen::Index>(basis.size());
  Matrix w = Matrix::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index m = 0; m < n; ++m) {
      const Frequency q = basis.index(m) - basis.index(j);
      w(m, j) = w_tilde.coeff(q) - block_entry(model, basis, m, j);
    }
  }
  return w;
}

double norm_one(const Matrix& m) {
  double best = 0.0;
  for (Eigen::Index c = 0; c < m.cols(); ++c) best = std::max(best, m.col(c).cwiseAbs().sum());
  return best;
}

double norm_one(const Vector& v) { return v.cwiseAbs().sum(); }

ContourSpec ContourSpec::around(double k, double delta, int nodes) {
  ContourSpec c;
  c.center = k * k;
  c.radius = std::pow(k, -1.0 - delta);
  c.nodes = nodes;
  c.validate();
  return c;
}

void ContourSpec::validate() const {
  if (!(radius > 0.0 && radius < 1.0)) throw std::invalid_argument("contour radius must lie in (0, 1)");
  if (nodes < 8 || nodes % 2 != 0) throw std::invalid_argument("contour nodes must be even and >= 8");
}

PreparedModel::PreparedModel(Matrix h_hat) : h_hat_(std::move(h_hat)) {
  const auto n = h_hat_.rows();
  for (Eigen::Index j = 0; j < n && diagonal_; ++j)
    for (Eigen::Index i = 0; i < n; ++i)
      if (i != j && h_hat_(i, j) != Complex(0.0, 0.0)) {
        diagonal_ = false;
        break;
      }
  if (diagonal_) {
    eigenvalues_ = h_hat_.diagonal().real();
  } else {
    Eigen::SelfAdjointEigenSolver<Matrix> es(h_hat_);
    eigenvalues_ = es.eigenvalues();
    eigenvectors_ = es.eigenvectors();
  }
}

Matrix PreparedModel::to_eigenbasis(const Matrix& w) const {
  if (diagonal_) return w;
  return eigenvectors_.adjoint() * w * eigenvectors_;
}

Matrix PreparedModel::from_eigenbasis(const Matrix& m) const {
  if (diagonal_) return m;
  return eigenvectors_ * m * eigenvectors_.adjoint();
}

Vector PreparedModel::vector_from_eigenbasis(const Vector& v) const {
  if (diagonal_) return v;
  return eigenvectors_ * v;
}

Vector PreparedModel::vector_to_eigenbasis(const Vector& v) const {
  if (diagonal_) return v;
  return eigenvectors_.adjoint() * v;
}

SpectralSeries series_terms(const PreparedModel& model, const Matrix& w_hat,
                            const ContourSpec& contour, std::size_t j_star, int r_max,
                            const SeriesOptions& options) {
  contour.validate();
  if (r_max < 2) throw std::invalid_argument("r_max must be >= 2");
  const auto n = static_cast<Eigen::Index>(model.size());
  if (w_hat.rows() != n || w_hat.cols() != n) throw std::invalid_argument("W_hat size mismatch");
  if (j_star >= model.size()) throw std::invalid_argument("j_star outside the basis");

  const double c = contour.center;
  const double rho = contour.radius;
  const Eigen::VectorXd& d = model.eigenvalues();

  // Locate the enclosed eigenvalue and enforce the guard band.
  Eigen::Index inside = -1;
  int count = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double dist = std::abs(d(i) - c);
    if (std::abs(dist - rho) < options.guard_band * rho)
      throw ResonantContour("eigenvalue " + fmt(d(i)) + " within the guard band of C0 (center " +
                            fmt(c) + ", radius " + fmt(rho) + ")");
    if (dist < rho) {
      inside = i;
      ++count;
    }
  }
  if (count != 1)
    throw ResonantContour("H_hat has " + std::to_string(count) + " eigenvalues inside C0");
  if (model.diagonal()) {
    if (inside != static_cast<Eigen::Index>(j_star))
      throw ResonantContour("enclosed eigenvalue does not belong to j*");
  } else if (std::norm(model.eigenvectors()(static_cast<Eigen::Index>(j_star), inside)) < 0.5) {
    throw ResonantContour("enclosed eigenvector is not dominated by j*");
  }

  const Matrix w = model.to_eigenbasis(w_hat);
  Vector e_star = Vector::Zero(n);
  e_star(static_cast<Eigen::Index>(j_star)) = 1.0;
  const Vector col0 = model.vector_to_eigenbasis(e_star);

  const bool full = options.full_matrices;
  const bool literal = full && options.literal_trace;
  std::vector<Complex> g(static_cast<std::size_t>(r_max), Complex(0.0, 0.0));
  std::vector<Complex> g_lit(literal ? static_cast<std::size_t>(r_max) : 0, Complex(0.0, 0.0));
  std::vector<Vector> gcol(static_cast<std::size_t>(r_max), Vector::Zero(n));
  std::vector<Matrix> gfull;
  if (full) gfull.assign(static_cast<std::size_t>(r_max), Matrix::Zero(n, n));

  const int nodes = contour.nodes;
  Vector dinv(n);
  Vector s_off(n);
  std::vector<Complex> a(static_cast<std::size_t>(r_max));
  std::vector<Complex> sm(static_cast<std::size_t>(r_max) + 1);
  std::vector<Complex> lm(static_cast<std::size_t>(r_max) + 1);
  Matrix kmat;
  Matrix tmp;

  for (int node = 0; node < nodes; ++node) {
    const double theta = 2.0 * std::numbers::pi * node / nodes;
    const Complex shift = std::polar(rho, theta);
    const Complex z = c + shift;
    // (1 / 2 pi i) oint f dz ~ sum_n f(z_n) (z_n - c) / N
    const Complex weight = shift / static_cast<double>(nodes);
    for (Eigen::Index i = 0; i < n; ++i) dinv(i) = 1.0 / (d(i) - z);
    s_off = dinv;
    s_off(inside) = 0.0;
    const Complex pole = dinv(inside);

    // Pole-extracted log det: a_m = e^T W (S W)^m e.
    Vector y = w.col(inside);
    a[0] = y(inside);
    for (int m = 1; m < r_max; ++m) {
      y = w * s_off.cwiseProduct(y);
      a[static_cast<std::size_t>(m)] = y(inside);
    }
    for (int m = 1; m <= r_max; ++m) {
      const double sign = (m % 2 == 1) ? 1.0 : -1.0;
      sm[static_cast<std::size_t>(m)] = sign * a[static_cast<std::size_t>(m - 1)] * pole;
    }
    for (int m = 1; m <= r_max; ++m) {
      Complex acc = static_cast<double>(m) * sm[static_cast<std::size_t>(m)];
      for (int i = 1; i < m; ++i)
        acc -= static_cast<double>(i) * lm[static_cast<std::size_t>(i)] * sm[static_cast<std::size_t>(m - i)];
      lm[static_cast<std::size_t>(m)] = acc / static_cast<double>(m);
      g[static_cast<std::size_t>(m - 1)] -= weight * lm[static_cast<std::size_t>(m)];
    }

    if (full) {
      kmat = dinv.asDiagonal();
      for (int r = 1; r <= r_max; ++r) {
        if (literal) {
          const double sign = (r % 2 == 0) ? 1.0 : -1.0;
          const Complex tr = kmat.cwiseProduct(w.transpose()).sum();
          g_lit[static_cast<std::size_t>(r - 1)] += sign / r * weight * tr;
        }
        tmp.noalias() = w * kmat;
        kmat = dinv.asDiagonal() * tmp;
        const double sign = (r % 2 == 1) ? 1.0 : -1.0;
        gfull[static_cast<std::size_t>(r - 1)] += (sign * weight) * kmat;
      }
    } else {
      Vector x = dinv.cwiseProduct(col0);
      for (int r = 1; r <= r_max; ++r) {
        x = dinv.cwiseProduct(w * x);
        const double sign = (r % 2 == 1) ? 1.0 : -1.0;
        gcol[static_cast<std::size_t>(r - 1)] += (sign * weight) * x;
      }
    }
  }

  SpectralSeries s;
  s.j_star = j_star;
  s.r_max = r_max;
  s.full = full;
  s.lambda0 = d(inside);

  if (full) {
    for (auto& m : gfull) m = model.from_eigenbasis(m);
    for (int r = 0; r < r_max; ++r)
      gcol[static_cast<std::size_t>(r)] = gfull[static_cast<std::size_t>(r)].col(static_cast<Eigen::Index>(j_star));
  } else {
    for (auto& v : gcol) v = model.vector_from_eigenbasis(v);
  }

  std::vector<double> norms(static_cast<std::size_t>(r_max));
  for (int r = 0; r < r_max; ++r)
    norms[static_cast<std::size_t>(r)] =
        full ? norm_one(gfull[static_cast<std::size_t>(r)]) : norm_one(gcol[static_cast<std::size_t>(r)]);

  int used = r_max;
  for (int r = 0; r < r_max; ++r) {
    if (norms[static_cast<std::size_t>(r)] < options.stop_norm) {
      used = r + 1;
      s.stopped_early = true;
      break;
    }
  }
  if (!s.stopped_early && r_max >= 6 &&
      norms[static_cast<std::size_t>(r_max - 1)] >= norms[static_cast<std::size_t>(r_max - 6)])
    throw SeriesDiverging("||G_r||_1 did not decay over the last five orders (" +
                          fmt(norms[static_cast<std::size_t>(r_max - 6)]) + " -> " +
                          fmt(norms[static_cast<std::size_t>(r_max - 1)]) + ")");
  s.r_used = used;
  s.term_norms.assign(norms.begin(), norms.begin() + used);
  s.g_terms.assign(g.begin(), g.begin() + used);
  s.G_columns.assign(gcol.begin(), gcol.begin() + used);

  double corr = 0.0;
  // g_1 vanishes when W_hat has no part inside the blocks of H_hat, but a
  // nonlinear W~ generally does.
  for (int r = 1; r <= used; ++r) corr += s.g_terms[static_cast<std::size_t>(r - 1)].real();
  for (const auto& x : s.g_terms) s.max_imag_g = std::max(s.max_imag_g, std::abs(x.imag()));
  s.correction = corr;
  s.lambda = s.lambda0 + corr;

  if (literal) {
    s.g_terms_literal.assign(g_lit.begin(), g_lit.begin() + used);
    for (int r = 0; r < used; ++r)
      s.literal_trace_deviation = std::max(
          s.literal_trace_deviation, std::abs(s.g_terms_literal[static_cast<std::size_t>(r)] -
                                              s.g_terms[static_cast<std::size_t>(r)]));
  }

  // Zeroth order: spectral projector of H_hat for the enclosed eigenvalue.
  Vector u = Vector::Zero(n);
  u(inside) = 1.0;
  u = model.vector_from_eigenbasis(u);
  s.E_column = u * std::conj(u(static_cast<Eigen::Index>(j_star)));
  for (int r = 0; r < used; ++r) s.E_column += s.G_columns[static_cast<std::size_t>(r)];
  if (full) {
    s.G_terms.assign(std::make_move_iterator(gfull.begin()),
                     std::make_move_iterator(gfull.begin() + used));
    s.E = u * u.adjoint();
    for (const auto& m : s.G_terms) s.E += m;
  }
  return s;
}

OracleEigenpair oracle_eigenpair(const Matrix& h, double lo, double hi) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(h);
  const auto& ev = es.eigenvalues();
  Eigen::Index hit = -1;
  int count = 0;
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (ev(i) >= lo && ev(i) <= hi) {
      hit = i;
      ++count;
    }
  }
  if (count == 0) throw NoEigenvalueInWindow("no eigenvalue in [" + fmt(lo) + ", " + fmt(hi) + "]");
  if (count > 1)
    throw MultipleEigenvaluesInWindow(std::to_string(count) + " eigenvalues in [" + fmt(lo) + ", " +
                                      fmt(hi) + "]");
  OracleEigenpair out;
  out.lambda = ev(hit);
  out.eigenvector = es.eigenvectors().col(hit);
  out.E = out.eigenvector * out.eigenvector.adjoint();
  return out;
}

ContourNorms contour_norms(const PreparedModel& model, const Matrix& w_hat,
                           const ContourSpec& contour, int nodes) {
  const auto n = static_cast<Eigen::Index>(model.size());
  const Matrix w = model.to_eigenbasis(w_hat);
  const Eigen::VectorXd& d = model.eigenvalues();
  ContourNorms out;
  Vector s(n);
  for (int node = 0; node < nodes; ++node) {
    const double theta = 2.0 * std::numbers::pi * node / nodes;
    const Complex z = contour.center + std::polar(contour.radius, theta);
    for (Eigen::Index i = 0; i < n; ++i) s(i) = 1.0 / std::sqrt(Complex(d(i), 0.0) - z);
    const Matrix b = s.asDiagonal() * w * s.asDiagonal();
    const Matrix b3 = b * (b * b);
    if (model.diagonal()) {
      out.resolvent_half_norm = std::max(out.resolvent_half_norm, s.cwiseAbs().maxCoeff());
      out.normA = std::max(out.normA, norm_one(b));
      out.normA3 = std::max(out.normA3, norm_one(b3));
    } else {
      const Matrix half = model.from_eigenbasis(Matrix(s.asDiagonal()));
      out.resolvent_half_norm = std::max(out.resolvent_half_norm, norm_one(half));
      out.normA = std::max(out.normA, norm_one(model.from_eigenbasis(b)));
      out.normA3 = std::max(out.normA3, norm_one(model.from_eigenbasis(b3)));
    }
  }
  return out;
}

GradientCheck gradient_check(const std::function<double(const Vec3&)>& correction,
                             const QuasiMomentum& t, const Frequency& j_star, double step) {
  if (!(step > 0.0)) throw std::invalid_argument("gradient step must be positive");
  GradientCheck out;
  const Momentum p = momentum(j_star, t);
  double dev2 = 0.0;
  for (int a = 0; a < 3; ++a) {
    Vec3 tp = t.t;
    Vec3 tm = t.t;
    tp[a] += step;
    tm[a] -= step;
    const double dc = (correction(tp) - correction(tm)) / (2.0 * step);
    out.grad[a] = 2.0 * p.vector[a] + dc;
    dev2 += dc * dc;
  }
  out.deviation = std::sqrt(dev2);
  return out;
}

nlohmann::json to_json(const SpectralSeries& s) {
  nlohmann::json g = nlohmann::json::array();
  for (const auto& x : s.g_terms) g.push_back(x.real());
  return {{"j_star", s.j_star},
          {"lambda", s.lambda},
          {"lambda0", s.lambda0},
          {"correction", s.correction},
          {"g_terms", g},
          {"term_norms", s.term_norms},
          {"r_used", s.r_used},
          {"r_max", s.r_max},
          {"diagnostics",
           {{"full_matrices", s.full},
            {"stopped_early", s.stopped_early},
            {"max_imag_g", s.max_imag_g}}}};
}

}  // namespace gpe
