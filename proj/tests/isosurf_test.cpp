#include "gpe/isosurf.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "testing.hpp"

namespace gpe {
namespace {

IsoConfig free_config(double sigma = 0.0) {
  IsoConfig c;
  c.sigma = sigma;
  c.settings.j_max = 2.0;
  return c;
}

IsoConfig periodic_config(std::uint64_t seed, double sigma = 0.0) {
  std::mt19937_64 rng(seed);
  IsoConfig c;
  c.V = testing::random_potential(rng, 2, 0.2);
  c.sigma = sigma;
  c.settings.j_max = 2.0;
  return c;
}

TEST(Directions, FibonacciLattice) {
  const auto d = fibonacci_directions(500);
  ASSERT_EQ(d.size(), 500u);
  Vec3 mean{0, 0, 0};
  double min_sep = 1.0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    EXPECT_NEAR(dot(d[i], d[i]), 1.0, 1e-14);
    for (int a = 0; a < 3; ++a) mean[a] += d[i][a] / 500.0;
    for (std::size_t j = 0; j < i; ++j) min_sep = std::min(min_sep, 1.0 - dot(d[i], d[j]));
  }
  for (int a = 0; a < 3; ++a) EXPECT_NEAR(mean[a], 0.0, 5e-3);
  EXPECT_GT(min_sep, 0.0);
}

TEST(Directions, RandomAreSeededAndUniform) {
  const auto a = random_directions(2000, 11);
  const auto b = random_directions(2000, 11);
  const auto c = random_directions(2000, 12);
  EXPECT_EQ(a, b);
  EXPECT_NE(a, c);
  // Archimedes: z is uniform on [-1, 1], so the fraction with z > 0.5 is 1/4.
  int upper = 0;
  for (const auto& v : a) {
    EXPECT_NEAR(dot(v, v), 1.0, 1e-14);
    if (v[2] > 0.5) ++upper;
  }
  EXPECT_NEAR(upper / 2000.0, 0.25, 0.03);
}

TEST(Directions, TangentBasisIsOrthonormal) {
  for (const auto& nu : fibonacci_directions(50)) {
    const auto e = tangent_basis(nu);
    EXPECT_NEAR(dot(e[0], e[0]), 1.0, 1e-14);
    EXPECT_NEAR(dot(e[1], e[1]), 1.0, 1e-14);
    EXPECT_NEAR(dot(e[0], e[1]), 0.0, 1e-14);
    EXPECT_NEAR(dot(e[0], nu), 0.0, 1e-14);
    EXPECT_NEAR(dot(e[1], nu), 0.0, 1e-14);
  }
}

TEST(Gradient, RecoversLinearField) {
  // h(nu) = <g, nu>; its tangential gradient at nu is the projection of g.
  const Vec3 g{0.3, -0.2, 0.5};
  const auto dirs = fibonacci_directions(2000);
  std::vector<IsoSample> s(dirs.size());
  for (std::size_t i = 0; i < dirs.size(); ++i) {
    s[i].nu = dirs[i];
    s[i].h = dot(g, dirs[i]);
    s[i].passed = true;
  }
  for (std::size_t i : {10u, 500u, 1300u}) {
    const auto grad = tangential_gradient(s, i, 6);
    const auto e = tangent_basis(dirs[i]);
    EXPECT_NEAR(grad[0], dot(g, e[0]), 0.05);
    EXPECT_NEAR(grad[1], dot(g, e[1]), 0.05);
  }
  // Holes around a sample leave it without a gradient.
  for (std::size_t i = 0; i < s.size(); ++i)
    if (i != 10) s[i].passed = false;
  EXPECT_TRUE(std::isnan(tangential_gradient(s, 10, 6)[0]));
}

TEST(Kappa, FreeCaseHasNoDeviation) {
  std::mt19937_64 rng(1);
  for (double sigma : {0.0, 0.01}) {
    const auto cfg = free_config(sigma);
    int solved = 0;
    // A few percent of directions are degenerate for the free operator.
    for (int i = 0; i < 10 && solved < 3; ++i) {
      IsoSample s;
      try {
        s = solve_kappa(900.0, testing::random_direction(rng), cfg);
      } catch (const NoAdmissiblePoint&) {
        continue;
      }
      ++solved;
      EXPECT_TRUE(s.passed);
      EXPECT_LE(std::abs(s.h), 1e-12);
      EXPECT_LE(s.newton_residual, cfg.tol);
    }
    EXPECT_EQ(solved, 3);
  }
}

TEST(Kappa, PeriodicCaseSolvesDispersionRelation) {
  std::mt19937_64 rng(2);
  const auto cfg = periodic_config(3, 0.01);
  const double lambda = 900.0;
  const auto s = solve_kappa(lambda, testing::random_direction(rng), cfg);
  ASSERT_TRUE(s.passed);
  EXPECT_LE(s.newton_residual, cfg.tol);
  EXPECT_LE(std::abs(s.h), std::pow(30.0, -1.0 - cfg.settings.delta));
  EXPECT_GT(s.h, -1.0);  // kappa close to k~, not a spurious root
  EXPECT_THROW(solve_kappa(1.0, s.nu, cfg), std::invalid_argument);
}

TEST(Surface, DeterministicAcrossWorkers) {
  const auto dirs = fibonacci_directions(24);
  auto cfg = periodic_config(4);
  cfg.workers = 1;
  const auto a = trace_surface(400.0, dirs, cfg);
  cfg.workers = 3;
  const auto b = trace_surface(400.0, dirs, cfg);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].passed, b[i].passed);
    if (!a[i].passed) continue;
    EXPECT_EQ(a[i].kappa, b[i].kappa);
    EXPECT_EQ(a[i].h, b[i].h);
  }
}

TEST(Measure, FreeCaseSamplesWholeSphere) {
  const auto cfg = free_config();
  EXPECT_THROW(estimate_measure(400.0, 50, 1, cfg), std::invalid_argument);
  const auto m = estimate_measure(400.0, 120, 1, cfg);
  EXPECT_GE(m.pass_fraction, 0.95);
  EXPECT_NEAR(m.mean_kappa2, 400.0, 1e-9);
  EXPECT_NEAR(m.surface_area_estimate, 4.0 * std::numbers::pi * 400.0 * m.pass_fraction, 1e-6);
  const auto again = estimate_measure(400.0, 120, 1, cfg);
  EXPECT_EQ(m.passes, again.passes);
  EXPECT_EQ(m.surface_area_estimate, again.surface_area_estimate);
}

}  // namespace
}  // namespace gpe
