#include "gpe/trigpoly.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "testing.hpp"

namespace gpe {
namespace {

// Pointwise evaluation f(x) = sum_q f_q exp(i <q, x>), the oracle for the
// coefficient-space algebra.
Complex evaluate(const TrigPolynomial& f, const std::array<double, 3>& x) {
  Complex s{0.0, 0.0};
  for (const auto& [q, c] : f.terms())
    s += c * std::polar(1.0, q[0] * x[0] + q[1] * x[1] + q[2] * x[2]);
  return s;
}

TrigPolynomial random_complex(std::mt19937_64& rng, int radius, int count) {
  std::vector<std::pair<Frequency, Complex>> t;
  std::uniform_int_distribution<int> d(-radius, radius);
  for (int i = 0; i < count; ++i)
    t.push_back({{d(rng), d(rng), d(rng)}, {testing::uniform(rng) - 0.5, testing::uniform(rng) - 0.5}});
  return TrigPolynomial(t);
}

TEST(TrigPolynomial, RepeatedFrequenciesAreSummedAndZerosDropped) {
  TrigPolynomial p(testing::Terms{{{1, 0, 0}, {1.0, 0.0}}, {{1, 0, 0}, {-1.0, 0.0}}, {{0, 2, 0}, {0.5, 0.5}},
                    {{0, 2, 0}, {0.5, 0.0}}});
  EXPECT_EQ(p.size(), 1u);
  EXPECT_EQ(p.coeff({0, 2, 0}), Complex(1.0, 0.5));
  EXPECT_EQ(p.coeff({1, 0, 0}), Complex(0.0, 0.0));
}

TEST(TrigPolynomial, StarNormExamples) {
  EXPECT_EQ(star_norm(TrigPolynomial()), 0.0);
  TrigPolynomial v(testing::Terms{{{1, 0, 0}, {1.0, 0.0}}, {{-1, 0, 0}, {1.0, 0.0}}});
  EXPECT_DOUBLE_EQ(star_norm(v), 2.0);
  EXPECT_DOUBLE_EQ(star_norm(TrigPolynomial(testing::Terms{{{0, 0, 1}, {3.0, 4.0}}})), 5.0);
}

TEST(TrigPolynomial, StarNormIsSubmultiplicative) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const auto f = random_complex(rng, 2, 6);
    const auto g = random_complex(rng, 2, 6);
    EXPECT_LE(star_norm(convolve(f, g)), star_norm(f) * star_norm(g) * (1 + 1e-14));
  }
}

TEST(TrigPolynomial, ConvolutionMatchesPointwiseProduct) {
  std::mt19937_64 rng(5);
  const auto f = random_complex(rng, 2, 8);
  const auto g = random_complex(rng, 3, 5);
  const auto fg = convolve(f, g);
  for (int i = 0; i < 10; ++i) {
    const std::array<double, 3> x{6.0 * testing::uniform(rng), 6.0 * testing::uniform(rng),
                                  6.0 * testing::uniform(rng)};
    EXPECT_NEAR(std::abs(evaluate(fg, x) - evaluate(f, x) * evaluate(g, x)), 0.0, 1e-12);
  }
}

TEST(TrigPolynomial, PlaneWaveProductShiftsFrequency) {
  TrigPolynomial a(testing::Terms{{{1, 0, 0}, {2.0, 0.0}}});
  TrigPolynomial b(testing::Terms{{{0, -1, 3}, {0.0, 1.0}}});
  const auto ab = convolve(a, b);
  ASSERT_EQ(ab.size(), 1u);
  EXPECT_EQ(ab.coeff({1, -1, 3}), Complex(0.0, 2.0));
}

TEST(TrigPolynomial, ModSquaredMatchesPointwiseModulus) {
  std::mt19937_64 rng(8);
  const auto psi = random_complex(rng, 2, 9);
  const auto rho = mod_squared(psi);
  EXPECT_TRUE(rho.is_real_valued());
  EXPECT_NEAR(rho.coeff(kZeroFrequency).real(), [&] {
    double s = 0;
    for (const auto& [q, c] : psi.terms()) s += std::norm(c);
    return s;
  }(), 1e-14);
  for (int i = 0; i < 10; ++i) {
    const std::array<double, 3> x{6.0 * testing::uniform(rng), 6.0 * testing::uniform(rng),
                                  6.0 * testing::uniform(rng)};
    EXPECT_NEAR(evaluate(rho, x).real(), std::norm(evaluate(psi, x)), 1e-12);
    EXPECT_NEAR(evaluate(rho, x).imag(), 0.0, 1e-12);
  }
  const auto direct = convolve(psi, psi.conjugate_reflect());
  EXPECT_NEAR(star_norm(direct - rho), 0.0, 1e-13);
}

TEST(TrigPolynomial, ModSquaredOfConstantAndSingleWave) {
  EXPECT_EQ(mod_squared(TrigPolynomial::constant({3.0, 4.0})), TrigPolynomial::constant(25.0));
  const auto rho = mod_squared(TrigPolynomial(testing::Terms{{{2, 1, 0}, {0.0, 2.0}}}));
  EXPECT_EQ(rho, TrigPolynomial::constant(4.0));
}

TEST(TrigPolynomial, RealValuedAndMeanFree) {
  TrigPolynomial v(testing::Terms{{{1, 0, 0}, {1.0, 2.0}}, {{-1, 0, 0}, {1.0, -2.0}}});
  EXPECT_TRUE(v.is_real_valued());
  EXPECT_TRUE(v.is_mean_free());
  TrigPolynomial w(testing::Terms{{{1, 0, 0}, {1.0, 2.0}}});
  EXPECT_FALSE(w.is_real_valued());
  EXPECT_FALSE(TrigPolynomial::constant(1.0).is_mean_free());
  EXPECT_TRUE(remove_mean(TrigPolynomial::constant(1.0) + v).is_mean_free());
  EXPECT_EQ(remove_mean(TrigPolynomial::constant(1.0) + v), v);
}

TEST(TrigPolynomial, RestrictRadiusReportsDroppedMass) {
  TrigPolynomial f(testing::Terms{{{1, 0, 0}, {1.0, 0.0}}, {{3, 0, 0}, {0.0, -2.0}}, {{0, 2, 2}, {0.5, 0.0}}});
  double dropped = 0.0;
  const auto g = f.restrict_radius(2.5, &dropped);
  EXPECT_EQ(g.size(), 1u);
  EXPECT_DOUBLE_EQ(dropped, 2.5);
  EXPECT_DOUBLE_EQ(star_norm(g) + dropped, star_norm(f));
  EXPECT_DOUBLE_EQ(f.support_radius(), 3.0);
}

TEST(TrigPolynomial, JsonRoundTripIsExact) {
  std::mt19937_64 rng(2);
  const auto f = random_complex(rng, 3, 12);
  EXPECT_EQ(trigpoly_from_json(nlohmann::json::parse(to_json(f).dump())), f);
}

TEST(TrigPolynomial, LoaderRejectsMalformedInput) {
  using nlohmann::json;
  const PotentialRequirements strict{.real_valued = true, .mean_free = true};
  EXPECT_THROW(trigpoly_from_json(json::object()), PotentialFormatError);
  EXPECT_THROW(trigpoly_from_json(json::parse(R"([{"q":[1,0],"re":1}])")), PotentialFormatError);
  EXPECT_THROW(trigpoly_from_json(json::parse(R"([{"q":[1,0,0],"re":1,"x":2}])")), PotentialFormatError);
  EXPECT_THROW(trigpoly_from_json(json::parse(R"([{"q":[1,0,0],"re":1},{"q":[1,0,0],"re":1}])")),
               PotentialFormatError);
  EXPECT_THROW(trigpoly_from_json(json::parse(R"([{"q":[0,0,0],"re":1}])"), strict), PotentialFormatError);
  EXPECT_THROW(trigpoly_from_json(json::parse(R"([{"q":[1,0,0],"re":1}])"), strict), PotentialFormatError);
  EXPECT_NO_THROW(trigpoly_from_json(json::parse(R"([{"q":[1,0,0],"re":1},{"q":[-1,0,0],"re":1}])"), strict));
  EXPECT_THROW(load_potential("/nonexistent/potential.json"), PotentialFormatError);
}

}  // namespace
}  // namespace gpe
