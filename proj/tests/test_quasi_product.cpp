#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "speclab/quasi_product.hpp"
#include "support/random_triples.hpp"

namespace speclab {
namespace {

using std::numbers::pi;

// Outer (2, {0,1}, {0,1}); inner R = 2, B(0) = {0,1}, B(1) = {0,3}, L = {0,1}.
QuasiProductSpec counterexample_spec() {
  QuasiProductSpec s;
  s.r1 = IntMatrix::scalar(2);
  s.a = {{0}, {1}};
  s.l1 = FrequencySet({0, 1});
  s.r = IntMatrix::scalar(2);
  s.b_family = {DigitSet({0, 1}), DigitSet({0, 3})};
  s.l = FrequencySet({0, 1});
  return s;
}

TEST(QuasiProduct, ExampleBlockTriple) {
  const auto t = build_quasi_product(counterexample_spec());
  EXPECT_EQ(t.R(), IntMatrix::from_rows({{2, 0}, {0, 2}}));
  EXPECT_TRUE(t.B().same_elements(DigitSet(2, {{0, 0}, {0, 1}, {1, 0}, {1, 3}})));
  EXPECT_TRUE(t.L().same_elements(FrequencySet(2, {{0, 0}, {0, 1}, {1, 0}, {1, 1}})));
  EXPECT_TRUE(t.is_verified());
}

TEST(QuasiProduct, TrivialOuter) {
  QuasiProductSpec s;
  s.r1 = IntMatrix::scalar(3);
  s.a = {{0}};
  s.l1 = FrequencySet({0});
  s.r = IntMatrix::scalar(4);
  s.b_family = {DigitSet({0, 2})};
  s.l = FrequencySet({0, 1});
  const auto t = build_quasi_product(s);
  EXPECT_TRUE(t.B().same_elements(DigitSet(2, {{0, 0}, {0, 2}})));
  EXPECT_TRUE(t.is_verified());
}

TEST(QuasiProduct, Coupled) {
  auto s = counterexample_spec();
  s.c = IntMatrix::scalar(1);
  const auto t = build_quasi_product(s);
  EXPECT_EQ(t.R(), IntMatrix::from_rows({{2, 0}, {1, 2}}));
  EXPECT_TRUE(t.is_verified());
}

TEST(QuasiProduct, RejectsBadComponents) {
  auto s = counterexample_spec();
  s.b_family[1] = DigitSet({0, 2});
  EXPECT_THROW(build_quasi_product(s), VerificationFailed);
  s = counterexample_spec();
  s.b_family.pop_back();
  EXPECT_THROW(build_quasi_product(s), DimensionMismatch);
}

TEST(QuasiProduct, RandomizedSpecsVerify) {
  std::mt19937_64 rng(91);
  std::uniform_int_distribution<std::int64_t> centry(-2, 2);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = std::uniform_int_distribution<std::size_t>(1, 3)(rng);
    const std::size_t m = std::uniform_int_distribution<std::size_t>(1, 3)(rng);
    const auto r1 = testing::random_expansive_1d(rng, 5, n);
    const auto r = testing::random_expansive_1d(rng, 5, m);
    const auto outer = testing::random_triple_1d(rng, r1, n);
    const auto inner = testing::random_family_1d(rng, r, m, n);
    QuasiProductSpec s;
    s.r1 = outer.R();
    s.a = outer.B().elements();
    s.l1 = outer.L();
    s.r = inner.front().R();
    for (const auto& t : inner) s.b_family.push_back(t.B());
    s.l = inner.front().L();
    s.c = IntMatrix::scalar(centry(rng));
    const auto t = build_quasi_product(s);
    EXPECT_LT(t.residual(), 1e-9);
    // Block determinant and digit count.
    EXPECT_EQ(det(t.R()), det(s.r1) * det(s.r));
    EXPECT_EQ(t.N(), n * m);
  }
}

TEST(QuasiProduct, CompleteResidueInherited) {
  auto s = counterexample_spec();
  EXPECT_TRUE(is_complete_residue_set(build_quasi_product(s).R(), build_quasi_product(s).B().elements()));
  s.c = IntMatrix::scalar(-2);
  const auto t = build_quasi_product(s);
  EXPECT_TRUE(is_complete_residue_set(t.R(), t.B().elements()));
}

TEST(Padding, Examples) {
  const std::vector<DigitSet> fam{DigitSet({0, 1}), DigitSet({0, 3})};
  const auto s = build_1d_padding(2, fam, FrequencySet({0, 1}), 3);
  EXPECT_EQ(s.r1, IntMatrix::scalar(6));
  ASSERT_EQ(s.b_family.size(), 6u);
  for (std::size_t i = 0; i < 6; ++i) EXPECT_EQ(s.b_family[i], fam[i % 2]);
  EXPECT_TRUE(build_quasi_product(s).is_verified());

  EXPECT_THROW(build_1d_padding(4, fam, FrequencySet({0, 1}), 2), InvalidPadding);

  const auto one = build_1d_padding(3, {DigitSet({0, 1, 2})}, FrequencySet({0, 1, 2}), 2);
  EXPECT_EQ(one.r1, IntMatrix::scalar(2));
  EXPECT_EQ(one.b_family[0], one.b_family[1]);
}

TEST(Padding, DefaultP) {
  const std::vector<DigitSet> fam{DigitSet({0, 1}), DigitSet({0, 3})};
  EXPECT_EQ(build_1d_padding(2, fam, FrequencySet({0, 1})).r1, IntMatrix::scalar(4));  // p = 1 gives pN = R
  EXPECT_EQ(build_1d_padding(3, fam, FrequencySet({0, 1})).r1, IntMatrix::scalar(2));
}

TEST(Fiber, Examples) {
  const auto s = counterexample_spec();
  const auto f0 = fiber_system(s, {0});
  EXPECT_EQ(f0.system.stage(5)->B(), DigitSet({0, 1}));
  EXPECT_NEAR(f0.pi[0], 0.0, 1e-15);
  EXPECT_EQ(f0.g[0], 0.0);

  const auto f1 = fiber_system(s, {0, 1});
  EXPECT_EQ(f1.system.stage(1)->B(), DigitSet({0, 1}));
  EXPECT_EQ(f1.system.stage(9)->B(), DigitSet({0, 3}));
  EXPECT_NEAR(f1.pi[0], 0.5, 1e-12);  // binary 0.0111... = 1/2
  EXPECT_LE(f1.pi_error, 1e-12);
}

TEST(Fiber, CoupledOffset) {
  // D_1 = -R^-1 C R1^-1; with R1 = R = 2, C = 1: D_k = -k 2^-(k+1).
  auto s = counterexample_spec();
  s.c = IntMatrix::scalar(1);
  const auto f = fiber_system(s, {1}, TailRule::RepeatLast);
  double oracle = 0.0;
  for (int k = 1; k < 200; ++k) oracle -= k * std::pow(2.0, -(k + 1));
  EXPECT_NEAR(f.g[0], oracle, 1e-12 + f.g_error);
  EXPECT_NEAR(oracle, -1.0, 1e-12);
}

TEST(Fiber, FourierTransformIsTheRandomProduct) {
  const auto s = counterexample_spec();
  std::mt19937_64 rng(4);
  std::bernoulli_distribution coin(0.5);
  std::uniform_real_distribution<double> u(-20.0, 20.0);
  std::vector<std::size_t> w(30);
  for (auto& x : w) x = coin(rng);
  const auto f = fiber_system(s, w);
  for (int i = 0; i < 50; ++i) {
    const double xi = u(rng);
    // Independent oracle: prod_k conj m_{B(w_k)}(2^-k xi), repeating the last letter.
    Complex p(1.0, 0.0);
    for (int k = 1; k <= 80; ++k) {
      const std::size_t letter = w[std::min<std::size_t>(k, w.size()) - 1];
      const double eta = xi * std::pow(2.0, -k);
      const double b = letter == 0 ? 1.0 : 3.0;
      p *= (1.0 + std::exp(Complex(0.0, -2.0 * pi * b * eta))) / 2.0;
    }
    const double x[] = {xi};
    const auto v = ft_eval(f.system, x);
    EXPECT_LE(std::abs(v.value - p), v.tail_bound + 1e-12);
  }
}

TEST(Tiling, Examples) {
  EXPECT_TRUE(lattice_tiling_check(ConvolutionSystem::self_affine(make_triple(2, {0, 1}, {0, 1})),
                                   IntMatrix::scalar(1), 64)
                  .pass);
  const auto singular = lattice_tiling_check(ConvolutionSystem::self_affine(make_triple(4, {0, 2}, {0, 1})),
                                             IntMatrix::scalar(1), 64);
  EXPECT_FALSE(singular.pass);
  // Oracle: max over 0 < |n| <= 64 of prod_k |cos(2 pi n / 4^k)| is attained
  // at n = 2 (and at 8, 32, which give the same product).
  double oracle = 1.0;
  for (int k = 1; k < 60; ++k) oracle *= std::abs(std::cos(2.0 * pi * 2.0 / std::pow(4.0, k)));
  EXPECT_NEAR(singular.max_offlattice_mass, oracle, 1e-9);
  const double w = std::abs(singular.witness[0]);
  EXPECT_TRUE(w == 2.0 || w == 8.0 || w == 32.0) << w;

  const auto s = counterexample_spec();
  for (const std::vector<std::size_t>& w : {std::vector<std::size_t>{0, 1}, {1, 0, 0, 1, 1, 0}, {1}})
    EXPECT_TRUE(lattice_tiling_check(fiber_system(s, w).system, IntMatrix::scalar(1), 64).pass);
}

TEST(Tiling, HermiteNormalForms) {
  // Number of sublattices of Z^2 of index n is sigma_1(n).
  EXPECT_EQ(hermite_normal_forms(2, 1).size(), 1u);
  EXPECT_EQ(hermite_normal_forms(2, 4).size(), 7u);
  EXPECT_EQ(hermite_normal_forms(2, 6).size(), 12u);
  EXPECT_EQ(hermite_normal_forms(1, 5).size(), 1u);
  EXPECT_EQ(hermite_normal_forms(3, 2).size(), 7u);
}

TEST(Tiling, FindLattice) {
  // Uniform measure on [0, 2]: tiles by 2Z.
  const auto s = ConvolutionSystem::self_affine(make_triple(3, {0, 2, 4}, {0, 1, 2}));
  const auto g = find_tiling_lattice(s, 16);
  ASSERT_TRUE(g.has_value());
  EXPECT_EQ(*g, IntMatrix::scalar(2));
  EXPECT_EQ(find_tiling_lattice(ConvolutionSystem::self_affine(make_triple(2, {0, 1}, {0, 1})), 16),
            IntMatrix::scalar(1));
  // The {0,1}/{0,3} block triple is Lebesgue on a tile of area 1.
  const auto sq = find_tiling_lattice(ConvolutionSystem::self_affine(build_quasi_product(counterexample_spec())), 6, 4);
  ASSERT_TRUE(sq.has_value());
  EXPECT_EQ(boost::multiprecision::abs(det(*sq)), 1);
  EXPECT_FALSE(find_tiling_lattice(ConvolutionSystem::self_affine(make_triple(4, {0, 2}, {0, 1})), 8, 4));
}

TEST(ProductCheck, IncompleteLambda2Fails) {
  const auto rep = product_spectrum_check(counterexample_spec(), SpectrumGenerator::lattice(IntMatrix::scalar(1)),
                                          SpectrumGenerator::lattice(IntMatrix::scalar(2)), GridSpec::uniform(2, 3),
                                          8, {}, {}, 0.0);
  EXPECT_FALSE(rep.report.pass);
  ASSERT_TRUE(rep.agrees.has_value());
  EXPECT_TRUE(*rep.agrees);
}

TEST(ProductCheck, TrivialOuterIsTheFiber) {
  QuasiProductSpec s;
  s.r1 = IntMatrix::scalar(2);
  s.a = {{0}};
  s.l1 = FrequencySet({0});
  s.r = IntMatrix::scalar(2);
  s.b_family = {DigitSet({0, 1})};
  s.l = FrequencySet({0, 1});
  // The outer factor is delta_0, so Lambda1 = {0} suffices.
  const auto rep = product_spectrum_check(s, SpectrumGenerator::explicit_finite({{0}}),
                                          SpectrumGenerator::lattice(IntMatrix::scalar(1)),
                                          GridSpec::uniform(2, 4), 200);
  const auto fiber = check_spectrum(fiber_system(s, {0}).system, SpectrumGenerator::lattice(IntMatrix::scalar(1)),
                                    GridSpec::uniform(1, 4), 200);
  EXPECT_EQ(rep.report.pass, fiber.pass);
  EXPECT_NEAR(rep.report.min_q, fiber.min_q, 1e-12);
}

}  // namespace
}  // namespace speclab
