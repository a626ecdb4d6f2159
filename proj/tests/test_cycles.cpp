#include <gtest/gtest.h>

#include <numeric>
#include <random>
#include <set>

#include "speclab/cycles.hpp"

namespace speclab {
namespace {

using PointSet = std::set<RatVector>;

PointSet points_of(const CycleReport& rep) {
  PointSet s;
  for (const auto& c : rep.cycles) s.insert(c.points.begin(), c.points.end());
  return s;
}

std::set<PointSet> cycle_sets(const CycleReport& rep) {
  std::set<PointSet> s;
  for (const auto& c : rep.cycles) s.insert(PointSet(c.points.begin(), c.points.end()));
  return s;
}

RatVector q(std::int64_t p, std::int64_t d = 1) { return {Rational(p, d)}; }

// Oracle for d = 1: extreme points are multiples of 1/gcd(B) inside the
// invariant interval. Points on a closed walk of length <= m_max in the graph
// x -> tau_l(x), restricted to that candidate set, are exactly the points of
// extreme cycles of period <= m_max.
PointSet oracle_cycle_points(std::int64_t r, const std::vector<std::int64_t>& b, const std::vector<std::int64_t>& l,
                             int m_max) {
  std::int64_t g = 0;
  for (auto x : b) g = std::gcd(g, x);
  std::int64_t lmax = 0;
  for (auto x : l) lmax = std::max(lmax, std::abs(x));
  const double radius = static_cast<double>(lmax) / (std::abs(static_cast<double>(r)) - 1.0) + 1.0;
  std::vector<Rational> cand;
  if (g == 0) {
    // B = {0}: every point is extreme; cycle points then are the fixed
    // points of compositions, which are not on a finite grid. Not used.
    return {};
  }
  for (std::int64_t k = -static_cast<std::int64_t>(radius * g) - 1; k <= static_cast<std::int64_t>(radius * g) + 1; ++k)
    cand.push_back(Rational(k, g));
  std::set<Rational> cs(cand.begin(), cand.end());
  auto next = [&](const Rational& x) {
    std::vector<Rational> out;
    for (auto ell : l) {
      const Rational y = (x + ell) / r;
      if (cs.count(y)) out.push_back(y);
    }
    return out;
  };
  PointSet on_cycle;
  for (const auto& x : cand) {
    // x lies on a cycle of period <= m_max iff some walk of that length
    // returns to x.
    std::set<Rational> frontier{x};
    for (int step = 1; step <= m_max && !on_cycle.count(RatVector{x}); ++step) {
      std::set<Rational> grown;
      for (const auto& y : frontier)
        for (const auto& z : next(y)) grown.insert(z);
      if (grown.count(x)) on_cycle.insert(RatVector{x});
      frontier = std::move(grown);
    }
  }
  return on_cycle;
}

TEST(FixedPoint, Examples) {
  const auto t4 = make_triple(4, {0, 2}, {0, 1});
  EXPECT_EQ(fixed_point_of_word(t4, {{0}}), q(0));
  EXPECT_EQ(fixed_point_of_word(make_triple(4, {0, 2}, {0, 3}), {{3}}), q(1));
  EXPECT_EQ(fixed_point_of_word(make_triple(2, {0, 1}, {0, 1}), {{1}}), q(1));
  // tau_0 o tau_1 on R = 4: x = ((x + 1)/4)/4 gives x = 1/15.
  EXPECT_EQ(fixed_point_of_word(t4, {{0}, {1}}), q(1, 15));
}

TEST(FindCycles, Examples) {
  auto rep = find_extreme_cycles(make_triple(4, {0, 2}, {0, 1}), 3);
  EXPECT_EQ(cycle_sets(rep), (std::set<PointSet>{{q(0)}}));
  EXPECT_EQ(rep.m_max, 3);
  EXPECT_NE(rep.caveat.find("<= 3"), std::string::npos);

  rep = find_extreme_cycles(make_triple(2, {0, 1}, {0, 1}), 3);
  EXPECT_EQ(cycle_sets(rep), (std::set<PointSet>{{q(0)}, {q(1)}}));

  rep = find_extreme_cycles(make_triple(4, {0, 2}, {0, 3}), 2);
  EXPECT_EQ(cycle_sets(rep), (std::set<PointSet>{{q(0)}, {q(1)}}));
}

TEST(FindCycles, CanonicalWords) {
  // Period-2 cycle {1/3, 2/3}... for R = 2, B = {0, 3}, L = {0, 1}: 3x in Z.
  const auto rep = find_extreme_cycles(make_triple(2, {0, 3}, {0, 1}), 4);
  EXPECT_EQ(cycle_sets(rep), (std::set<PointSet>{{q(0)}, {q(1)}, {q(1, 3), q(2, 3)}}));
  for (const auto& c : rep.cycles) {
    EXPECT_EQ(c.word.size(), c.period());
    auto w = c.word_indices;
    for (std::size_t r = 1; r < w.size(); ++r) {
      std::rotate(w.begin(), w.begin() + 1, w.end());
      EXPECT_LE(c.word_indices, w);
    }
  }
}

TEST(FindCycles, OrbitClosureAndContainment) {
  const auto t = make_triple(2, {0, 3}, {0, 1});
  const RatMatrix a = inverse_transpose(t.R());
  const auto rep = find_extreme_cycles(t, 5);
  for (const auto& c : rep.cycles) {
    const std::size_t m = c.period();
    for (std::size_t j = 0; j < m; ++j) {
      RatVector y = c.points[j];
      y[0] += c.word[m - 1 - j][0];
      EXPECT_EQ(a.apply(y), c.points[(j + 1) % m]);
      EXPECT_LE(abs(c.points[j][0]), Rational(rep.containment_radius));
    }
  }
}

TEST(FindCycles, RandomOneDimensionalOracle) {
  std::mt19937_64 rng(2024);
  int tested = 0;
  for (int attempt = 0; attempt < 4000 && tested < 60; ++attempt) {
    const std::int64_t r = std::uniform_int_distribution<std::int64_t>(2, 6)(rng) *
                           (std::bernoulli_distribution(0.3)(rng) ? -1 : 1);
    const std::size_t n = std::uniform_int_distribution<std::size_t>(2, 3)(rng);
    if (static_cast<std::int64_t>(n) > std::abs(r)) continue;
    std::set<std::int64_t> bs{0}, ls{0};
    while (bs.size() < n) bs.insert(std::uniform_int_distribution<std::int64_t>(-6, 9)(rng));
    while (ls.size() < n) ls.insert(std::uniform_int_distribution<std::int64_t>(-4, 5)(rng));
    std::vector<std::int64_t> b(bs.begin(), bs.end()), l(ls.begin(), ls.end());
    std::vector<IntVector> bv, lv;
    for (auto x : b) bv.push_back({x});
    for (auto x : l) lv.push_back({x});
    const auto t = make_triple(IntMatrix::scalar(r), DigitSet(1, bv), FrequencySet(1, lv));
    if (!t.is_verified()) continue;
    ++tested;
    const auto oracle = oracle_cycle_points(r, b, l, 6);
    EXPECT_EQ(points_of(find_extreme_cycles(t, 6)), oracle) << "R=" << r << " B=" << ::testing::PrintToString(b) << " L=" << ::testing::PrintToString(l);
  }
  EXPECT_GE(tested, 20);
}

TEST(FindCycles, SaturationInOneDimension) {
  for (const auto& t : {make_triple(2, {0, 3}, {0, 1}), make_triple(4, {0, 2}, {0, 3}), make_triple(3, {0, 2, 4}, {0, 1, 2})})
    EXPECT_EQ(cycle_sets(find_extreme_cycles(t, 3)), cycle_sets(find_extreme_cycles(t, 6)));
}

TEST(FindCycles, UniqueTransition) {
  const auto t = make_triple(2, {0, 3}, {0, 1});
  for (const auto& c : find_extreme_cycles(t, 4).cycles)
    for (const auto& x : c.points) {
      int extreme = 0;
      for (const auto& ell : t.L()) {
        const auto y = to_double(tau_exact(t.R(), ell, x));
        if (std::abs(mask_eval(t.B(), y)) > 1.0 - 1e-9) ++extreme;
      }
      EXPECT_EQ(extreme, 1);
    }
}

TEST(CommonCycles, Examples) {
  const auto a = make_triple(2, {0, 1}, {0, 1});
  const auto b = make_triple(2, {0, 3}, {0, 1});
  EXPECT_EQ(cycle_sets(common_extreme_cycles({a, b}, 3)), (std::set<PointSet>{{q(0)}, {q(1)}}));
  EXPECT_EQ(cycle_sets(common_extreme_cycles({b}, 4)), cycle_sets(find_extreme_cycles(b, 4)));
  EXPECT_THROW(common_extreme_cycles({a, make_triple(4, {0, 2}, {0, 1})}, 2), MismatchedRL);

  const auto c = make_triple(4, {0, 2}, {0, 1});
  const auto d = make_triple(4, {0, 6}, {0, 1});
  const auto oc = oracle_cycle_points(4, {0, 2}, {0, 1}, 2);
  const auto od = oracle_cycle_points(4, {0, 6}, {0, 1}, 2);
  PointSet both;
  std::set_intersection(oc.begin(), oc.end(), od.begin(), od.end(), std::inserter(both, both.begin()));
  EXPECT_EQ(points_of(common_extreme_cycles({c, d}, 2)), both);
  EXPECT_TRUE(both.count(q(0)));
}

TEST(DynamicallySimple, Examples) {
  const auto t = make_triple(4, {0, 2}, {0, 1});
  const auto rep = find_extreme_cycles(t, 3);
  EXPECT_EQ(dynamically_simple_spectrum(t, rep.cycles, 3),
            (std::vector<IntVector>{{0}, {1}, {4}, {5}, {16}, {17}, {20}, {21}}));

  const auto leb = make_triple(2, {0, 1}, {0, 1});
  const auto spec = dynamically_simple_spectrum(leb, find_extreme_cycles(leb, 3).cycles, 2);
  std::vector<IntVector> expect;
  for (int k = -4; k <= 3; ++k) expect.push_back({k});
  EXPECT_EQ(spec, expect);
  EXPECT_EQ(dynamically_simple_spectrum(leb, find_extreme_cycles(leb, 3).cycles, 0),
            (std::vector<IntVector>{{-1}, {0}}));
}

TEST(DynamicallySimple, NonExtremeCycleRejected) {
  const auto t = make_triple(4, {0, 2}, {0, 1});
  ExtremeCycle bogus{{q(1, 3)}, {{1}}, {1}, {}};
  EXPECT_THROW(dynamically_simple_spectrum(t, {bogus}, 1), NonIntegerElement);
}

TEST(DynamicallySimple, RationalCyclePoints) {
  // {1/3, 2/3} is an extreme cycle of (2, {0,3}, {0,1}); -c is not an integer.
  const auto t = make_triple(2, {0, 3}, {0, 1});
  EXPECT_THROW(dynamically_simple_spectrum(t, find_extreme_cycles(t, 2).cycles, 1), NonIntegerElement);
}

TEST(DynamicallySimple, LevelRecursion) {
  for (const auto& t : {make_triple(2, {0, 1}, {0, 1}), make_triple(4, {0, 2}, {0, 3}), make_triple(-3, {0, 1, 2}, {0, 1, 2})}) {
    const auto cycles = find_extreme_cycles(t, 4).cycles;
    for (std::size_t n = 0; n < 4; ++n) {
      std::set<IntVector> next;
      for (const auto& x : dynamically_simple_spectrum(t, cycles, n))
        for (const auto& ell : t.L()) next.insert({t.R()(0, 0) * x[0] + ell[0]});
      const auto lvl = dynamically_simple_spectrum(t, cycles, n + 1);
      EXPECT_EQ(std::set<IntVector>(lvl.begin(), lvl.end()), next);
    }
  }
}

TEST(DynamicallySimple, TwoDimensional) {
  const auto t = make_triple(IntMatrix::from_rows({{2, 0}, {0, 2}}), DigitSet(2, {{0, 0}, {1, 0}, {0, 1}, {1, 1}}),
                             FrequencySet(2, {{0, 0}, {1, 0}, {0, 1}, {1, 1}}));
  const auto rep = find_extreme_cycles(t, 2);
  EXPECT_EQ(rep.cycles.size(), 4u);  // the four corners of the unit square
  EXPECT_NE(rep.caveat.find("dynamical simplicity"), std::string::npos);
  const auto spec = dynamically_simple_spectrum(t, rep.cycles, 1);
  EXPECT_EQ(spec.size(), 16u);  // {-2..1}^2
}

}  // namespace
}  // namespace speclab
