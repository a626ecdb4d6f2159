#pragma once

#include <algorithm>
#include <limits>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "speclab/hadamard.hpp"

namespace speclab {

namespace detail {

// Affine map x -> M x + c with exact entries.
struct ExactAffine {
  RatMatrix m;
  RatVector c;
};

inline RatVector add(RatVector a, const RatVector& b) {
  for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
  return a;
}

inline std::int64_t to_int64(const Rational& r) {
  if (!is_integral(r)) throw NonIntegerElement(to_string(r) + " is not an integer");
  const BigInt v = boost::multiprecision::numerator(r);
  if (v > std::numeric_limits<std::int64_t>::max() || v < std::numeric_limits<std::int64_t>::min())
    throw NonIntegerElement(to_string(r) + " does not fit in 64 bits");
  return static_cast<std::int64_t>(v);
}

}  // namespace detail

/// Fixed point of tau_{l_1} o ... o tau_{l_m} (tau_{l_m} applied first).
inline RatVector fixed_point_of_word(const HadamardTriple& t, const std::vector<IntVector>& word) {
  if (word.empty()) throw InvalidArgument("word is empty");
  const std::size_t d = t.dim();
  const RatMatrix a = inverse_transpose(t.R());
  detail::ExactAffine f{RatMatrix::identity(d), RatVector(d, Rational(0))};
  for (auto it = word.rbegin(); it != word.rend(); ++it) {
    if (it->size() != d) throw DimensionMismatch("word letter dimension");
    f.m = a * f.m;
    f.c = a.apply(detail::add(f.c, to_rational(*it)));
  }
  const RatVector x = solve_exact(RatMatrix::identity(d) - f.m, f.c);
  RatVector back = f.m.apply(x);
  for (std::size_t i = 0; i < d; ++i) back[i] += f.c[i];
  if (back != x) throw VerificationFailed("fixed point does not re-apply exactly");
  return x;
}

/// Orbit of a periodic point. points[0] is the fixed point of
/// tau_{l_1} o ... o tau_{l_m}; points[j] = tau_{l_{m-j+1}}(points[j-1]).
struct ExtremeCycle {
  std::vector<RatVector> points;
  std::vector<IntVector> word;              // rotation-minimal over the L order
  std::vector<std::size_t> word_indices;    // positions in L
  std::vector<std::size_t> extreme_for;     // triple indices (common cycles)

  std::size_t period() const { return points.size(); }
  std::vector<RatVector> point_set() const {
    auto s = points;
    std::sort(s.begin(), s.end());
    return s;
  }
};

struct CycleReport {
  std::vector<ExtremeCycle> cycles;  // sorted by point set
  int m_max = 0;
  double containment_radius = 0.0;
  std::string caveat;
};

namespace detail {

inline bool is_canonical_word(const std::vector<std::size_t>& w) {
  const std::size_t m = w.size();
  for (std::size_t r = 1; r < m; ++r) {
    // rotation by r
    for (std::size_t i = 0; i < m; ++i) {
      const std::size_t a = w[(i + r) % m];
      if (a < w[i]) return false;
      if (a > w[i]) break;
      if (i + 1 == m) return false;  // equal rotation: proper power
    }
  }
  return true;
}

inline std::vector<RatVector> cycle_orbit(const HadamardTriple& t, const RatMatrix& a,
                                          const std::vector<IntVector>& word, const RatVector& x0) {
  std::vector<RatVector> pts{x0};
  for (std::size_t j = word.size(); j > 1; --j) pts.push_back(a.apply(add(pts.back(), to_rational(word[j - 1]))));
  if (a.apply(add(pts.back(), to_rational(word.front()))) != x0)
    throw VerificationFailed("orbit does not close");
  (void)t;
  return pts;
}

}  // namespace detail

/// Every extreme cycle of period <= m_max. Words over L are enumerated in
/// canonical form (rotation-minimal, not a proper power); the fixed point of
/// each is computed exactly and kept when <b, x> is an integer for all b at
/// every orbit point.
inline CycleReport find_extreme_cycles(const HadamardTriple& t, int m_max = 6) {
  if (m_max < 1) throw InvalidArgument("m_max must be >= 1");
  const RatMatrix a = inverse_transpose(t.R());
  const std::size_t n = t.L().size();
  std::map<std::vector<RatVector>, ExtremeCycle> found;
  for (int m = 1; m <= m_max; ++m) {
    std::vector<std::size_t> w(static_cast<std::size_t>(m), 0);
    for (;;) {
      if (detail::is_canonical_word(w)) {
        std::vector<IntVector> word;
        for (auto i : w) word.push_back(t.L()[i]);
        const RatVector x0 = fixed_point_of_word(t, word);
        if (mask_is_extreme_at(t.B(), x0)) {
          const auto pts = detail::cycle_orbit(t, a, word, x0);
          const bool extreme =
              std::all_of(pts.begin(), pts.end(), [&](const RatVector& p) { return mask_is_extreme_at(t.B(), p); });
          if (extreme) {
            ExtremeCycle c{pts, word, w, {}};
            found.emplace(c.point_set(), std::move(c));
          }
        }
      }
      std::size_t i = w.size();
      while (i > 0 && ++w[i - 1] == n) w[--i] = 0;
      if (i == 0) break;
    }
  }
  CycleReport rep;
  rep.m_max = m_max;
  rep.containment_radius = cycle_containment_radius(t.R(), t.L());
  rep.caveat = "complete for periods <= " + std::to_string(m_max);
  if (t.dim() > 1) rep.caveat += "; spectrum claims assume dynamical simplicity";
  for (auto& [key, c] : found) rep.cycles.push_back(std::move(c));
  return rep;
}

/// Cycles extreme for every triple. Triples must share R and L.
inline CycleReport common_extreme_cycles(const std::vector<HadamardTriple>& triples, int m_max = 6) {
  if (triples.empty()) throw InvalidArgument("no triples");
  for (const auto& t : triples)
    if (!(t.R() == triples.front().R()) || !t.L().same_elements(triples.front().L()))
      throw MismatchedRL("common_extreme_cycles needs one R and one L");
  CycleReport rep = find_extreme_cycles(triples.front(), m_max);
  std::vector<ExtremeCycle> kept;
  for (auto& c : rep.cycles) {
    bool all = true;
    for (const auto& t : triples)
      for (const auto& p : c.points) all = all && mask_is_extreme_at(t.B(), p);
    if (all) {
      for (std::size_t i = 0; i < triples.size(); ++i) c.extreme_for.push_back(i);
      kept.push_back(std::move(c));
    }
  }
  rep.cycles = std::move(kept);
  return rep;
}

/// { l_0 + R^T l_1 + ... + (R^T)^(n-1) l_(n-1) + (R^T)^n (-c) } over all
/// points c of the given cycles, sorted and deduplicated.
inline std::vector<IntVector> dynamically_simple_spectrum(const HadamardTriple& t,
                                                          const std::vector<ExtremeCycle>& cycles, std::size_t n) {
  if (cycles.empty()) throw InvalidArgument("no cycles supplied");
  const std::size_t d = t.dim();
  const IntMatrix rt = t.R().transpose();
  // Digit expansions l_0 + R^T l_1 + ... as integer vectors.
  std::vector<IntVector> heads{IntVector(d, 0)};
  IntMatrix power = IntMatrix::identity(d);
  for (std::size_t k = 0; k < n; ++k) {
    std::vector<IntVector> grown;
    for (const auto& h : heads)
      for (const auto& ell : t.L()) {
        IntVector v = power.apply(ell);
        for (std::size_t i = 0; i < d; ++i) v[i] += h[i];
        grown.push_back(std::move(v));
      }
    heads = std::move(grown);
    power = rt * power;
  }
  const RatMatrix p(power);
  std::set<IntVector> out;
  for (const auto& c : cycles)
    for (const auto& pt : c.points) {
      RatVector neg = pt;
      for (auto& x : neg) x = -x;
      const RatVector shift = p.apply(neg);
      IntVector s(d);
      for (std::size_t i = 0; i < d; ++i) s[i] = detail::to_int64(shift[i]);
      for (const auto& h : heads) {
        IntVector v = h;
        for (std::size_t i = 0; i < d; ++i) v[i] += s[i];
        out.insert(std::move(v));
      }
    }
  return {out.begin(), out.end()};
}

}  // namespace speclab
