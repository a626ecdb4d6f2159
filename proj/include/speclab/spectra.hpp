#pragma once

#include <algorithm>
#include <cstdio>
#include <functional>
#include <limits>
#include <memory>
#include <random>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Eigenvalues>

#include "speclab/convolution.hpp"
#include "speclab/cycles.hpp"
#include "speclab/parallel.hpp"

namespace speclab {

//---------------------------------------------------------------------------//
// Candidate spectra
//---------------------------------------------------------------------------//

/// Lambda_n = L_1 + R_1^T L_2 + ... + (R_1^T ... R_{n-1}^T) L_n, one entry per
/// digit word (l_1 most significant), duplicates kept.
struct LevelSet {
  std::vector<IntVector> elements;
  bool collisions = false;
};

inline LevelSet lambda_n(const ConvolutionSystem& sys, std::size_t n) {
  if (n == 0) throw InvalidArgument("lambda_n needs n >= 1");
  const std::size_t d = sys.dim();
  std::vector<IntVector> pts{IntVector(d, 0)};
  IntMatrix power = IntMatrix::identity(d);
  for (std::size_t k = 1; k <= n; ++k) {
    const auto* st = sys.stage(k);
    if (!st) break;
    std::vector<IntVector> grown;
    grown.reserve(pts.size() * st->N());
    for (const auto& p : pts)
      for (const auto& ell : st->L()) {
        IntVector v = power.apply(ell);
        for (std::size_t i = 0; i < d; ++i) v[i] += p[i];
        grown.push_back(std::move(v));
      }
    pts = std::move(grown);
    power = power * st->R().transpose();
  }
  LevelSet out{std::move(pts), false};
  out.collisions = std::set<IntVector>(out.elements.begin(), out.elements.end()).size() != out.elements.size();
  return out;
}

/// A candidate spectrum enumerated by level. level(n) is finite, sorted and
/// duplicate-free; for the nested kinds it grows with n.
class SpectrumGenerator {
 public:
  enum class Kind { LevelSets, ExtremeCycles, Lattice, ExplicitFinite, Product };

  static SpectrumGenerator level_sets(ConvolutionSystem sys) {
    SpectrumGenerator g(Kind::LevelSets, sys.dim());
    g.sys_ = std::make_shared<const ConvolutionSystem>(std::move(sys));
    return g;
  }
  static SpectrumGenerator extreme_cycles(HadamardTriple t, std::vector<ExtremeCycle> cycles) {
    SpectrumGenerator g(Kind::ExtremeCycles, t.dim());
    g.triple_ = std::make_shared<const HadamardTriple>(std::move(t));
    g.cycles_ = std::make_shared<const std::vector<ExtremeCycle>>(std::move(cycles));
    return g;
  }
  /// Level n = { G k : ||k||_inf <= n }.
  static SpectrumGenerator lattice(IntMatrix basis) {
    if (!basis.is_square() || det(basis) == 0) throw InvalidArgument("lattice basis must be square and nonsingular");
    SpectrumGenerator g(Kind::Lattice, basis.rows());
    g.basis_ = std::move(basis);
    return g;
  }
  /// Same finite set at every level.
  static SpectrumGenerator explicit_finite(std::vector<IntVector> pts) {
    if (pts.empty()) throw InvalidArgument("explicit spectrum is empty");
    SpectrumGenerator g(Kind::ExplicitFinite, pts.front().size());
    for (const auto& p : pts)
      if (p.size() != g.dim_) throw DimensionMismatch("explicit spectrum dimension");
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    g.points_ = std::move(pts);
    return g;
  }
  /// Level n = first.level(n) x second.level(n).
  static SpectrumGenerator product(SpectrumGenerator first, SpectrumGenerator second) {
    SpectrumGenerator g(Kind::Product, first.dim() + second.dim());
    g.factors_ = std::make_shared<const std::pair<SpectrumGenerator, SpectrumGenerator>>(std::move(first),
                                                                                       std::move(second));
    return g;
  }

  Kind kind() const { return kind_; }
  std::size_t dim() const { return dim_; }
  const IntMatrix& basis() const { return basis_; }

  std::vector<IntVector> level(std::size_t n) const {
    std::vector<IntVector> out;
    switch (kind_) {
      case Kind::LevelSets:
        out = lambda_n(*sys_, std::max<std::size_t>(n, 1)).elements;
        break;
      case Kind::ExtremeCycles:
        out = dynamically_simple_spectrum(*triple_, *cycles_, n);
        break;
      case Kind::ExplicitFinite:
        return points_;
      case Kind::Lattice: {
        const auto w = static_cast<std::int64_t>(n);
        IntVector k(dim_, -w);
        for (;;) {
          out.push_back(basis_.apply(k));
          std::size_t i = 0;
          while (i < dim_ && ++k[i] > w) k[i++] = -w;
          if (i == dim_) break;
        }
        break;
      }
      case Kind::Product: {
        const auto a = factors_->first.level(n);
        const auto b = factors_->second.level(n);
        for (const auto& x : a)
          for (const auto& y : b) {
            IntVector v = x;
            v.insert(v.end(), y.begin(), y.end());
            out.push_back(std::move(v));
          }
        break;
      }
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }

 private:
  SpectrumGenerator(Kind k, std::size_t d) : kind_(k), dim_(d) {}

  Kind kind_;
  std::size_t dim_;
  std::shared_ptr<const ConvolutionSystem> sys_;
  std::shared_ptr<const HadamardTriple> triple_;
  std::shared_ptr<const std::vector<ExtremeCycle>> cycles_;
  IntMatrix basis_;
  std::vector<IntVector> points_;
  std::shared_ptr<const std::pair<SpectrumGenerator, SpectrumGenerator>> factors_;
};

inline std::string to_string(SpectrumGenerator::Kind k) {
  switch (k) {
    case SpectrumGenerator::Kind::LevelSets: return "level_sets";
    case SpectrumGenerator::Kind::ExtremeCycles: return "extreme_cycles";
    case SpectrumGenerator::Kind::Lattice: return "lattice";
    case SpectrumGenerator::Kind::ExplicitFinite: return "explicit";
    default: return "product";
  }
}

//---------------------------------------------------------------------------//
// F_n and the singular-value criterion
//---------------------------------------------------------------------------//

inline constexpr std::size_t kDefaultSizeCap = 4096;

/// F_n = M_n^-1/2 [ |mu_{>n}^(lambda)| exp(-2 pi i <b, lambda>) ], rows
/// indexed by Lambda_n and columns by B_n, both in digit-word order.
/// sigma holds the eigenvalues of F_n^* F_n, ascending.
struct FnMatrix {
  std::size_t n = 0;
  Eigen::MatrixXcd entries;
  Eigen::VectorXd sigma;
  double sigma_min = 0.0;
  double min_tail_modulus = 1.0;
  double max_tail_bound = 0.0;
  bool collisions = false;
  std::vector<IntVector> lambdas;
  std::vector<RatVector> digits;
};

namespace detail {

inline BigInt lcm_denominator(const std::vector<RatVector>& pts) {
  BigInt l = 1;
  for (const auto& p : pts)
    for (const auto& x : p) {
      const BigInt d = boost::multiprecision::denominator(x);
      l = l / boost::multiprecision::gcd(l, d) * d;
    }
  return l;
}

}  // namespace detail

inline FnMatrix build_fn(const ConvolutionSystem& sys, std::size_t n, const TruncationPolicy& pol = {},
                         std::size_t cap = kDefaultSizeCap, unsigned threads = 0) {
  if (n == 0) throw InvalidArgument("build_fn needs n >= 1");
  std::size_t size = 1;
  for (std::size_t k = 1; k <= n; ++k) {
    const auto* st = sys.stage(k);
    if (!st) break;
    size *= st->N();
    if (size > cap) throw SizeCap("M_" + std::to_string(n) + " exceeds " + std::to_string(cap));
  }
  FnMatrix f;
  f.n = n;
  auto lv = lambda_n(sys, n);
  f.lambdas = std::move(lv.elements);
  f.collisions = lv.collisions;
  f.digits = digit_points_exact(sys, n);
  const std::size_t m = f.digits.size();
  const std::size_t d = sys.dim();

  // Phases <b, lambda> mod 1 in exact integer arithmetic over a common
  // denominator D.
  const BigInt big_d = detail::lcm_denominator(f.digits);
  if (big_d > BigInt(std::numeric_limits<std::int64_t>::max() / 4))
    throw SizeCap("common denominator of B_n too large");
  const auto den = static_cast<__int128>(static_cast<std::int64_t>(big_d));
  std::vector<std::vector<__int128>> num(m, std::vector<__int128>(d));
  for (std::size_t j = 0; j < m; ++j)
    for (std::size_t i = 0; i < d; ++i) {
      const Rational& x = f.digits[j][i];
      const BigInt v = boost::multiprecision::numerator(x) * (big_d / boost::multiprecision::denominator(x));
      num[j][i] = static_cast<__int128>(static_cast<std::int64_t>(v % big_d));
    }

  std::vector<FtValue> tails(m);
  parallel_for(
      m,
      [&](std::size_t r) {
        RealVector lam(d);
        for (std::size_t i = 0; i < d; ++i) lam[i] = static_cast<double>(f.lambdas[r][i]);
        tails[r] = ft_tail_eval(sys, n, lam, pol);
      },
      threads);

  const double scale = 1.0 / std::sqrt(static_cast<double>(m));
  f.entries.resize(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
  for (std::size_t r = 0; r < m; ++r) {
    const double mod = std::abs(tails[r].value);
    f.min_tail_modulus = std::min(f.min_tail_modulus, mod);
    f.max_tail_bound = std::max(f.max_tail_bound, tails[r].tail_bound);
    for (std::size_t c = 0; c < m; ++c) {
      __int128 s = 0;
      for (std::size_t i = 0; i < d; ++i) s += (num[c][i] * (f.lambdas[r][i] % den)) % den;
      s %= den;
      if (s < 0) s += den;
      const double phase = -kTwoPi * static_cast<double>(static_cast<std::int64_t>(s)) / static_cast<double>(big_d);
      f.entries(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          scale * mod * Complex(std::cos(phase), std::sin(phase));
    }
  }
  const Eigen::MatrixXcd g = f.entries.adjoint() * f.entries;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(g, Eigen::EigenvaluesOnly);
  f.sigma = es.eigenvalues();
  f.sigma_min = std::max(0.0, f.sigma.minCoeff());
  return f;
}

struct StrichartzRow {
  std::size_t n = 0;
  double sigma_min = 0.0;
  double min_tail_modulus = 0.0;
  bool collisions = false;
};

struct StrichartzReport {
  std::vector<StrichartzRow> rows;
  double floor = 0.0;  // min over levels of sigma_min
  std::string verdict;
};

/// sigma_min(F_n) and min tail modulus for n = 1..n_max. Only finite-level
/// evidence: nothing is claimed about the infimum over all n.
inline StrichartzReport strichartz_report(const ConvolutionSystem& sys, std::size_t n_max,
                                          const TruncationPolicy& pol = {}, std::size_t cap = kDefaultSizeCap,
                                          unsigned threads = 0) {
  if (n_max == 0) throw InvalidArgument("n_max must be >= 1");
  StrichartzReport rep;
  rep.floor = 1.0;
  bool collided = false;
  for (std::size_t n = 1; n <= n_max; ++n) {
    const auto f = build_fn(sys, n, pol, cap, threads);
    rep.rows.push_back({n, f.sigma_min, f.min_tail_modulus, f.collisions});
    rep.floor = std::min(rep.floor, f.sigma_min);
    collided = collided || f.collisions;
  }
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", rep.floor);
  rep.verdict = collided ? std::string("inconclusive: Lambda_n has collisions")
                         : "criterion holds up to n_max = " + std::to_string(n_max) + " with floor = " + buf;
  return rep;
}

/// min |m_{B_k}((R_k^T)^-1 lambda)| over n <= n_max, lambda in Lambda_n and
/// n < k <= n + depth.
inline double tail_factor_scan(const ConvolutionSystem& sys, std::size_t n_max, std::size_t depth) {
  double floor = 1.0;
  const std::size_t d = sys.dim();
  for (std::size_t n = 1; n <= n_max; ++n) {
    for (const auto& lam : lambda_n(sys, n).elements) {
      Eigen::VectorXd eta(d);
      for (std::size_t i = 0; i < d; ++i) eta(static_cast<Eigen::Index>(i)) = static_cast<double>(lam[i]);
      for (std::size_t k = 1; k <= n + depth; ++k) {
        const auto* st = sys.stage(k);
        if (!st) break;
        eta = st->inverse_transpose() * eta;
        if (k > n) floor = std::min(floor, std::abs(st->mask({eta.data(), d})));
      }
    }
  }
  return floor;
}

//---------------------------------------------------------------------------//
// The Q functional
//---------------------------------------------------------------------------//

struct QValue {
  double q = 0.0;
  std::size_t terms = 0;
  double tail_bound = 0.0;  // bound on |Q_window - sum of exact |mu^|^2|
};

namespace detail {

inline QValue qp_sum(const ConvolutionSystem& sys, const std::vector<IntVector>& lambdas, std::span<const double> xi,
                     const TruncationPolicy& pol) {
  QValue out;
  RealVector x(xi.size());
  for (const auto& lam : lambdas) {
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = xi[i] + static_cast<double>(lam[i]);
    const auto v = ft_eval(sys, x, pol);
    const double a = std::abs(v.value);
    out.q += a * a;
    out.tail_bound += v.tail_bound * (2.0 * a + v.tail_bound);
    ++out.terms;
  }
  return out;
}

}  // namespace detail

/// sum over lambda in gen.level(window) of |mu^(xi + lambda)|^2.
inline QValue qp_eval(const ConvolutionSystem& sys, const SpectrumGenerator& gen, std::span<const double> xi,
                      std::size_t window, const TruncationPolicy& pol = {}) {
  if (gen.dim() != sys.dim() || xi.size() != sys.dim()) throw DimensionMismatch("qp_eval dimensions");
  return detail::qp_sum(sys, gen.level(window), xi, pol);
}

/// Points lo + (hi - lo) i / count, i < count, per axis; the grid is the
/// Cartesian product in row-major order (last axis fastest).
struct GridSpec {
  std::vector<double> lo, hi;
  std::vector<std::size_t> count;

  static GridSpec uniform(std::size_t dim, std::size_t per_axis, double lo = 0.0, double hi = 1.0) {
    return {std::vector<double>(dim, lo), std::vector<double>(dim, hi), std::vector<std::size_t>(dim, per_axis)};
  }
  std::size_t dim() const { return lo.size(); }
  std::size_t size() const {
    std::size_t s = 1;
    for (auto c : count) s *= c;
    return s;
  }
  RealVector point(std::size_t idx) const {
    RealVector x(dim());
    for (std::size_t a = dim(); a-- > 0;) {
      const std::size_t i = idx % count[a];
      idx /= count[a];
      x[a] = lo[a] + (hi[a] - lo[a]) * static_cast<double>(i) / static_cast<double>(count[a]);
    }
    return x;
  }
};

struct SpectrumThresholds {
  double eps_complete = 0.01;
  double eps_orth = 1e-4;
};

struct QPoint {
  RealVector xi;
  QValue value;
};

struct SpectrumReport {
  std::vector<QPoint> points;
  double min_q = 0.0;
  double max_q = 0.0;
  RealVector argmin;
  std::size_t window = 0;
  SpectrumThresholds thresholds;
  bool pass = false;
};

/// Grid sweep of Q: pass iff min Q >= 1 - eps_complete and
/// max Q <= 1 + eps_orth.
inline SpectrumReport check_spectrum(const ConvolutionSystem& sys, const SpectrumGenerator& gen, const GridSpec& grid,
                                     std::size_t window = 8, SpectrumThresholds th = {},
                                     const TruncationPolicy& pol = {}, unsigned threads = 0) {
  if (grid.dim() != sys.dim() || gen.dim() != sys.dim()) throw DimensionMismatch("check_spectrum dimensions");
  const auto lambdas = gen.level(window);
  SpectrumReport rep;
  rep.window = window;
  rep.thresholds = th;
  rep.points.resize(grid.size());
  parallel_for(
      grid.size(),
      [&](std::size_t i) {
        auto& p = rep.points[i];
        p.xi = grid.point(i);
        p.value = detail::qp_sum(sys, lambdas, p.xi, pol);
      },
      threads);
  if (rep.points.empty()) return rep;
  rep.min_q = rep.max_q = rep.points.front().value.q;
  rep.argmin = rep.points.front().xi;
  for (const auto& p : rep.points) {
    if (p.value.q < rep.min_q) {
      rep.min_q = p.value.q;
      rep.argmin = p.xi;
    }
    rep.max_q = std::max(rep.max_q, p.value.q);
  }
  rep.pass = rep.min_q >= 1.0 - th.eps_complete && rep.max_q <= 1.0 + th.eps_orth;
  return rep;
}

/// max |mu^(lambda - lambda')| over distinct pairs of gen.level(window);
/// exhaustive when there are at most max_pairs pairs, sampled otherwise.
inline double orthogonality_check(const ConvolutionSystem& sys, const SpectrumGenerator& gen, std::size_t window,
                                  std::size_t max_pairs = 200000, const TruncationPolicy& pol = {},
                                  std::uint64_t seed = 1, unsigned threads = 0) {
  const auto pts = gen.level(window);
  const std::size_t n = pts.size();
  if (n < 2) return 0.0;
  const std::size_t d = sys.dim();
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  if (n * (n - 1) / 2 <= max_pairs) {
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) pairs.emplace_back(i, j);
  } else {
    std::seed_seq seq{seed, std::uint64_t{0x0a7}};
    std::mt19937_64 rng(seq);
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    while (pairs.size() < max_pairs) {
      const std::size_t i = pick(rng), j = pick(rng);
      if (i != j) pairs.emplace_back(i, j);
    }
  }
  std::vector<double> vals(pairs.size());
  parallel_for(
      pairs.size(),
      [&](std::size_t k) {
        RealVector x(d);
        for (std::size_t i = 0; i < d; ++i)
          x[i] = static_cast<double>(pts[pairs[k].first][i] - pts[pairs[k].second][i]);
        vals[k] = std::abs(ft_eval(sys, x, pol).value);
      },
      threads);
  return *std::max_element(vals.begin(), vals.end());
}

//---------------------------------------------------------------------------//
// Transfer operator
//---------------------------------------------------------------------------//

using GridFunction = std::function<double(std::span<const double>)>;

/// (R f)(xi) = sum_l |m_B(tau_l xi)|^2 f(tau_l xi) at each grid point.
inline std::vector<double> transfer_apply(const HadamardTriple& t, const GridFunction& f,
                                          const std::vector<RealVector>& grid, unsigned threads = 0) {
  std::vector<double> out(grid.size());
  const std::size_t d = t.dim();
  parallel_for(
      grid.size(),
      [&](std::size_t g) {
        if (grid[g].size() != d) throw DimensionMismatch("transfer_apply grid point dimension");
        double s = 0.0;
        for (const auto& ell : t.L()) {
          Eigen::VectorXd y(d);
          for (std::size_t i = 0; i < d; ++i)
            y(static_cast<Eigen::Index>(i)) = grid[g][i] + static_cast<double>(ell[i]);
          const Eigen::VectorXd z = t.inverse_transpose() * y;
          const double m = std::abs(t.mask({z.data(), d}));
          s += m * m * f({z.data(), d});
        }
        out[g] = s;
      },
      threads);
  return out;
}

}  // namespace speclab
