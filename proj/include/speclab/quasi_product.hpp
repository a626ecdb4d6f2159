#pragma once

#include <optional>
#include <string>
#include <vector>

#include "speclab/convolution.hpp"
#include "speclab/spectra.hpp"

namespace speclab {

/// Data of a block triple
///   R = [[R1, 0], [C, R]],  B = {(a_i, d) : d in B(i)},  L = L1 x L,
/// with R1 acting on the first r coordinates and R on the last d.
/// a[i] is paired with b_family[i].
struct QuasiProductSpec {
  IntMatrix r1;
  std::vector<IntVector> a;
  FrequencySet l1;
  IntMatrix r;
  std::vector<DigitSet> b_family;
  FrequencySet l;
  IntMatrix c;  // d x r; empty means zero

  std::size_t outer_dim() const { return r1.rows(); }
  std::size_t inner_dim() const { return r.rows(); }
  IntMatrix coupling() const {
    if (c.rows() == 0) return IntMatrix(inner_dim(), outer_dim());
    return c;
  }
};

namespace detail {

inline void validate(const QuasiProductSpec& s) {
  if (s.a.empty() || s.a.size() != s.b_family.size())
    throw DimensionMismatch("need one digit set B(i) per outer digit a_i");
  const auto outer = make_triple(s.r1, DigitSet(s.outer_dim(), s.a), s.l1);
  if (!outer.is_verified()) throw VerificationFailed("(R1, {a_i}, L1) is not a Hadamard triple");
  for (std::size_t i = 0; i < s.b_family.size(); ++i) {
    if (s.b_family[i].size() != s.b_family.front().size()) throw DimensionMismatch("B(i) sizes differ");
    if (!make_triple(s.r, s.b_family[i], s.l).is_verified())
      throw VerificationFailed("(R, B(" + std::to_string(i) + "), L) is not a Hadamard triple");
  }
  const IntMatrix c = s.coupling();
  if (c.rows() != s.inner_dim() || c.cols() != s.outer_dim()) throw DimensionMismatch("C must be d x r");
}

}  // namespace detail

inline IntMatrix block_matrix(const QuasiProductSpec& s) {
  const std::size_t r = s.outer_dim(), d = s.inner_dim();
  const IntMatrix c = s.coupling();
  IntMatrix m(r + d, r + d);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < r; ++j) m(i, j) = s.r1(i, j);
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j < r; ++j) m(r + i, j) = c(i, j);
    for (std::size_t j = 0; j < d; ++j) m(r + i, r + j) = s.r(i, j);
  }
  return m;
}

/// Assembles and verifies the block triple. A failure means the component
/// triples were not as claimed.
inline HadamardTriple build_quasi_product(const QuasiProductSpec& s, double tol = kDefaultHadamardTol) {
  detail::validate(s);
  std::vector<IntVector> digits, freqs;
  for (std::size_t i = 0; i < s.a.size(); ++i)
    for (const auto& dd : s.b_family[i]) {
      IntVector v = s.a[i];
      v.insert(v.end(), dd.begin(), dd.end());
      digits.push_back(std::move(v));
    }
  for (const auto& x : s.l1)
    for (const auto& y : s.l) {
      IntVector v = x;
      v.insert(v.end(), y.begin(), y.end());
      freqs.push_back(std::move(v));
    }
  const std::size_t dim = s.outer_dim() + s.inner_dim();
  auto t = make_triple(block_matrix(s), DigitSet(dim, digits), FrequencySet(dim, freqs), tol);
  if (!t.is_verified())
    throw VerificationFailed("block triple residual " + std::to_string(t.residual()));
  return t;
}

/// One-dimensional padding: R1 = pN, a_i = i and L1 = {0..pN-1}, with
/// B~(i) = B(i mod N). Without p, the smallest p >= 1 with pN != R is used.
inline QuasiProductSpec build_1d_padding(std::int64_t r, const std::vector<DigitSet>& family, const FrequencySet& l,
                                         std::optional<std::int64_t> p = std::nullopt) {
  if (family.empty()) throw InvalidArgument("empty digit family");
  const auto n = static_cast<std::int64_t>(family.size());
  std::int64_t pp = p.value_or(1);
  if (!p)
    while (pp * n == r) ++pp;
  if (pp < 1) throw InvalidPadding("p must be >= 1");
  if (pp * n == r) throw InvalidPadding("pN = R = " + std::to_string(r));
  QuasiProductSpec s;
  s.r1 = IntMatrix::scalar(pp * n);
  std::vector<IntVector> freqs;
  for (std::int64_t i = 0; i < pp * n; ++i) {
    s.a.push_back({i});
    freqs.push_back({i});
    s.b_family.push_back(family[static_cast<std::size_t>(i % n)]);
  }
  s.l1 = FrequencySet(1, freqs);
  s.r = IntMatrix::scalar(r);
  s.l = l;
  s.c = IntMatrix(1, 1);
  return s;
}

struct FiberSystem {
  ConvolutionSystem system;
  RealVector pi;  // sum_k R1^-k a_{w_k}
  double pi_error = 0.0;
  RealVector g;   // sum_k D_k a_{w_k}
  double g_error = 0.0;
};

/// The random convolution mu_w on the second factor, with the base point
/// pi(w) and the offset g(w). D_k = -sum_{j<k} R^-(j+1) C R1^-(k-j).
inline FiberSystem fiber_system(const QuasiProductSpec& s, const std::vector<std::size_t>& word,
                                TailRule tail = TailRule::RepeatLast) {
  detail::validate(s);
  std::vector<HadamardTriple> family;
  for (const auto& b : s.b_family) family.push_back(make_triple(s.r, b, s.l));
  auto sys = ConvolutionSystem::random_word(std::move(family), word, tail);

  const std::size_t r = s.outer_dim(), d = s.inner_dim();
  const Eigen::MatrixXd r1_inv = inverse_transpose_double(s.r1).transpose();
  const Eigen::MatrixXd r_inv = inverse_transpose_double(s.r).transpose();
  const Eigen::MatrixXd c = to_eigen(s.coupling());
  const bool coupled = !c.isZero();
  const auto letter = [&](std::size_t k) -> std::optional<std::size_t> {  // k >= 1
    if (k <= word.size()) return word[k - 1];
    if (tail == TailRule::Finite) return std::nullopt;
    return word.back();
  };
  double beta = 0.0;
  for (const auto& a : s.a) {
    double n2 = 0.0;
    for (auto x : a) n2 += static_cast<double>(x) * static_cast<double>(x);
    beta = std::max(beta, std::sqrt(n2));
  }

  const auto c1 = contraction_certificate(s.r1);
  const std::size_t terms = word.size() + 80;
  Eigen::VectorXd pi = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(r));
  Eigen::VectorXd g = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d));
  // Powers R1^-k and R^-k for k = 0..terms.
  std::vector<Eigen::MatrixXd> p1{Eigen::MatrixXd::Identity(r, r)}, p2{Eigen::MatrixXd::Identity(d, d)};
  for (std::size_t k = 1; k <= terms; ++k) {
    p1.push_back(r1_inv * p1.back());
    p2.push_back(r_inv * p2.back());
  }
  std::size_t used = 0;
  for (std::size_t k = 1; k <= terms; ++k) {
    const auto w = letter(k);
    if (!w) break;
    used = k;
    Eigen::VectorXd a(static_cast<Eigen::Index>(r));
    for (std::size_t i = 0; i < r; ++i) a(static_cast<Eigen::Index>(i)) = static_cast<double>(s.a[*w][i]);
    pi += p1[k] * a;
    if (coupled) {
      Eigen::MatrixXd dk = Eigen::MatrixXd::Zero(d, r);
      for (std::size_t j = 0; j < k; ++j) dk -= p2[j + 1] * c * p1[k - j];
      g += dk * a;
    }
  }
  FiberSystem out{std::move(sys), RealVector(pi.data(), pi.data() + pi.size()), 0.0,
                  RealVector(g.data(), g.data() + g.size()), 0.0};
  if (used == terms) {
    // Remaining terms k > terms.
    const double rho1 = c1.rate;
    out.pi_error = beta * c1.amplitude * std::pow(rho1, static_cast<double>(terms + 1)) / (1.0 - rho1);
    if (coupled) {
      const auto c2 = contraction_certificate(s.r);
      const double rho = std::max(rho1, c2.rate);
      const double kk = static_cast<double>(terms);
      // ||D_k|| <= ||C|| A1 A2 k rho^(k+1); sum over k > K of k x^k.
      const double x = rho;
      const double tail_sum = std::pow(x, kk + 1) * ((kk + 1) - kk * x) / ((1 - x) * (1 - x));
      out.g_error = operator_norm(c) * c1.amplitude * c2.amplitude * rho * tail_sum * beta;
    }
  }
  return out;
}

struct ProductCheckReport {
  SpectrumReport report;
  std::optional<double> fiber_pass_fraction;
  std::optional<bool> agrees;  // pass <=> fiber fraction >= agreement threshold
  double agreement_threshold = 0.9;
};

/// Q sweep of the block self-affine measure against Lambda1 x Lambda2. When
/// the Monte-Carlo fiber pass fraction for the same Lambda2 is supplied, the
/// report records whether the two verdicts agree.
inline ProductCheckReport product_spectrum_check(const QuasiProductSpec& s, const SpectrumGenerator& lambda1,
                                                 const SpectrumGenerator& lambda2, const GridSpec& grid,
                                                 std::size_t window, SpectrumThresholds th = {},
                                                 const TruncationPolicy& pol = {},
                                                 std::optional<double> fiber_pass_fraction = std::nullopt,
                                                 unsigned threads = 0) {
  const auto sys = ConvolutionSystem::self_affine(build_quasi_product(s));
  ProductCheckReport out;
  out.report = check_spectrum(sys, SpectrumGenerator::product(lambda1, lambda2), grid, window, th, pol, threads);
  out.fiber_pass_fraction = fiber_pass_fraction;
  if (fiber_pass_fraction)
    out.agrees = out.report.pass == (*fiber_pass_fraction >= out.agreement_threshold);
  return out;
}

struct TilingCheck {
  bool pass = false;
  double max_offlattice_mass = 0.0;  // max |mu^(gamma)| over checked gamma != 0
  RealVector witness;                // argmax
  double max_tail_bound = 0.0;
  std::size_t checked = 0;
  std::string note = "measure tiling only; set tiling is consistent with but not certified by this check";
};

/// Measure-tiling test for the lattice with integer basis `basis`
/// (columns): mu^ must vanish at every nonzero gamma = (basis^T)^-1 n of
/// the dual lattice with ||n||_inf <= window, up to tol + tail bound.
inline TilingCheck lattice_tiling_check(const ConvolutionSystem& sys, const IntMatrix& basis, std::size_t window,
                                        double tol = 1e-7, const TruncationPolicy& pol = {}, unsigned threads = 0) {
  if (!basis.is_square() || basis.rows() != sys.dim()) throw DimensionMismatch("tiling lattice dimension");
  if (det(basis) == 0) throw InvalidArgument("tiling lattice basis is singular");
  const std::size_t d = sys.dim();
  const RatMatrix dual = inverse_transpose(basis);
  std::vector<RealVector> gammas;
  const auto w = static_cast<std::int64_t>(window);
  IntVector n(d, -w);
  for (;;) {
    if (std::any_of(n.begin(), n.end(), [](auto x) { return x != 0; })) gammas.push_back(to_double(dual.apply(to_rational(n))));
    std::size_t i = 0;
    while (i < d && ++n[i] > w) n[i++] = -w;
    if (i == d) break;
  }
  std::vector<FtValue> vals(gammas.size());
  parallel_for(gammas.size(), [&](std::size_t k) { vals[k] = ft_eval(sys, gammas[k], pol); }, threads);
  TilingCheck out;
  out.pass = true;
  out.checked = gammas.size();
  for (std::size_t k = 0; k < vals.size(); ++k) {
    const double m = std::abs(vals[k].value);
    if (m > out.max_offlattice_mass || out.witness.empty()) {
      out.max_offlattice_mass = m;
      out.witness = gammas[k];
    }
    out.max_tail_bound = std::max(out.max_tail_bound, vals[k].tail_bound);
    if (m > tol + vals[k].tail_bound) out.pass = false;
  }
  return out;
}

/// Lower-triangular Hermite normal forms of all sublattices of Z^d with
/// the given index (generators are the columns).
inline std::vector<IntMatrix> hermite_normal_forms(std::size_t d, std::int64_t index) {
  std::vector<IntMatrix> out;
  std::vector<std::int64_t> diag(d, 1);
  const std::function<void(std::size_t, std::int64_t)> choose_diag = [&](std::size_t i, std::int64_t rest) {
    if (i + 1 == d) {
      diag[i] = rest;
      // Off-diagonal entries h(i, j), j < i, range over [0, h(i, i)).
      IntMatrix h(d, d);
      for (std::size_t k = 0; k < d; ++k) h(k, k) = diag[k];
      std::vector<std::pair<std::size_t, std::size_t>> slots;
      for (std::size_t r = 0; r < d; ++r)
        for (std::size_t c = 0; c < r; ++c) slots.emplace_back(r, c);
      const std::function<void(std::size_t)> fill = [&](std::size_t s) {
        if (s == slots.size()) {
          out.push_back(h);
          return;
        }
        const auto [r, c] = slots[s];
        for (std::int64_t v = 0; v < diag[r]; ++v) {
          h(r, c) = v;
          fill(s + 1);
        }
        h(r, c) = 0;
      };
      fill(0);
      return;
    }
    for (std::int64_t v = 1; v <= rest; ++v)
      if (rest % v == 0) {
        diag[i] = v;
        choose_diag(i + 1, rest / v);
      }
  };
  choose_diag(0, index);
  return out;
}

/// Candidate tiling lattice: the coarsest sublattice of Z^d (largest index
/// <= max_index, first in enumeration order) passing the tiling check.
/// mu^ vanishing on the dual of a sublattice implies it vanishes on Z^d, so
/// Z^d is tried first and a failure there ends the search. A measure that
/// set-tiles by G also multi-tiles by every lattice containing G; taking the
/// largest passing index picks the set-tiling candidate.
inline std::optional<IntMatrix> find_tiling_lattice(const ConvolutionSystem& sys, std::size_t window = 8,
                                                    std::int64_t max_index = 16, double tol = 1e-7,
                                                    const TruncationPolicy& pol = {}, unsigned threads = 0) {
  const IntMatrix unit = IntMatrix::identity(sys.dim());
  if (!lattice_tiling_check(sys, unit, window, tol, pol, threads).pass) return std::nullopt;
  for (std::int64_t idx = max_index; idx > 1; --idx)
    for (const auto& h : hermite_normal_forms(sys.dim(), idx))
      if (lattice_tiling_check(sys, h, window, tol, pol, threads).pass) return h;
  return unit;
}

}  // namespace speclab
