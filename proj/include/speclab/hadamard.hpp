#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "speclab/exact_linalg.hpp"

namespace speclab {

using Complex = std::complex<double>;
using RealVector = std::vector<double>;

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Finite set of integer vectors of a common dimension that contains the
/// origin and has no repeated elements. Insertion order is preserved; it
/// fixes the row/column order of every matrix built from the set.
template <class Tag>
class IntVectorSet {
 public:
  IntVectorSet() = default;
  IntVectorSet(std::size_t dim, std::vector<IntVector> elems) : dim_(dim), elems_(std::move(elems)) {
    if (dim_ == 0) throw DimensionMismatch("set dimension must be positive");
    if (elems_.empty()) throw InvalidArgument("set must be nonempty");
    std::set<IntVector> seen;
    bool has_zero = false;
    for (const auto& e : elems_) {
      if (e.size() != dim_) throw DimensionMismatch("element dimension differs from set dimension");
      if (!seen.insert(e).second) throw InvalidArgument("duplicate element in set");
      has_zero = has_zero || std::all_of(e.begin(), e.end(), [](auto x) { return x == 0; });
    }
    if (!has_zero) throw InvalidArgument("set must contain the zero vector");
  }
  /// One-dimensional shorthand: {0, 1} -> {(0), (1)}.
  IntVectorSet(std::initializer_list<std::int64_t> scalars)
      : IntVectorSet(1, [&] {
          std::vector<IntVector> v;
          for (auto s : scalars) v.push_back({s});
          return v;
        }()) {}

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return elems_.size(); }
  const std::vector<IntVector>& elements() const { return elems_; }
  const IntVector& operator[](std::size_t i) const { return elems_[i]; }
  auto begin() const { return elems_.begin(); }
  auto end() const { return elems_.end(); }

  /// Largest Euclidean norm of an element.
  double max_norm() const {
    double m = 0.0;
    for (const auto& e : elems_) {
      double s = 0.0;
      for (auto x : e) s += static_cast<double>(x) * static_cast<double>(x);
      m = std::max(m, std::sqrt(s));
    }
    return m;
  }

  bool same_elements(const IntVectorSet& o) const {
    return dim_ == o.dim_ && std::set<IntVector>(elems_.begin(), elems_.end()) ==
                                 std::set<IntVector>(o.elems_.begin(), o.elems_.end());
  }

  friend bool operator==(const IntVectorSet&, const IntVectorSet&) = default;

 private:
  std::size_t dim_ = 0;
  std::vector<IntVector> elems_;
};

struct DigitTag {};
struct FrequencyTag {};
using DigitSet = IntVectorSet<DigitTag>;
using FrequencySet = IntVectorSet<FrequencyTag>;

//---------------------------------------------------------------------------//
// Mask and dual maps
//---------------------------------------------------------------------------//

inline double dot(const IntVector& a, std::span<const double> x) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += static_cast<double>(a[i]) * x[i];
  return s;
}

/// m_B(x) = (1/#B) sum_b exp(2 pi i <b, x>).
inline Complex mask_eval(const DigitSet& b, std::span<const double> x) {
  if (x.size() != b.dim()) throw DimensionMismatch("mask_eval point dimension");
  Complex s(0.0, 0.0);
  for (const auto& d : b) {
    const double phase = kTwoPi * dot(d, x);
    s += Complex(std::cos(phase), std::sin(phase));
  }
  return s / static_cast<double>(b.size());
}

/// |m_B(x)| = 1 decided exactly: <b, x> is an integer for every digit.
inline bool mask_is_extreme_at(const DigitSet& b, const RatVector& x) {
  if (x.size() != b.dim()) throw DimensionMismatch("mask_is_extreme_at point dimension");
  for (const auto& d : b) {
    Rational s = 0;
    for (std::size_t i = 0; i < x.size(); ++i)
      if (d[i] != 0) s += x[i] * d[i];
    if (!is_integral(s)) return false;
  }
  return true;
}

/// tau_l(x) = (R^T)^-1 (x + l), exactly.
inline RatVector tau_exact(const IntMatrix& r, const IntVector& ell, const RatVector& x) {
  if (ell.size() != r.rows() || x.size() != r.rows()) throw DimensionMismatch("tau_exact dimension");
  RatVector y = x;
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += ell[i];
  return solve_exact(RatMatrix(r.transpose()), y);
}

/// Radius r of a closed ball with tau_l(B_r) inside B_r for every l in L:
/// r = M / (1 - c) padded by 1e-6 relative, where c = ||(R^T)^-1|| and
/// M = max_l |(R^T)^-1 l|.
inline double invariant_ball_radius(const IntMatrix& r, const FrequencySet& l) {
  const double c = contraction_factor(r);
  const Eigen::MatrixXd a = inverse_transpose_double(r);
  double m = 0.0;
  for (const auto& ell : l) {
    Eigen::VectorXd v(ell.size());
    for (std::size_t i = 0; i < ell.size(); ++i) v(i) = static_cast<double>(ell[i]);
    m = std::max(m, (a * v).norm());
  }
  return m / (1.0 - c) * (1.0 + 1e-6);
}

/// Radius of a ball holding every periodic point of the tau-system. Equals
/// invariant_ball_radius for Euclidean contractions; otherwise uses the
/// k-step certificate ||(R^T)^-j|| <= A rho^j.
inline double cycle_containment_radius(const IntMatrix& r, const FrequencySet& l) {
  try {
    return invariant_ball_radius(r, l);
  } catch (const NotContractive&) {
    const auto cert = contraction_certificate(r);
    return cert.series_sum() * l.max_norm() * (1.0 + 1e-6);
  }
}

//---------------------------------------------------------------------------//
// Hadamard triples
//---------------------------------------------------------------------------//

enum class VerificationStatus { Unverified, Verified, Failed };

inline std::string to_string(VerificationStatus s) {
  switch (s) {
    case VerificationStatus::Verified: return "verified";
    case VerificationStatus::Failed: return "failed";
    default: return "unverified";
  }
}

struct HadamardCheck {
  bool pass = false;
  double residual = 0.0;
};

/// (R, B, L) with R expansive and #B == #L. Holds its verification status and
/// the double-precision data (inverse transpose, digits) the numeric kernels
/// read on every factor evaluation.
class HadamardTriple {
 public:
  HadamardTriple() = default;
  HadamardTriple(IntMatrix r, DigitSet b, FrequencySet l)
      : r_(std::move(r)), b_(std::move(b)), l_(std::move(l)) {
    if (!r_.is_square()) throw DimensionMismatch("R must be square");
    if (b_.dim() != r_.rows() || l_.dim() != r_.rows()) throw DimensionMismatch("B, L dimension differs from R");
    if (b_.size() != l_.size())
      throw DimensionMismatch("#B = " + std::to_string(b_.size()) + " but #L = " + std::to_string(l_.size()));
    if (!is_expansive(r_)) throw InvalidArgument("R is not expansive");
    inv_t_ = inverse_transpose_double(r_);
    digits_ = Eigen::MatrixXd(b_.size(), dim());
    for (std::size_t i = 0; i < b_.size(); ++i)
      for (std::size_t j = 0; j < dim(); ++j) digits_(i, j) = static_cast<double>(b_[i][j]);
    max_digit_ = b_.max_norm();
  }

  const IntMatrix& R() const { return r_; }
  const DigitSet& B() const { return b_; }
  const FrequencySet& L() const { return l_; }
  std::size_t N() const { return b_.size(); }
  std::size_t dim() const { return r_.rows(); }

  VerificationStatus status() const { return status_; }
  bool is_verified() const { return status_ == VerificationStatus::Verified; }
  double residual() const { return residual_; }

  const Eigen::MatrixXd& inverse_transpose() const { return inv_t_; }
  double max_digit_norm() const { return max_digit_; }

  /// m_B(x) using the cached digit matrix.
  Complex mask(std::span<const double> x) const {
    Complex s(0.0, 0.0);
    for (Eigen::Index i = 0; i < digits_.rows(); ++i) {
      double phase = 0.0;
      for (Eigen::Index j = 0; j < digits_.cols(); ++j) phase += digits_(i, j) * x[j];
      phase *= kTwoPi;
      s += Complex(std::cos(phase), std::sin(phase));
    }
    return s / static_cast<double>(digits_.rows());
  }

  void record_verification(const HadamardCheck& c) {
    status_ = c.pass ? VerificationStatus::Verified : VerificationStatus::Failed;
    residual_ = c.residual;
  }

 private:
  IntMatrix r_;
  DigitSet b_;
  FrequencySet l_;
  VerificationStatus status_ = VerificationStatus::Unverified;
  double residual_ = 0.0;
  Eigen::MatrixXd inv_t_;
  Eigen::MatrixXd digits_;
  double max_digit_ = 0.0;
};

inline constexpr double kDefaultHadamardTol = 1e-9;

/// Builds H = N^-1/2 [exp(2 pi i <R^-1 b, l>)] and reports the max-entry
/// residual of H*H - I. Phases are reduced mod 1 in exact arithmetic first.
inline HadamardCheck verify_hadamard(const HadamardTriple& t, double tol = kDefaultHadamardTol) {
  const std::size_t n = t.N();
  if (t.B().size() != t.L().size()) throw DimensionMismatch("#B != #L");
  const RatMatrix r_inv = inverse(RatMatrix(t.R()));
  Eigen::MatrixXcd h(n, n);
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  for (std::size_t b = 0; b < n; ++b) {
    const RatVector rb = r_inv.apply(to_rational(t.B()[b]));
    for (std::size_t l = 0; l < n; ++l) {
      Rational s = 0;
      for (std::size_t k = 0; k < rb.size(); ++k) s += rb[k] * t.L()[l][k];
      // fractional part in [0, 1)
      const BigInt fl = boost::multiprecision::numerator(s) / boost::multiprecision::denominator(s);
      Rational frac = s - Rational(fl);
      if (frac < 0) frac += 1;
      const double phase = kTwoPi * frac.convert_to<double>();
      h(static_cast<Eigen::Index>(l), static_cast<Eigen::Index>(b)) = scale * Complex(std::cos(phase), std::sin(phase));
    }
  }
  const Eigen::MatrixXcd g = h.adjoint() * h - Eigen::MatrixXcd::Identity(n, n);
  const double residual = g.cwiseAbs().maxCoeff();
  return {residual <= tol, residual};
}

/// Constructs the triple and records its verification outcome.
inline HadamardTriple make_triple(IntMatrix r, DigitSet b, FrequencySet l, double tol = kDefaultHadamardTol) {
  HadamardTriple t(std::move(r), std::move(b), std::move(l));
  t.record_verification(verify_hadamard(t, tol));
  return t;
}

/// One-dimensional shorthand.
inline HadamardTriple make_triple(std::int64_t r, std::initializer_list<std::int64_t> b,
                                  std::initializer_list<std::int64_t> l, double tol = kDefaultHadamardTol) {
  return make_triple(IntMatrix::scalar(r), DigitSet(b), FrequencySet(l), tol);
}

}  // namespace speclab
