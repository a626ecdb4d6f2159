#pragma once

// Exact integer/rational linear algebra on small dense matrices, plus the
// handful of floating-point norm facts (contraction of (R^T)^-1) that the
// truncation bounds need.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <boost/multiprecision/cpp_int.hpp>

#include "speclab/errors.hpp"

namespace speclab {

using BigInt = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;
using IntVector = std::vector<std::int64_t>;

//---------------------------------------------------------------------------//
// IntMatrix
//---------------------------------------------------------------------------//

/// Dense integer matrix, row-major. Usually square; the off-diagonal block C
/// of a quasi-product matrix is the one rectangular use.
class IntMatrix {
 public:
  IntMatrix() = default;
  IntMatrix(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), data_(rows * cols, 0) {}

  static IntMatrix identity(std::size_t n) {
    IntMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1;
    return m;
  }
  static IntMatrix scalar(std::int64_t v) {
    IntMatrix m(1, 1);
    m(0, 0) = v;
    return m;
  }
  static IntMatrix from_rows(const std::vector<std::vector<std::int64_t>>& rows) {
    if (rows.empty()) throw DimensionMismatch("matrix must have at least one row");
    IntMatrix m(rows.size(), rows.front().size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (rows[i].size() != m.cols_) throw DimensionMismatch("ragged matrix rows");
      for (std::size_t j = 0; j < m.cols_; ++j) m(i, j) = rows[i][j];
    }
    return m;
  }
  static IntMatrix from_rows(std::initializer_list<std::initializer_list<std::int64_t>> rows) {
    std::vector<std::vector<std::int64_t>> v;
    for (const auto& r : rows) v.emplace_back(r);
    return from_rows(v);
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t dim() const { return rows_; }
  bool is_square() const { return rows_ == cols_ && rows_ > 0; }

  std::int64_t& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  std::int64_t operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  IntMatrix transpose() const {
    IntMatrix t(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
    return t;
  }

  IntVector apply(const IntVector& v) const {
    if (v.size() != cols_) throw DimensionMismatch("matrix-vector size");
    IntVector out(rows_, 0);
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = 0; j < cols_; ++j) out[i] += (*this)(i, j) * v[j];
    return out;
  }

  friend IntMatrix operator*(const IntMatrix& a, const IntMatrix& b) {
    if (a.cols_ != b.rows_) throw DimensionMismatch("matrix product");
    IntMatrix c(a.rows_, b.cols_);
    for (std::size_t i = 0; i < a.rows_; ++i)
      for (std::size_t k = 0; k < a.cols_; ++k)
        for (std::size_t j = 0; j < b.cols_; ++j) c(i, j) += a(i, k) * b(k, j);
    return c;
  }

  std::vector<std::vector<std::int64_t>> to_rows() const {
    std::vector<std::vector<std::int64_t>> out(rows_, std::vector<std::int64_t>(cols_));
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = 0; j < cols_; ++j) out[i][j] = (*this)(i, j);
    return out;
  }

  friend bool operator==(const IntMatrix&, const IntMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<std::int64_t> data_;
};

//---------------------------------------------------------------------------//
// Rational vectors and matrices
//---------------------------------------------------------------------------//

/// Exact rational vector. cpp_rational keeps every entry reduced with a
/// positive denominator.
using RatVector = std::vector<Rational>;

class RatMatrix {
 public:
  RatMatrix() = default;
  RatMatrix(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), data_(rows * cols, Rational(0)) {}
  explicit RatMatrix(const IntMatrix& m) : RatMatrix(m.rows(), m.cols()) {
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = 0; j < cols_; ++j) (*this)(i, j) = m(i, j);
  }
  static RatMatrix identity(std::size_t n) {
    RatMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1;
    return m;
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  Rational& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  const Rational& operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  RatVector apply(const RatVector& v) const {
    if (v.size() != cols_) throw DimensionMismatch("matrix-vector size");
    RatVector out(rows_, Rational(0));
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = 0; j < cols_; ++j)
        if (!is_zero((*this)(i, j))) out[i] += (*this)(i, j) * v[j];
    return out;
  }

  friend RatMatrix operator*(const RatMatrix& a, const RatMatrix& b) {
    if (a.cols_ != b.rows_) throw DimensionMismatch("matrix product");
    RatMatrix c(a.rows_, b.cols_);
    for (std::size_t i = 0; i < a.rows_; ++i)
      for (std::size_t k = 0; k < a.cols_; ++k) {
        if (is_zero(a(i, k))) continue;
        for (std::size_t j = 0; j < b.cols_; ++j) c(i, j) += a(i, k) * b(k, j);
      }
    return c;
  }
  friend RatMatrix operator-(const RatMatrix& a, const RatMatrix& b) {
    RatMatrix c = a;
    for (std::size_t i = 0; i < c.data_.size(); ++i) c.data_[i] -= b.data_[i];
    return c;
  }

  RatMatrix transpose() const {
    RatMatrix t(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
    return t;
  }

  friend bool operator==(const RatMatrix&, const RatMatrix&) = default;

 private:
  static bool is_zero(const Rational& r) { return r == 0; }
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<Rational> data_;
};

inline RatVector to_rational(const IntVector& v) {
  RatVector out;
  out.reserve(v.size());
  for (auto x : v) out.emplace_back(x);
  return out;
}

inline bool is_integral(const Rational& r) {
  return boost::multiprecision::denominator(r) == 1;
}

inline bool is_integral(const RatVector& v) {
  return std::all_of(v.begin(), v.end(), [](const Rational& r) { return is_integral(r); });
}

inline std::vector<double> to_double(const RatVector& v) {
  std::vector<double> out;
  out.reserve(v.size());
  for (const auto& r : v) out.push_back(r.convert_to<double>());
  return out;
}

/// "p/q" when the denominator is not 1, plain "p" otherwise.
inline std::string to_string(const Rational& r) {
  const BigInt num = boost::multiprecision::numerator(r);
  const BigInt den = boost::multiprecision::denominator(r);
  if (den == 1) return num.str();
  return num.str() + "/" + den.str();
}

inline Rational parse_rational(const std::string& s) {
  const auto slash = s.find('/');
  try {
    if (slash == std::string::npos) return Rational(BigInt(s));
    const BigInt num(s.substr(0, slash));
    const BigInt den(s.substr(slash + 1));
    if (den == 0) throw InvalidArgument("zero denominator in '" + s + "'");
    return Rational(num, den);
  } catch (const std::runtime_error&) {
    throw InvalidArgument("malformed rational '" + s + "'");
  }
}

//---------------------------------------------------------------------------//
// Determinant and characteristic polynomial
//---------------------------------------------------------------------------//

/// Exact determinant by Bareiss fraction-free elimination.
inline BigInt det(const IntMatrix& m) {
  if (!m.is_square()) throw DimensionMismatch("det of non-square matrix");
  const std::size_t n = m.rows();
  std::vector<BigInt> a(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) a[i * n + j] = m(i, j);
  auto at = [&](std::size_t i, std::size_t j) -> BigInt& { return a[i * n + j]; };

  BigInt prev = 1;
  int sign = 1;
  for (std::size_t k = 0; k + 1 < n; ++k) {
    if (at(k, k) == 0) {
      std::size_t p = k + 1;
      while (p < n && at(p, k) == 0) ++p;
      if (p == n) return 0;
      for (std::size_t j = 0; j < n; ++j) std::swap(at(k, j), at(p, j));
      sign = -sign;
    }
    for (std::size_t i = k + 1; i < n; ++i) {
      for (std::size_t j = k + 1; j < n; ++j) {
        at(i, j) = (at(i, j) * at(k, k) - at(i, k) * at(k, j)) / prev;
      }
      at(i, k) = 0;
    }
    prev = at(k, k);
  }
  return sign * at(n - 1, n - 1);
}

/// Coefficients c_0..c_n (low to high) of the monic polynomial det(xI - M),
/// by Faddeev-LeVerrier. Every division is exact over the integers.
inline std::vector<BigInt> characteristic_polynomial(const IntMatrix& m) {
  if (!m.is_square()) throw DimensionMismatch("characteristic polynomial of non-square matrix");
  const std::size_t n = m.rows();
  std::vector<BigInt> c(n + 1);
  c[n] = 1;
  std::vector<BigInt> a(n * n), mk(n * n, 0), tmp(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) a[i * n + j] = m(i, j);
  for (std::size_t k = 1; k <= n; ++k) {
    // mk <- A*mk + c_{n-k+1} I
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        BigInt s = 0;
        for (std::size_t l = 0; l < n; ++l) s += a[i * n + l] * mk[l * n + j];
        tmp[i * n + j] = s;
      }
    for (std::size_t i = 0; i < n; ++i) tmp[i * n + i] += c[n - k + 1];
    mk.swap(tmp);
    BigInt trace = 0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t l = 0; l < n; ++l) trace += a[i * n + l] * mk[l * n + i];
    c[n - k] = -trace / static_cast<long>(k);
  }
  return c;
}

/// True iff every root of sum_k coeffs[k] z^k lies strictly inside the unit
/// disk (Schur-Cohn recursion, exact integer arithmetic). A root on the unit
/// circle yields false.
inline bool schur_cohn_stable(std::vector<BigInt> a) {
  while (!a.empty() && a.back() == 0) a.pop_back();
  if (a.empty()) return false;
  while (a.size() > 1) {
    const std::size_t n = a.size() - 1;
    if (abs(a[0]) >= abs(a[n])) return false;
    std::vector<BigInt> b(n);
    BigInt g = 0;
    for (std::size_t k = 0; k < n; ++k) {
      b[k] = a[n] * a[k + 1] - a[0] * a[n - 1 - k];
      g = gcd(g, abs(b[k]));
    }
    if (g > 1)
      for (auto& x : b) x /= g;
    a.swap(b);
  }
  return a[0] != 0;
}

/// All eigenvalues of M have modulus > 1. Decided exactly on the reversed
/// characteristic polynomial, whose roots are the reciprocal eigenvalues.
inline bool is_expansive(const IntMatrix& m) {
  const auto c = characteristic_polynomial(m);
  if (c.front() == 0) return false;  // zero eigenvalue
  std::vector<BigInt> reversed(c.rbegin(), c.rend());
  return schur_cohn_stable(std::move(reversed));
}

//---------------------------------------------------------------------------//
// Exact solves
//---------------------------------------------------------------------------//

inline RatVector solve_exact(RatMatrix a, RatVector v) {
  const std::size_t n = a.rows();
  if (a.cols() != n || v.size() != n) throw DimensionMismatch("solve_exact expects square system");
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t p = k;
    while (p < n && a(p, k) == 0) ++p;
    if (p == n) throw SingularMatrix("matrix is singular");
    if (p != k) {
      for (std::size_t j = 0; j < n; ++j) std::swap(a(k, j), a(p, j));
      std::swap(v[k], v[p]);
    }
    for (std::size_t i = k + 1; i < n; ++i) {
      if (a(i, k) == 0) continue;
      const Rational f = a(i, k) / a(k, k);
      for (std::size_t j = k; j < n; ++j) a(i, j) -= f * a(k, j);
      v[i] -= f * v[k];
    }
  }
  RatVector x(n);
  for (std::size_t i = n; i-- > 0;) {
    Rational s = v[i];
    for (std::size_t j = i + 1; j < n; ++j) s -= a(i, j) * x[j];
    x[i] = s / a(i, i);
  }
  return x;
}

inline RatMatrix inverse(const RatMatrix& a) {
  const std::size_t n = a.rows();
  RatMatrix inv(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    RatVector e(n, Rational(0));
    e[j] = 1;
    const auto col = solve_exact(a, e);
    for (std::size_t i = 0; i < n; ++i) inv(i, j) = col[i];
  }
  return inv;
}

/// Exact (R^T)^-1.
inline RatMatrix inverse_transpose(const IntMatrix& r) { return inverse(RatMatrix(r.transpose())); }

//---------------------------------------------------------------------------//
// Residue classes
//---------------------------------------------------------------------------//

/// No two digits are congruent modulo R Z^d.
inline bool residue_classes_distinct(const IntMatrix& r, const std::vector<IntVector>& digits) {
  const RatMatrix rr(r);
  for (std::size_t i = 0; i < digits.size(); ++i)
    for (std::size_t j = i + 1; j < digits.size(); ++j) {
      RatVector diff(r.rows());
      for (std::size_t k = 0; k < diff.size(); ++k) diff[k] = digits[i][k] - digits[j][k];
      if (is_integral(solve_exact(rr, diff))) return false;
    }
  return true;
}

inline bool is_complete_residue_set(const IntMatrix& r, const std::vector<IntVector>& digits) {
  if (BigInt(digits.size()) != abs(det(r))) return false;
  return residue_classes_distinct(r, digits);
}

//---------------------------------------------------------------------------//
// Contraction facts (floating point)
//---------------------------------------------------------------------------//

inline Eigen::MatrixXd to_eigen(const IntMatrix& m) {
  Eigen::MatrixXd e(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) e(i, j) = static_cast<double>(m(i, j));
  return e;
}

inline Eigen::MatrixXd to_eigen(const RatMatrix& m) {
  Eigen::MatrixXd e(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) e(i, j) = m(i, j).convert_to<double>();
  return e;
}

inline double operator_norm(const Eigen::MatrixXd& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  return svd.singularValues()(0);
}

/// (R^T)^-1 in double precision, rounded from the exact inverse.
inline Eigen::MatrixXd inverse_transpose_double(const IntMatrix& r) {
  return to_eigen(inverse_transpose(r));
}

/// Largest singular value of (R^T)^-1. Throws NotContractive when >= 1.
inline double contraction_factor(const IntMatrix& r) {
  if (!r.is_square()) throw DimensionMismatch("contraction_factor of non-square matrix");
  const double c = operator_norm(inverse_transpose_double(r));
  if (!(c < 1.0)) throw NotContractive("||(R^T)^-1||_2 = " + std::to_string(c) + " >= 1");
  return c;
}

/// Bound ||(R^T)^-j||_2 <= amplitude * rate^j for all j >= 0, with rate < 1.
/// `steps` is the smallest k with ||(R^T)^-k|| < 1; steps == 1 means the map
/// is a Euclidean contraction and amplitude == 1.
struct ContractionCertificate {
  int steps = 1;
  double rate = 0.0;
  double amplitude = 1.0;

  /// Upper bound for sum_{j>=1} ||(R^T)^-j||.
  double series_sum() const { return amplitude * rate / (1.0 - rate); }
  double power_bound(int j) const { return amplitude * std::pow(rate, j); }
};

inline ContractionCertificate contraction_certificate(const IntMatrix& r, int max_steps = 32) {
  if (!r.is_square()) throw DimensionMismatch("contraction_certificate of non-square matrix");
  // Relative slack absorbs SVD rounding so the bound stays an upper bound.
  constexpr double kSlack = 1.0 + 1e-12;
  const Eigen::MatrixXd a = inverse_transpose_double(r);
  Eigen::MatrixXd power = Eigen::MatrixXd::Identity(a.rows(), a.cols());
  std::vector<double> norms{1.0};
  for (int k = 1; k <= max_steps; ++k) {
    power = a * power;
    const double ck = operator_norm(power) * kSlack;
    if (ck < 1.0) {
      ContractionCertificate cert;
      cert.steps = k;
      cert.rate = std::pow(ck, 1.0 / k);
      cert.amplitude = 1.0;
      for (int i = 0; i < k; ++i)
        cert.amplitude = std::max(cert.amplitude, norms[i] / std::pow(cert.rate, i));
      return cert;
    }
    norms.push_back(ck);
  }
  throw NotContractive("no k <= " + std::to_string(max_steps) + " with ||(R^T)^-k|| < 1");
}

}  // namespace speclab
