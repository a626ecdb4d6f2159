#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "speclab/hadamard.hpp"

namespace speclab {

enum class SystemKind { SelfAffine, Periodic, RandomWord, General };
enum class TailRule { RepeatLast, Finite };

inline std::string to_string(SystemKind k) {
  switch (k) {
    case SystemKind::SelfAffine: return "self_affine";
    case SystemKind::Periodic: return "periodic";
    case SystemKind::RandomWord: return "random_word";
    default: return "general";
  }
}

inline std::string to_string(TailRule t) { return t == TailRule::Finite ? "finite" : "repeat_last"; }

/// The sequence (R_k, B_k, L_k), k = 1, 2, ..., defining
/// mu = delta_{R_1^-1 B_1} * delta_{R_1^-1 R_2^-1 B_2} * ...
/// Stages are addressed from 1. Word entries index `triples()` from 0.
class ConvolutionSystem {
 public:
  static ConvolutionSystem self_affine(HadamardTriple t) {
    return ConvolutionSystem(SystemKind::SelfAffine, {std::move(t)}, {0}, TailRule::RepeatLast);
  }

  /// Stage k uses triples[word[(k - 1) mod |word|]].
  static ConvolutionSystem periodic(std::vector<HadamardTriple> triples, std::vector<std::size_t> word) {
    return ConvolutionSystem(SystemKind::Periodic, std::move(triples), std::move(word), TailRule::RepeatLast);
  }

  /// Stage k uses triples[word[k - 1]] for k <= |word|; afterwards the tail
  /// rule applies. All triples share R and L.
  static ConvolutionSystem random_word(std::vector<HadamardTriple> triples, std::vector<std::size_t> word,
                                       TailRule tail = TailRule::RepeatLast) {
    return ConvolutionSystem(SystemKind::RandomWord, std::move(triples), std::move(word), tail);
  }

  /// Stage k uses triples[k - 1]; afterwards the tail rule applies.
  static ConvolutionSystem general(std::vector<HadamardTriple> triples, TailRule tail = TailRule::RepeatLast) {
    std::vector<std::size_t> word(triples.size());
    for (std::size_t i = 0; i < word.size(); ++i) word[i] = i;
    return ConvolutionSystem(SystemKind::General, std::move(triples), std::move(word), tail);
  }

  SystemKind kind() const { return kind_; }
  TailRule tail() const { return tail_; }
  std::size_t dim() const { return triples_.front().dim(); }
  const std::vector<HadamardTriple>& triples() const { return triples_; }
  const std::vector<std::size_t>& word() const { return word_; }

  /// Number of stages when the product is finite.
  std::optional<std::size_t> length() const {
    if (kind_ == SystemKind::SelfAffine || kind_ == SystemKind::Periodic || tail_ == TailRule::RepeatLast)
      return std::nullopt;
    return word_.size();
  }

  /// Triple used at stage k >= 1, or nullptr past the end of a finite product.
  const HadamardTriple* stage(std::size_t k) const {
    if (k == 0) throw InvalidArgument("stages are numbered from 1");
    if (kind_ == SystemKind::SelfAffine) return &triples_.front();
    if (kind_ == SystemKind::Periodic) return &triples_[word_[(k - 1) % word_.size()]];
    if (k <= word_.size()) return &triples_[word_[k - 1]];
    if (tail_ == TailRule::Finite) return nullptr;
    return &triples_[word_.back()];
  }

  /// Bound ||(R_{k+1}^T)^-1 ... (R_{k+j}^T)^-1|| <= A rho^j valid from any
  /// starting stage. Throws NotContractive when none is available.
  const ContractionCertificate& certificate() const {
    if (!cert_) throw NotContractive(cert_error_);
    return *cert_;
  }
  bool has_certificate() const { return cert_.has_value(); }

  double max_digit_norm() const { return max_digit_; }

 private:
  ConvolutionSystem(SystemKind kind, std::vector<HadamardTriple> triples, std::vector<std::size_t> word,
                    TailRule tail)
      : kind_(kind), tail_(tail), triples_(std::move(triples)), word_(std::move(word)) {
    if (triples_.empty()) throw InvalidArgument("system needs at least one triple");
    if (word_.empty()) throw InvalidArgument("system word is empty");
    for (std::size_t i = 0; i < triples_.size(); ++i) {
      const auto& t = triples_[i];
      if (!t.is_verified())
        throw VerificationFailed("triple " + std::to_string(i) + " is " + to_string(t.status()));
      if (t.dim() != triples_.front().dim()) throw DimensionMismatch("triples of different dimension");
      max_digit_ = std::max(max_digit_, t.max_digit_norm());
    }
    for (auto w : word_)
      if (w >= triples_.size()) throw InvalidArgument("word entry " + std::to_string(w) + " out of range");
    if (kind_ == SystemKind::RandomWord) {
      for (const auto& t : triples_)
        if (!(t.R() == triples_.front().R()) || !t.L().same_elements(triples_.front().L()))
          throw MismatchedRL("random-word digit sets must share R and L");
    }
    build_certificate();
  }

  void build_certificate() {
    bool same_r = true;
    for (const auto& t : triples_) same_r = same_r && t.R() == triples_.front().R();
    try {
      if (same_r) {
        cert_ = contraction_certificate(triples_.front().R());
        return;
      }
      ContractionCertificate c;
      for (const auto& t : triples_) c.rate = std::max(c.rate, contraction_factor(t.R()));
      cert_ = c;
    } catch (const NotContractive& e) {
      cert_error_ = e.what();
    }
  }

  SystemKind kind_;
  TailRule tail_;
  std::vector<HadamardTriple> triples_;
  std::vector<std::size_t> word_;
  std::optional<ContractionCertificate> cert_;
  std::string cert_error_;
  double max_digit_ = 0.0;
};

//---------------------------------------------------------------------------//
// Fourier transform
//---------------------------------------------------------------------------//

/// Either a fixed number of factors, or auto-depth: add factors until the
/// certified tail bound is <= target_error, giving up at max_depth.
struct TruncationPolicy {
  std::optional<std::size_t> depth;
  double target_error = 1e-10;
  std::size_t max_depth = 200;

  static TruncationPolicy fixed(std::size_t k) { return {k, 0.0, k}; }
  static TruncationPolicy automatic(double eps = 1e-10, std::size_t cap = 200) { return {std::nullopt, eps, cap}; }
};

struct FtValue {
  Complex value{1.0, 0.0};
  double tail_bound = 0.0;
  std::size_t depth = 0;  // factors multiplied in
};

namespace detail {

// With eta the argument of the last factor used, every later argument obeys
// |eta_{k+j}| <= A rho^j |eta|, and |log m(eta')| stays below
// 2 pi beta |eta'| while that is small. The product of the omitted factors is
// then within expm1(E) of 1, E = 2 pi beta |eta| A rho / (1 - rho). Since
// |mu^| <= |partial| and each omitted factor has modulus <= 1, the error can
// never exceed 2|partial|.
inline double ft_tail_bound(const ConvolutionSystem& sys, Complex partial, double eta_norm) {
  const double beta = sys.max_digit_norm();
  if (beta == 0.0 || eta_norm == 0.0) return 0.0;
  const double e = kTwoPi * beta * eta_norm * sys.certificate().series_sum();
  return std::abs(partial) * std::min(std::expm1(e), 2.0);
}

}  // namespace detail

/// mu_{>n}^(lambda) = prod_{k>n} conj(m_{B_k}((R_k^T)^-1 ... (R_1^T)^-1 lambda)).
/// The conjugate comes from the exp(-2 pi i <x, xi>) Fourier convention.
inline FtValue ft_tail_eval(const ConvolutionSystem& sys, std::size_t n, std::span<const double> xi,
                            const TruncationPolicy& pol = {}) {
  if (xi.size() != sys.dim()) throw DimensionMismatch("ft argument dimension");
  Eigen::VectorXd eta = Eigen::Map<const Eigen::VectorXd>(xi.data(), static_cast<Eigen::Index>(xi.size()));
  Eigen::VectorXd next(eta.size());
  for (std::size_t k = 1; k <= n; ++k) {
    const auto* st = sys.stage(k);
    if (!st) return {};
    next.noalias() = st->inverse_transpose() * eta;
    eta.swap(next);
  }
  FtValue out;
  const bool finite = sys.length().has_value();
  for (;;) {
    const auto* st = sys.stage(n + out.depth + 1);
    if (!st) {
      out.tail_bound = 0.0;
      return out;
    }
    if (pol.depth && out.depth >= *pol.depth) break;
    if (!pol.depth) {
      if (out.depth >= pol.max_depth) break;
      if (!finite || sys.has_certificate()) {
        if (detail::ft_tail_bound(sys, out.value, eta.norm()) <= pol.target_error) break;
      }
    }
    next.noalias() = st->inverse_transpose() * eta;
    eta.swap(next);
    out.value *= std::conj(st->mask({eta.data(), static_cast<std::size_t>(eta.size())}));
    ++out.depth;
  }
  out.tail_bound = detail::ft_tail_bound(sys, out.value, eta.norm());
  return out;
}

inline FtValue ft_eval(const ConvolutionSystem& sys, std::span<const double> xi, const TruncationPolicy& pol = {}) {
  return ft_tail_eval(sys, 0, xi, pol);
}

/// Product of the first n factors, exactly n of them (no tail).
inline Complex ft_head(const ConvolutionSystem& sys, std::size_t n, std::span<const double> xi) {
  Eigen::VectorXd eta = Eigen::Map<const Eigen::VectorXd>(xi.data(), static_cast<Eigen::Index>(xi.size()));
  Complex v(1.0, 0.0);
  for (std::size_t k = 1; k <= n; ++k) {
    const auto* st = sys.stage(k);
    if (!st) break;
    eta = st->inverse_transpose() * eta;
    v *= std::conj(st->mask({eta.data(), static_cast<std::size_t>(eta.size())}));
  }
  return v;
}

//---------------------------------------------------------------------------//
// Support geometry
//---------------------------------------------------------------------------//

/// Partial sums sum_{k=from+1}^{from+count} R_k^-1 b_k, where
/// R_k^-1 = R_1^-1 ... R_k^-1, in lexicographic digit order with the
/// lowest stage most significant. Exact.
inline std::vector<RatVector> digit_points_exact(const ConvolutionSystem& sys, std::size_t count,
                                                 std::size_t from = 0) {
  const std::size_t d = sys.dim();
  RatMatrix acc = RatMatrix::identity(d);
  for (std::size_t k = 1; k <= from; ++k) {
    const auto* st = sys.stage(k);
    if (!st) return {RatVector(d, Rational(0))};
    acc = acc * inverse(RatMatrix(st->R()));
  }
  std::vector<RatVector> pts{RatVector(d, Rational(0))};
  for (std::size_t k = from + 1; k <= from + count; ++k) {
    const auto* st = sys.stage(k);
    if (!st) break;
    acc = acc * inverse(RatMatrix(st->R()));
    std::vector<RatVector> shifts;
    for (const auto& b : st->B()) shifts.push_back(acc.apply(to_rational(b)));
    std::vector<RatVector> grown;
    grown.reserve(pts.size() * shifts.size());
    for (const auto& p : pts)
      for (const auto& s : shifts) {
        RatVector q = p;
        for (std::size_t i = 0; i < d; ++i) q[i] += s[i];
        grown.push_back(std::move(q));
      }
    pts = std::move(grown);
  }
  return pts;
}

/// Double-precision version of digit_points_exact.
inline std::vector<RealVector> digit_points(const ConvolutionSystem& sys, std::size_t count, std::size_t from = 0) {
  const std::size_t d = sys.dim();
  Eigen::MatrixXd acc = Eigen::MatrixXd::Identity(d, d);
  for (std::size_t k = 1; k <= from; ++k) {
    const auto* st = sys.stage(k);
    if (!st) return {RealVector(d, 0.0)};
    acc = acc * st->inverse_transpose().transpose();
  }
  std::vector<RealVector> pts{RealVector(d, 0.0)};
  for (std::size_t k = from + 1; k <= from + count; ++k) {
    const auto* st = sys.stage(k);
    if (!st) break;
    acc = acc * st->inverse_transpose().transpose();
    std::vector<RealVector> grown;
    grown.reserve(pts.size() * st->N());
    for (const auto& p : pts)
      for (const auto& b : st->B()) {
        RealVector q = p;
        for (std::size_t i = 0; i < d; ++i)
          for (std::size_t j = 0; j < d; ++j) q[i] += acc(i, j) * static_cast<double>(b[j]);
        grown.push_back(std::move(q));
      }
    pts = std::move(grown);
  }
  return pts;
}

struct Box {
  RealVector lo, hi;

  bool contains(std::span<const double> x, double slack = 0.0) const {
    for (std::size_t i = 0; i < lo.size(); ++i)
      if (x[i] < lo[i] - slack || x[i] > hi[i] + slack) return false;
    return true;
  }
  /// Strictly disjoint: separated along some axis.
  bool separated_from(const Box& o) const {
    for (std::size_t i = 0; i < lo.size(); ++i)
      if (hi[i] < o.lo[i] || o.hi[i] < lo[i]) return true;
    return false;
  }
  Box shifted(std::span<const double> v) const {
    Box b = *this;
    for (std::size_t i = 0; i < lo.size(); ++i) {
      b.lo[i] += v[i];
      b.hi[i] += v[i];
    }
    return b;
  }
};

/// Box containing K_n = { sum_{k>n} R_k^-1 b_k }. The first few stages are
/// enumerated; the rest is covered by beta * ||R_n^-1|| * A rho^(m+1)/(1-rho).
inline Box support_bbox(const ConvolutionSystem& sys, std::size_t n = 0) {
  const std::size_t d = sys.dim();
  std::size_t m = 0;
  std::size_t count = 1;
  while (m < 16) {
    const auto* st = sys.stage(n + m + 1);
    if (!st || count * st->N() > 4096) break;
    count *= st->N();
    ++m;
  }
  const auto pts = digit_points(sys, m, n);
  Box box{RealVector(d, 0.0), RealVector(d, 0.0)};
  for (std::size_t i = 0; i < d; ++i) {
    box.lo[i] = box.hi[i] = pts.front()[i];
    for (const auto& p : pts) {
      box.lo[i] = std::min(box.lo[i], p[i]);
      box.hi[i] = std::max(box.hi[i], p[i]);
    }
  }
  double pad = 0.0;
  const bool exhausted = sys.length() && *sys.length() <= n + m;
  if (!exhausted && sys.max_digit_norm() > 0.0) {
    const auto& c = sys.certificate();
    // ||R_1^-1 ... R_n^-1|| <= A rho^n, then the omitted stages n+m+1, ...
    const double head = c.power_bound(static_cast<int>(n));
    pad = sys.max_digit_norm() * head * c.amplitude * std::pow(c.rate, static_cast<double>(m + 1)) /
          (1.0 - c.rate);
  }
  for (std::size_t i = 0; i < d; ++i) {
    const double eps = 1e-12 * std::max({1.0, std::abs(box.lo[i]), std::abs(box.hi[i])});
    box.lo[i] -= pad + (pad > 0.0 ? eps : 0.0);
    box.hi[i] += pad + (pad > 0.0 ? eps : 0.0);
  }
  return box;
}

/// count i.i.d. draws of sum_{k<=n} R_k^-1 b_k with each b_k uniform in B_k.
inline std::vector<RealVector> sample_support(const ConvolutionSystem& sys, std::size_t n, std::size_t count,
                                              std::uint64_t seed) {
  if (n == 0) throw InvalidArgument("sample_support needs n >= 1");
  const std::size_t d = sys.dim();
  std::vector<Eigen::MatrixXd> maps;  // R_k^-1 as a cumulative product
  std::vector<const HadamardTriple*> stages;
  Eigen::MatrixXd acc = Eigen::MatrixXd::Identity(d, d);
  for (std::size_t k = 1; k <= n; ++k) {
    const auto* st = sys.stage(k);
    if (!st) break;
    acc = acc * st->inverse_transpose().transpose();
    maps.push_back(acc);
    stages.push_back(st);
  }
  std::seed_seq seq{seed, std::uint64_t{0x5a4d}};
  std::mt19937_64 rng(seq);
  std::vector<RealVector> out(count, RealVector(d, 0.0));
  for (auto& x : out) {
    for (std::size_t k = 0; k < stages.size(); ++k) {
      std::uniform_int_distribution<std::size_t> pick(0, stages[k]->N() - 1);
      const auto& b = stages[k]->B()[pick(rng)];
      for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j) x[i] += maps[k](i, j) * static_cast<double>(b[j]);
    }
  }
  return out;
}

//---------------------------------------------------------------------------//
// No-overlap
//---------------------------------------------------------------------------//

enum class OverlapVerdict { Proven, Assumed, Estimated };

inline std::string to_string(OverlapVerdict v) {
  switch (v) {
    case OverlapVerdict::Proven: return "proven";
    case OverlapVerdict::Assumed: return "assumed";
    default: return "estimated";
  }
}

struct OverlapAssessment {
  OverlapVerdict verdict = OverlapVerdict::Estimated;
  double p_hat = 0.0;  // only meaningful for Estimated
  std::string detail;
};

/// Decides, in order:
///  1. Proven if B_1..B_n are all singletons;
///  2. Assumed for a self-affine system (no-overlap is a known theorem for
///     measures of Hadamard triples and is not re-checked here);
///  3. Proven if for every j <= n the digits of B_j are in distinct classes
///     mod R_j and the translates b + box(K_j), b in B_j-level points, are
///     pairwise separated;
///  4. Estimated otherwise. Points of mu are sampled as (b in B_n, tail) and
///     hashed into cells about (#cells ~ samples/4) across box(K_0); p_hat is
///     the fraction of samples whose cell also holds a sample with another b.
inline OverlapAssessment no_overlap_assess(const ConvolutionSystem& sys, std::size_t n, std::size_t samples = 20000,
                                           std::uint64_t seed = 1) {
  if (n == 0) throw InvalidArgument("no_overlap_assess needs n >= 1");
  bool singleton = true;
  for (std::size_t k = 1; k <= n; ++k)
    if (const auto* st = sys.stage(k)) singleton = singleton && st->N() == 1;
  if (singleton) return {OverlapVerdict::Proven, 0.0, "singleton digit sets up to level " + std::to_string(n)};
  if (sys.kind() == SystemKind::SelfAffine)
    return {OverlapVerdict::Assumed, 0.0,
            "self-affine measure of a verified Hadamard triple: no-overlap is a known theorem for this class"};

  bool separated = true;
  std::string why;
  for (std::size_t j = 1; j <= n && separated; ++j) {
    const auto* st = sys.stage(j);
    if (!st) break;
    if (!residue_classes_distinct(st->R(), st->B().elements())) {
      separated = false;
      why = "B_" + std::to_string(j) + " has two digits in one residue class";
      break;
    }
    std::size_t size = 1;
    for (std::size_t k = 1; k <= j; ++k) size *= sys.stage(k)->N();
    if (size > 4096) {
      separated = false;
      why = "level " + std::to_string(j) + " too large to separate";
      break;
    }
    const auto pts = digit_points(sys, j);
    const Box tail = support_bbox(sys, j);
    for (std::size_t a = 0; a < pts.size() && separated; ++a)
      for (std::size_t b = a + 1; b < pts.size() && separated; ++b)
        if (!tail.shifted(pts[a]).separated_from(tail.shifted(pts[b]))) {
          separated = false;
          why = "translate boxes intersect at level " + std::to_string(j);
        }
  }
  if (separated)
    return {OverlapVerdict::Proven, 0.0, "translates of the tail boxes are disjoint up to level " + std::to_string(n)};

  // Monte-Carlo estimate.
  const std::size_t d = sys.dim();
  constexpr std::size_t kTailDepth = 24;
  const std::size_t total = n + kTailDepth;
  std::vector<Eigen::MatrixXd> maps;
  std::vector<const HadamardTriple*> stages;
  Eigen::MatrixXd acc = Eigen::MatrixXd::Identity(d, d);
  for (std::size_t k = 1; k <= total; ++k) {
    const auto* st = sys.stage(k);
    if (!st) break;
    acc = acc * st->inverse_transpose().transpose();
    maps.push_back(acc);
    stages.push_back(st);
  }
  const Box box = support_bbox(sys, 0);
  double diam = 0.0;
  for (std::size_t i = 0; i < d; ++i) diam = std::max(diam, box.hi[i] - box.lo[i]);
  const double cell = std::max(diam, 1e-300) * std::pow(4.0 / static_cast<double>(std::max<std::size_t>(samples, 4)),
                                                        1.0 / static_cast<double>(d));
  std::seed_seq seq{seed, std::uint64_t{0x0e1a}};
  std::mt19937_64 rng(seq);
  std::map<std::vector<std::int64_t>, std::vector<std::size_t>> cells;  // cell -> head indices seen
  std::vector<std::pair<std::vector<std::int64_t>, std::size_t>> drawn(samples);
  for (std::size_t s = 0; s < samples; ++s) {
    RealVector x(d, 0.0);
    std::size_t head = 0;
    for (std::size_t k = 0; k < stages.size(); ++k) {
      std::uniform_int_distribution<std::size_t> pick(0, stages[k]->N() - 1);
      const std::size_t idx = pick(rng);
      if (k < n) head = head * stages[k]->N() + idx;
      const auto& b = stages[k]->B()[idx];
      for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j) x[i] += maps[k](i, j) * static_cast<double>(b[j]);
    }
    std::vector<std::int64_t> key(d);
    for (std::size_t i = 0; i < d; ++i) key[i] = static_cast<std::int64_t>(std::floor((x[i] - box.lo[i]) / cell));
    auto& heads = cells[key];
    if (std::find(heads.begin(), heads.end(), head) == heads.end()) heads.push_back(head);
    drawn[s] = {std::move(key), head};
  }
  std::size_t shared = 0;
  for (const auto& [key, head] : drawn) shared += cells[key].size() > 1 ? 1 : 0;
  const double p = samples ? static_cast<double>(shared) / static_cast<double>(samples) : 0.0;
  return {OverlapVerdict::Estimated, p, why + "; sampled " + std::to_string(samples) + " points"};
}

}  // namespace speclab
