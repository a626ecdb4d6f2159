#pragma once

#include <algorithm>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "speclab/parallel.hpp"
#include "speclab/quasi_product.hpp"
#include "speclab/spectra.hpp"

namespace speclab {

using Word = std::vector<std::size_t>;

/// Uniform i.i.d. letters in {0, ..., n-1}. Word k is drawn from its own
/// stream seeded by (seed, k), so any subset can be regenerated alone.
inline Word sample_word(std::size_t n, std::size_t length, std::uint64_t seed, std::uint64_t k) {
  if (n == 0) throw InvalidArgument("alphabet size must be >= 1");
  std::seed_seq seq{seed, k};
  std::mt19937_64 rng(seq);
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  Word w(length);
  for (auto& x : w) x = pick(rng);
  return w;
}

inline std::vector<Word> sample_words(std::size_t n, std::size_t length, std::size_t count, std::uint64_t seed) {
  std::vector<Word> out;
  out.reserve(count);
  for (std::size_t k = 0; k < count; ++k) out.push_back(sample_word(n, length, seed, k));
  return out;
}

/// "0111" for alphabets up to 10 letters, "0,11,3" otherwise.
inline std::string word_string(const Word& w) {
  const bool wide = std::any_of(w.begin(), w.end(), [](auto x) { return x >= 10; });
  std::string s;
  for (std::size_t i = 0; i < w.size(); ++i) s += (wide && i ? "," : "") + std::to_string(w[i]);
  return s;
}

struct EnsembleConfig {
  std::vector<HadamardTriple> family;
  std::size_t word_length = 20;
  std::size_t samples = 200;
  std::uint64_t seed = 7;
  TailRule tail = TailRule::RepeatLast;
  SpectrumGenerator lambda = SpectrumGenerator::lattice(IntMatrix::scalar(1));
  GridSpec grid = GridSpec::uniform(1, 32);
  std::size_t window = 64;
  SpectrumThresholds thresholds;
  TruncationPolicy policy;
  unsigned threads = 0;
};

struct EnsembleSample {
  Word word;
  bool pass = false;
  double min_q = 0.0;
  double max_q = 0.0;
  std::string error;  // non-empty when the sample could not be evaluated
};

struct EnsembleReport {
  std::vector<EnsembleSample> samples;
  double pass_fraction = 0.0;
  double min = 0.0, p5 = 0.0, median = 0.0;  // of the per-sample statistic
  std::vector<Word> failing;
};

namespace detail {

inline void summarize(EnsembleReport& rep, const std::vector<double>& stat) {
  std::size_t passed = 0;
  for (const auto& s : rep.samples) {
    if (s.pass) ++passed;
    else rep.failing.push_back(s.word);
  }
  rep.pass_fraction = rep.samples.empty() ? 0.0 : static_cast<double>(passed) / static_cast<double>(rep.samples.size());
  if (stat.empty()) return;
  auto sorted = stat;
  std::sort(sorted.begin(), sorted.end());
  const auto at = [&](double q) {
    const auto i = static_cast<std::size_t>(std::floor(q * static_cast<double>(sorted.size() - 1)));
    return sorted[i];
  };
  rep.min = sorted.front();
  rep.p5 = at(0.05);
  rep.median = at(0.5);
}

inline void check_family(const std::vector<HadamardTriple>& family) {
  if (family.empty()) throw InvalidArgument("empty triple family");
}

}  // namespace detail

/// check_spectrum for mu_w over sampled words. A sample that throws is
/// recorded as failing with its message.
inline EnsembleReport ensemble_spectrum_report(const EnsembleConfig& cfg) {
  detail::check_family(cfg.family);
  if (cfg.samples == 0 || cfg.word_length == 0) throw InvalidArgument("samples and word length must be >= 1");
  EnsembleReport rep;
  rep.samples.resize(cfg.samples);
  parallel_for(
      cfg.samples,
      [&](std::size_t k) {
        auto& s = rep.samples[k];
        s.word = sample_word(cfg.family.size(), cfg.word_length, cfg.seed, k);
        try {
          const auto sys = ConvolutionSystem::random_word(cfg.family, s.word, cfg.tail);
          const auto r = check_spectrum(sys, cfg.lambda, cfg.grid, cfg.window, cfg.thresholds, cfg.policy, 1);
          s.pass = r.pass;
          s.min_q = r.min_q;
          s.max_q = r.max_q;
        } catch (const std::exception& e) {
          s.error = e.what();
        }
      },
      cfg.threads);
  std::vector<double> stat;
  for (const auto& s : rep.samples)
    if (s.error.empty()) stat.push_back(s.min_q);
  detail::summarize(rep, stat);
  return rep;
}

struct TilingSample {
  Word word;
  bool pass = false;
  double max_offlattice_mass = 0.0;
  std::string error;
};

struct TilingEnsembleReport {
  std::vector<TilingSample> samples;
  double pass_fraction = 0.0;
  double worst_mass = 0.0;
  std::vector<Word> failing;
};

/// lattice_tiling_check for mu_w over sampled words. Every B(i) must be a
/// complete residue set for R.
inline TilingEnsembleReport ensemble_tiling_report(const EnsembleConfig& cfg, const IntMatrix& lattice,
                                                   double tol = 1e-7) {
  detail::check_family(cfg.family);
  for (std::size_t i = 0; i < cfg.family.size(); ++i)
    if (!is_complete_residue_set(cfg.family[i].R(), cfg.family[i].B().elements()))
      throw NotCompleteResidue("B(" + std::to_string(i) + ") is not a complete residue set for R");
  TilingEnsembleReport rep;
  rep.samples.resize(cfg.samples);
  parallel_for(
      cfg.samples,
      [&](std::size_t k) {
        auto& s = rep.samples[k];
        s.word = sample_word(cfg.family.size(), cfg.word_length, cfg.seed, k);
        try {
          const auto sys = ConvolutionSystem::random_word(cfg.family, s.word, cfg.tail);
          const auto r = lattice_tiling_check(sys, lattice, cfg.window, tol, cfg.policy, 1);
          s.pass = r.pass;
          s.max_offlattice_mass = r.max_offlattice_mass;
        } catch (const std::exception& e) {
          s.error = e.what();
        }
      },
      cfg.threads);
  std::size_t passed = 0;
  for (const auto& s : rep.samples) {
    rep.worst_mass = std::max(rep.worst_mass, s.max_offlattice_mass);
    if (s.pass) ++passed;
    else rep.failing.push_back(s.word);
  }
  rep.pass_fraction = rep.samples.empty() ? 0.0 : static_cast<double>(passed) / static_cast<double>(rep.samples.size());
  return rep;
}

enum class ProbeVerdict { NonSpectralEvidence, Consistent };

inline std::string to_string(ProbeVerdict v) {
  return v == ProbeVerdict::NonSpectralEvidence ? "NonSpectralEvidence" : "Consistent";
}

struct ProbeReport {
  std::vector<QPoint> points;
  double slack = 0.0;
  ProbeVerdict verdict = ProbeVerdict::Consistent;
};

/// Q at the probe points for one explicit word. The slack is the larger of
/// the certified FT error on Q and window_slack, the allowance for the
/// frequencies outside the window; NonSpectralEvidence when some
/// Q < 1 - 10 * slack.
inline ProbeReport counterexample_probe(const std::vector<HadamardTriple>& family, const Word& word, TailRule tail,
                                        const SpectrumGenerator& lambda, const std::vector<RealVector>& probes,
                                        std::size_t window, double window_slack = 0.01,
                                        const TruncationPolicy& pol = {}) {
  detail::check_family(family);
  const auto sys = ConvolutionSystem::random_word(family, word, tail);
  ProbeReport rep;
  rep.slack = window_slack;
  for (const auto& xi : probes) {
    rep.points.push_back({xi, qp_eval(sys, lambda, xi, window, pol)});
    rep.slack = std::max(rep.slack, rep.points.back().value.tail_bound);
  }
  for (const auto& p : rep.points)
    if (p.value.q < 1.0 - 10.0 * rep.slack) rep.verdict = ProbeVerdict::NonSpectralEvidence;
  return rep;
}

}  // namespace speclab
