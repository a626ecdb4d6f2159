#pragma once

// JSON encodings of the library's inputs and results. Integer matrices are
// row-major arrays of rows; a bare integer is a 1x1 matrix. A vector set is an
// array whose elements are integer arrays, or bare integers in dimension 1.
// Exact rationals are written as "p/q" strings.

#include <nlohmann/json.hpp>

#include <string>
#include <vector>

#include "speclab/cycles.hpp"
#include "speclab/ensemble.hpp"
#include "speclab/quasi_product.hpp"
#include "speclab/spectra.hpp"

namespace speclab::io {

using Json = nlohmann::json;

inline std::int64_t integer_from_json(const Json& j) {
  if (!j.is_number_integer()) throw InvalidArgument("expected an integer, got " + j.dump());
  return j.get<std::int64_t>();
}

inline IntMatrix matrix_from_json(const Json& j) {
  if (j.is_number()) return IntMatrix::scalar(integer_from_json(j));
  if (!j.is_array() || j.empty() || !j.front().is_array()) throw InvalidArgument("expected a matrix, got " + j.dump());
  std::vector<IntVector> rows;
  for (const auto& row : j) {
    if (!row.is_array() || row.size() != j.front().size()) throw DimensionMismatch("ragged matrix " + j.dump());
    IntVector r;
    for (const auto& x : row) r.push_back(integer_from_json(x));
    rows.push_back(std::move(r));
  }
  return IntMatrix::from_rows(rows);
}

inline IntVector vector_from_json(const Json& j) {
  if (j.is_number()) return {integer_from_json(j)};
  if (!j.is_array()) throw InvalidArgument("expected an integer vector, got " + j.dump());
  IntVector v;
  for (const auto& x : j) v.push_back(integer_from_json(x));
  return v;
}

inline std::vector<IntVector> vectors_from_json(const Json& j) {
  if (!j.is_array() || j.empty()) throw InvalidArgument("expected a non-empty array of vectors, got " + j.dump());
  std::vector<IntVector> out;
  for (const auto& x : j) out.push_back(vector_from_json(x));
  for (const auto& v : out)
    if (v.size() != out.front().size()) throw DimensionMismatch("vectors of different lengths in " + j.dump());
  return out;
}

inline RealVector real_vector_from_json(const Json& j) {
  if (j.is_number()) return {j.get<double>()};
  if (!j.is_array()) throw InvalidArgument("expected a real vector, got " + j.dump());
  RealVector v;
  for (const auto& x : j) {
    if (!x.is_number()) throw InvalidArgument("expected a number, got " + x.dump());
    v.push_back(x.get<double>());
  }
  return v;
}

inline Json to_json(const IntMatrix& m) {
  Json rows = Json::array();
  for (std::size_t i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (std::size_t k = 0; k < m.cols(); ++k) row.push_back(m(i, k));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline Json to_json(const std::vector<IntVector>& vs) {
  Json out = Json::array();
  for (const auto& v : vs) out.push_back(v);
  return out;
}

inline Json to_json(const RatVector& v) {
  Json out = Json::array();
  for (const auto& x : v) out.push_back(to_string(x));
  return out;
}

inline Json required(const Json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw InvalidArgument(std::string("missing key \"") + key + "\"");
  return j.at(key);
}

//---------------------------------------------------------------------------//
// Triples and systems
//---------------------------------------------------------------------------//

inline HadamardTriple triple_from_json(const Json& j, double tol = kDefaultHadamardTol) {
  IntMatrix r = matrix_from_json(required(j, "R"));
  const std::size_t d = r.rows();
  return make_triple(std::move(r), DigitSet(d, vectors_from_json(required(j, "B"))),
                     FrequencySet(d, vectors_from_json(required(j, "L"))), tol);
}

inline Json to_json(const HadamardTriple& t) {
  return {{"R", to_json(t.R())}, {"B", to_json(t.B().elements())}, {"L", to_json(t.L().elements())}};
}

inline std::vector<HadamardTriple> family_from_json(const Json& j, double tol = kDefaultHadamardTol) {
  if (!j.is_array() || j.empty()) throw InvalidArgument("expected a non-empty array of triples");
  std::vector<HadamardTriple> out;
  for (const auto& t : j) out.push_back(triple_from_json(t, tol));
  return out;
}

inline Json to_json(const std::vector<HadamardTriple>& family) {
  Json out = Json::array();
  for (const auto& t : family) out.push_back(to_json(t));
  return out;
}

inline TailRule tail_from_json(const Json& j) {
  const auto s = j.get<std::string>();
  if (s == "repeat_last") return TailRule::RepeatLast;
  if (s == "finite") return TailRule::Finite;
  throw InvalidArgument("unknown tail rule \"" + s + "\"");
}

inline Word word_from_json(const Json& j) {
  if (j.is_string()) {
    Word w;
    for (char c : j.get<std::string>()) {
      if (c < '0' || c > '9') throw InvalidArgument("word string may only hold digits 0-9");
      w.push_back(static_cast<std::size_t>(c - '0'));
    }
    return w;
  }
  if (!j.is_array()) throw InvalidArgument("expected a word, got " + j.dump());
  Word w;
  for (const auto& x : j) {
    const auto v = integer_from_json(x);
    if (v < 0) throw InvalidArgument("negative letter in word");
    w.push_back(static_cast<std::size_t>(v));
  }
  return w;
}

/// {"kind": "self_affine"|"periodic"|"random_word"|"general", "triples": [...],
///  "word": [...], "tail": "repeat_last"|"finite"}
inline ConvolutionSystem system_from_json(const Json& j, double tol = kDefaultHadamardTol) {
  const auto kind = j.value("kind", std::string("self_affine"));
  auto triples = family_from_json(required(j, "triples"), tol);
  const TailRule tail = j.contains("tail") ? tail_from_json(j.at("tail")) : TailRule::RepeatLast;
  if (kind == "self_affine") {
    if (triples.size() != 1) throw InvalidArgument("a self_affine system takes exactly one triple");
    return ConvolutionSystem::self_affine(std::move(triples.front()));
  }
  if (kind == "periodic") return ConvolutionSystem::periodic(std::move(triples), word_from_json(required(j, "word")));
  if (kind == "random_word")
    return ConvolutionSystem::random_word(std::move(triples), word_from_json(required(j, "word")), tail);
  if (kind == "general") return ConvolutionSystem::general(std::move(triples), tail);
  throw InvalidArgument("unknown system kind \"" + kind + "\"");
}

inline Json to_json(const ConvolutionSystem& sys) {
  Json j{{"kind", to_string(sys.kind())}, {"triples", to_json(sys.triples())}, {"tail", to_string(sys.tail())}};
  if (sys.kind() == SystemKind::Periodic || sys.kind() == SystemKind::RandomWord) j["word"] = sys.word();
  return j;
}

/// A document names its measure with "system", or "triple" for a self-affine
/// one, or "family" plus "word" for a random-word one.
inline ConvolutionSystem document_system(const Json& doc, double tol = kDefaultHadamardTol) {
  if (doc.contains("system")) return system_from_json(doc.at("system"), tol);
  if (doc.contains("triple")) return ConvolutionSystem::self_affine(triple_from_json(doc.at("triple"), tol));
  if (doc.contains("family") && doc.contains("word")) {
    const TailRule tail = doc.contains("tail") ? tail_from_json(doc.at("tail")) : TailRule::RepeatLast;
    return ConvolutionSystem::random_word(family_from_json(doc.at("family"), tol), word_from_json(doc.at("word")),
                                          tail);
  }
  throw InvalidArgument("document has no \"system\", \"triple\" or \"family\" + \"word\"");
}

//---------------------------------------------------------------------------//
// Cycles and spectra
//---------------------------------------------------------------------------//

inline Json to_json(const ExtremeCycle& c) {
  Json pts = Json::array();
  for (const auto& p : c.points) pts.push_back(to_json(p));
  return {{"period", c.period()}, {"word", to_json(c.word)}, {"word_indices", c.word_indices},
          {"points", pts}, {"extreme_for", c.extreme_for}};
}

inline Json to_json(const CycleReport& r) {
  Json cycles = Json::array();
  for (const auto& c : r.cycles) cycles.push_back(to_json(c));
  return {{"m_max", r.m_max}, {"containment_radius", r.containment_radius}, {"caveat", r.caveat},
          {"cycles", cycles}};
}

/// Cycles of the system's triples: those of the single triple, or the
/// common ones of a family sharing R and L.
inline CycleReport system_cycles(const ConvolutionSystem& sys, int m_max) {
  return sys.triples().size() == 1 ? find_extreme_cycles(sys.triples().front(), m_max)
                                   : common_extreme_cycles(sys.triples(), m_max);
}

/// {"kind": "lattice", "basis": M} | {"kind": "level_sets"} |
/// {"kind": "extreme_cycles", "m_max": 6} | {"kind": "explicit", "points": [...]} |
/// {"kind": "product", "factors": [spec, spec]}.
/// level_sets and extreme_cycles refer to sys.
inline SpectrumGenerator spectrum_from_json(const Json& j, const ConvolutionSystem* sys = nullptr) {
  const auto kind = required(j, "kind").get<std::string>();
  if (kind == "lattice") return SpectrumGenerator::lattice(matrix_from_json(required(j, "basis")));
  if (kind == "explicit") return SpectrumGenerator::explicit_finite(vectors_from_json(required(j, "points")));
  if (kind == "product") {
    const auto f = required(j, "factors");
    if (!f.is_array() || f.size() != 2) throw InvalidArgument("product spectrum needs two factors");
    return SpectrumGenerator::product(spectrum_from_json(f[0], nullptr), spectrum_from_json(f[1], nullptr));
  }
  if (!sys) throw InvalidArgument("spectrum kind \"" + kind + "\" needs a measure");
  if (kind == "level_sets") return SpectrumGenerator::level_sets(*sys);
  if (kind == "extreme_cycles") {
    auto rep = system_cycles(*sys, j.value("m_max", 6));
    return SpectrumGenerator::extreme_cycles(sys->triples().front(), std::move(rep.cycles));
  }
  throw InvalidArgument("unknown spectrum kind \"" + kind + "\"");
}

//---------------------------------------------------------------------------//
// Quasi-products
//---------------------------------------------------------------------------//

/// {"R1", "A", "L1", "R", "B_family", "L", "C"}; C may be omitted (zero).
inline QuasiProductSpec quasi_product_from_json(const Json& j) {
  QuasiProductSpec s;
  s.r1 = matrix_from_json(required(j, "R1"));
  s.a = vectors_from_json(required(j, "A"));
  s.l1 = FrequencySet(s.r1.rows(), vectors_from_json(required(j, "L1")));
  s.r = matrix_from_json(required(j, "R"));
  const auto fam = required(j, "B_family");
  if (!fam.is_array() || fam.empty()) throw InvalidArgument("B_family must be a non-empty array");
  for (const auto& b : fam) s.b_family.emplace_back(s.r.rows(), vectors_from_json(b));
  s.l = FrequencySet(s.r.rows(), vectors_from_json(required(j, "L")));
  if (j.contains("C")) s.c = matrix_from_json(j.at("C"));
  return s;
}

inline Json to_json(const QuasiProductSpec& s) {
  Json fam = Json::array();
  for (const auto& b : s.b_family) fam.push_back(to_json(b.elements()));
  return {{"R1", to_json(s.r1)}, {"A", to_json(s.a)},  {"L1", to_json(s.l1.elements())},
          {"R", to_json(s.r)},   {"B_family", fam},   {"L", to_json(s.l.elements())},
          {"C", to_json(s.coupling())}};
}

}  // namespace speclab::io
