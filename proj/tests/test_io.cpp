#include <gtest/gtest.h>

#include "speclab/io.hpp"

namespace speclab::io {
namespace {

TEST(Json, TripleShorthandAndRoundTrip) {
  const auto t = triple_from_json(Json::parse(R"({"R": 2, "B": [0, 3], "L": [0, 1]})"));
  EXPECT_TRUE(t.is_verified());
  EXPECT_EQ(t.R(), IntMatrix::scalar(2));
  EXPECT_EQ(to_json(t), Json::parse(R"({"R": [[2]], "B": [[0], [3]], "L": [[0], [1]]})"));
  const auto back = triple_from_json(to_json(t));
  EXPECT_EQ(back.R(), t.R());
  EXPECT_EQ(back.B().elements(), t.B().elements());

  const auto bad = triple_from_json(Json::parse(R"({"R": 2, "B": [0, 1], "L": [0, 2]})"));
  EXPECT_FALSE(bad.is_verified());
}

TEST(Json, MalformedInput) {
  EXPECT_THROW(triple_from_json(Json::parse(R"({"R": 2, "B": [0, 1]})")), InvalidArgument);
  EXPECT_THROW(triple_from_json(Json::parse(R"({"R": 2.5, "B": [0, 1], "L": [0, 1]})")), InvalidArgument);
  EXPECT_THROW(matrix_from_json(Json::parse("[[1, 2], [3]]")), DimensionMismatch);
  EXPECT_THROW(vectors_from_json(Json::parse("[[0, 1], [2]]")), DimensionMismatch);
  EXPECT_THROW(word_from_json(Json::parse("[0, -1]")), InvalidArgument);
  EXPECT_THROW(system_from_json(Json::parse(R"({"kind": "spiral", "triples": [{"R": 2, "B": [0, 1], "L": [0, 1]}]})")),
               InvalidArgument);
  EXPECT_THROW(spectrum_from_json(Json::parse(R"({"kind": "level_sets"})")), InvalidArgument);
}

TEST(Json, SystemRoundTrip) {
  const auto j = Json::parse(R"({"kind": "random_word", "tail": "finite", "word": [0, 1, 1],
    "triples": [{"R": 2, "B": [0, 1], "L": [0, 1]}, {"R": 2, "B": [0, 3], "L": [0, 1]}]})");
  const auto sys = system_from_json(j);
  EXPECT_EQ(sys.kind(), SystemKind::RandomWord);
  EXPECT_EQ(sys.tail(), TailRule::Finite);
  EXPECT_EQ(to_json(system_from_json(to_json(sys))), to_json(sys));
  EXPECT_EQ(word_from_json(Json("0111")), (Word{0, 1, 1, 1}));

  const auto doc = Json::parse(R"({"family": [{"R": 2, "B": [0, 1], "L": [0, 1]}], "word": "00"})");
  EXPECT_EQ(document_system(doc).kind(), SystemKind::RandomWord);
}

TEST(Json, CyclesUseRationalStrings) {
  const auto rep = find_extreme_cycles(make_triple(2, {0, 3}, {0, 1}), 3);
  const auto j = to_json(rep);
  bool third = false;
  for (const auto& c : j.at("cycles"))
    for (const auto& p : c.at("points")) third = third || p == Json::array({"1/3"});
  EXPECT_TRUE(third);
  EXPECT_EQ(j.at("m_max"), 3);
}

TEST(Json, Spectra) {
  const auto sys = ConvolutionSystem::self_affine(make_triple(4, {0, 2}, {0, 1}));
  const auto cyc = spectrum_from_json(Json::parse(R"({"kind": "extreme_cycles"})"), &sys);
  const auto lv = spectrum_from_json(Json::parse(R"({"kind": "level_sets"})"), &sys);
  EXPECT_EQ(cyc.level(2), (std::vector<IntVector>{{0}, {1}, {4}, {5}}));
  EXPECT_EQ(lv.level(2), cyc.level(2));
  const auto prod = spectrum_from_json(
      Json::parse(R"({"kind": "product", "factors": [{"kind": "lattice", "basis": 2}, {"kind": "explicit", "points": [0, 3]}]})"));
  EXPECT_EQ(prod.level(1).size(), 6u);
}

TEST(Json, QuasiProductRoundTrip) {
  const auto j = Json::parse(R"({"R1": 2, "A": [0, 1], "L1": [0, 1], "R": 2,
    "B_family": [[0, 1], [0, 3]], "L": [0, 1], "C": [[1]]})");
  const auto s = quasi_product_from_json(j);
  EXPECT_TRUE(build_quasi_product(s).is_verified());
  EXPECT_EQ(to_json(quasi_product_from_json(to_json(s))), to_json(s));
  auto no_c = j;
  no_c.erase("C");
  EXPECT_EQ(quasi_product_from_json(no_c).coupling(), IntMatrix(1, 1));
}

}  // namespace
}  // namespace speclab::io
