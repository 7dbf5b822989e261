#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "common.hpp"
#include "oracle.hpp"

using namespace odeen;

namespace {

RuleId id(const std::string& text) { return shared_env().catalog.id_of(text); }

std::vector<Observation> observe_all(RuleId rule, const std::vector<StructureId>& ids) {
  std::vector<Observation> obs;
  for (auto s : ids) obs.push_back({s, shared_env().matrix.get(rule, s)});
  return obs;
}

}  // namespace

TEST(SemMatrix, Shape) {
  const auto& m = shared_env().matrix;
  EXPECT_EQ(m.n_rules(), shared_env().catalog.size());
  EXPECT_EQ(m.n_structures(), 117649u);
  EXPECT_EQ(m.words_per_row(), (117649u + 63) / 64);
}

TEST(SemMatrix, CellsAgreeWithOracle) {
  const auto& env = shared_env();
  Rng rng(3, "matrix-oracle");
  for (int i = 0; i < 10000; ++i) {
    const auto r = RuleId(rng.below(env.catalog.size()));
    const auto s = StructureId(rng.below(117649));
    ASSERT_EQ(env.matrix.get(r, s), oracle::eval(env.catalog.text(r), s)) << env.catalog.text(r) << " / " << s;
  }
}

TEST(SemMatrix, RowsAgreeWithInterpreterRoute) {
  // The builder uses bit masks and word-wise conjunctions; tag_universe walks the AST per structure.
  const auto& env = shared_env();
  Rng rng(4, "matrix-rows");
  for (int i = 0; i < 25; ++i) {
    const auto r = RuleId(rng.below(env.catalog.size()));
    const auto expected = tag_universe(env.catalog.rule(r));
    const auto row = env.matrix.row(r);
    ASSERT_TRUE(std::equal(row.begin(), row.end(), expected.words().begin())) << env.catalog.text(r);
  }
}

TEST(SemMatrix, PaddingBitsAreZero) {
  const auto& m = shared_env().matrix;
  const std::size_t tail = 117649 % 64;
  for (RuleId r = 0; r < m.n_rules(); ++r) ASSERT_EQ(m.row(r).back() >> tail, 0u);
}

TEST(SemMatrix, BuildIsThreadIndependent) {
  const RuleCatalog catalog;
  EXPECT_EQ(build_matrix(catalog, 3).checksum(), shared_env().matrix.checksum());
}

TEST(SemMatrix, StreamRoundTrip) {
  const auto& m = shared_env().matrix;
  std::stringstream buf;
  m.write(buf);
  const auto bytes = buf.str();
  EXPECT_EQ(bytes.substr(0, 4), "ODNM");
  EXPECT_EQ(bytes.size(), 4 + 4 + 8 + 8 + m.n_rules() * m.words_per_row() * 8 + 8);
  std::istringstream in(bytes);
  EXPECT_TRUE(SemanticMatrix::read(in) == m);
}

TEST(SemMatrix, CorruptFilesAreRejected) {
  SemanticMatrix small(3, 100);
  small.mutable_row(1)[0] = 0xdeadbeef;
  std::stringstream buf;
  small.write(buf);
  std::string bytes = buf.str();
  bytes[30] ^= 1;
  std::istringstream flipped(bytes);
  EXPECT_THROW(SemanticMatrix::read(flipped), std::runtime_error);
  std::istringstream truncated(buf.str().substr(0, 40));
  EXPECT_THROW(SemanticMatrix::read(truncated), std::runtime_error);
  std::istringstream magic("XXXX");
  EXPECT_THROW(SemanticMatrix::read(magic), std::runtime_error);
}

TEST(SemMatrix, SaveIsAtomic) {
  const auto dir = std::filesystem::temp_directory_path() / "odeen_semmatrix_test";
  std::filesystem::create_directories(dir);
  SemanticMatrix small(2, 70);
  small.mutable_row(0)[1] = 5;
  small.save(dir / "m.odnm");
  EXPECT_FALSE(std::filesystem::exists(dir / "m.odnm.tmp"));
  EXPECT_TRUE(SemanticMatrix::load(dir / "m.odnm") == small);
  std::filesystem::remove_all(dir);
}

TEST(SemMatrix, EquivalenceFixtures) {
  const auto& p = shared_env().partition;
  EXPECT_TRUE(p.equivalent(id("at_least 1 pyramid pointing_up and at_most 1 pyramid pointing_up"),
                           id("exactly 1 pyramid pointing_up")));
  EXPECT_TRUE(p.equivalent(id("at_least 2 red and at_most 2 red"), id("exactly 2 red")));
  EXPECT_TRUE(p.equivalent(id("zero red"), id("zero red and zero red")));
  EXPECT_FALSE(p.equivalent(id("zero red"), id("zero blue")));
}

TEST(SemMatrix, PartitionMatchesRowEquality) {
  const auto& env = shared_env();
  const auto& p = env.partition;
  ASSERT_EQ(p.class_of.size(), env.catalog.size());
  std::size_t total = 0;
  for (ClassId c = 0; c < p.class_count(); ++c) {
    total += p.class_size[c];
    EXPECT_EQ(p.class_of[p.representative[c]], c);
    if (c > 0) {
      EXPECT_LT(p.representative[c - 1], p.representative[c]);
    }
  }
  EXPECT_EQ(total, env.catalog.size());
  // Oracle: group rules by full row content.
  std::map<std::vector<std::uint64_t>, RuleId> first;
  for (RuleId r = 0; r < env.catalog.size(); ++r) {
    const auto row = env.matrix.row(r);
    auto [it, fresh] = first.emplace(std::vector<std::uint64_t>(row.begin(), row.end()), r);
    ASSERT_EQ(p.class_of[r], p.class_of[it->second]);
    if (fresh) {
      ASSERT_EQ(p.representative[p.class_of[r]], r);
    }
  }
  EXPECT_EQ(first.size(), p.class_count());
}

TEST(SemMatrix, RepresentativityOfWholeUniverse) {
  const auto& env = shared_env();
  std::vector<StructureId> all(117649);
  for (StructureId s = 0; s < all.size(); ++s) all[s] = s;
  const auto r = is_representative(observe_all(id("exactly 1 red touching blue"), all), id("exactly 1 red touching blue"),
                                   env.matrix, env.partition);
  EXPECT_TRUE(r.representative);
}

TEST(SemMatrix, EmptyObservationsLeaveEveryRival) {
  const auto& env = shared_env();
  const auto r = is_representative({}, 0, env.matrix, env.partition);
  EXPECT_FALSE(r.representative);
  EXPECT_EQ(r.unresolved.size(), env.partition.class_count() - 1);
}

TEST(SemMatrix, InconsistentObservationsViolateContract) {
  const auto& env = shared_env();
  const RuleId zr = id("zero red");
  const std::vector<Observation> obs{{1, true}};  // structure 1 has a red block
  EXPECT_THROW(is_representative(obs, zr, env.matrix, env.partition), ContractViolation);
}

TEST(SemMatrix, SurvivorsAreExactlyConsistentClasses) {
  const auto& env = shared_env();
  Rng rng(8, "survivors");
  const auto ids = rng.sample_distinct<StructureId>(117649, 6);
  const auto obs = observe_all(id("at_least 2 blue"), ids);
  const auto got = surviving_classes(obs, env.matrix, env.partition);
  std::vector<ClassId> expected;
  for (ClassId c = 0; c < env.partition.class_count(); ++c) {
    const auto& text = env.catalog.text(env.partition.representative[c]);
    bool ok = true;
    for (const auto& o : obs) ok = ok && oracle::eval(text, o.id) == o.tag;
    if (ok) expected.push_back(c);
  }
  EXPECT_EQ(got, expected);
  EXPECT_EQ(filter_classes(got, obs, env.matrix, env.partition), got);
}

TEST(SemMatrix, RestrictRowGathersInGivenOrder) {
  const auto& env = shared_env();
  const RuleId r = id("at_least 1 red");
  const std::vector<StructureId> ids{117648, 0, 1, 64, 63, 1};
  const auto v = restrict_row(env.matrix, r, ids);
  ASSERT_EQ(v.size(), ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) EXPECT_EQ(v[i], oracle::eval("at_least 1 red", ids[i]));
  EXPECT_THROW(restrict_row(env.matrix, r, std::vector<StructureId>{117649}), std::out_of_range);
}

TEST(SemMatrix, NearestTagging) {
  const auto& env = shared_env();
  Rng rng(9, "nearest");
  const auto ids = rng.sample_distinct<StructureId>(117649, 300);
  const RuleId truth = id("exactly 1 blue pyramid touching blue block");
  const auto w = restrict_row(env.matrix, truth, ids);
  auto r = nearest_tagging(w, ids, truth, env.matrix, env.partition);
  EXPECT_EQ(r.truth_distance, 0u);
  EXPECT_EQ(r.correct, r.competitor_distance > 0);

  // A prediction equal to another rule's vector is never strictly nearer to the truth.
  const RuleId other = id("zero red");
  const auto v = restrict_row(env.matrix, other, ids);
  ASSERT_NE(v, w);
  r = nearest_tagging(v, ids, truth, env.matrix, env.partition);
  EXPECT_FALSE(r.correct);
  EXPECT_EQ(r.min_distance, 0u);
  EXPECT_TRUE(std::find(r.nearest_classes.begin(), r.nearest_classes.end(), env.partition.class_of[other]) !=
              r.nearest_classes.end());
}

TEST(SemMatrix, NearestTaggingCountsTiesAsWrong) {
  const auto& env = shared_env();
  // Two ids where "zero red" and "zero blue" differ; predict the vector halfway between them.
  const std::vector<StructureId> ids{1, 4};  // "_ ... red_block", "_ ... blue_block"
  const RuleId zr = id("zero red"), zb = id("zero blue");
  const auto a = restrict_row(env.matrix, zr, ids), b = restrict_row(env.matrix, zb, ids);
  ASSERT_EQ(a.to_string(), "01");
  ASSERT_EQ(b.to_string(), "10");
  const auto r = nearest_tagging(BitVector::from_string("00"), ids, zr, env.matrix, env.partition);
  EXPECT_EQ(r.truth_distance, 1u);
  EXPECT_FALSE(r.correct);
}

TEST(SemMatrix, WeightStats) {
  const auto& env = shared_env();
  const auto ws = weight_stats(env.matrix);
  EXPECT_EQ(ws.rule_weights[id("zero red")], 4096u);
  EXPECT_EQ(ws.rule_weights[id("zero pyramid pointing_up")], 15625u);
  // Column sums by brute force for a few structures.
  for (StructureId s : {0u, 1u, 5000u, 117648u}) {
    std::uint64_t col = 0;
    for (RuleId r = 0; r < env.catalog.size(); ++r) col += env.matrix.get(r, s);
    EXPECT_EQ(ws.structure_weights[s], col);
  }
  EXPECT_LE(ws.structure_min, ws.structure_max);
  EXPECT_TRUE(ws.structure_hist.unimodal());
}

TEST(SemMatrix, HistogramUnimodality) {
  EXPECT_TRUE((Histogram{0, 4, {1, 3, 5, 2, 0}}).unimodal());
  EXPECT_FALSE((Histogram{0, 4, {1, 3, 1, 3, 0}}).unimodal());
}
