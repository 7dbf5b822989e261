#include <gtest/gtest.h>

#include <filesystem>

#include "common.hpp"

using namespace odeen;
namespace fs = std::filesystem;

namespace {

struct Fixture {
  Dataset ds;
  std::vector<PublicGame> games;
  std::vector<AnswerRecord> answers;
};

const Fixture& fixture() {
  static const Fixture f = [] {
    const auto& env = shared_env();
    DatasetParams p;
    p.n = 150;
    p.m = 40;
    p.s = 12;
    p.heldout_test_quota = 3;
    p.seed = 404;
    Fixture x{generate_dataset(p, env), {}, {}};
    for (const auto& g : x.ds.test) {
      x.games.push_back({g.game, g.board.observations, g.eval_ids});
      x.answers.push_back({g.game, env.catalog.text(g.rule), restrict_row(env.matrix, g.rule, g.eval_ids)});
    }
    return x;
  }();
  return f;
}

std::vector<PredictionRecord> perfect() {
  std::vector<PredictionRecord> out;
  for (const auto& a : fixture().answers) out.push_back({a.game, a.tags, a.rule});
  return out;
}

}  // namespace

TEST(Metrics, TaggingAccuracy) {
  EXPECT_DOUBLE_EQ(tagging_accuracy(BitVector::from_string("1100"), BitVector::from_string("1000")), 0.75);
  EXPECT_DOUBLE_EQ(tagging_accuracy(BitVector(0), BitVector(0)), 1.0);
}

TEST(Metrics, PerfectSubmissionScoresOne) {
  const auto rep = score(perfect(), fixture().answers, fixture().games, shared_env());
  EXPECT_DOUBLE_EQ(rep.t_acc, 1.0);
  EXPECT_DOUBLE_EQ(rep.nrs, 1.0);
  EXPECT_DOUBLE_EQ(rep.r_acc, 1.0);
  EXPECT_EQ(rep.games.size(), fixture().answers.size());
}

TEST(Metrics, EquivalentRuleCountsForRAcc) {
  const auto& env = shared_env();
  EXPECT_TRUE(r_acc("at_least 1 pyramid pointing_up and at_most 1 pyramid pointing_up",
                    env.catalog.id_of("exactly 1 pyramid pointing_up"), env));
  EXPECT_FALSE(r_acc("zero red", env.catalog.id_of("zero blue"), env));
  EXPECT_FALSE(r_acc("zero purple", env.catalog.id_of("zero blue"), env));
}

TEST(Metrics, InvertedTagsScoreZero) {
  auto preds = perfect();
  for (auto& p : preds) {
    for (std::size_t j = 0; j < p.tags.size(); ++j) p.tags.flip(j);
    p.rule.reset();
  }
  const auto rep = score(preds, fixture().answers, fixture().games, shared_env());
  EXPECT_DOUBLE_EQ(rep.t_acc, 0.0);
  EXPECT_DOUBLE_EQ(rep.r_acc, 0.0);
  EXPECT_LT(rep.nrs, 1.0);
}

TEST(Metrics, SingleTagErrorsLowerTAccProportionally) {
  auto preds = perfect();
  preds[0].tags.set(0, !preds[0].tags[0]);
  const double n = static_cast<double>(preds.size());
  EXPECT_NEAR(t_acc(preds, fixture().answers), 1.0 - (1.0 / 1176.0) / n, 1e-12);
}

TEST(Metrics, MissingPredictionsAreReported) {
  auto preds = perfect();
  const auto dropped = preds.back().game;
  preds.pop_back();
  try {
    t_acc(preds, fixture().answers);
    FAIL();
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find(std::to_string(dropped)), std::string::npos);
  }
  auto bad = perfect();
  bad[0].tags = BitVector(3);
  EXPECT_THROW(t_acc(bad, fixture().answers), std::invalid_argument);
}

TEST(Metrics, ChecksumMismatchIsAnError) {
  EXPECT_THROW(score(perfect(), fixture().answers, fixture().games, shared_env(), 12345), std::runtime_error);
}

TEST(Metrics, PredictionFileRoundTrip) {
  const auto path = fs::temp_directory_path() / "odeen_preds_test.jsonl";
  auto preds = perfect();
  preds[1].rule.reset();
  write_predictions(preds, path);
  const auto back = load_predictions(path);
  ASSERT_EQ(back.size(), preds.size());
  for (std::size_t i = 0; i < preds.size(); ++i) {
    EXPECT_EQ(back[i].game, preds[i].game);
    EXPECT_EQ(back[i].tags, preds[i].tags);
    EXPECT_EQ(back[i].rule, preds[i].rule);
  }
  fs::remove(path);
}
