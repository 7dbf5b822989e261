#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "odeen/bitvec.hpp"
#include "odeen/datasetgen.hpp"
#include "odeen/environment.hpp"
#include "odeen/io.hpp"
#include "odeen/rule_lang.hpp"
#include "odeen/semmatrix.hpp"

namespace odeen {

/// One line of a prediction file: the predicted tag vector and, optionally, the predicted rule.
struct PredictionRecord {
  std::size_t game = 0;
  BitVector tags;
  std::optional<std::string> rule;
};

/// One line of a private answer file.
struct AnswerRecord {
  std::size_t game = 0;
  std::string rule;
  BitVector tags;
};

inline std::vector<PredictionRecord> load_predictions(const std::filesystem::path& path) {
  std::vector<PredictionRecord> out;
  for (const auto& line : io::read_lines(path)) {
    const auto j = nlohmann::json::parse(line);
    PredictionRecord r;
    r.game = j.at("game").get<std::size_t>();
    r.tags = BitVector::from_string(j.at("tags").get<std::string>());
    if (j.contains("rule") && j["rule"].is_string()) r.rule = j["rule"].get<std::string>();
    out.push_back(std::move(r));
  }
  return out;
}

inline void write_predictions(const std::vector<PredictionRecord>& preds, const std::filesystem::path& path) {
  io::atomic_write(path, [&](std::ostream& out) {
    for (const auto& p : preds) {
      nlohmann::ordered_json j;
      j["game"] = p.game;
      j["tags"] = p.tags.to_string();
      if (p.rule) j["rule"] = *p.rule;
      out << j.dump() << '\n';
    }
  });
}

inline std::vector<AnswerRecord> load_answers(const std::filesystem::path& path) {
  std::vector<AnswerRecord> out;
  for (const auto& line : io::read_lines(path)) {
    const auto j = nlohmann::json::parse(line);
    out.push_back({j.at("game").get<std::size_t>(), j.at("rule").get<std::string>(),
                   BitVector::from_string(j.at("tags").get<std::string>())});
  }
  return out;
}

namespace detail {

/// Pairs every answer with its prediction; throws naming the missing games.
inline std::vector<const PredictionRecord*> align(const std::vector<PredictionRecord>& preds,
                                                  const std::vector<AnswerRecord>& answers) {
  std::map<std::size_t, const PredictionRecord*> by_game;
  for (const auto& p : preds) by_game[p.game] = &p;
  std::vector<const PredictionRecord*> out;
  std::string missing;
  for (const auto& a : answers) {
    auto it = by_game.find(a.game);
    if (it == by_game.end()) {
      missing += (missing.empty() ? "" : ", ") + std::to_string(a.game);
      out.push_back(nullptr);
      continue;
    }
    if (it->second->tags.size() != a.tags.size())
      throw std::invalid_argument("game " + std::to_string(a.game) + ": predicted " +
                                  std::to_string(it->second->tags.size()) + " tags, expected " +
                                  std::to_string(a.tags.size()));
    out.push_back(it->second);
  }
  if (!missing.empty()) throw std::invalid_argument("missing predictions for games: " + missing);
  return out;
}

}  // namespace detail

/// Fraction of correct tags in one game.
inline double tagging_accuracy(const BitVector& pred, const BitVector& truth) {
  if (truth.size() == 0) return 1.0;
  return 1.0 - static_cast<double>(pred.distance(truth)) / static_cast<double>(truth.size());
}

/// Mean over games of the per-game tagging accuracy.
inline double t_acc(const std::vector<PredictionRecord>& preds, const std::vector<AnswerRecord>& answers) {
  const auto aligned = detail::align(preds, answers);
  if (answers.empty()) return 0.0;
  double sum = 0;
  for (std::size_t i = 0; i < answers.size(); ++i) sum += tagging_accuracy(aligned[i]->tags, answers[i].tags);
  return sum / static_cast<double>(answers.size());
}

/// True iff the predicted rule parses and shares the truth rule's equivalence class.
inline bool r_acc(std::string_view predicted, RuleId truth, const Environment& env) {
  try {
    return env.partition.equivalent(env.catalog.id_of(predicted), truth);
  } catch (const ParseError&) {
    return false;
  }
}

struct GameScore {
  std::size_t game = 0;
  double t_acc = 0;
  bool nrs = false;
  bool r_acc = false;
};

struct ScoreReport {
  double t_acc = 0;
  double nrs = 0;
  double r_acc = 0;
  std::uint64_t matrix_checksum = 0;
  std::vector<GameScore> games;

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["t_acc"] = t_acc;
    j["nrs"] = nrs;
    j["r_acc"] = r_acc;
    j["matrix_checksum"] = matrix_checksum;
    auto arr = nlohmann::ordered_json::array();
    for (const auto& g : games)
      arr.push_back({{"game", g.game}, {"t_acc", g.t_acc}, {"nrs", g.nrs}, {"r_acc", g.r_acc}});
    j["games"] = std::move(arr);
    return j;
  }
};

/// Scores predictions against answers. `games` supplies each game's evaluation ids; when
/// `expected_checksum` is given the matrix must match it.
inline ScoreReport score(const std::vector<PredictionRecord>& preds, const std::vector<AnswerRecord>& answers,
                         const std::vector<PublicGame>& games, const Environment& env,
                         std::optional<std::uint64_t> expected_checksum = std::nullopt) {
  const std::uint64_t checksum = env.matrix.checksum();
  if (expected_checksum && *expected_checksum != checksum)
    throw std::runtime_error("matrix checksum " + std::to_string(checksum) + " does not match the dataset's " +
                             std::to_string(*expected_checksum));
  const auto aligned = detail::align(preds, answers);
  std::map<std::size_t, const PublicGame*> by_game;
  for (const auto& g : games) by_game[g.game] = &g;

  ScoreReport rep;
  rep.matrix_checksum = checksum;
  for (std::size_t i = 0; i < answers.size(); ++i) {
    const auto& a = answers[i];
    const auto& p = *aligned[i];
    auto it = by_game.find(a.game);
    if (it == by_game.end()) throw std::invalid_argument("game " + std::to_string(a.game) + " missing from test file");
    const RuleId truth = env.catalog.id_of(a.rule);
    GameScore g;
    g.game = a.game;
    g.t_acc = tagging_accuracy(p.tags, a.tags);
    g.nrs = nearest_tagging(p.tags, it->second->eval_ids, truth, env.matrix, env.partition).correct;
    g.r_acc = p.rule && r_acc(*p.rule, truth, env);
    rep.t_acc += g.t_acc;
    rep.nrs += g.nrs;
    rep.r_acc += g.r_acc;
    rep.games.push_back(g);
  }
  if (!answers.empty()) {
    const auto n = static_cast<double>(answers.size());
    rep.t_acc /= n;
    rep.nrs /= n;
    rep.r_acc /= n;
  }
  return rep;
}

/// NRS alone.
inline double nrs(const std::vector<PredictionRecord>& preds, const std::vector<AnswerRecord>& answers,
                  const std::vector<PublicGame>& games, const Environment& env) {
  return score(preds, answers, games, env).nrs;
}

}  // namespace odeen
