#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <filesystem>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <vector>

#include <nlohmann/json.hpp>

#include "odeen/environment.hpp"
#include "odeen/io.hpp"
#include "odeen/parallel.hpp"
#include "odeen/rng.hpp"
#include "odeen/rule_lang.hpp"
#include "odeen/semmatrix.hpp"
#include "odeen/world.hpp"

namespace odeen {

struct DatasetParams {
  std::size_t n = 1438;  // training rules
  std::size_t m = 1000;  // observations per training rule
  std::size_t s = 1132;  // test games
  std::size_t k = 32;    // board size
  std::size_t l = 1176;  // evaluation structures per test game
  std::uint64_t seed = 0;
  std::vector<std::string> heldout_bigrams{"exactly 2"};
  std::size_t heldout_test_quota = 72;  // test rules that contain a held-out bigram
  std::size_t contrastive_pairs = 5;
  std::size_t pair_attempts = 4000;
  unsigned threads = 1;

  void validate(std::uint64_t universe_size) const {
    if (n == 0 || m == 0 || s == 0 || k == 0 || l == 0) throw std::invalid_argument("dataset counts must be positive");
    if (m > universe_size) throw std::invalid_argument("m exceeds the universe size");
    if (k + l > universe_size) throw std::invalid_argument("k + l exceeds the universe size");
    if (2 * contrastive_pairs > k) throw std::invalid_argument("contrastive pairs do not fit on the board");
    for (const auto& b : heldout_bigrams) {
      std::istringstream in(b);
      std::string x, y, z;
      if (!(in >> x >> y) || (in >> z)) throw std::invalid_argument("held-out bigram '" + b + "' is not two tokens");
    }
  }
};

/// Raised when no observation set within the size limit isolates a rule's equivalence class.
class IsolationError : public std::runtime_error {
 public:
  IsolationError(const std::string& what, std::vector<ClassId> surviving)
      : std::runtime_error(what), surviving_(std::move(surviving)) {}
  const std::vector<ClassId>& surviving() const { return surviving_; }

 private:
  std::vector<ClassId> surviving_;
};

// ---------------------------------------------------------------------------
// Rule selection
// ---------------------------------------------------------------------------

inline bool contains_bigram(const std::vector<std::string>& tokens, const std::string& bigram) {
  std::istringstream in(bigram);
  std::string a, b;
  in >> a >> b;
  for (std::size_t i = 0; i + 1 < tokens.size(); ++i)
    if (tokens[i] == a && tokens[i + 1] == b) return true;
  return false;
}

/// `at_least 2 X and at_most 2 X` in either operand order.
inline bool is_exactly_two_conjunction(const RuleAst& ast) {
  const auto* c = std::get_if<Conjunction>(&ast);
  if (!c || c->connective != Connective::And || !(c->left.object == c->right.object)) return false;
  const Quantifier lo{QuantKind::AtLeast, 2}, hi{QuantKind::AtMost, 2};
  return (c->left.quantifier == lo && c->right.quantifier == hi) || (c->left.quantifier == hi && c->right.quantifier == lo);
}

inline bool has_heldout_bigram(const RuleCatalog& catalog, RuleId id, const DatasetParams& params) {
  const auto toks = rule_tokens(catalog.rule(id), catalog.config());
  for (const auto& b : params.heldout_bigrams)
    if (contains_bigram(toks, b)) return true;
  return false;
}

inline bool training_eligible(const RuleCatalog& catalog, RuleId id, const DatasetParams& params) {
  return !has_heldout_bigram(catalog, id, params) && !is_exactly_two_conjunction(catalog.rule(id));
}

/// Training rules: exclusions first, then a greedy pass covering every token and production that
/// survives the exclusions, then uniform draws without replacement.
inline std::vector<RuleId> select_training_rules(const DatasetParams& params, const RuleCatalog& catalog) {
  const WorldConfig& cfg = catalog.config();
  std::vector<RuleId> eligible;
  for (RuleId i = 0; i < catalog.size(); ++i)
    if (training_eligible(catalog, i, params)) eligible.push_back(i);
  Rng rng(params.seed, "train-rules");
  rng.shuffle(eligible);

  std::vector<std::vector<std::string>> items(eligible.size());
  std::set<std::string> needed;
  for (std::size_t e = 0; e < eligible.size(); ++e) {
    const auto& ast = catalog.rule(eligible[e]);
    items[e] = rule_tokens(ast, cfg);
    for (auto& p : rule_productions(ast, cfg)) items[e].push_back(std::move(p));
    std::sort(items[e].begin(), items[e].end());
    items[e].erase(std::unique(items[e].begin(), items[e].end()), items[e].end());
    needed.insert(items[e].begin(), items[e].end());
  }

  std::vector<RuleId> chosen;
  std::vector<bool> taken(eligible.size(), false);
  std::set<std::string> missing = needed;
  while (!missing.empty()) {
    std::size_t best = eligible.size(), best_gain = 0;
    for (std::size_t e = 0; e < eligible.size(); ++e) {
      if (taken[e]) continue;
      std::size_t gain = 0;
      for (const auto& it : items[e]) gain += missing.count(it);
      if (gain > best_gain) {
        best_gain = gain;
        best = e;
      }
    }
    if (best == eligible.size()) break;
    if (chosen.size() == params.n) {
      std::string names;
      for (const auto& it : missing) names += (names.empty() ? "" : ", ") + it;
      throw std::invalid_argument("n = " + std::to_string(params.n) + " is too small for full coverage; uncovered: " +
                                  names);
    }
    taken[best] = true;
    chosen.push_back(eligible[best]);
    for (const auto& it : items[best]) missing.erase(it);
  }

  std::vector<RuleId> rest;
  for (std::size_t e = 0; e < eligible.size(); ++e)
    if (!taken[e]) rest.push_back(eligible[e]);
  if (chosen.size() + rest.size() < params.n)
    throw std::invalid_argument("only " + std::to_string(chosen.size() + rest.size()) + " eligible training rules");
  for (auto idx : rng.sample_distinct<std::uint32_t>(rest.size(), params.n - chosen.size()))
    chosen.push_back(rest[idx]);
  return chosen;
}

// ---------------------------------------------------------------------------
// Class isolation
// ---------------------------------------------------------------------------

namespace detail {

/// A structure where `rival` disagrees with `truth`, drawn uniformly among those not excluded.
inline std::optional<StructureId> random_difference(std::span<const std::uint64_t> truth,
                                                    std::span<const std::uint64_t> rival, std::size_t n_structures,
                                                    Rng& rng, const std::unordered_set<StructureId>& exclude) {
  std::size_t total = 0;
  for (std::size_t w = 0; w < truth.size(); ++w) total += static_cast<std::size_t>(std::popcount(truth[w] ^ rival[w]));
  if (total == 0) return std::nullopt;
  std::size_t target = rng.below(total);
  StructureId first = 0;
  for (std::size_t w = 0; w < truth.size(); ++w) {
    std::uint64_t d = truth[w] ^ rival[w];
    const auto c = static_cast<std::size_t>(std::popcount(d));
    if (target >= c) {
      target -= c;
      continue;
    }
    while (target--) d &= d - 1;
    first = static_cast<StructureId>(w * 64 + static_cast<std::size_t>(std::countr_zero(d)));
    break;
  }
  if (!exclude.count(first)) return first;
  for (std::size_t step = 1; step < n_structures; ++step) {
    const auto j = static_cast<StructureId>((first + step) % n_structures);
    if (test_bit(truth, j) != test_bit(rival, j) && !exclude.count(j)) return j;
  }
  return std::nullopt;
}

/// Structure eliminating the most rivals, chosen among one random difference per sampled rival
/// plus `pool` uniform structures. Ties go to the earliest candidate.
inline std::optional<StructureId> best_separator(RuleId truth, std::span<const ClassId> rivals, const SemanticMatrix& m,
                                                 const EquivalencePartition& p, Rng& rng,
                                                 const std::unordered_set<StructureId>& exclude,
                                                 std::size_t pool = 128) {
  const auto truth_row = m.row(truth);
  std::vector<StructureId> cands;
  std::vector<ClassId> probe(rivals.begin(), rivals.end());
  if (probe.size() > 64) {
    rng.shuffle(probe);
    probe.resize(64);
  }
  for (ClassId c : probe)
    if (auto d = random_difference(truth_row, m.row(p.representative[c]), m.n_structures(), rng, exclude))
      cands.push_back(*d);
  if (cands.empty()) return std::nullopt;
  for (std::size_t i = 0; i < pool; ++i) {
    const auto x = static_cast<StructureId>(rng.below(m.n_structures()));
    if (!exclude.count(x)) cands.push_back(x);
  }
  std::optional<StructureId> best;
  std::size_t best_score = 0;
  for (auto x : cands) {
    const bool t = test_bit(truth_row, x);
    std::size_t score = 0;
    for (ClassId c : rivals) score += test_bit(m.row(p.representative[c]), x) != t;
    if (score > best_score) {
      best_score = score;
      best = x;
    }
  }
  return best;
}

inline std::vector<Observation> observe(RuleId rule, std::span<const StructureId> ids, const SemanticMatrix& m) {
  std::vector<Observation> obs;
  obs.reserve(ids.size());
  const auto row = m.row(rule);
  for (auto id : ids) obs.push_back({id, test_bit(row, id)});
  return obs;
}

inline std::vector<ClassId> rivals_of(RuleId rule, std::span<const Observation> obs, const SemanticMatrix& m,
                                      const EquivalencePartition& p) {
  auto surv = surviving_classes(obs, m, p);
  surv.erase(std::remove(surv.begin(), surv.end(), p.class_of[rule]), surv.end());
  return surv;
}

/// `count` distinct structures outside `exclude` that isolate the rule's class. Starts from a
/// uniform draw and replaces tail entries with greedy separators until isolated.
inline std::vector<StructureId> isolating_sample(RuleId rule, std::size_t count, Rng& rng,
                                                 const std::unordered_set<StructureId>& exclude,
                                                 const SemanticMatrix& m, const EquivalencePartition& p) {
  const std::vector<StructureId> drawn = rng.sample_distinct<StructureId>(m.n_structures(), count, exclude);
  std::vector<StructureId> repair;
  while (true) {
    std::vector<StructureId> ids(drawn.begin(), drawn.end() - static_cast<std::ptrdiff_t>(repair.size()));
    ids.insert(ids.end(), repair.begin(), repair.end());
    const auto obs = observe(rule, ids, m);
    const auto rivals = rivals_of(rule, obs, m, p);
    if (rivals.empty()) return ids;
    if (repair.size() == count)
      throw IsolationError("rule " + std::to_string(rule) + " cannot be isolated with " + std::to_string(count) +
                               " structures; " + std::to_string(rivals.size()) + " classes survive",
                           rivals);
    std::unordered_set<StructureId> banned = exclude;
    banned.insert(ids.begin(), ids.end());
    const auto sep = best_separator(rule, rivals, m, p, rng, banned);
    if (!sep)
      throw IsolationError("rule " + std::to_string(rule) + " has rivals that no admissible structure separates",
                           rivals);
    repair.push_back(*sep);
  }
}

}  // namespace detail

/// m distinct uniformly drawn observations, repaired so they isolate the rule's class.
inline std::vector<Observation> sample_observations(RuleId rule, std::size_t m_obs, std::uint64_t seed,
                                                    const SemanticMatrix& m, const EquivalencePartition& p) {
  if (m_obs > m.n_structures()) throw std::invalid_argument("m exceeds the universe size");
  Rng rng(seed);
  const auto ids = detail::isolating_sample(rule, m_obs, rng, {}, m, p);
  return detail::observe(rule, ids, m);
}

// ---------------------------------------------------------------------------
// Test boards
// ---------------------------------------------------------------------------

struct Board {
  RuleId rule = 0;
  std::vector<Observation> observations;
  std::vector<std::string> warnings;
};

namespace detail {

/// Id of `id` with cell `cell` replaced by `code`.
inline StructureId with_cell(StructureId id, std::size_t cell, std::uint32_t code, const WorldConfig& cfg) {
  std::vector<std::uint8_t> codes(cfg.length);
  decode_codes(id, cfg, codes.data());
  codes[cell] = static_cast<std::uint8_t>(code);
  std::uint64_t out = 0;
  for (auto c : codes) out = out * cfg.alphabet_size() + c;
  return static_cast<StructureId>(out);
}

/// First structure at or after a random start whose tag equals `value`.
inline std::optional<StructureId> find_with_tag(std::span<const std::uint64_t> row, std::size_t n, bool value, Rng& rng) {
  const std::size_t start = rng.below(n);
  for (std::size_t step = 0; step < n; ++step) {
    const std::size_t j = (start + step) % n;
    if (test_bit(row, j) == value) return static_cast<StructureId>(j);
  }
  return std::nullopt;
}

}  // namespace detail

/// Board of k observations: `pairs` contrastive pairs (one cell apart, opposite tags), then greedy
/// disambiguation until only the rule's class survives, then uniform padding.
inline Board build_test_board(RuleId rule, std::uint64_t seed, const WorldConfig& cfg, const SemanticMatrix& m,
                              const EquivalencePartition& p, std::size_t k = 32, std::size_t pairs = 5,
                              std::size_t attempts = 4000) {
  if (2 * pairs > k) throw std::invalid_argument("contrastive pairs do not fit on the board");
  Board board;
  board.rule = rule;
  const auto row = m.row(rule);
  const std::size_t n = m.n_structures();
  const auto alpha = static_cast<std::uint32_t>(cfg.alphabet_size());
  Rng rng(seed);
  std::unordered_set<StructureId> used;
  auto add = [&](StructureId id) {
    used.insert(id);
    board.observations.push_back({id, test_bit(row, id)});
  };

  std::size_t found = 0;
  for (std::size_t a = 0; a < attempts && found < pairs; ++a) {
    const auto x = static_cast<StructureId>(rng.below(n));
    const auto cell = rng.below(cfg.length);
    std::vector<std::uint8_t> codes(cfg.length);
    decode_codes(x, cfg, codes.data());
    auto code = static_cast<std::uint32_t>(rng.below(alpha - 1));
    if (code >= codes[cell]) ++code;
    const auto y = detail::with_cell(x, cell, code, cfg);
    if (test_bit(row, x) == test_bit(row, y) || used.count(x) || used.count(y)) continue;
    add(x);
    add(y);
    ++found;
  }
  if (found < pairs) {
    // Walk cell by cell from an accepted to a rejected structure; the tag flips on some step.
    board.warnings.push_back("contrastive search budget exhausted after " + std::to_string(found) +
                             " pairs; using path-walk pairs");
    for (std::size_t tries = 0; tries < 64 * pairs && found < pairs; ++tries) {
      const auto pos = detail::find_with_tag(row, n, true, rng);
      const auto neg = detail::find_with_tag(row, n, false, rng);
      if (!pos || !neg) break;
      std::vector<std::uint8_t> target(cfg.length);
      decode_codes(*neg, cfg, target.data());
      StructureId cur = *pos;
      for (std::size_t cell = 0; cell < cfg.length; ++cell) {
        const StructureId next = detail::with_cell(cur, cell, target[cell], cfg);
        if (next == cur) continue;
        if (test_bit(row, cur) != test_bit(row, next)) {
          if (!used.count(cur) && !used.count(next)) {
            add(cur);
            add(next);
            ++found;
          }
          break;
        }
        cur = next;
      }
    }
  }
  if (found < pairs) {
    board.warnings.push_back("rule has no distinguishable one-cell pairs; using " + std::to_string(pairs - found) +
                             " same-tag one-cell pairs");
    while (found < pairs) {
      const auto x = static_cast<StructureId>(rng.below(n));
      const auto y = detail::with_cell(x, rng.below(cfg.length), static_cast<std::uint32_t>(rng.below(alpha)), cfg);
      if (x == y || used.count(x) || used.count(y)) continue;
      add(x);
      add(y);
      ++found;
    }
  }

  auto rivals = detail::rivals_of(rule, board.observations, m, p);
  while (!rivals.empty() && board.observations.size() < k) {
    const auto sep = detail::best_separator(rule, rivals, m, p, rng, used);
    if (!sep) break;
    add(*sep);
    rivals = filter_classes(rivals, std::span<const Observation>(&board.observations.back(), 1), m, p);
  }
  if (!rivals.empty())
    throw IsolationError("rule " + std::to_string(rule) + " cannot be isolated on a board of " + std::to_string(k) +
                             "; " + std::to_string(rivals.size()) + " classes survive",
                         rivals);
  for (auto id : rng.sample_distinct<StructureId>(n, k - board.observations.size(), used)) add(id);
  if (!is_representative(board.observations, rule, m, p).representative)
    throw std::logic_error("board construction produced a non-representative board");
  return board;
}

// ---------------------------------------------------------------------------
// Whole datasets
// ---------------------------------------------------------------------------

struct TrainGame {
  RuleId rule = 0;
  std::vector<Observation> observations;
};

struct TestGame {
  std::size_t game = 0;
  RuleId rule = 0;
  Board board;
  std::vector<StructureId> eval_ids;
};

struct Dataset {
  DatasetParams params;
  std::uint64_t matrix_checksum = 0;
  std::vector<TrainGame> train;
  std::vector<TestGame> test;
  std::size_t heldout_test_rules = 0;
  std::vector<std::string> warnings;
};

inline Dataset generate_dataset(const DatasetParams& params, const Environment& env) {
  const auto& cfg = env.config();
  const auto& m = env.matrix;
  const auto& p = env.partition;
  params.validate(m.n_structures());
  Dataset ds;
  ds.params = params;
  ds.matrix_checksum = m.checksum();

  auto train_rules = select_training_rules(params, env.catalog);
  ds.train.resize(train_rules.size());
  std::vector<bool> isolated(train_rules.size(), true);
  parallel_for(train_rules.size(), params.threads, [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      ds.train[i].rule = train_rules[i];
      try {
        ds.train[i].observations =
            sample_observations(train_rules[i], params.m, derive_seed(params.seed, "train-obs", i), m, p);
      } catch (const IsolationError&) {
        isolated[i] = false;
      }
    }
  });
  // Rules that m observations cannot isolate (e.g. the always-false class needs every rival's single
  // true structure) are swapped for unused eligible rules, in seeded order.
  if (std::find(isolated.begin(), isolated.end(), false) != isolated.end()) {
    const auto coverage_before = coverage_report([&] {
      std::vector<RuleAst> asts;
      for (auto r : train_rules) asts.push_back(env.catalog.rule(r));
      return asts;
    }());
    std::unordered_set<RuleId> used(train_rules.begin(), train_rules.end());
    std::vector<RuleId> spare;
    for (RuleId r = 0; r < env.catalog.size(); ++r)
      if (!used.count(r) && training_eligible(env.catalog, r, params)) spare.push_back(r);
    Rng(params.seed, "train-substitutes").shuffle(spare);
    std::size_t next = 0;
    for (std::size_t i = 0; i < train_rules.size(); ++i) {
      if (isolated[i]) continue;
      const RuleId dropped = train_rules[i];
      while (true) {
        if (next == spare.size())
          throw std::runtime_error("not enough training rules can be isolated with m = " + std::to_string(params.m));
        const RuleId r = spare[next++];
        try {
          ds.train[i].observations =
              sample_observations(r, params.m, derive_seed(params.seed, "train-obs-substitute", r), m, p);
        } catch (const IsolationError&) {
          continue;
        }
        train_rules[i] = ds.train[i].rule = r;
        ds.warnings.push_back("training rule '" + env.catalog.text(dropped) + "' cannot be isolated with m = " +
                              std::to_string(params.m) + "; replaced by '" + env.catalog.text(r) + "'");
        break;
      }
    }
    std::vector<RuleAst> asts;
    for (auto r : train_rules) asts.push_back(env.catalog.rule(r));
    if (coverage_report(asts).uncovered() != coverage_before.uncovered())
      throw std::runtime_error("replacing non-isolable training rules lost grammar coverage; increase m");
  }

  std::vector<bool> train_class(p.class_count(), false);
  for (auto r : train_rules) train_class[p.class_of[r]] = true;

  // Candidates in seeded order, split by whether they carry a held-out construct.
  std::vector<RuleId> heldout, regular;
  for (RuleId r = 0; r < env.catalog.size(); ++r) {
    if (train_class[p.class_of[r]]) continue;
    (has_heldout_bigram(env.catalog, r, params) ? heldout : regular).push_back(r);
  }
  Rng order(params.seed, "test-rules");
  order.shuffle(heldout);
  order.shuffle(regular);

  // A candidate is accepted once its board and its evaluation ids both isolate its class.
  struct Candidate {
    Board board;
    std::vector<StructureId> eval_ids;
  };
  std::vector<bool> test_class(p.class_count(), false);
  std::vector<Candidate> accepted_heldout, accepted_regular;
  auto take = [&](const std::vector<RuleId>& cands, std::size_t want, std::vector<Candidate>& out) {
    const std::size_t batch = std::max<std::size_t>(8, 4 * std::size_t{params.threads});
    for (std::size_t start = 0; start < cands.size() && out.size() < want; start += batch) {
      const std::size_t end = std::min(cands.size(), start + batch);
      std::vector<std::optional<Candidate>> built(end - start);
      parallel_for(end - start, params.threads, [&](std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i) {
          const RuleId r = cands[start + i];
          if (test_class[p.class_of[r]]) continue;
          try {
            Candidate c;
            c.board = build_test_board(r, derive_seed(params.seed, "test-board", r), cfg, m, p, params.k,
                                       params.contrastive_pairs, params.pair_attempts);
            std::unordered_set<StructureId> on_board;
            for (const auto& o : c.board.observations) on_board.insert(o.id);
            Rng rng(params.seed, "eval-ids", r);
            c.eval_ids = detail::isolating_sample(r, params.l, rng, on_board, m, p);
            built[i] = std::move(c);
          } catch (const IsolationError&) {
          }
        }
      });
      for (std::size_t i = 0; i < built.size() && out.size() < want; ++i) {
        if (!built[i]) continue;
        const ClassId c = p.class_of[cands[start + i]];
        if (test_class[c]) continue;
        test_class[c] = true;
        out.push_back(std::move(*built[i]));
      }
    }
  };
  const std::size_t quota = std::min(params.heldout_test_quota, params.s);
  take(heldout, quota, accepted_heldout);
  if (accepted_heldout.size() < quota)
    ds.warnings.push_back("held-out quota reduced from " + std::to_string(quota) + " to " +
                          std::to_string(accepted_heldout.size()));
  take(regular, params.s - accepted_heldout.size(), accepted_regular);
  if (accepted_heldout.size() + accepted_regular.size() < params.s)
    throw std::runtime_error("only " + std::to_string(accepted_heldout.size() + accepted_regular.size()) +
                             " test games with classes disjoint from training can be built; requested " +
                             std::to_string(params.s));
  ds.heldout_test_rules = accepted_heldout.size();

  // Interleave held-out games into the test order deterministically.
  std::vector<Candidate> games;
  for (auto& c : accepted_heldout) games.push_back(std::move(c));
  for (auto& c : accepted_regular) games.push_back(std::move(c));
  std::vector<std::size_t> perm(games.size());
  std::iota(perm.begin(), perm.end(), 0);
  Rng(params.seed, "test-order").shuffle(perm);
  ds.test.resize(games.size());
  for (std::size_t g = 0; g < games.size(); ++g) {
    TestGame& t = ds.test[g];
    t.game = g;
    t.board = std::move(games[perm[g]].board);
    t.eval_ids = std::move(games[perm[g]].eval_ids);
    t.rule = t.board.rule;
  }
  for (const auto& t : ds.test)
    for (const auto& w : t.board.warnings) ds.warnings.push_back("game " + std::to_string(t.game) + ": " + w);
  return ds;
}

// ---------------------------------------------------------------------------
// Files
// ---------------------------------------------------------------------------

namespace detail {

inline nlohmann::ordered_json observations_json(std::span<const Observation> obs, const WorldConfig& cfg) {
  auto arr = nlohmann::ordered_json::array();
  for (const auto& o : obs)
    arr.push_back({render_structure(structure_from_id(o.id, cfg), cfg), o.tag ? 1 : 0});
  return arr;
}

inline std::vector<Observation> observations_from_json(const nlohmann::json& arr, const WorldConfig& cfg) {
  std::vector<Observation> obs;
  for (const auto& e : arr) {
    if (!e.is_array() || e.size() != 2) throw std::runtime_error("observation must be [structure, tag]");
    const int tag = e[1].get<int>();
    if (tag != 0 && tag != 1) throw std::runtime_error("observation tag must be 0 or 1");
    obs.push_back({parse_structure(e[0].get<std::string>(), cfg).id, tag == 1});
  }
  return obs;
}

}  // namespace detail

inline nlohmann::ordered_json dataset_manifest(const Dataset& ds) {
  const auto& pr = ds.params;
  nlohmann::ordered_json j;
  j["tool_version"] = kToolVersion;
  j["seed"] = pr.seed;
  j["params"] = {{"n", pr.n}, {"m", pr.m}, {"s", pr.s}, {"k", pr.k}, {"l", pr.l},
                 {"heldout_bigrams", pr.heldout_bigrams}, {"heldout_test_quota", pr.heldout_test_quota},
                 {"contrastive_pairs", pr.contrastive_pairs}, {"pair_attempts", pr.pair_attempts}};
  j["matrix_checksum"] = ds.matrix_checksum;
  j["heldout_test_rules"] = ds.heldout_test_rules;
  j["warnings"] = ds.warnings;
  return j;
}

/// Writes train.jsonl, test.jsonl, answers.jsonl and manifest.json into `dir`.
inline void write_dataset(const Dataset& ds, const Environment& env, const std::filesystem::path& dir) {
  const auto& cfg = env.config();
  std::filesystem::create_directories(dir);
  io::atomic_write(dir / "train.jsonl", [&](std::ostream& out) {
    for (const auto& g : ds.train) {
      nlohmann::ordered_json j;
      j["rule"] = env.catalog.text(g.rule);
      j["rule_id"] = g.rule;
      j["observations"] = detail::observations_json(g.observations, cfg);
      out << j.dump() << '\n';
    }
  });
  io::atomic_write(dir / "test.jsonl", [&](std::ostream& out) {
    for (const auto& g : ds.test) {
      nlohmann::ordered_json j;
      j["game"] = g.game;
      j["board"] = detail::observations_json(g.board.observations, cfg);
      auto ev = nlohmann::ordered_json::array();
      for (auto id : g.eval_ids) ev.push_back(render_structure(structure_from_id(id, cfg), cfg));
      j["eval"] = std::move(ev);
      out << j.dump() << '\n';
    }
  });
  io::atomic_write(dir / "answers.jsonl", [&](std::ostream& out) {
    for (const auto& g : ds.test) {
      nlohmann::ordered_json j;
      j["game"] = g.game;
      j["rule"] = env.catalog.text(g.rule);
      j["tags"] = restrict_row(env.matrix, g.rule, g.eval_ids).to_string();
      out << j.dump() << '\n';
    }
  });
  io::atomic_write(dir / "manifest.json", [&](std::ostream& out) { out << dataset_manifest(ds).dump(2) << '\n'; });
}

/// One game of a public test file.
struct PublicGame {
  std::size_t game = 0;
  std::vector<Observation> board;
  std::vector<StructureId> eval_ids;
};

inline std::vector<PublicGame> load_test_games(const std::filesystem::path& path, const WorldConfig& cfg = {}) {
  std::vector<PublicGame> games;
  for (const auto& line : io::read_lines(path)) {
    const auto j = nlohmann::json::parse(line);
    PublicGame g;
    g.game = j.at("game").get<std::size_t>();
    g.board = detail::observations_from_json(j.at("board"), cfg);
    for (const auto& e : j.at("eval")) g.eval_ids.push_back(parse_structure(e.get<std::string>(), cfg).id);
    games.push_back(std::move(g));
  }
  return games;
}

}  // namespace odeen
