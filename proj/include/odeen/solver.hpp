#pragma once

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstdint>
#include <cstring>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <vector>

#include <nlohmann/json.hpp>

#include "odeen/bitvec.hpp"
#include "odeen/environment.hpp"
#include "odeen/rng.hpp"
#include "odeen/rule_lang.hpp"
#include "odeen/semmatrix.hpp"
#include "odeen/world.hpp"

namespace odeen {

/// Cost in oracle-call units: conjecture-generator draws and interpreter evaluations.
struct CostCounters {
  std::uint64_t cg_calls = 0;
  std::uint64_t j_evals = 0;
  bool operator==(const CostCounters&) const = default;
};

/// Closed forms of the cost model.
constexpr std::uint64_t exhaustive_cost(std::uint64_t rules, std::uint64_t board, std::uint64_t eval) {
  return rules * board + eval;
}
constexpr CostCounters conjecture_cost(std::uint64_t conjectures, std::uint64_t board, std::uint64_t eval) {
  return {conjectures, conjectures * board + eval};
}

struct ChosenRule {
  RuleId rule = 0;
  std::string text;
  ClassId class_id = 0;
};

struct SolveOutcome {
  std::optional<ChosenRule> chosen;  // empty means "unknown"
  BitVector tags;                    // tags of the eval ids; all zero when unknown
  std::size_t consistent_class_count = 0;
  CostCounters cost;
  std::size_t parse_failures = 0;
  bool timed_out = false;

  bool unknown() const { return !chosen.has_value(); }
};

inline BitVector tag_structures(RuleId rule, std::span<const StructureId> ids, const SemanticMatrix& m) {
  return restrict_row(m, rule, ids);
}

// ---------------------------------------------------------------------------
// Exhaustive search
// ---------------------------------------------------------------------------

/// Keeps every rule consistent with the whole board and answers with the lowest surviving id.
inline SolveOutcome exhaustive_solve(std::span<const Observation> board, std::span<const StructureId> eval_ids,
                                     const Environment& env) {
  const auto& m = env.matrix;
  SolveOutcome out;
  out.tags = BitVector(eval_ids.size());
  std::optional<RuleId> first;
  std::unordered_set<ClassId> classes;
  for (RuleId r = 0; r < m.n_rules(); ++r) {
    const auto row = m.row(r);
    std::size_t hits = 0;
    for (const auto& o : board) hits += test_bit(row, o.id) == o.tag;
    out.cost.j_evals += board.size();
    if (hits != board.size()) continue;
    if (!first) first = r;
    classes.insert(env.partition.class_of[r]);
  }
  out.consistent_class_count = classes.size();
  if (first) {
    out.chosen = ChosenRule{*first, env.catalog.text(*first), env.partition.class_of[*first]};
    out.tags = tag_structures(*first, eval_ids, m);
    out.cost.j_evals += eval_ids.size();
  }
  return out;
}

// ---------------------------------------------------------------------------
// Conjecture sources
// ---------------------------------------------------------------------------

struct ConjectureBatch {
  std::vector<std::string> conjectures;
  bool timed_out = false;
};

class ConjectureSource {
 public:
  virtual ~ConjectureSource() = default;
  /// Up to `budget` candidate rule strings for a board. Strings need not be well-formed.
  virtual ConjectureBatch generate(std::span<const Observation> board, std::size_t budget, std::uint64_t seed) = 0;
};

/// Every rule in id order.
class ExhaustiveEnumerator final : public ConjectureSource {
 public:
  explicit ExhaustiveEnumerator(const RuleCatalog& catalog) : catalog_(catalog) {}
  ConjectureBatch generate(std::span<const Observation>, std::size_t budget, std::uint64_t) override {
    ConjectureBatch b;
    for (std::size_t i = 0; i < budget && i < catalog_.size(); ++i) b.conjectures.push_back(catalog_.text(RuleId(i)));
    return b;
  }

 private:
  const RuleCatalog& catalog_;
};

/// Uniform draws with replacement; the draws for budget t are a prefix of those for any t' > t.
class GrammarSampler final : public ConjectureSource {
 public:
  explicit GrammarSampler(const RuleCatalog& catalog) : catalog_(catalog) {}
  ConjectureBatch generate(std::span<const Observation>, std::size_t budget, std::uint64_t seed) override {
    ConjectureBatch b;
    Rng rng(seed, "grammar-sampler");
    for (std::size_t i = 0; i < budget; ++i) b.conjectures.push_back(catalog_.text(RuleId(rng.below(catalog_.size()))));
    return b;
  }

 private:
  const RuleCatalog& catalog_;
};

/// Fixed list of strings; useful for replaying conjectures from elsewhere.
class ListSource final : public ConjectureSource {
 public:
  explicit ListSource(std::vector<std::string> items) : items_(std::move(items)) {}
  ConjectureBatch generate(std::span<const Observation>, std::size_t budget, std::uint64_t) override {
    ConjectureBatch b;
    for (std::size_t i = 0; i < budget && i < items_.size(); ++i) b.conjectures.push_back(items_[i]);
    return b;
  }

 private:
  std::vector<std::string> items_;
};

/// Line protocol over a child process's stdin/stdout. The harness writes one JSON request line
/// {"board": [[structure, tag], ...], "budget": t, "seed": u}, then reads up to t lines, one
/// conjecture each, until a blank line, end of stream, or the timeout.
class ExternalProcess final : public ConjectureSource {
 public:
  ExternalProcess(std::string command, WorldConfig cfg = {}, std::chrono::milliseconds timeout = std::chrono::seconds(30))
      : command_(std::move(command)), cfg_(std::move(cfg)), timeout_(timeout) {}

  static std::string request_line(std::span<const Observation> board, std::size_t budget, std::uint64_t seed,
                                  const WorldConfig& cfg) {
    nlohmann::ordered_json j;
    auto arr = nlohmann::ordered_json::array();
    for (const auto& o : board) arr.push_back({render_structure(structure_from_id(o.id, cfg), cfg), o.tag ? 1 : 0});
    j["board"] = std::move(arr);
    j["budget"] = budget;
    j["seed"] = seed;
    return j.dump();
  }

  ConjectureBatch generate(std::span<const Observation> board, std::size_t budget, std::uint64_t seed) override {
    ConjectureBatch batch;
    int to_child[2], from_child[2];
    if (pipe(to_child) != 0) throw std::runtime_error("pipe failed");
    if (pipe(from_child) != 0) {
      close(to_child[0]);
      close(to_child[1]);
      throw std::runtime_error("pipe failed");
    }
    const pid_t pid = fork();
    if (pid < 0) throw std::runtime_error("fork failed");
    if (pid == 0) {
      dup2(to_child[0], STDIN_FILENO);
      dup2(from_child[1], STDOUT_FILENO);
      close(to_child[0]);
      close(to_child[1]);
      close(from_child[0]);
      close(from_child[1]);
      execl("/bin/sh", "sh", "-c", command_.c_str(), static_cast<char*>(nullptr));
      _exit(127);
    }
    close(to_child[0]);
    close(from_child[1]);

    // A child that exits without reading its input must not kill us with SIGPIPE.
    struct sigaction ignore {}, previous {};
    ignore.sa_handler = SIG_IGN;
    sigaction(SIGPIPE, &ignore, &previous);
    const std::string req = request_line(board, budget, seed, cfg_) + "\n";
    std::size_t written = 0;
    while (written < req.size()) {
      const ssize_t w = write(to_child[1], req.data() + written, req.size() - written);
      if (w < 0 && errno == EINTR) continue;
      if (w <= 0) break;
      written += static_cast<std::size_t>(w);
    }
    close(to_child[1]);
    sigaction(SIGPIPE, &previous, nullptr);

    const auto deadline = std::chrono::steady_clock::now() + timeout_;
    std::string pending;
    bool done = false;
    char buf[4096];
    while (!done) {
      const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
      if (left.count() <= 0) {
        batch.timed_out = true;
        break;
      }
      pollfd pfd{from_child[0], POLLIN, 0};
      const int rc = poll(&pfd, 1, static_cast<int>(left.count()));
      if (rc < 0 && errno == EINTR) continue;
      if (rc == 0) {
        batch.timed_out = true;
        break;
      }
      const ssize_t n = read(from_child[0], buf, sizeof buf);
      if (n < 0 && errno == EINTR) continue;
      if (n <= 0) {
        if (!pending.empty() && batch.conjectures.size() < budget) batch.conjectures.push_back(pending);
        break;
      }
      pending.append(buf, static_cast<std::size_t>(n));
      std::size_t nl;
      while ((nl = pending.find('\n')) != std::string::npos) {
        std::string line = pending.substr(0, nl);
        pending.erase(0, nl + 1);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || batch.conjectures.size() >= budget) {
          done = true;
          break;
        }
        batch.conjectures.push_back(std::move(line));
        if (batch.conjectures.size() >= budget) {
          done = true;
          break;
        }
      }
    }
    close(from_child[0]);
    kill(pid, SIGKILL);
    int status = 0;
    while (waitpid(pid, &status, 0) < 0 && errno == EINTR) {
    }
    return batch;
  }

 private:
  std::string command_;
  WorldConfig cfg_;
  std::chrono::milliseconds timeout_;
};

// ---------------------------------------------------------------------------
// Conjecture selection
// ---------------------------------------------------------------------------

enum class SelectMode { BestHitRate, Strict };

/// Draws up to `budget` conjectures, scores each parseable one by its hits on the board, and answers
/// with the best (earliest drawn among equals). Strict mode answers only with a conjecture that
/// matches every board observation.
inline SolveOutcome crn_select(std::span<const Observation> board, std::span<const StructureId> eval_ids,
                               ConjectureSource& source, std::size_t budget, SelectMode mode, const Environment& env,
                               std::uint64_t seed = 0) {
  if (budget == 0) throw std::invalid_argument("conjecture budget must be at least 1");
  SolveOutcome out;
  out.tags = BitVector(eval_ids.size());
  const ConjectureBatch batch = source.generate(board, budget, seed);
  out.timed_out = batch.timed_out;
  out.cost.cg_calls = std::min(batch.conjectures.size(), budget);

  std::optional<RuleId> best;
  std::size_t best_hits = 0;
  std::unordered_set<ClassId> consistent;
  for (std::size_t i = 0; i < out.cost.cg_calls; ++i) {
    RuleId id;
    try {
      id = env.catalog.id_of(batch.conjectures[i]);
    } catch (const ParseError&) {
      ++out.parse_failures;
      continue;
    }
    const auto row = env.matrix.row(id);
    std::size_t hits = 0;
    for (const auto& o : board) hits += test_bit(row, o.id) == o.tag;
    out.cost.j_evals += board.size();
    if (hits == board.size()) consistent.insert(env.partition.class_of[id]);
    if (!best || hits > best_hits) {
      best = id;
      best_hits = hits;
    }
  }
  out.consistent_class_count = consistent.size();
  if (out.timed_out) return out;
  if (!best) return out;
  if (mode == SelectMode::Strict && best_hits != board.size()) return out;
  out.chosen = ChosenRule{*best, env.catalog.text(*best), env.partition.class_of[*best]};
  out.tags = tag_structures(*best, eval_ids, env.matrix);
  out.cost.j_evals += eval_ids.size();
  return out;
}

}  // namespace odeen
