#include <CLI11.hpp>

#include <chrono>
#include <ctime>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <random>
#include <sstream>

#include "odeen/odeen.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

using namespace odeen;

struct Common {
  std::string out;
  std::string rules;
  std::string matrix;
  std::uint64_t seed = 0;
  unsigned threads = default_threads();
};

/// RunManifest: everything needed to repeat an artifact-producing run.
class RunManifest {
 public:
  explicit RunManifest(std::string subcommand) : start_(std::chrono::steady_clock::now()) {
    j_["tool_version"] = kToolVersion;
    j_["subcommand"] = std::move(subcommand);
    j_["params"] = ordered_json::object();
    j_["inputs"] = ordered_json::array();
    j_["outputs"] = ordered_json::array();
  }
  template <typename T>
  void param(const std::string& k, const T& v) { j_["params"][k] = v; }
  void seed(std::uint64_t s, bool chosen) {
    j_["seed"] = s;
    j_["seed_chosen_by_tool"] = chosen;
  }
  void input(const fs::path& p) { j_["inputs"].push_back(p.string()); }
  void output(const fs::path& p) { j_["outputs"].push_back(p.string()); }
  void checksum(std::uint64_t c) { j_["matrix_checksum"] = c; }

  void write(const fs::path& path) {
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    j_["duration_seconds"] = secs;
    const std::time_t now = std::time(nullptr);
    std::ostringstream ts;
    ts << std::put_time(std::gmtime(&now), "%Y-%m-%dT%H:%M:%SZ");
    j_["finished_at"] = ts.str();
    io::atomic_write(path, [&](std::ostream& o) { o << j_.dump(2) << '\n'; });
  }

 private:
  ordered_json j_;
  std::chrono::steady_clock::time_point start_;
};

fs::path manifest_path(const fs::path& out) {
  auto p = out;
  p += ".manifest.json";
  return p;
}

std::uint64_t resolve_seed(const CLI::App* sub, const Common& c, RunManifest& man) {
  if (sub->get_option("--seed")->count() > 0) {
    man.seed(c.seed, false);
    return c.seed;
  }
  std::random_device rd;
  const std::uint64_t s = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
  man.seed(s, true);
  std::cerr << "no --seed given; using " << s << "\n";
  return s;
}

void check_rules_file(const std::string& path, const RuleCatalog& catalog) {
  if (path.empty()) return;
  const auto lines = io::read_lines(path);
  if (lines.size() != catalog.size())
    throw std::runtime_error(path + " lists " + std::to_string(lines.size()) + " rules, the grammar enumerates " +
                             std::to_string(catalog.size()));
  for (std::size_t i = 0; i < lines.size(); ++i)
    if (lines[i] != catalog.text(RuleId(i)))
      throw std::runtime_error(path + ": line " + std::to_string(i + 1) + " is '" + lines[i] + "', expected '" +
                               catalog.text(RuleId(i)) + "'");
}

/// Loads the matrix when --matrix names a file, otherwise builds it in memory.
Environment environment(const Common& c, RunManifest& man) {
  Environment env;
  if (!c.matrix.empty()) {
    env = Environment::load(c.matrix);
    man.input(c.matrix);
  } else {
    std::cerr << "building semantic matrix in memory\n";
    env = Environment::build({}, c.threads);
  }
  check_rules_file(c.rules, env.catalog);
  if (!c.rules.empty()) man.input(c.rules);
  man.checksum(env.matrix.checksum());
  return env;
}

void add_common(CLI::App* sub, Common& c, bool out, bool matrix, bool seed) {
  if (out) sub->add_option("--out", c.out, "output path")->required();
  if (matrix) {
    sub->add_option("--matrix", c.matrix, "semantic matrix file (built in memory when omitted)");
    sub->add_option("--rules", c.rules, "rule file to check against the enumeration");
  }
  if (seed) sub->add_option("--seed", c.seed, "64-bit seed (chosen and recorded when omitted)");
  sub->add_option("--threads", c.threads, "worker threads (default: ODEEN_THREADS or 1)")->check(CLI::PositiveNumber);
}

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  const auto e = s.find_last_not_of(" \t\r");
  return b == std::string::npos ? "" : s.substr(b, e - b + 1);
}

/// Folds a `key = value` config file into the argument list of the chosen subcommand. Keys mirror
/// flag names; a flag given on the command line wins. Section headers and # comments are ignored.
std::vector<std::string> apply_config(const CLI::App& app, std::vector<std::string> args) {
  std::string path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) {
      path = args[i + 1];
      args.erase(args.begin() + static_cast<std::ptrdiff_t>(i), args.begin() + static_cast<std::ptrdiff_t>(i + 2));
      break;
    }
    if (args[i].rfind("--config=", 0) == 0) {
      path = args[i].substr(9);
      args.erase(args.begin() + static_cast<std::ptrdiff_t>(i));
      break;
    }
  }
  if (path.empty()) return args;
  const auto sub_it = std::find_if(args.begin(), args.end(), [](const std::string& a) { return a.empty() || a[0] != '-'; });
  if (sub_it == args.end()) throw std::runtime_error("--config needs a subcommand");
  const CLI::App* sub = app.get_subcommand(*sub_it);
  auto given = [&](const std::string& flag) {
    return std::any_of(args.begin(), args.end(), [&](const std::string& a) { return a == flag || a.rfind(flag + "=", 0) == 0; });
  };
  std::vector<std::string> extra;
  for (auto line : io::read_lines(path)) {
    line = trim(line.substr(0, line.find('#')));
    if (line.empty() || line.front() == '[') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw std::runtime_error(path + ": expected key = value, got '" + line + "'");
    std::string key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
    std::replace(key.begin(), key.end(), '_', '-');
    if (value.size() >= 2 && (value.front() == '"' || value.front() == '\'') && value.back() == value.front())
      value = value.substr(1, value.size() - 2);
    const std::string flag = "--" + key;
    const CLI::Option* opt = sub->get_option_no_throw(flag);
    if (!opt) throw std::runtime_error(path + ": '" + key + "' is not a flag of " + *sub_it);
    if (given(flag)) continue;
    if (opt->get_expected_min() == 0) {
      if (value == "true" || value == "1") extra.push_back(flag);
    } else {
      extra.push_back(flag);
      extra.push_back(value);
    }
  }
  args.insert(sub_it + 1, extra.begin(), extra.end());
  return args;
}

ordered_json histogram_json(const Histogram& h) {
  return {{"lo", h.lo}, {"hi", h.hi}, {"bins", h.bins}, {"unimodal", h.unimodal()}};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Odeen rule-induction benchmark toolkit"};
  app.require_subcommand(1);
  std::string config_path;
  app.add_option("--config", config_path, "TOML-style file whose keys mirror the flags; flags win");
  Common c;

  // enumerate-rules
  auto* en = app.add_subcommand("enumerate-rules", "write the canonical rule list");
  add_common(en, c, true, false, false);
  en->callback([&] {
    RunManifest man("enumerate-rules");
    const RuleCatalog catalog;
    io::atomic_write(c.out, [&](std::ostream& o) { catalog.write_text(o); });
    man.output(c.out);
    man.param("count", catalog.size());
    man.write(manifest_path(c.out));
    std::cout << catalog.size() << " rules\n";
  });

  // build-matrix
  auto* bm = app.add_subcommand("build-matrix", "build and save the semantic matrix");
  add_common(bm, c, true, false, false);
  bm->add_option("--rules", c.rules, "rule file to check against the enumeration");
  bm->callback([&] {
    RunManifest man("build-matrix");
    man.param("threads", c.threads);
    const RuleCatalog catalog;
    check_rules_file(c.rules, catalog);
    const auto t0 = std::chrono::steady_clock::now();
    const auto m = build_matrix(catalog, c.threads);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    m.save(c.out);
    man.output(c.out);
    man.checksum(m.checksum());
    man.write(manifest_path(c.out));
    std::cout << m.n_rules() << " x " << m.n_structures() << " matrix built in " << std::fixed << std::setprecision(2)
              << secs << " s, checksum " << m.checksum() << "\n";
  });

  // stats
  auto* st = app.add_subcommand("stats", "matrix diagnostics: counts, equivalence classes, weights, coverage");
  add_common(st, c, false, true, false);
  st->add_option("--out", c.out, "write the report here as JSON");
  st->callback([&] {
    RunManifest man("stats");
    const auto env = environment(c, man);
    const auto ws = weight_stats(env.matrix);
    const auto cov = coverage_report(env.catalog.rules(), env.config());
    ordered_json j;
    j["structures"] = env.matrix.n_structures();
    j["rules"] = env.matrix.n_rules();
    j["equivalence_classes"] = env.partition.class_count();
    j["matrix_checksum"] = env.matrix.checksum();
    j["rule_weight"] = {{"min", ws.rule_min}, {"max", ws.rule_max}, {"histogram", histogram_json(ws.rule_hist)}};
    j["structure_weight"] = {{"min", ws.structure_min},
                             {"max", ws.structure_max},
                             {"mean", ws.structure_mean},
                             {"histogram", histogram_json(ws.structure_hist)}};
    j["coverage"] = {{"full", cov.full_coverage}, {"uncovered", cov.uncovered()}};
    if (!c.out.empty()) {
      io::atomic_write(c.out, [&](std::ostream& o) { o << j.dump(2) << '\n'; });
      man.output(c.out);
      man.write(manifest_path(c.out));
    }
    std::cout << j.dump(2) << "\n";
  });

  // gen-dataset
  DatasetParams dp;
  auto* gd = app.add_subcommand("gen-dataset", "generate train, public test and private answer files");
  add_common(gd, c, true, true, true);
  gd->add_option("--n", dp.n, "training rules")->capture_default_str();
  gd->add_option("--m", dp.m, "observations per training rule")->capture_default_str();
  gd->add_option("--s", dp.s, "test games")->capture_default_str();
  gd->add_option("--k", dp.k, "board size")->capture_default_str();
  gd->add_option("--l", dp.l, "evaluation structures per game")->capture_default_str();
  gd->add_option("--heldout-quota", dp.heldout_test_quota, "test games with a held-out bigram")->capture_default_str();
  gd->callback([&] {
    RunManifest man("gen-dataset");
    dp.seed = resolve_seed(gd, c, man);
    dp.threads = c.threads;
    const auto env = environment(c, man);
    const auto ds = generate_dataset(dp, env);
    write_dataset(ds, env, c.out);
    for (const char* f : {"train.jsonl", "test.jsonl", "answers.jsonl", "manifest.json"}) man.output(fs::path(c.out) / f);
    man.param("dataset", dataset_manifest(ds)["params"]);
    man.write(fs::path(c.out) / "run_manifest.json");
    for (const auto& w : ds.warnings) std::cerr << "warning: " << w << "\n";
    std::cout << ds.train.size() << " training rules, " << ds.test.size() << " test games ("
              << ds.heldout_test_rules << " with a held-out bigram)\n";
  });

  // gen-board
  std::string rule_text;
  std::size_t board_k = 32;
  auto* gb = app.add_subcommand("gen-board", "build a representative board for one rule");
  add_common(gb, c, true, true, true);
  gb->add_option("--rule", rule_text, "rule text")->required();
  gb->add_option("--k", board_k, "board size")->capture_default_str();
  gb->callback([&] {
    RunManifest man("gen-board");
    const auto seed = resolve_seed(gb, c, man);
    const auto env = environment(c, man);
    const RuleId rule = env.catalog.id_of(rule_text);
    const auto board = build_test_board(rule, seed, env.config(), env.matrix, env.partition, board_k);
    ordered_json j;
    j["rule"] = env.catalog.text(rule);
    j["board"] = detail::observations_json(board.observations, env.config());
    j["warnings"] = board.warnings;
    io::atomic_write(c.out, [&](std::ostream& o) { o << j.dump() << '\n'; });
    man.param("rule", rule_text);
    man.param("k", board_k);
    man.output(c.out);
    man.write(manifest_path(c.out));
    for (const auto& o : board.observations)
      std::cout << render_structure(structure_from_id(o.id, env.config()), env.config(), RenderMode::Emoji) << " "
                << (o.tag ? 1 : 0) << "\n";
  });

  // solve
  std::string mode = "exhaustive", test_path, command;
  std::size_t budget = 300;
  bool strict = false;
  double timeout_s = 30;
  auto* so = app.add_subcommand("solve", "predict tags for every test game");
  add_common(so, c, true, true, true);
  so->add_option("--mode", mode, "exhaustive | sample | external")
      ->check(CLI::IsMember({"exhaustive", "sample", "external"}))
      ->capture_default_str();
  so->add_option("--test", test_path, "public test file")->required();
  so->add_option("--budget", budget, "conjectures per game")->check(CLI::PositiveNumber)->capture_default_str();
  so->add_flag("--strict", strict, "answer only with a conjecture consistent with the whole board");
  so->add_option("--cmd", command, "conjecture generator command for --mode external");
  so->add_option("--timeout", timeout_s, "seconds per external request")->capture_default_str();
  so->callback([&] {
    RunManifest man("solve");
    const bool seeded = mode != "exhaustive";
    const auto seed = seeded ? resolve_seed(so, c, man) : 0;
    if (mode == "external" && command.empty()) throw CLI::ValidationError("--cmd", "required for --mode external");
    const auto env = environment(c, man);
    const auto games = load_test_games(test_path, env.config());
    man.input(test_path);
    std::vector<SolveOutcome> outcomes(games.size());
    parallel_for(games.size(), c.threads, [&](std::size_t b, std::size_t e) {
      GrammarSampler sampler(env.catalog);
      ExternalProcess external(command, env.config(),
                               std::chrono::milliseconds(static_cast<std::int64_t>(timeout_s * 1000)));
      for (std::size_t i = b; i < e; ++i) {
        const auto& g = games[i];
        if (mode == "exhaustive") {
          outcomes[i] = exhaustive_solve(g.board, g.eval_ids, env);
        } else {
          ConjectureSource& src = mode == "sample" ? static_cast<ConjectureSource&>(sampler) : external;
          outcomes[i] = crn_select(g.board, g.eval_ids, src, budget,
                                   strict ? SelectMode::Strict : SelectMode::BestHitRate, env,
                                   derive_seed(seed, "solve", g.game));
        }
      }
    });
    CostCounters total;
    std::size_t unknown = 0;
    io::atomic_write(c.out, [&](std::ostream& o) {
      for (std::size_t i = 0; i < games.size(); ++i) {
        const auto& r = outcomes[i];
        ordered_json j;
        j["game"] = games[i].game;
        j["tags"] = r.tags.to_string();
        if (r.chosen) j["rule"] = r.chosen->text;
        else j["rule"] = nullptr;
        j["cg_calls"] = r.cost.cg_calls;
        j["j_evals"] = r.cost.j_evals;
        j["consistent_classes"] = r.consistent_class_count;
        if (r.parse_failures) j["parse_failures"] = r.parse_failures;
        if (r.timed_out) j["timed_out"] = true;
        o << j.dump() << '\n';
        total.cg_calls += r.cost.cg_calls;
        total.j_evals += r.cost.j_evals;
        unknown += r.unknown();
      }
    });
    man.param("mode", mode);
    man.param("budget", budget);
    man.param("strict", strict);
    if (!command.empty()) man.param("cmd", command);
    man.param("total_cg_calls", total.cg_calls);
    man.param("total_j_evals", total.j_evals);
    man.output(c.out);
    man.write(manifest_path(c.out));
    std::cout << games.size() << " games, " << unknown << " unknown, cg_calls " << total.cg_calls << ", j_evals "
              << total.j_evals << "\n";
  });

  // score
  std::string pred_path, answers_path;
  auto* sc = app.add_subcommand("score", "T-Acc, NRS and R-Acc of a prediction file");
  add_common(sc, c, false, true, false);
  sc->add_option("--pred", pred_path, "prediction file")->required();
  sc->add_option("--answers", answers_path, "private answer file")->required();
  sc->add_option("--test", test_path, "public test file (default: test.jsonl beside the answers)");
  sc->add_option("--out", c.out, "write the report here as JSON");
  sc->callback([&] {
    RunManifest man("score");
    const auto env = environment(c, man);
    const fs::path dir = fs::path(answers_path).parent_path();
    const fs::path test = test_path.empty() ? dir / "test.jsonl" : fs::path(test_path);
    std::optional<std::uint64_t> expected;
    if (std::ifstream mf(dir / "manifest.json"); mf) {
      const auto mj = nlohmann::json::parse(mf);
      if (mj.contains("matrix_checksum")) expected = mj["matrix_checksum"].get<std::uint64_t>();
    }
    const auto rep = score(load_predictions(pred_path), load_answers(answers_path),
                           load_test_games(test, env.config()), env, expected);
    for (const auto& p : {fs::path(pred_path), fs::path(answers_path), test}) man.input(p);
    auto j = rep.to_json();
    if (!c.out.empty()) {
      io::atomic_write(c.out, [&](std::ostream& o) { o << j.dump(2) << '\n'; });
      man.output(c.out);
      man.write(manifest_path(c.out));
    }
    std::cout << std::setprecision(6) << "t_acc " << rep.t_acc << "\nnrs " << rep.nrs << "\nr_acc " << rep.r_acc
              << "\n";
  });

  // sit-gen
  std::size_t sit_count = 100;
  std::string subtask = "all", format = "jsonl";
  auto* sg = app.add_subcommand("sit-gen", "generate a Symbol Interpretation Task questionnaire");
  add_common(sg, c, true, false, true);
  sg->add_option("--n", sit_count, "questions")->capture_default_str();
  sg->add_option("--subtask", subtask, "plain | agnostic_emoji | agnostic_name | tricky | adversarial | all")
      ->capture_default_str();
  sg->add_option("--format", format, "jsonl | text")->check(CLI::IsMember({"jsonl", "text"}))->capture_default_str();
  sg->callback([&] {
    RunManifest man("sit-gen");
    const auto seed = resolve_seed(sg, c, man);
    std::vector<sit::Subtask> subtasks;
    if (subtask == "all") subtasks.assign(std::begin(sit::kSubtasks), std::end(sit::kSubtasks));
    else subtasks.push_back(sit::subtask_from_name(subtask));
    std::vector<sit::SitQuestion> qs(sit_count);
    parallel_for(sit_count, c.threads, [&](std::size_t b, std::size_t e) {
      for (std::size_t i = b; i < e; ++i) qs[i] = sit::generate_question(derive_seed(seed, "sit", i));
    });
    io::atomic_write(c.out, [&](std::ostream& o) {
      std::size_t id = 0;
      for (auto s : subtasks)
        for (std::size_t i = 0; i < qs.size(); ++i, ++id) {
          const auto legend = sit::Legend::make(s, qs[i].seed);
          if (format == "jsonl") o << sit::to_json(id, qs[i], legend).dump() << '\n';
          else o << "# question " << id << " (" << sit::subtask_name(s) << ", answer " << qs[i].answer << ")\n"
                 << sit::render_prompt(qs[i], legend) << '\n';
        }
    });
    man.param("n", sit_count);
    man.param("subtask", subtask);
    man.param("format", format);
    man.output(c.out);
    man.write(manifest_path(c.out));
    std::cout << sit_count * subtasks.size() << " questions\n";
  });

  try {
    std::vector<std::string> args(argv + 1, argv + argc);
    args = apply_config(app, std::move(args));
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
