#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

#include "odeen/world.hpp"

namespace odeen {

using RuleId = std::uint32_t;

enum class QuantKind : std::uint8_t { AtLeast, Exactly, AtMost, Zero };

struct Quantifier {
  QuantKind kind = QuantKind::Zero;
  std::uint8_t n = 0;  // 1 or 2; 0 for Zero

  /// Quantifier test on a match count.
  constexpr bool holds(unsigned count) const {
    switch (kind) {
      case QuantKind::AtLeast: return count >= n;
      case QuantKind::Exactly: return count == n;
      case QuantKind::AtMost: return count <= n;
      case QuantKind::Zero: return count == 0;
    }
    return false;
  }
  constexpr bool operator==(const Quantifier&) const = default;
};

/// Grammar order: at_least 1, at_least 2, exactly 1, exactly 2, at_most 1, at_most 2, zero.
inline const std::vector<Quantifier>& all_quantifiers() {
  static const std::vector<Quantifier> q{{QuantKind::AtLeast, 1}, {QuantKind::AtLeast, 2}, {QuantKind::Exactly, 1},
                                         {QuantKind::Exactly, 2}, {QuantKind::AtMost, 1},  {QuantKind::AtMost, 2},
                                         {QuantKind::Zero, 0}};
  return q;
}

enum class ShapeSpec : std::uint8_t { None, PyramidUp, PyramidDown, Pyramid, Block };

struct ObjectPattern {
  std::optional<std::uint8_t> color;  // index into WorldConfig::colors
  ShapeSpec shape = ShapeSpec::None;
  constexpr bool operator==(const ObjectPattern&) const = default;
};

enum class Relation : std::uint8_t { Touching, SurroundedBy, AtTheRightOf };
inline constexpr Relation kRelations[] = {Relation::Touching, Relation::SurroundedBy, Relation::AtTheRightOf};

enum class Connective : std::uint8_t { And, Or };

struct SimpleProp {
  Quantifier quantifier;
  ObjectPattern object;
  bool operator==(const SimpleProp&) const = default;
};

struct RelationalProp {
  Quantifier quantifier;
  ObjectPattern subject;
  Relation relation = Relation::Touching;
  ObjectPattern reference;
  bool operator==(const RelationalProp&) const = default;
};

struct Conjunction {
  SimpleProp left;
  Connective connective = Connective::And;
  SimpleProp right;
  bool operator==(const Conjunction&) const = default;
};

using RuleAst = std::variant<SimpleProp, RelationalProp, Conjunction>;

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t token_index)
      : std::runtime_error("token " + std::to_string(token_index) + ": " + what), token_index_(token_index) {}
  std::size_t token_index() const { return token_index_; }

 private:
  std::size_t token_index_;
};

namespace detail {

inline std::string_view quant_head(QuantKind k) {
  switch (k) {
    case QuantKind::AtLeast: return "at_least";
    case QuantKind::Exactly: return "exactly";
    case QuantKind::AtMost: return "at_most";
    case QuantKind::Zero: return "zero";
  }
  return "?";
}

inline std::string_view relation_token(Relation r) {
  switch (r) {
    case Relation::Touching: return "touching";
    case Relation::SurroundedBy: return "surrounded_by";
    case Relation::AtTheRightOf: return "at_the_right_of";
  }
  return "?";
}

inline bool has_variant(const WorldConfig& cfg, ShapeVariant v) {
  return std::find(cfg.shape_variants.begin(), cfg.shape_variants.end(), v) != cfg.shape_variants.end();
}

inline const std::vector<std::string_view>& keywords() {
  static const std::vector<std::string_view> k{
      "at_least", "exactly", "at_most", "zero", "1", "2", "pyramid", "block", "pointing_up", "pointing_down",
      "touching", "surrounded_by", "at_the_right_of", "and", "or"};
  return k;
}

}  // namespace detail

/// SHAPE alternatives available in a world, in grammar order.
inline std::vector<ShapeSpec> shape_alternatives(const WorldConfig& cfg) {
  std::vector<ShapeSpec> out;
  const bool up = detail::has_variant(cfg, ShapeVariant::PyramidUp);
  const bool down = detail::has_variant(cfg, ShapeVariant::PyramidDown);
  if (up) out.push_back(ShapeSpec::PyramidUp);
  if (down) out.push_back(ShapeSpec::PyramidDown);
  if (up || down) out.push_back(ShapeSpec::Pyramid);
  if (detail::has_variant(cfg, ShapeVariant::Block)) out.push_back(ShapeSpec::Block);
  return out;
}

/// OBJ alternatives in grammar order: COL, SHAPE, COL SHAPE. 14 in the default world.
inline std::vector<ObjectPattern> object_patterns(const WorldConfig& cfg) {
  std::vector<ObjectPattern> out;
  for (std::size_t c = 0; c < cfg.colors.size(); ++c) out.push_back({static_cast<std::uint8_t>(c), ShapeSpec::None});
  const auto shapes = shape_alternatives(cfg);
  for (ShapeSpec s : shapes) out.push_back({std::nullopt, s});
  for (std::size_t c = 0; c < cfg.colors.size(); ++c)
    for (ShapeSpec s : shapes) out.push_back({static_cast<std::uint8_t>(c), s});
  return out;
}

// ---------------------------------------------------------------------------
// Rendering
// ---------------------------------------------------------------------------

inline void append_tokens(std::vector<std::string>& out, const Quantifier& q) {
  out.emplace_back(detail::quant_head(q.kind));
  if (q.kind != QuantKind::Zero) out.push_back(std::to_string(q.n));
}

inline void append_tokens(std::vector<std::string>& out, const ObjectPattern& o, const WorldConfig& cfg) {
  if (o.color) out.push_back(cfg.colors.at(*o.color));
  switch (o.shape) {
    case ShapeSpec::None: break;
    case ShapeSpec::PyramidUp: out.emplace_back("pyramid"); out.emplace_back("pointing_up"); break;
    case ShapeSpec::PyramidDown: out.emplace_back("pyramid"); out.emplace_back("pointing_down"); break;
    case ShapeSpec::Pyramid: out.emplace_back("pyramid"); break;
    case ShapeSpec::Block: out.emplace_back("block"); break;
  }
}

inline std::vector<std::string> rule_tokens(const RuleAst& ast, const WorldConfig& cfg) {
  std::vector<std::string> t;
  std::visit(
      [&](const auto& r) {
        using T = std::decay_t<decltype(r)>;
        if constexpr (std::is_same_v<T, SimpleProp>) {
          append_tokens(t, r.quantifier);
          append_tokens(t, r.object, cfg);
        } else if constexpr (std::is_same_v<T, RelationalProp>) {
          append_tokens(t, r.quantifier);
          append_tokens(t, r.subject, cfg);
          t.emplace_back(detail::relation_token(r.relation));
          append_tokens(t, r.reference, cfg);
        } else {
          append_tokens(t, r.left.quantifier);
          append_tokens(t, r.left.object, cfg);
          t.emplace_back(r.connective == Connective::And ? "and" : "or");
          append_tokens(t, r.right.quantifier);
          append_tokens(t, r.right.object, cfg);
        }
      },
      ast);
  return t;
}

inline std::string render_rule(const RuleAst& ast, const WorldConfig& cfg = {}) {
  std::string out;
  for (const auto& tok : rule_tokens(ast, cfg)) {
    if (!out.empty()) out += ' ';
    out += tok;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Parsing
// ---------------------------------------------------------------------------

namespace detail {

class RuleParser {
 public:
  RuleParser(std::string_view text, const WorldConfig& cfg) : cfg_(cfg) {
    std::istringstream in{std::string(text)};
    std::string tok;
    while (in >> tok) toks_.push_back(tok);
  }

  RuleAst parse() {
    if (toks_.empty()) throw ParseError("empty rule", 0);
    const Quantifier q = quantifier();
    const ObjectPattern o = object();
    if (at_end()) return SimpleProp{q, o};
    if (auto rel = relation()) {
      ++pos_;
      const ObjectPattern ref = object();
      expect_end();
      return RelationalProp{q, o, *rel, ref};
    }
    if (peek() == "and" || peek() == "or") {
      const Connective c = peek() == "and" ? Connective::And : Connective::Or;
      ++pos_;
      const Quantifier q2 = quantifier();
      const ObjectPattern o2 = object();
      expect_end();
      return Conjunction{{q, o}, c, {q2, o2}};
    }
    throw ParseError("expected relation or connective, got '" + std::string(peek()) + "'", pos_);
  }

 private:
  bool at_end() const { return pos_ >= toks_.size(); }
  std::string_view peek() const { return at_end() ? std::string_view{} : std::string_view{toks_[pos_]}; }

  void expect_end() {
    if (!at_end()) throw ParseError("unexpected trailing token '" + toks_[pos_] + "'", pos_);
  }

  Quantifier quantifier() {
    if (at_end()) throw ParseError("expected quantifier, got end of rule", pos_);
    const auto head = peek();
    QuantKind k;
    if (head == "at_least") k = QuantKind::AtLeast;
    else if (head == "exactly") k = QuantKind::Exactly;
    else if (head == "at_most") k = QuantKind::AtMost;
    else if (head == "zero") { ++pos_; return {QuantKind::Zero, 0}; }
    else throw ParseError("expected quantifier, got '" + std::string(head) + "'", pos_);
    ++pos_;
    if (peek() == "1" || peek() == "2") {
      const auto n = static_cast<std::uint8_t>(peek()[0] - '0');
      ++pos_;
      return {k, n};
    }
    throw ParseError("expected 1 or 2 after '" + std::string(head) + "', got '" + std::string(peek()) + "'", pos_);
  }

  std::optional<std::uint8_t> color_at(std::string_view tok) const {
    for (std::size_t i = 0; i < cfg_.colors.size(); ++i)
      if (cfg_.colors[i] == tok) return static_cast<std::uint8_t>(i);
    return std::nullopt;
  }

  ObjectPattern object() {
    const std::size_t start = pos_;
    ObjectPattern o;
    if (at_end()) throw ParseError("expected object, got end of rule", pos_);
    if (auto c = color_at(peek())) {
      o.color = c;
      ++pos_;
    }
    if (peek() == "block") {
      o.shape = ShapeSpec::Block;
      ++pos_;
    } else if (peek() == "pyramid") {
      ++pos_;
      o.shape = ShapeSpec::Pyramid;
      if (peek() == "pointing_up") {
        o.shape = ShapeSpec::PyramidUp;
        ++pos_;
      } else if (peek() == "pointing_down") {
        o.shape = ShapeSpec::PyramidDown;
        ++pos_;
      }
    } else if (peek() == "pointing_up" || peek() == "pointing_down") {
      throw ParseError("'" + std::string(peek()) + "' must follow 'pyramid'", pos_);
    }
    if (!o.color && o.shape == ShapeSpec::None)
      throw ParseError("expected color or shape, got '" + std::string(peek()) + "'", start);
    const auto avail = shape_alternatives(cfg_);
    if (o.shape != ShapeSpec::None && std::find(avail.begin(), avail.end(), o.shape) == avail.end())
      throw ParseError("shape not present in this world", start);
    return o;
  }

  std::optional<Relation> relation() const {
    for (Relation r : kRelations)
      if (peek() == relation_token(r)) return r;
    return std::nullopt;
  }

  const WorldConfig& cfg_;
  std::vector<std::string> toks_;
  std::size_t pos_ = 0;
};

}  // namespace detail

/// Parses a rule; whitespace is normalized. Throws ParseError on anything outside the grammar.
inline RuleAst parse_rule(std::string_view text, const WorldConfig& cfg = {}) {
  return detail::RuleParser(text, cfg).parse();
}

// ---------------------------------------------------------------------------
// Enumeration
// ---------------------------------------------------------------------------

/// Every rule of the grammar, in rule-id order: simple, relational, conjunction; rightmost slot fastest.
inline std::vector<RuleAst> enumerate_rules(const WorldConfig& cfg = {}) {
  for (const auto& c : cfg.colors)
    for (auto k : detail::keywords())
      if (c == k) throw std::invalid_argument("color name '" + c + "' collides with a grammar keyword");
  const auto& qs = all_quantifiers();
  const auto objs = object_patterns(cfg);
  std::vector<SimpleProp> simple;
  for (const auto& q : qs)
    for (const auto& o : objs) simple.push_back({q, o});

  std::vector<RuleAst> out;
  out.reserve(simple.size() * (1 + objs.size() * 3 + simple.size() * 2));
  for (const auto& s : simple) out.emplace_back(s);
  for (const auto& q : qs)
    for (const auto& o1 : objs)
      for (Relation r : kRelations)
        for (const auto& o2 : objs) out.emplace_back(RelationalProp{q, o1, r, o2});
  for (const auto& l : simple)
    for (Connective c : {Connective::And, Connective::Or})
      for (const auto& r : simple) out.emplace_back(Conjunction{l, c, r});
  return out;
}

/// Enumerated rules with their canonical texts and a text -> id index.
class RuleCatalog {
 public:
  explicit RuleCatalog(WorldConfig cfg = {}) : cfg_(std::move(cfg)), rules_(enumerate_rules(cfg_)) {
    texts_.reserve(rules_.size());
    index_.reserve(rules_.size());
    for (std::size_t i = 0; i < rules_.size(); ++i) {
      texts_.push_back(render_rule(rules_[i], cfg_));
      index_.emplace(texts_.back(), static_cast<RuleId>(i));
    }
  }

  const WorldConfig& config() const { return cfg_; }
  std::size_t size() const { return rules_.size(); }
  const RuleAst& rule(RuleId id) const { return rules_.at(id); }
  const std::string& text(RuleId id) const { return texts_.at(id); }
  const std::vector<RuleAst>& rules() const { return rules_; }
  const std::vector<std::string>& texts() const { return texts_; }

  /// Rule id of an exact canonical string, if any.
  std::optional<RuleId> find_canonical(const std::string& text) const {
    auto it = index_.find(text);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  /// Parses arbitrary (whitespace-irregular) text. Throws ParseError.
  RuleId id_of(std::string_view text) const {
    const auto canonical = render_rule(parse_rule(text, cfg_), cfg_);
    auto id = find_canonical(canonical);
    if (!id) throw ParseError("rule not in enumeration", 0);
    return *id;
  }

  /// `rules.txt` body: one canonical string per line, line N is rule N.
  void write_text(std::ostream& out) const {
    for (const auto& t : texts_) out << t << '\n';
  }

 private:
  WorldConfig cfg_;
  std::vector<RuleAst> rules_;
  std::vector<std::string> texts_;
  std::unordered_map<std::string, RuleId> index_;
};

// ---------------------------------------------------------------------------
// Coverage
// ---------------------------------------------------------------------------

/// Named grammar productions exercised by a rule (terminal productions included).
inline std::vector<std::string> rule_productions(const RuleAst& ast, const WorldConfig& cfg) {
  std::vector<std::string> p;
  auto quant = [&](const Quantifier& q) {
    switch (q.kind) {
      case QuantKind::AtLeast: p.emplace_back("QTY -> at_least NUM"); break;
      case QuantKind::Exactly: p.emplace_back("QTY -> exactly NUM"); break;
      case QuantKind::AtMost: p.emplace_back("QTY -> at_most NUM"); break;
      case QuantKind::Zero: p.emplace_back("QTY -> zero"); break;
    }
    if (q.kind != QuantKind::Zero) p.push_back("NUM -> " + std::to_string(q.n));
  };
  auto obj = [&](const ObjectPattern& o) {
    if (o.color && o.shape != ShapeSpec::None) p.emplace_back("OBJ -> COL SHAPE");
    else if (o.color) p.emplace_back("OBJ -> COL");
    else p.emplace_back("OBJ -> SHAPE");
    if (o.color) p.push_back("COL -> " + cfg.colors.at(*o.color));
    switch (o.shape) {
      case ShapeSpec::None: break;
      case ShapeSpec::PyramidUp: p.emplace_back("SHAPE -> pyramid ORIEN"); p.emplace_back("ORIEN -> pointing_up"); break;
      case ShapeSpec::PyramidDown: p.emplace_back("SHAPE -> pyramid ORIEN"); p.emplace_back("ORIEN -> pointing_down"); break;
      case ShapeSpec::Pyramid: p.emplace_back("SHAPE -> pyramid"); break;
      case ShapeSpec::Block: p.emplace_back("SHAPE -> block"); break;
    }
  };
  std::visit(
      [&](const auto& r) {
        using T = std::decay_t<decltype(r)>;
        if constexpr (std::is_same_v<T, SimpleProp>) {
          p.emplace_back("RULE -> PROP_S");
          p.emplace_back("PROP_S -> QTY OBJ");
          quant(r.quantifier);
          obj(r.object);
        } else if constexpr (std::is_same_v<T, RelationalProp>) {
          p.emplace_back("RULE -> PROP");
          p.emplace_back("PROP -> QTY OBJ REL OBJ");
          quant(r.quantifier);
          obj(r.subject);
          p.push_back("REL -> " + std::string(detail::relation_token(r.relation)));
          obj(r.reference);
        } else {
          p.emplace_back("RULE -> PROP_S CONJ PROP_S");
          p.emplace_back("PROP_S -> QTY OBJ");
          quant(r.left.quantifier);
          obj(r.left.object);
          p.emplace_back(r.connective == Connective::And ? "CONJ -> and" : "CONJ -> or");
          quant(r.right.quantifier);
          obj(r.right.object);
        }
      },
      ast);
  return p;
}

/// Every terminal token of the grammar under a world config.
inline std::vector<std::string> grammar_tokens(const WorldConfig& cfg) {
  std::vector<std::string> t{"at_least", "exactly", "at_most", "zero", "1", "2"};
  for (const auto& c : cfg.colors) t.push_back(c);
  const auto shapes = shape_alternatives(cfg);
  auto has = [&](ShapeSpec s) { return std::find(shapes.begin(), shapes.end(), s) != shapes.end(); };
  if (has(ShapeSpec::Pyramid)) t.emplace_back("pyramid");
  if (has(ShapeSpec::PyramidUp)) t.emplace_back("pointing_up");
  if (has(ShapeSpec::PyramidDown)) t.emplace_back("pointing_down");
  if (has(ShapeSpec::Block)) t.emplace_back("block");
  for (Relation r : kRelations) t.emplace_back(detail::relation_token(r));
  t.emplace_back("and");
  t.emplace_back("or");
  return t;
}

/// Every named production of the grammar under a world config.
inline std::vector<std::string> grammar_productions(const WorldConfig& cfg) {
  std::vector<std::string> p{"RULE -> PROP_S",     "RULE -> PROP",         "RULE -> PROP_S CONJ PROP_S",
                             "PROP -> QTY OBJ REL OBJ", "PROP_S -> QTY OBJ", "OBJ -> COL",
                             "OBJ -> SHAPE",       "OBJ -> COL SHAPE",     "QTY -> at_least NUM",
                             "QTY -> exactly NUM", "QTY -> at_most NUM",   "QTY -> zero",
                             "NUM -> 1",           "NUM -> 2",             "CONJ -> and",
                             "CONJ -> or"};
  for (const auto& c : cfg.colors) p.push_back("COL -> " + c);
  const auto shapes = shape_alternatives(cfg);
  auto has = [&](ShapeSpec s) { return std::find(shapes.begin(), shapes.end(), s) != shapes.end(); };
  if (has(ShapeSpec::PyramidUp) || has(ShapeSpec::PyramidDown)) p.emplace_back("SHAPE -> pyramid ORIEN");
  if (has(ShapeSpec::Pyramid)) p.emplace_back("SHAPE -> pyramid");
  if (has(ShapeSpec::Block)) p.emplace_back("SHAPE -> block");
  if (has(ShapeSpec::PyramidUp)) p.emplace_back("ORIEN -> pointing_up");
  if (has(ShapeSpec::PyramidDown)) p.emplace_back("ORIEN -> pointing_down");
  for (Relation r : kRelations) p.push_back("REL -> " + std::string(detail::relation_token(r)));
  return p;
}

struct CoverageReport {
  std::map<std::string, std::size_t> tokens;
  std::map<std::string, std::size_t> productions;
  bool full_coverage = false;

  std::vector<std::string> uncovered() const {
    std::vector<std::string> out;
    for (const auto& [k, v] : tokens)
      if (v == 0) out.push_back(k);
    for (const auto& [k, v] : productions)
      if (v == 0) out.push_back(k);
    return out;
  }
};

inline CoverageReport coverage_report(const std::vector<RuleAst>& rules, const WorldConfig& cfg = {}) {
  CoverageReport r;
  for (const auto& t : grammar_tokens(cfg)) r.tokens[t] = 0;
  for (const auto& p : grammar_productions(cfg)) r.productions[p] = 0;
  for (const auto& ast : rules) {
    for (const auto& t : rule_tokens(ast, cfg)) ++r.tokens[t];
    for (const auto& p : rule_productions(ast, cfg)) ++r.productions[p];
  }
  r.full_coverage = r.uncovered().empty();
  return r;
}

}  // namespace odeen
