#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "odeen/rng.hpp"

// Symbol Interpretation Task: pick the sentence that holds for structure A and fails for
// structure B, with the symbol legend rendered under one of five subtasks.

namespace odeen::sit {

inline constexpr std::size_t kLength = 6;
inline constexpr std::size_t kPieces = 9;

enum class Color : std::uint8_t { None, Red, Blue, Yellow };
enum class Shape : std::uint8_t { Any, Circle, Square, Triangle, TriangleUp, TriangleDown };

/// The nine SIT symbols in legend order; index 8 is the empty space.
enum class SitPiece : std::uint8_t {
  RedCircle, BlueCircle, YellowCircle, RedTriangleUp, RedTriangleDown, RedSquare, BlueSquare, YellowSquare, Empty
};

struct PieceInfo {
  Color color;
  Shape shape;  // Circle, Square, TriangleUp or TriangleDown; Any for the empty space
  std::string_view description;
  std::string_view glyph;
};

inline const std::array<PieceInfo, kPieces>& pieces() {
  static const std::array<PieceInfo, kPieces> t{{
      {Color::Red, Shape::Circle, "red circle", "🔴"},
      {Color::Blue, Shape::Circle, "blue circle", "🔵"},
      {Color::Yellow, Shape::Circle, "yellow circle", "🟡"},
      {Color::Red, Shape::TriangleUp, "red triangle pointing up", "🔺"},
      {Color::Red, Shape::TriangleDown, "red triangle pointing down", "🔻"},
      {Color::Red, Shape::Square, "red square", "🟥"},
      {Color::Blue, Shape::Square, "blue square", "🟦"},
      {Color::Yellow, Shape::Square, "yellow square", "🟨"},
      {Color::None, Shape::Any, "empty space", "⬜"},
  }};
  return t;
}

inline const PieceInfo& info(SitPiece p) { return pieces()[static_cast<std::size_t>(p)]; }

using SitStructure = std::array<SitPiece, kLength>;

// ---------------------------------------------------------------------------
// Sentences
// ---------------------------------------------------------------------------

enum class SitQuant : std::uint8_t { Zero, ExactlyOne, AtLeastOne, AtMostOne, AtMostTwo, AtLeastTwo };
inline constexpr SitQuant kQuants[] = {SitQuant::Zero,      SitQuant::ExactlyOne, SitQuant::AtLeastOne,
                                       SitQuant::AtMostOne, SitQuant::AtMostTwo,  SitQuant::AtLeastTwo};

struct SitSentence {
  SitQuant quant = SitQuant::Zero;
  Color color = Color::None;
  Shape shape = Shape::Any;
  bool operator==(const SitSentence&) const = default;
};

inline bool piece_fits(SitPiece p, Color c, Shape s) {
  const auto& i = info(p);
  if (p == SitPiece::Empty) return false;
  if (c != Color::None && c != i.color) return false;
  switch (s) {
    case Shape::Any: return true;
    case Shape::Triangle: return i.shape == Shape::TriangleUp || i.shape == Shape::TriangleDown;
    default: return i.shape == s;
  }
}

inline bool quant_holds(SitQuant q, unsigned c) {
  switch (q) {
    case SitQuant::Zero: return c == 0;
    case SitQuant::ExactlyOne: return c == 1;
    case SitQuant::AtLeastOne: return c >= 1;
    case SitQuant::AtMostOne: return c <= 1;
    case SitQuant::AtMostTwo: return c <= 2;
    case SitQuant::AtLeastTwo: return c >= 2;
  }
  return false;
}

inline bool holds(const SitSentence& s, const SitStructure& st) {
  unsigned c = 0;
  for (auto p : st) c += piece_fits(p, s.color, s.shape);
  return quant_holds(s.quant, c);
}

/// Every sentence of the family: quantifier x (color, shape) over combinations that exist in the world.
inline std::vector<SitSentence> sentence_family() {
  std::vector<SitSentence> out;
  for (auto q : kQuants)
    for (auto c : {Color::None, Color::Red, Color::Blue, Color::Yellow})
      for (auto s : {Shape::Any, Shape::Circle, Shape::Square, Shape::Triangle, Shape::TriangleUp, Shape::TriangleDown}) {
        bool exists = false;
        for (std::size_t p = 0; p + 1 < kPieces; ++p) exists |= piece_fits(static_cast<SitPiece>(p), c, s);
        if (exists) out.push_back({q, c, s});
      }
  return out;
}

// ---------------------------------------------------------------------------
// Legends
// ---------------------------------------------------------------------------

enum class Subtask : std::uint8_t { Plain, AgnosticEmoji, AgnosticName, Tricky, Adversarial };
inline constexpr Subtask kSubtasks[] = {Subtask::Plain, Subtask::AgnosticEmoji, Subtask::AgnosticName, Subtask::Tricky,
                                        Subtask::Adversarial};

inline std::string_view subtask_name(Subtask s) {
  switch (s) {
    case Subtask::Plain: return "plain";
    case Subtask::AgnosticEmoji: return "agnostic_emoji";
    case Subtask::AgnosticName: return "agnostic_name";
    case Subtask::Tricky: return "tricky";
    case Subtask::Adversarial: return "adversarial";
  }
  return "?";
}

inline Subtask subtask_from_name(std::string_view n) {
  for (auto s : kSubtasks)
    if (subtask_name(s) == n) return s;
  throw std::invalid_argument("unknown subtask '" + std::string(n) + "'");
}

inline std::string reverse_word(std::string_view w) { return {w.rbegin(), w.rend()}; }

/// Reverses every word, keeping word order.
inline std::string reverse_words(std::string_view text) {
  std::string out, word;
  for (char ch : text) {
    if (ch == ' ') {
      out += reverse_word(word) + ' ';
      word.clear();
    } else {
      word += ch;
    }
  }
  return out + reverse_word(word);
}

inline bool is_plural_noun(std::string_view w) {
  return w == "pieces" || w == "circles" || w == "squares" || w == "triangles";
}

/// Glyphs and names used to present the nine symbols, plus the word mapping applied to sentences.
class Legend {
 public:
  static Legend make(Subtask subtask, std::uint64_t seed = 0) {
    Legend l;
    l.subtask_ = subtask;
    for (std::size_t p = 0; p < kPieces; ++p) l.glyph_[p] = std::string(pieces()[p].glyph);
    if (subtask == Subtask::AgnosticEmoji) {
      static const std::array<std::string_view, kPieces> arbitrary{"α", "β", "γ", "δ", "ε", "ζ", "η", "θ", "λ"};
      for (std::size_t p = 0; p < kPieces; ++p) l.glyph_[p] = std::string(arbitrary[p]);
    } else if (subtask == Subtask::AgnosticName) {
      static const std::vector<std::pair<std::string_view, std::string_view>> names{
          {"red", "X"},     {"square", "Y"},   {"blue", "Z"}, {"yellow", "W"}, {"circle", "V"}, {"triangle", "U"},
          {"pointing", "T"}, {"up", "S"},      {"down", "R"}, {"empty", "Q"},  {"space", "P"}};
      for (const auto& [w, n] : names) l.names_.emplace(std::string(w), std::string(n));
    } else if (subtask == Subtask::Adversarial) {
      // Piece p is displayed with the natural glyph of perm[p]; perm has no fixed point.
      Rng rng(seed, "sit-derangement");
      std::array<std::size_t, kPieces> perm{};
      while (true) {
        std::vector<std::size_t> v(kPieces);
        for (std::size_t i = 0; i < kPieces; ++i) v[i] = i;
        rng.shuffle(v);
        bool fixed = false;
        for (std::size_t i = 0; i < kPieces; ++i) fixed |= v[i] == i;
        if (fixed) continue;
        std::copy(v.begin(), v.end(), perm.begin());
        break;
      }
      for (std::size_t p = 0; p < kPieces; ++p) l.glyph_[p] = std::string(pieces()[perm[p]].glyph);
    }
    return l;
  }

  Subtask subtask() const { return subtask_; }

  /// Glyph displayed for a piece inside structures.
  const std::string& glyph(SitPiece p) const { return glyph_[static_cast<std::size_t>(p)]; }

  /// Surface form of a content word ("red", "square", ...); `plural` adds the plural ending first.
  std::string word(std::string_view w, bool plural = false) const {
    switch (subtask_) {
      case Subtask::AgnosticName: {
        auto it = names_.find(std::string(w));
        const std::string base = it == names_.end() ? std::string(w) : it->second;
        return plural ? base + "s" : base;
      }
      case Subtask::Tricky: return reverse_word(plural ? std::string(w) + "s" : std::string(w));
      default: return plural ? std::string(w) + "s" : std::string(w);
    }
  }

  /// Description of a piece in this legend's vocabulary.
  std::string description(SitPiece p) const {
    std::string out;
    std::istringstream in{std::string(info(p).description)};
    std::string w;
    while (in >> w) out += (out.empty() ? "" : " ") + word(w);
    return out;
  }

  /// (glyph, description) lines in glyph display order.
  std::vector<std::pair<std::string, std::string>> entries() const {
    std::vector<std::pair<std::string, std::string>> out;
    const bool by_glyph = subtask_ == Subtask::Adversarial;
    for (std::size_t q = 0; q < kPieces; ++q) {
      std::size_t p = q;
      if (by_glyph) {
        // The piece shown with the natural glyph of q.
        for (std::size_t i = 0; i < kPieces; ++i)
          if (glyph_[i] == pieces()[q].glyph) p = i;
      }
      out.emplace_back(glyph_[p], description(static_cast<SitPiece>(p)));
    }
    return out;
  }

  /// Legend lines: "<glyph> is a <description>;".
  std::vector<std::string> lines() const {
    std::vector<std::string> out;
    for (const auto& [g, d] : entries()) out.push_back(g + " is " + article(d) + " " + d + ";");
    return out;
  }

  static std::string article(std::string_view d) {
    return !d.empty() && std::string_view("aeiouAEIOU").find(d[0]) != std::string_view::npos ? "an" : "a";
  }

  /// True when no glyph is described by its natural meaning.
  bool is_derangement() const {
    for (const auto& [g, d] : entries())
      for (const auto& pi : pieces())
        if (pi.glyph == g && pi.description == d) return false;
    return true;
  }

 private:
  Subtask subtask_ = Subtask::Plain;
  std::array<std::string, kPieces> glyph_;
  std::map<std::string, std::string> names_;
};

/// English sentence for a SIT proposition in a legend's vocabulary.
inline std::string render_sentence(const SitSentence& s, const Legend& legend) {
  static const std::map<SitQuant, std::pair<std::string_view, bool>> quant_text{
      {SitQuant::Zero, {"zero", true}},          {SitQuant::ExactlyOne, {"exactly one", false}},
      {SitQuant::AtLeastOne, {"at least one", false}}, {SitQuant::AtMostOne, {"at most one", false}},
      {SitQuant::AtMostTwo, {"at most two", true}},    {SitQuant::AtLeastTwo, {"at least two", true}}};
  const auto& [qt, plural] = quant_text.at(s.quant);
  std::string out = plural ? "There are " : "There is ";
  out += qt;
  switch (s.color) {
    case Color::None: break;
    case Color::Red: out += " " + legend.word("red"); break;
    case Color::Blue: out += " " + legend.word("blue"); break;
    case Color::Yellow: out += " " + legend.word("yellow"); break;
  }
  switch (s.shape) {
    case Shape::Any: out += plural ? " pieces" : " piece"; break;
    case Shape::Circle: out += " " + legend.word("circle", plural); break;
    case Shape::Square: out += " " + legend.word("square", plural); break;
    case Shape::Triangle: out += " " + legend.word("triangle", plural); break;
    case Shape::TriangleUp:
      out += " " + legend.word("triangle", plural) + " " + legend.word("pointing") + " " + legend.word("up");
      break;
    case Shape::TriangleDown:
      out += " " + legend.word("triangle", plural) + " " + legend.word("pointing") + " " + legend.word("down");
      break;
  }
  return out + ".";
}

inline std::string render_structure(const SitStructure& st, const Legend& legend) {
  std::string out;
  for (auto p : st) out += legend.glyph(p);
  return out;
}

// ---------------------------------------------------------------------------
// Questions
// ---------------------------------------------------------------------------

struct SitQuestion {
  SitStructure a{};
  SitStructure b{};
  std::vector<SitSentence> sentences;
  std::size_t answer = 0;
  std::uint64_t seed = 0;
};

struct Validation {
  bool valid = false;
  std::vector<std::size_t> qualifying;  // indices consistent with A and not with B
  std::vector<std::string> diagnostics;
};

namespace detail {

/// Reads a rendered sentence back into a proposition, undoing the legend's word mapping.
class SentenceReader {
 public:
  explicit SentenceReader(const Legend& legend) {
    for (std::string_view w : {"red", "blue", "yellow", "circle", "square", "triangle", "pointing", "up", "down"}) {
      plain_[legend.word(w)] = {std::string(w), false};
      if (w == "circle" || w == "square" || w == "triangle") plain_[legend.word(w, true)] = {std::string(w), true};
    }
  }

  std::optional<SitSentence> read(const std::string& text) const {
    if (text.empty() || text.back() != '.') return std::nullopt;
    std::istringstream in(text.substr(0, text.size() - 1));
    std::vector<std::string> t;
    for (std::string w; in >> w;) t.push_back(w);
    std::size_t i = 0;
    if (t.size() < 4 || t[0] != "There" || (t[1] != "is" && t[1] != "are")) return std::nullopt;
    i = 2;
    SitSentence s;
    auto next_is = [&](std::initializer_list<std::string_view> ws) {
      if (i + ws.size() > t.size()) return false;
      std::size_t k = i;
      for (auto w : ws)
        if (t[k++] != w) return false;
      i = k;
      return true;
    };
    if (next_is({"zero"})) s.quant = SitQuant::Zero;
    else if (next_is({"exactly", "one"})) s.quant = SitQuant::ExactlyOne;
    else if (next_is({"at", "least", "one"})) s.quant = SitQuant::AtLeastOne;
    else if (next_is({"at", "most", "one"})) s.quant = SitQuant::AtMostOne;
    else if (next_is({"at", "most", "two"})) s.quant = SitQuant::AtMostTwo;
    else if (next_is({"at", "least", "two"})) s.quant = SitQuant::AtLeastTwo;
    else return std::nullopt;
    std::vector<std::pair<std::string, bool>> rest;
    for (; i < t.size(); ++i) {
      if (t[i] == "piece" || t[i] == "pieces") {
        rest.emplace_back("piece", t[i] == "pieces");
        continue;
      }
      auto it = plain_.find(t[i]);
      if (it == plain_.end()) return std::nullopt;
      rest.push_back(it->second);
    }
    std::size_t k = 0;
    if (k < rest.size()) {
      if (rest[k].first == "red") s.color = Color::Red, ++k;
      else if (rest[k].first == "blue") s.color = Color::Blue, ++k;
      else if (rest[k].first == "yellow") s.color = Color::Yellow, ++k;
    }
    if (k >= rest.size()) return std::nullopt;
    const auto& noun = rest[k].first;
    if (noun == "piece") s.shape = Shape::Any;
    else if (noun == "circle") s.shape = Shape::Circle;
    else if (noun == "square") s.shape = Shape::Square;
    else if (noun == "triangle") s.shape = Shape::Triangle;
    else return std::nullopt;
    ++k;
    if (s.shape == Shape::Triangle && k + 2 == rest.size() && rest[k].first == "pointing") {
      if (rest[k + 1].first == "up") s.shape = Shape::TriangleUp;
      else if (rest[k + 1].first == "down") s.shape = Shape::TriangleDown;
      else return std::nullopt;
      k += 2;
    }
    if (k != rest.size()) return std::nullopt;
    return s;
  }

 private:
  std::map<std::string, std::pair<std::string, bool>> plain_;
};

/// Decodes a glyph row using only the legend's printed lines.
inline std::optional<SitStructure> read_structure(const std::string& text, const Legend& legend) {
  std::map<std::string, SitPiece> by_glyph;
  for (const auto& [g, d] : legend.entries()) {
    // Undo the word mapping on the description.
    std::optional<SitPiece> piece;
    for (std::size_t p = 0; p < kPieces; ++p)
      if (legend.description(static_cast<SitPiece>(p)) == d) piece = static_cast<SitPiece>(p);
    if (!piece) return std::nullopt;
    by_glyph[g] = *piece;
  }
  SitStructure st{};
  std::size_t pos = 0, cell = 0;
  while (pos < text.size()) {
    bool matched = false;
    for (const auto& [g, p] : by_glyph) {
      if (text.compare(pos, g.size(), g) == 0) {
        if (cell == kLength) return std::nullopt;
        st[cell++] = p;
        pos += g.size();
        matched = true;
        break;
      }
    }
    if (!matched) return std::nullopt;
  }
  if (cell != kLength) return std::nullopt;
  return st;
}

}  // namespace detail

/// Re-reads the question as presented under `legend` (glyph rows and sentence texts) and checks
/// that exactly one sentence holds for A and fails for B, and that it is the recorded answer.
inline Validation validate_question(const SitQuestion& q, const Legend& legend) {
  Validation v;
  const auto a = detail::read_structure(render_structure(q.a, legend), legend);
  const auto b = detail::read_structure(render_structure(q.b, legend), legend);
  if (!a || !b) {
    v.diagnostics.push_back("structures cannot be decoded with the legend");
    return v;
  }
  const detail::SentenceReader reader(legend);
  std::vector<std::string> seen;
  for (std::size_t i = 0; i < q.sentences.size(); ++i) {
    const std::string text = render_sentence(q.sentences[i], legend);
    if (std::find(seen.begin(), seen.end(), text) != seen.end())
      v.diagnostics.push_back("sentence " + std::to_string(i) + " duplicates an earlier one");
    seen.push_back(text);
    const auto s = reader.read(text);
    if (!s) {
      v.diagnostics.push_back("sentence " + std::to_string(i) + " cannot be read back: " + text);
      continue;
    }
    if (holds(*s, *a) && !holds(*s, *b)) v.qualifying.push_back(i);
  }
  if (q.sentences.size() != 5) v.diagnostics.push_back("question must have five sentences");
  if (v.qualifying.size() != 1) {
    std::string idx;
    for (auto i : v.qualifying) idx += (idx.empty() ? "" : ", ") + std::to_string(i);
    v.diagnostics.push_back(std::to_string(v.qualifying.size()) + " sentences qualify" +
                            (idx.empty() ? "" : " (" + idx + ")"));
  } else if (v.qualifying[0] != q.answer) {
    v.diagnostics.push_back("qualifying sentence " + std::to_string(v.qualifying[0]) + " is not the recorded answer");
  }
  v.valid = v.diagnostics.empty();
  return v;
}

/// Seeded question. Distractors: at least one sentence true for both structures and one false for
/// both when such sentences exist.
inline SitQuestion generate_question(std::uint64_t seed, std::size_t max_attempts = 10000) {
  static const std::vector<SitSentence> family = sentence_family();
  Rng rng(seed, "sit-question");
  const Legend plain = Legend::make(Subtask::Plain);
  for (std::size_t attempt = 0; attempt < max_attempts; ++attempt) {
    SitQuestion q;
    q.seed = seed;
    for (auto& c : q.a) c = static_cast<SitPiece>(rng.below(kPieces));
    for (auto& c : q.b) c = static_cast<SitPiece>(rng.below(kPieces));
    std::vector<std::size_t> good, both, neither, only_b;
    for (std::size_t i = 0; i < family.size(); ++i) {
      const bool ha = holds(family[i], q.a), hb = holds(family[i], q.b);
      if (ha && !hb) good.push_back(i);
      else if (ha && hb) both.push_back(i);
      else if (!ha && !hb) neither.push_back(i);
      else only_b.push_back(i);
    }
    if (good.empty() || both.size() + neither.size() + only_b.size() < 4) continue;
    const auto answer = family[good[rng.below(good.size())]];
    std::vector<SitSentence> distractors;
    auto draw_from = [&](std::vector<std::size_t>& pool) {
      const auto k = rng.below(pool.size());
      distractors.push_back(family[pool[k]]);
      pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(k));
    };
    if (!both.empty()) draw_from(both);
    if (!neither.empty()) draw_from(neither);
    std::vector<std::size_t> rest;
    for (auto* v : {&both, &neither, &only_b}) rest.insert(rest.end(), v->begin(), v->end());
    while (distractors.size() < 4) draw_from(rest);
    q.answer = rng.below(5);
    for (std::size_t i = 0, d = 0; i < 5; ++i) q.sentences.push_back(i == q.answer ? answer : distractors[d++]);
    if (validate_question(q, plain).valid) return q;
  }
  throw std::runtime_error("no valid SIT question found for seed " + std::to_string(seed));
}

inline std::string world_name(Subtask s) {
  std::string n(subtask_name(s));
  std::replace(n.begin(), n.end(), '_', '-');
  return "SIT-" + n;
}

/// Legend block followed by the question line, without the choices.
inline std::string render_question(const SitQuestion& q, const Legend& legend) {
  std::string out = "In the " + world_name(legend.subtask()) +
                    " world, a structure is a sequence of six emojis. Below are the emojis used, along with their "
                    "descriptions:\n";
  for (const auto& line : legend.lines()) out += line + "\n";
  out += "\nChoose the sentence consistent with the structure " + render_structure(q.a, legend) +
         " and not consistent with the structure " + render_structure(q.b, legend) + ":";
  return out;
}

inline std::vector<std::string> render_choices(const SitQuestion& q, const Legend& legend) {
  std::vector<std::string> out;
  for (const auto& s : q.sentences) out.push_back(render_sentence(s, legend));
  return out;
}

/// Full plain-text prompt: legend, question, then one "- choice" line per sentence.
inline std::string render_prompt(const SitQuestion& q, const Legend& legend) {
  std::string out = render_question(q, legend) + "\n";
  for (const auto& c : render_choices(q, legend)) out += "- " + c + "\n";
  return out;
}

/// Questionnaire JSON-lines record.
inline nlohmann::ordered_json to_json(std::size_t id, const SitQuestion& q, const Legend& legend) {
  nlohmann::ordered_json j;
  j["id"] = id;
  j["subtask"] = subtask_name(legend.subtask());
  j["prompt"] = render_question(q, legend);
  j["choices"] = render_choices(q, legend);
  j["answer"] = q.answer;
  return j;
}

}  // namespace odeen::sit
