#pragma once

#include <cstddef>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace odeen {

using StructureId = std::uint32_t;

enum class ShapeVariant : std::uint8_t { Block, PyramidUp, PyramidDown };

inline std::string_view variant_token(ShapeVariant v) {
  switch (v) {
    case ShapeVariant::Block: return "block";
    case ShapeVariant::PyramidUp: return "pyramid_up";
    case ShapeVariant::PyramidDown: return "pyramid_down";
  }
  return "?";
}

inline bool is_pyramid(ShapeVariant v) { return v != ShapeVariant::Block; }

/// Parameters of the universe. The defaults give 7 piece values and 7^6 structures.
struct WorldConfig {
  std::size_t length = 6;
  std::vector<std::string> colors{"red", "blue"};
  std::vector<ShapeVariant> shape_variants{ShapeVariant::Block, ShapeVariant::PyramidUp,
                                           ShapeVariant::PyramidDown};

  std::size_t alphabet_size() const { return 1 + colors.size() * shape_variants.size(); }

  std::uint64_t universe_size() const {
    std::uint64_t n = 1;
    for (std::size_t i = 0; i < length; ++i) n *= alphabet_size();
    return n;
  }

  /// Throws std::invalid_argument when the configuration cannot describe a universe.
  void validate() const {
    if (length == 0 || length > 32) throw std::invalid_argument("world length must be in [1, 32]");
    if (colors.empty()) throw std::invalid_argument("world needs at least one color");
    if (shape_variants.empty()) throw std::invalid_argument("world needs at least one shape variant");
    for (std::size_t i = 0; i < shape_variants.size(); ++i)
      for (std::size_t j = i + 1; j < shape_variants.size(); ++j)
        if (shape_variants[i] == shape_variants[j])
          throw std::invalid_argument("duplicate shape variant");
    for (std::size_t i = 0; i < colors.size(); ++i)
      for (std::size_t j = i + 1; j < colors.size(); ++j)
        if (colors[i] == colors[j]) throw std::invalid_argument("duplicate color " + colors[i]);
    // Structure ids are 32-bit.
    long double n = 1;
    for (std::size_t i = 0; i < length; ++i) n *= static_cast<long double>(alphabet_size());
    if (n > 4294967295.0L) throw std::invalid_argument("universe does not fit 32-bit ids");
  }

  bool operator==(const WorldConfig&) const = default;
};

/// One cell of a structure: empty, or a colored shape.
class Piece {
 public:
  constexpr Piece() = default;
  static constexpr Piece empty() { return Piece{}; }
  static constexpr Piece occupied(std::uint8_t color, std::uint8_t variant) {
    Piece p;
    p.occupied_ = true;
    p.color_ = color;
    p.variant_ = variant;
    return p;
  }

  constexpr bool is_empty() const { return !occupied_; }
  /// Index into WorldConfig::colors. Only meaningful when occupied.
  constexpr std::uint8_t color() const { return color_; }
  /// Index into WorldConfig::shape_variants. Only meaningful when occupied.
  constexpr std::uint8_t variant() const { return variant_; }

  std::uint32_t code(const WorldConfig& cfg) const {
    if (!occupied_) return 0;
    return 1 + static_cast<std::uint32_t>(color_) * static_cast<std::uint32_t>(cfg.shape_variants.size()) +
           variant_;
  }

  static Piece from_code(std::uint32_t code, const WorldConfig& cfg) {
    if (code >= cfg.alphabet_size()) throw std::out_of_range("piece code out of range");
    if (code == 0) return empty();
    const auto nv = static_cast<std::uint32_t>(cfg.shape_variants.size());
    return occupied(static_cast<std::uint8_t>((code - 1) / nv), static_cast<std::uint8_t>((code - 1) % nv));
  }

  constexpr bool operator==(const Piece&) const = default;

 private:
  bool occupied_ = false;
  std::uint8_t color_ = 0;
  std::uint8_t variant_ = 0;
};

/// Token spelling of a piece: `_` or `<color>_<variant>`.
inline std::string piece_token(Piece p, const WorldConfig& cfg) {
  if (p.is_empty()) return "_";
  std::string t = cfg.colors.at(p.color());
  t += '_';
  t += variant_token(cfg.shape_variants.at(p.variant()));
  return t;
}

struct Structure {
  std::vector<Piece> cells;
  StructureId id = 0;

  bool operator==(const Structure& o) const { return id == o.id && cells == o.cells; }
};

inline StructureId structure_to_id(const std::vector<Piece>& cells, const WorldConfig& cfg) {
  if (cells.size() != cfg.length) throw std::invalid_argument("structure length mismatch");
  std::uint64_t id = 0;
  const auto base = cfg.alphabet_size();
  for (const Piece& p : cells) id = id * base + p.code(cfg);
  return static_cast<StructureId>(id);
}

inline StructureId structure_to_id(const Structure& s, const WorldConfig& cfg) {
  return structure_to_id(s.cells, cfg);
}

/// Cell codes of a structure id, leftmost cell first. Writes cfg.length entries.
inline void decode_codes(StructureId id, const WorldConfig& cfg, std::uint8_t* out) {
  const auto base = static_cast<std::uint32_t>(cfg.alphabet_size());
  for (std::size_t i = cfg.length; i-- > 0;) {
    out[i] = static_cast<std::uint8_t>(id % base);
    id /= base;
  }
}

inline Structure structure_from_id(std::uint64_t id, const WorldConfig& cfg) {
  if (id >= cfg.universe_size())
    throw std::out_of_range("structure id " + std::to_string(id) + " outside universe of " +
                            std::to_string(cfg.universe_size()));
  Structure s;
  s.id = static_cast<StructureId>(id);
  s.cells.resize(cfg.length);
  const auto base = cfg.alphabet_size();
  for (std::size_t i = cfg.length; i-- > 0;) {
    s.cells[i] = Piece::from_code(static_cast<std::uint32_t>(id % base), cfg);
    id /= base;
  }
  return s;
}

/// Glyph per piece code, used by the emoji rendering mode.
class GlyphTable {
 public:
  static GlyphTable defaults(const WorldConfig& cfg) {
    // Default glyphs exist for the default two-color world; anything else falls back to tokens.
    static const std::vector<std::string> kDefault{"⬜", "🟥", "🔺", "🔻", "🟦", "🔼", "🔽"};
    GlyphTable t;
    const bool default_world = cfg.colors.size() == 2 && cfg.shape_variants == WorldConfig{}.shape_variants;
    for (std::uint32_t c = 0; c < cfg.alphabet_size(); ++c)
      t.glyphs_.push_back(default_world ? kDefault[c] : piece_token(Piece::from_code(c, cfg), cfg));
    return t;
  }

  /// Parses `code=glyph` lines. Blank lines and `#` comments are ignored.
  static GlyphTable parse(std::istream& in, const WorldConfig& cfg) {
    GlyphTable t = defaults(cfg);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty() || line[0] == '#') continue;
      const auto eq = line.find('=');
      if (eq == std::string::npos || eq == 0 || eq + 1 == line.size())
        throw std::runtime_error("glyph table line " + std::to_string(lineno) + ": expected code=glyph");
      std::uint32_t code = 0;
      try {
        code = static_cast<std::uint32_t>(std::stoul(line.substr(0, eq)));
      } catch (const std::exception&) {
        throw std::runtime_error("glyph table line " + std::to_string(lineno) + ": bad code");
      }
      if (code >= t.glyphs_.size())
        throw std::runtime_error("glyph table line " + std::to_string(lineno) + ": code out of range");
      t.glyphs_[code] = line.substr(eq + 1);
    }
    for (std::size_t i = 0; i < t.glyphs_.size(); ++i)
      for (std::size_t j = i + 1; j < t.glyphs_.size(); ++j)
        if (t.glyphs_[i] == t.glyphs_[j]) throw std::runtime_error("glyph table maps two codes to one glyph");
    return t;
  }

  static GlyphTable load(const std::string& path, const WorldConfig& cfg) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open glyph table " + path);
    return parse(in, cfg);
  }

  const std::string& glyph(std::uint32_t code) const { return glyphs_.at(code); }
  std::size_t size() const { return glyphs_.size(); }

 private:
  std::vector<std::string> glyphs_;
};

enum class RenderMode { Token, Emoji };

inline std::string render_structure(const Structure& s, const WorldConfig& cfg, RenderMode mode = RenderMode::Token,
                                    const GlyphTable* glyphs = nullptr) {
  std::string out;
  if (mode == RenderMode::Token) {
    for (std::size_t i = 0; i < s.cells.size(); ++i) {
      if (i) out += ' ';
      out += piece_token(s.cells[i], cfg);
    }
    return out;
  }
  const GlyphTable fallback = glyphs ? GlyphTable{} : GlyphTable::defaults(cfg);
  const GlyphTable& table = glyphs ? *glyphs : fallback;
  for (const Piece& p : s.cells) out += table.glyph(p.code(cfg));
  return out;
}

/// Inverse of token-mode rendering.
inline Structure parse_structure(std::string_view text, const WorldConfig& cfg) {
  std::map<std::string, std::uint32_t, std::less<>> lookup;
  for (std::uint32_t c = 0; c < cfg.alphabet_size(); ++c) lookup.emplace(piece_token(Piece::from_code(c, cfg), cfg), c);
  std::vector<Piece> cells;
  std::istringstream in{std::string(text)};
  std::string tok;
  while (in >> tok) {
    auto it = lookup.find(tok);
    if (it == lookup.end()) throw std::invalid_argument("unknown piece token '" + tok + "'");
    cells.push_back(Piece::from_code(it->second, cfg));
  }
  if (cells.size() != cfg.length)
    throw std::invalid_argument("structure has " + std::to_string(cells.size()) + " cells, expected " +
                                std::to_string(cfg.length));
  Structure s;
  s.id = structure_to_id(cells, cfg);
  s.cells = std::move(cells);
  return s;
}

/// Inverse of emoji-mode rendering under a glyph table (greedy longest-glyph match).
inline Structure parse_structure_glyphs(std::string_view text, const WorldConfig& cfg, const GlyphTable& glyphs) {
  std::vector<Piece> cells;
  std::size_t pos = 0;
  while (pos < text.size()) {
    if (text[pos] == ' ') {
      ++pos;
      continue;
    }
    std::size_t best_len = 0;
    std::uint32_t best = 0;
    for (std::uint32_t c = 0; c < glyphs.size(); ++c) {
      const auto& g = glyphs.glyph(c);
      if (g.size() > best_len && text.substr(pos, g.size()) == g) {
        best_len = g.size();
        best = c;
      }
    }
    if (best_len == 0) throw std::invalid_argument("unknown glyph at byte " + std::to_string(pos));
    cells.push_back(Piece::from_code(best, cfg));
    pos += best_len;
  }
  if (cells.size() != cfg.length) throw std::invalid_argument("glyph row has wrong length");
  Structure s;
  s.id = structure_to_id(cells, cfg);
  s.cells = std::move(cells);
  return s;
}

}  // namespace odeen
