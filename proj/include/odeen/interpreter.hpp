#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <variant>

#include "odeen/bitvec.hpp"
#include "odeen/rule_lang.hpp"
#include "odeen/world.hpp"

namespace odeen {

// Normative semantics of the Odeen language.
//
//   Simple(q, o)            count cells matching o, apply q.
//   Relational(q, a, R, b)  count positions i where cells[i] matches a and a witness j != i matching b exists:
//                             touching         |i - j| = 1
//                             at_the_right_of  j < i, any distance
//                             surrounded_by    both i-1 and i+1 exist and match b
//                           then apply q to the count.
//   Conjunction             boolean and/or of the two simple propositions.
//
// Index 0 is the leftmost cell. Empty cells match nothing and never block reach.

enum class Tag : std::uint8_t { Reject = 0, Accept = 1 };

constexpr bool accepted(Tag t) { return t == Tag::Accept; }
constexpr Tag to_tag(bool b) { return b ? Tag::Accept : Tag::Reject; }

inline bool piece_matches(Piece p, const ObjectPattern& o, const WorldConfig& cfg = {}) {
  if (p.is_empty()) return false;
  if (o.color && *o.color != p.color()) return false;
  const ShapeVariant v = cfg.shape_variants.at(p.variant());
  switch (o.shape) {
    case ShapeSpec::None: return true;
    case ShapeSpec::Block: return v == ShapeVariant::Block;
    case ShapeSpec::Pyramid: return is_pyramid(v);
    case ShapeSpec::PyramidUp: return v == ShapeVariant::PyramidUp;
    case ShapeSpec::PyramidDown: return v == ShapeVariant::PyramidDown;
  }
  return false;
}

namespace detail {

inline unsigned count_matches(std::span<const Piece> cells, const ObjectPattern& o, const WorldConfig& cfg) {
  unsigned c = 0;
  for (const Piece& p : cells) c += piece_matches(p, o, cfg) ? 1u : 0u;
  return c;
}

inline bool has_witness(std::span<const Piece> cells, std::size_t i, Relation rel, const ObjectPattern& ref,
                        const WorldConfig& cfg) {
  const std::size_t n = cells.size();
  switch (rel) {
    case Relation::Touching:
      return (i > 0 && piece_matches(cells[i - 1], ref, cfg)) ||
             (i + 1 < n && piece_matches(cells[i + 1], ref, cfg));
    case Relation::SurroundedBy:
      return i > 0 && i + 1 < n && piece_matches(cells[i - 1], ref, cfg) && piece_matches(cells[i + 1], ref, cfg);
    case Relation::AtTheRightOf:
      for (std::size_t j = 0; j < i; ++j)
        if (piece_matches(cells[j], ref, cfg)) return true;
      return false;
  }
  return false;
}

inline bool eval_simple(const SimpleProp& s, std::span<const Piece> cells, const WorldConfig& cfg) {
  return s.quantifier.holds(count_matches(cells, s.object, cfg));
}

}  // namespace detail

inline Tag eval_rule(const RuleAst& ast, const Structure& s, const WorldConfig& cfg = {}) {
  const std::span<const Piece> cells{s.cells};
  return std::visit(
      [&](const auto& r) -> Tag {
        using T = std::decay_t<decltype(r)>;
        if constexpr (std::is_same_v<T, SimpleProp>) {
          return to_tag(detail::eval_simple(r, cells, cfg));
        } else if constexpr (std::is_same_v<T, RelationalProp>) {
          unsigned c = 0;
          for (std::size_t i = 0; i < cells.size(); ++i)
            if (piece_matches(cells[i], r.subject, cfg) && detail::has_witness(cells, i, r.relation, r.reference, cfg))
              ++c;
          return to_tag(r.quantifier.holds(c));
        } else {
          const bool a = detail::eval_simple(r.left, cells, cfg);
          const bool b = detail::eval_simple(r.right, cells, cfg);
          return to_tag(r.connective == Connective::And ? (a && b) : (a || b));
        }
      },
      ast);
}

/// Row of the semantic matrix for one rule: bit j is the tag of structure j.
inline BitVector tag_universe(const RuleAst& ast, const WorldConfig& cfg = {}) {
  const auto n = cfg.universe_size();
  BitVector row(n);
  for (std::uint64_t j = 0; j < n; ++j)
    if (accepted(eval_rule(ast, structure_from_id(j, cfg), cfg))) row.set(j);
  return row;
}

}  // namespace odeen
