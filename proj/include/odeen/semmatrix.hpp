#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <istream>
#include <limits>
#include <new>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "odeen/bitvec.hpp"
#include "odeen/interpreter.hpp"
#include "odeen/io.hpp"
#include "odeen/parallel.hpp"
#include "odeen/rule_lang.hpp"
#include "odeen/world.hpp"

namespace odeen {

using ClassId = std::uint32_t;

/// Thrown when a caller breaks a documented precondition (e.g. observations contradict their own rule).
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Rules x structures bit matrix. Row i holds the tags of rule i over the whole universe.
class SemanticMatrix {
 public:
  SemanticMatrix() = default;
  SemanticMatrix(std::size_t n_rules, std::size_t n_structures)
      : n_rules_(n_rules), n_structures_(n_structures), stride_(words_for(n_structures)) {
    try {
      data_.assign(n_rules_ * stride_, 0);
    } catch (const std::bad_alloc&) {
      throw std::runtime_error("cannot allocate semantic matrix of " + std::to_string(n_rules_ * stride_ * 8) +
                               " bytes");
    }
  }

  std::size_t n_rules() const { return n_rules_; }
  std::size_t n_structures() const { return n_structures_; }
  std::size_t words_per_row() const { return stride_; }

  std::span<const std::uint64_t> row(RuleId i) const { return {data_.data() + std::size_t{i} * stride_, stride_}; }
  std::span<std::uint64_t> mutable_row(RuleId i) { return {data_.data() + std::size_t{i} * stride_, stride_}; }
  bool get(RuleId i, StructureId j) const { return test_bit(row(i), j); }

  /// XOR of every data word.
  std::uint64_t checksum() const {
    std::uint64_t x = 0;
    for (auto w : data_) x ^= w;
    return x;
  }

  // File layout: "ODNM", u32 version = 1, u64 n_rules, u64 n_structures, rows of
  // ceil(n_structures / 64) u64 words (LSB-first bits), u64 checksum. All little-endian.
  static constexpr std::uint32_t kFormatVersion = 1;

  void write(std::ostream& out) const {
    out.write("ODNM", 4);
    put_u32(out, kFormatVersion);
    put_u64(out, n_rules_);
    put_u64(out, n_structures_);
    if constexpr (std::endian::native == std::endian::little) {
      out.write(reinterpret_cast<const char*>(data_.data()), static_cast<std::streamsize>(data_.size() * 8));
    } else {
      for (auto w : data_) put_u64(out, w);
    }
    put_u64(out, checksum());
  }

  static SemanticMatrix read(std::istream& in) {
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, "ODNM", 4) != 0) throw std::runtime_error("not a semantic matrix file (bad magic)");
    const auto version = get_u32(in);
    if (version != kFormatVersion) throw std::runtime_error("unsupported matrix format version " + std::to_string(version));
    const auto nr = get_u64(in);
    const auto ns = get_u64(in);
    if (ns > std::numeric_limits<StructureId>::max() || nr > std::numeric_limits<RuleId>::max())
      throw std::runtime_error("matrix dimensions out of range");
    SemanticMatrix m(static_cast<std::size_t>(nr), static_cast<std::size_t>(ns));
    if constexpr (std::endian::native == std::endian::little) {
      in.read(reinterpret_cast<char*>(m.data_.data()), static_cast<std::streamsize>(m.data_.size() * 8));
    } else {
      for (auto& w : m.data_) w = get_u64(in);
    }
    if (!in) throw std::runtime_error("truncated matrix file");
    const auto stored = get_u64(in);
    if (stored != m.checksum()) throw std::runtime_error("matrix checksum mismatch");
    return m;
  }

  void save(const std::filesystem::path& path) const {
    io::atomic_write(path, [&](std::ostream& out) { write(out); }, true);
  }

  static SemanticMatrix load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open matrix " + path.string());
    return read(in);
  }

  bool operator==(const SemanticMatrix&) const = default;

 private:
  static void put_u32(std::ostream& out, std::uint32_t v) {
    char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    out.write(b, 4);
  }
  static void put_u64(std::ostream& out, std::uint64_t v) {
    char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    out.write(b, 8);
  }
  static std::uint32_t get_u32(std::istream& in) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    if (!in) throw std::runtime_error("truncated matrix file");
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | b[i];
    return v;
  }
  static std::uint64_t get_u64(std::istream& in) {
    unsigned char b[8];
    in.read(reinterpret_cast<char*>(b), 8);
    if (!in) throw std::runtime_error("truncated matrix file");
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | b[i];
    return v;
  }

  std::size_t n_rules_ = 0;
  std::size_t n_structures_ = 0;
  std::size_t stride_ = 0;
  std::vector<std::uint64_t> data_;
};

// ---------------------------------------------------------------------------
// Construction
// ---------------------------------------------------------------------------

namespace detail {

/// Per-structure bitmask of the cells matching each object pattern (bit i = cell i).
class MatchMasks {
 public:
  MatchMasks(const WorldConfig& cfg, const std::vector<ObjectPattern>& objs)
      : n_(cfg.universe_size()), full_(static_cast<std::uint32_t>((std::uint64_t{1} << cfg.length) - 1)) {
    const auto alpha = cfg.alphabet_size();
    std::vector<std::vector<std::uint8_t>> table(objs.size(), std::vector<std::uint8_t>(alpha));
    for (std::size_t o = 0; o < objs.size(); ++o)
      for (std::uint32_t c = 0; c < alpha; ++c) table[o][c] = piece_matches(Piece::from_code(c, cfg), objs[o], cfg);
    masks_.assign(objs.size(), std::vector<std::uint32_t>(n_));
    std::vector<std::uint8_t> codes(cfg.length, 0);
    for (std::size_t s = 0; s < n_; ++s) {
      for (std::size_t o = 0; o < objs.size(); ++o) {
        std::uint32_t m = 0;
        for (std::size_t i = 0; i < cfg.length; ++i) m |= std::uint32_t{table[o][codes[i]]} << i;
        masks_[o][s] = m;
      }
      // Odometer step; the last cell is the least significant digit.
      for (std::size_t i = cfg.length; i-- > 0;) {
        if (++codes[i] < alpha) break;
        codes[i] = 0;
      }
    }
  }

  const std::vector<std::uint32_t>& of(std::size_t object_index) const { return masks_[object_index]; }
  std::uint32_t full() const { return full_; }

  /// Positions that have a witness for `rel` given the reference-object mask.
  std::uint32_t witness(Relation rel, std::uint32_t ref) const {
    switch (rel) {
      case Relation::Touching: return ((ref << 1) | (ref >> 1)) & full_;
      case Relation::SurroundedBy: return (ref << 1) & (ref >> 1) & full_;
      case Relation::AtTheRightOf: {
        if (!ref) return 0;
        const std::uint32_t low = ref & (~ref + 1);
        return ~((low << 1) - 1) & full_;
      }
    }
    return 0;
  }

 private:
  std::size_t n_;
  std::uint32_t full_;
  std::vector<std::vector<std::uint32_t>> masks_;
};

template <typename CountFn>
void fill_row(std::span<std::uint64_t> row, std::size_t n, const Quantifier& q, CountFn&& count) {
  for (std::size_t w = 0; w < row.size(); ++w) {
    std::uint64_t bits = 0;
    const std::size_t base = w * 64, end = std::min(n, base + 64);
    for (std::size_t s = base; s < end; ++s) bits |= std::uint64_t{q.holds(count(s))} << (s - base);
    row[w] = bits;
  }
}

inline std::size_t object_index(const std::vector<ObjectPattern>& objs, const ObjectPattern& o) {
  for (std::size_t i = 0; i < objs.size(); ++i)
    if (objs[i] == o) return i;
  throw std::logic_error("object pattern not in enumeration");
}

inline std::size_t quantifier_index(const Quantifier& q) {
  const auto& qs = all_quantifiers();
  for (std::size_t i = 0; i < qs.size(); ++i)
    if (qs[i] == q) return i;
  throw std::logic_error("quantifier not in enumeration");
}

}  // namespace detail

/// Tags every rule of the catalog against every structure. Rows are computed from per-structure
/// cell masks; the result equals tag_universe() row by row.
inline SemanticMatrix build_matrix(const RuleCatalog& catalog, unsigned threads = 1) {
  const WorldConfig& cfg = catalog.config();
  const auto objs = object_patterns(cfg);
  const std::size_t n = cfg.universe_size();
  SemanticMatrix m(catalog.size(), n);
  const detail::MatchMasks masks(cfg, objs);

  // Simple propositions are the first |Q|*|OBJ| rules; conjunction rows are combined from them.
  const std::size_t n_simple = all_quantifiers().size() * objs.size();
  auto simple_id = [&](const SimpleProp& s) {
    return static_cast<RuleId>(detail::quantifier_index(s.quantifier) * objs.size() +
                               detail::object_index(objs, s.object));
  };

  auto compute = [&](RuleId id) {
    auto row = m.mutable_row(id);
    std::visit(
        [&](const auto& r) {
          using T = std::decay_t<decltype(r)>;
          if constexpr (std::is_same_v<T, SimpleProp>) {
            const auto& mk = masks.of(detail::object_index(objs, r.object));
            detail::fill_row(row, n, r.quantifier, [&](std::size_t s) { return unsigned(std::popcount(mk[s])); });
          } else if constexpr (std::is_same_v<T, RelationalProp>) {
            const auto& a = masks.of(detail::object_index(objs, r.subject));
            const auto& b = masks.of(detail::object_index(objs, r.reference));
            detail::fill_row(row, n, r.quantifier, [&](std::size_t s) {
              return unsigned(std::popcount(a[s] & masks.witness(r.relation, b[s])));
            });
          } else {
            const auto lhs = m.row(simple_id(r.left));
            const auto rhs = m.row(simple_id(r.right));
            if (r.connective == Connective::And)
              for (std::size_t w = 0; w < row.size(); ++w) row[w] = lhs[w] & rhs[w];
            else
              for (std::size_t w = 0; w < row.size(); ++w) row[w] = lhs[w] | rhs[w];
          }
        },
        catalog.rule(id));
  };

  for (std::size_t i = 0; i < n_simple; ++i)
    if (!std::holds_alternative<SimpleProp>(catalog.rule(static_cast<RuleId>(i))))
      throw std::logic_error("catalog does not start with the simple propositions");

  parallel_for(n_simple, threads, [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) compute(static_cast<RuleId>(i));
  });
  parallel_for(catalog.size() - n_simple, threads, [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) compute(static_cast<RuleId>(n_simple + i));
  });
  return m;
}

// ---------------------------------------------------------------------------
// Equivalence classes
// ---------------------------------------------------------------------------

/// Partition of the rules by identical rows. Classes are numbered in order of their lowest rule id,
/// which is also the class representative.
struct EquivalencePartition {
  std::vector<ClassId> class_of;
  std::vector<RuleId> representative;
  std::vector<std::uint32_t> class_size;

  std::size_t class_count() const { return representative.size(); }
  bool equivalent(RuleId a, RuleId b) const { return class_of.at(a) == class_of.at(b); }
};

inline std::uint64_t row_hash(std::span<const std::uint64_t> row) {
  std::uint64_t h = 0x9e3779b97f4a7c15ull;
  for (auto w : row) {
    h ^= w + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
    h *= 0xff51afd7ed558ccdull;
  }
  return h;
}

inline EquivalencePartition equivalence_classes(const SemanticMatrix& m) {
  EquivalencePartition p;
  p.class_of.resize(m.n_rules());
  std::unordered_map<std::uint64_t, std::vector<ClassId>> buckets;
  for (RuleId i = 0; i < m.n_rules(); ++i) {
    const auto row = m.row(i);
    auto& bucket = buckets[row_hash(row)];
    bool found = false;
    for (ClassId c : bucket) {
      const auto rep = m.row(p.representative[c]);
      if (std::equal(row.begin(), row.end(), rep.begin())) {
        p.class_of[i] = c;
        ++p.class_size[c];
        found = true;
        break;
      }
    }
    if (!found) {
      const auto c = static_cast<ClassId>(p.representative.size());
      p.representative.push_back(i);
      p.class_size.push_back(1);
      p.class_of[i] = c;
      bucket.push_back(c);
    }
  }
  return p;
}

// ---------------------------------------------------------------------------
// Representativity
// ---------------------------------------------------------------------------

struct Observation {
  StructureId id = 0;
  bool tag = false;
  bool operator==(const Observation&) const = default;
};

/// Classes whose rows agree with every observation.
inline std::vector<ClassId> surviving_classes(std::span<const Observation> obs, const SemanticMatrix& m,
                                              const EquivalencePartition& p) {
  std::vector<ClassId> out;
  for (ClassId c = 0; c < p.class_count(); ++c) {
    const auto row = m.row(p.representative[c]);
    bool ok = true;
    for (const auto& o : obs)
      if (test_bit(row, o.id) != o.tag) {
        ok = false;
        break;
      }
    if (ok) out.push_back(c);
  }
  return out;
}

/// Narrows a candidate class list by further observations.
inline std::vector<ClassId> filter_classes(std::span<const ClassId> candidates, std::span<const Observation> obs,
                                           const SemanticMatrix& m, const EquivalencePartition& p) {
  std::vector<ClassId> out;
  for (ClassId c : candidates) {
    const auto row = m.row(p.representative[c]);
    bool ok = true;
    for (const auto& o : obs)
      if (test_bit(row, o.id) != o.tag) {
        ok = false;
        break;
      }
    if (ok) out.push_back(c);
  }
  return out;
}

struct RepresentativityResult {
  bool representative = false;
  std::vector<ClassId> unresolved;  // surviving classes other than the rule's own
};

inline RepresentativityResult is_representative(std::span<const Observation> obs, RuleId rule, const SemanticMatrix& m,
                                                const EquivalencePartition& p) {
  const auto row = m.row(rule);
  for (const auto& o : obs) {
    if (o.id >= m.n_structures()) throw ContractViolation("observation structure id out of range");
    if (test_bit(row, o.id) != o.tag)
      throw ContractViolation("observation of structure " + std::to_string(o.id) + " contradicts rule " +
                              std::to_string(rule));
  }
  RepresentativityResult r;
  const ClassId own = p.class_of.at(rule);
  for (ClassId c : surviving_classes(obs, m, p))
    if (c != own) r.unresolved.push_back(c);
  r.representative = r.unresolved.empty();
  return r;
}

// ---------------------------------------------------------------------------
// Restriction and nearest-rule search
// ---------------------------------------------------------------------------

/// Precomputed gather positions for restricting rows to a list of structure ids.
class ColumnSelection {
 public:
  explicit ColumnSelection(std::span<const StructureId> ids) : size_(ids.size()) {
    std::vector<std::uint32_t> order(ids.size());
    for (std::uint32_t k = 0; k < order.size(); ++k) order[k] = k;
    // Visit columns in ascending order for locality; remember each one's output position.
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return ids[a] < ids[b]; });
    column_.reserve(ids.size());
    slot_.reserve(ids.size());
    for (auto k : order) {
      column_.push_back(ids[k]);
      slot_.push_back(k);
    }
  }

  std::size_t size() const { return size_; }

  BitVector gather(std::span<const std::uint64_t> row) const {
    BitVector out(size_);
    auto dst = out.words();
    for (std::size_t i = 0; i < column_.size(); ++i) {
      const std::uint64_t bit = (row[column_[i] >> 6] >> (column_[i] & 63)) & 1u;
      dst[slot_[i] >> 6] |= bit << (slot_[i] & 63);
    }
    return out;
  }

 private:
  std::size_t size_;
  std::vector<StructureId> column_;
  std::vector<std::uint32_t> slot_;
};

inline BitVector restrict_row(const SemanticMatrix& m, RuleId rule, std::span<const StructureId> ids) {
  for (auto id : ids)
    if (id >= m.n_structures()) throw std::out_of_range("structure id out of range");
  return ColumnSelection(ids).gather(m.row(rule));
}

struct NearestResult {
  bool correct = false;                          // truth strictly nearer than every other distinct vector
  std::size_t truth_distance = 0;                // d_H(pred, w*)
  std::size_t min_distance = 0;                  // min over all distinct restricted vectors, w* included
  std::size_t competitor_distance = 0;           // min over vectors != w* (SIZE_MAX when none exist)
  std::vector<ClassId> nearest_classes;          // classes whose restricted vector attains min_distance
};

inline NearestResult nearest_tagging(const BitVector& pred, std::span<const StructureId> ids, RuleId truth_rule,
                                     const SemanticMatrix& m, const EquivalencePartition& p) {
  if (pred.size() != ids.size()) throw std::invalid_argument("prediction length does not match id list");
  for (auto id : ids)
    if (id >= m.n_structures()) throw std::out_of_range("structure id out of range");
  const ColumnSelection sel(ids);
  const BitVector truth = sel.gather(m.row(truth_rule));
  NearestResult r;
  r.truth_distance = pred.distance(truth);
  r.competitor_distance = std::numeric_limits<std::size_t>::max();
  std::vector<std::size_t> dist(p.class_count());
  for (ClassId c = 0; c < p.class_count(); ++c) {
    const BitVector v = sel.gather(m.row(p.representative[c]));
    dist[c] = pred.distance(v);
    if (v != truth) r.competitor_distance = std::min(r.competitor_distance, dist[c]);
  }
  r.min_distance = std::min(r.truth_distance, r.competitor_distance);
  for (ClassId c = 0; c < p.class_count(); ++c)
    if (dist[c] == r.min_distance) r.nearest_classes.push_back(c);
  r.correct = r.truth_distance < r.competitor_distance;
  return r;
}

// ---------------------------------------------------------------------------
// Hamming-weight statistics
// ---------------------------------------------------------------------------

struct Histogram {
  std::uint64_t lo = 0, hi = 0;  // inclusive value range covered by the bins
  std::vector<std::uint64_t> bins;

  static Histogram of(std::span<const std::uint64_t> values, std::uint64_t lo, std::uint64_t hi, std::size_t nbins) {
    Histogram h{lo, hi, std::vector<std::uint64_t>(nbins, 0)};
    const long double width = static_cast<long double>(hi - lo + 1) / static_cast<long double>(nbins);
    for (auto v : values) {
      auto b = static_cast<std::size_t>(static_cast<long double>(v - lo) / width);
      ++h.bins[std::min(b, nbins - 1)];
    }
    return h;
  }

  /// True when bin counts rise to a single peak and then fall, ignoring empty tails.
  bool unimodal() const {
    std::size_t i = 0, n = bins.size();
    while (i + 1 < n && bins[i + 1] >= bins[i]) ++i;
    while (i + 1 < n && bins[i + 1] <= bins[i]) ++i;
    return i + 1 == n;
  }
};

struct WeightStats {
  std::vector<std::uint64_t> rule_weights;
  std::vector<std::uint64_t> structure_weights;
  std::uint64_t rule_min = 0, rule_max = 0, structure_min = 0, structure_max = 0;
  double structure_mean = 0;
  Histogram rule_hist, structure_hist;
};

inline WeightStats weight_stats(const SemanticMatrix& m, std::size_t nbins = 50) {
  WeightStats s;
  s.rule_weights.resize(m.n_rules());
  std::vector<std::uint32_t> cols(m.n_structures(), 0);
  for (RuleId i = 0; i < m.n_rules(); ++i) {
    const auto row = m.row(i);
    s.rule_weights[i] = popcount(row);
    for (std::size_t w = 0; w < row.size(); ++w) {
      std::uint64_t bits = row[w];
      while (bits) {
        ++cols[w * 64 + static_cast<std::size_t>(std::countr_zero(bits))];
        bits &= bits - 1;
      }
    }
  }
  s.structure_weights.assign(cols.begin(), cols.end());
  if (!s.rule_weights.empty()) {
    auto [mn, mx] = std::minmax_element(s.rule_weights.begin(), s.rule_weights.end());
    s.rule_min = *mn;
    s.rule_max = *mx;
  }
  if (!s.structure_weights.empty()) {
    auto [mn, mx] = std::minmax_element(s.structure_weights.begin(), s.structure_weights.end());
    s.structure_min = *mn;
    s.structure_max = *mx;
    long double sum = 0;
    for (auto v : s.structure_weights) sum += v;
    s.structure_mean = static_cast<double>(sum / s.structure_weights.size());
  }
  s.rule_hist = Histogram::of(s.rule_weights, 0, m.n_structures(), nbins);
  s.structure_hist = Histogram::of(s.structure_weights, 0, m.n_rules(), nbins);
  return s;
}

}  // namespace odeen
