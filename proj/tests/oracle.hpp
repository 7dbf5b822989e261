#pragma once

// Brute-force reference evaluator. Works from rule text and raw base-7 digits only, sharing no
// code with the library so it can check the interpreter and the matrix builder.

#include <cstdint>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace oracle {

struct Cell {
  bool empty = true;
  std::string color;  // "red" | "blue"
  std::string shape;  // "block" | "up" | "down"
};

inline std::vector<Cell> decode(std::uint64_t id) {
  std::vector<Cell> cells(6);
  for (int i = 5; i >= 0; --i) {
    const int d = static_cast<int>(id % 7);
    id /= 7;
    if (d == 0) continue;
    cells[i].empty = false;
    cells[i].color = (d - 1) / 3 == 0 ? "red" : "blue";
    cells[i].shape = std::vector<std::string>{"block", "up", "down"}[(d - 1) % 3];
  }
  return cells;
}

inline std::vector<std::string> words(const std::string& s) {
  std::istringstream in(s);
  std::vector<std::string> out;
  for (std::string w; in >> w;) out.push_back(w);
  return out;
}

inline bool matches(const Cell& c, const std::vector<std::string>& obj) {
  if (c.empty) return false;
  for (std::size_t i = 0; i < obj.size(); ++i) {
    const auto& w = obj[i];
    if (w == "red" || w == "blue") {
      if (c.color != w) return false;
    } else if (w == "block") {
      if (c.shape != "block") return false;
    } else if (w == "pyramid") {
      if (c.shape == "block") return false;
    } else if (w == "pointing_up") {
      if (c.shape != "up") return false;
    } else if (w == "pointing_down") {
      if (c.shape != "down") return false;
    } else {
      throw std::invalid_argument("oracle: unexpected word " + w);
    }
  }
  return true;
}

/// Consumes a quantifier at the front of `w`; returns the predicate on counts.
inline bool quantify(std::vector<std::string>& w, int count) {
  if (w.at(0) == "zero") {
    w.erase(w.begin());
    return count == 0;
  }
  const int n = std::stoi(w.at(1));
  const std::string q = w[0];
  w.erase(w.begin(), w.begin() + 2);
  if (q == "at_least") return count >= n;
  if (q == "at_most") return count <= n;
  if (q == "exactly") return count == n;
  throw std::invalid_argument("oracle: bad quantifier " + q);
}

inline bool eval_words(std::vector<std::string> w, const std::vector<Cell>& cells) {
  for (std::size_t i = 0; i < w.size(); ++i)
    if (w[i] == "and" || w[i] == "or") {
      std::vector<std::string> l(w.begin(), w.begin() + i), r(w.begin() + i + 1, w.end());
      const bool a = eval_words(l, cells), b = eval_words(r, cells);
      return w[i] == "and" ? (a && b) : (a || b);
    }
  std::size_t rel = w.size();
  for (std::size_t i = 0; i < w.size(); ++i)
    if (w[i] == "touching" || w[i] == "surrounded_by" || w[i] == "at_the_right_of") rel = i;
  // Count first with a dummy quantifier strip to know where the object starts.
  const std::size_t qlen = w[0] == "zero" ? 1 : 2;
  std::vector<std::string> subj(w.begin() + qlen, w.begin() + rel);
  int count = 0;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (!matches(cells[i], subj)) continue;
    if (rel == w.size()) {
      ++count;
      continue;
    }
    std::vector<std::string> ref(w.begin() + rel + 1, w.end());
    bool ok = false;
    const auto& r = w[rel];
    if (r == "touching") {
      ok = (i > 0 && matches(cells[i - 1], ref)) || (i + 1 < cells.size() && matches(cells[i + 1], ref));
    } else if (r == "surrounded_by") {
      ok = i > 0 && i + 1 < cells.size() && matches(cells[i - 1], ref) && matches(cells[i + 1], ref);
    } else {
      for (std::size_t j = 0; j < i; ++j) ok = ok || matches(cells[j], ref);
    }
    count += ok;
  }
  return quantify(w, count);
}

inline bool eval(const std::string& rule, std::uint64_t structure_id) {
  return eval_words(words(rule), decode(structure_id));
}

}  // namespace oracle
