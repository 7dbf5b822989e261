#pragma once

#include <cstdint>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace odeen {

// Seeding scheme. Every random decision draws from a named stream:
//   child = splitmix64(seed ^ fnv1a64(stream_name) ^ splitmix64(index))
// and the child seeds an std::mt19937_64, whose output sequence is fixed by the
// standard. Bounded integers use Lemire's multiply-shift with rejection, so the same
// seed gives the same draws with any standard library and any thread count.

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::string_view stream, std::uint64_t index = 0) {
  return splitmix64(seed ^ fnv1a64(stream) ^ splitmix64(index));
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  Rng(std::uint64_t seed, std::string_view stream, std::uint64_t index = 0) : engine_(derive_seed(seed, stream, index)) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("Rng::below(0)");
    unsigned __int128 m = static_cast<unsigned __int128>(next()) * n;
    auto low = static_cast<std::uint64_t>(m);
    if (low < n) {
      const std::uint64_t threshold = (0 - n) % n;
      while (low < threshold) {
        m = static_cast<unsigned __int128>(next()) * n;
        low = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::uint64_t>(m >> 64);
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[below(i)]);
  }

  /// k distinct values from [0, n) in draw order, skipping anything in `exclude`.
  template <typename Int = std::uint32_t>
  std::vector<Int> sample_distinct(std::uint64_t n, std::size_t k, const std::unordered_set<Int>& exclude = {}) {
    if (k + exclude.size() > n) throw std::invalid_argument("cannot draw that many distinct values");
    std::vector<Int> out;
    out.reserve(k);
    if (k * 4 > n) {
      std::vector<Int> pool;
      pool.reserve(n - exclude.size());
      for (std::uint64_t i = 0; i < n; ++i)
        if (!exclude.count(static_cast<Int>(i))) pool.push_back(static_cast<Int>(i));
      for (std::size_t i = 0; i < k; ++i) {
        std::swap(pool[i], pool[i + below(pool.size() - i)]);
        out.push_back(pool[i]);
      }
      return out;
    }
    std::unordered_set<Int> seen;
    while (out.size() < k) {
      const auto v = static_cast<Int>(below(n));
      if (exclude.count(v) || !seen.insert(v).second) continue;
      out.push_back(v);
    }
    return out;
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace odeen
