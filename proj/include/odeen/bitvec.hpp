#pragma once

#include <bit>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace odeen {

/// Number of 64-bit words needed for `bits` bits.
constexpr std::size_t words_for(std::size_t bits) { return (bits + 63) / 64; }

inline bool test_bit(std::span<const std::uint64_t> words, std::size_t j) {
  return (words[j >> 6] >> (j & 63)) & 1u;
}

inline std::size_t popcount(std::span<const std::uint64_t> words) {
  std::size_t n = 0;
  for (auto w : words) n += static_cast<std::size_t>(std::popcount(w));
  return n;
}

/// Fixed-length bit vector, LSB-first within 64-bit words. Padding bits stay zero.
class BitVector {
 public:
  BitVector() = default;
  explicit BitVector(std::size_t bits, bool value = false) : size_(bits), words_(words_for(bits), 0) {
    if (value) fill(true);
  }

  std::size_t size() const { return size_; }
  bool operator[](std::size_t j) const { return test_bit(words_, j); }
  bool test(std::size_t j) const {
    if (j >= size_) throw std::out_of_range("bit index out of range");
    return (*this)[j];
  }
  void set(std::size_t j, bool v = true) {
    const std::uint64_t m = std::uint64_t{1} << (j & 63);
    if (v) words_[j >> 6] |= m;
    else words_[j >> 6] &= ~m;
  }
  void flip(std::size_t j) { words_[j >> 6] ^= std::uint64_t{1} << (j & 63); }

  void fill(bool v) {
    for (auto& w : words_) w = v ? ~std::uint64_t{0} : 0;
    trim();
  }

  std::size_t count() const { return popcount(words_); }
  std::span<const std::uint64_t> words() const { return words_; }
  std::span<std::uint64_t> words() { return words_; }

  /// Hamming distance to a vector of the same size.
  std::size_t distance(const BitVector& o) const {
    if (o.size_ != size_) throw std::invalid_argument("bit vector size mismatch");
    std::size_t d = 0;
    for (std::size_t i = 0; i < words_.size(); ++i) d += static_cast<std::size_t>(std::popcount(words_[i] ^ o.words_[i]));
    return d;
  }

  /// `0`/`1` character string, bit 0 first.
  std::string to_string() const {
    std::string s(size_, '0');
    for (std::size_t j = 0; j < size_; ++j)
      if ((*this)[j]) s[j] = '1';
    return s;
  }

  static BitVector from_string(const std::string& s) {
    BitVector v(s.size());
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (s[j] == '1') v.set(j);
      else if (s[j] != '0') throw std::invalid_argument("tag string must contain only 0 and 1");
    }
    return v;
  }

  bool operator==(const BitVector&) const = default;

 private:
  void trim() {
    if (size_ % 64 && !words_.empty()) words_.back() &= (std::uint64_t{1} << (size_ % 64)) - 1;
  }

  std::size_t size_ = 0;
  std::vector<std::uint64_t> words_;
};

}  // namespace odeen
