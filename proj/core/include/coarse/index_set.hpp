#pragma once

#include <bit>
#include <cstdint>
#include <initializer_list>
#include <string>
#include <vector>

#include "coarse/errors.hpp"

namespace coarse {

/// Subset of {0, ..., universe-1} stored as packed 64-bit words. Also serves
/// as one row of a FiniteRelation. Word count is fixed by the universe, so
/// bitwise operations never reallocate.
class IndexSet {
 public:
  IndexSet() = default;

  explicit IndexSet(std::size_t universe)
      : universe_(universe), words_((universe + 63) / 64, 0) {}

  IndexSet(std::size_t universe, std::initializer_list<std::uint32_t> indices)
      : IndexSet(universe) {
    for (auto i : indices) set(i);
  }

  static IndexSet full(std::size_t universe) {
    IndexSet s(universe);
    for (std::size_t i = 0; i < universe; ++i) s.set_unchecked(i);
    return s;
  }

  static IndexSet singleton(std::size_t universe, std::uint32_t i) {
    IndexSet s(universe);
    s.set(i);
    return s;
  }

  std::size_t universe() const { return universe_; }

  bool test(std::size_t i) const {
    return i < universe_ && (words_[i >> 6] >> (i & 63)) & 1u;
  }

  void set(std::size_t i) {
    require(i < universe_, errc::index_out_of_range,
            "index " + std::to_string(i) + " in universe of size " + std::to_string(universe_));
    set_unchecked(i);
  }

  void reset(std::size_t i) {
    require(i < universe_, errc::index_out_of_range,
            "index " + std::to_string(i) + " in universe of size " + std::to_string(universe_));
    words_[i >> 6] &= ~(std::uint64_t{1} << (i & 63));
  }

  bool any() const {
    for (auto w : words_)
      if (w) return true;
    return false;
  }

  bool none() const { return !any(); }

  bool empty() const { return none(); }

  std::size_t count() const {
    std::size_t n = 0;
    for (auto w : words_) n += static_cast<std::size_t>(std::popcount(w));
    return n;
  }

  IndexSet& operator|=(const IndexSet& o) {
    check_universe(o);
    for (std::size_t i = 0; i < words_.size(); ++i) words_[i] |= o.words_[i];
    return *this;
  }

  IndexSet& operator&=(const IndexSet& o) {
    check_universe(o);
    for (std::size_t i = 0; i < words_.size(); ++i) words_[i] &= o.words_[i];
    return *this;
  }

  /// Set difference, *this \ o.
  IndexSet& operator-=(const IndexSet& o) {
    check_universe(o);
    for (std::size_t i = 0; i < words_.size(); ++i) words_[i] &= ~o.words_[i];
    return *this;
  }

  friend IndexSet operator|(IndexSet a, const IndexSet& b) { return a |= b; }
  friend IndexSet operator&(IndexSet a, const IndexSet& b) { return a &= b; }
  friend IndexSet operator-(IndexSet a, const IndexSet& b) { return a -= b; }

  IndexSet complement() const {
    IndexSet out = full(universe_);
    return out -= *this;
  }

  bool intersects(const IndexSet& o) const {
    check_universe(o);
    for (std::size_t i = 0; i < words_.size(); ++i)
      if (words_[i] & o.words_[i]) return true;
    return false;
  }

  /// True when o is a subset of *this.
  bool contains(const IndexSet& o) const {
    check_universe(o);
    for (std::size_t i = 0; i < words_.size(); ++i)
      if (o.words_[i] & ~words_[i]) return false;
    return true;
  }

  bool operator==(const IndexSet& o) const = default;

  /// Calls f on every member, ascending.
  template <class F>
  void for_each(F&& f) const {
    for (std::size_t wi = 0; wi < words_.size(); ++wi) {
      std::uint64_t w = words_[wi];
      while (w) {
        unsigned b = static_cast<unsigned>(std::countr_zero(w));
        f(static_cast<std::uint32_t>(wi * 64 + b));
        w &= w - 1;
      }
    }
  }

  std::vector<std::uint32_t> to_indices() const {
    std::vector<std::uint32_t> out;
    out.reserve(count());
    for_each([&](std::uint32_t i) { out.push_back(i); });
    return out;
  }

  std::uint32_t first() const {
    for (std::size_t wi = 0; wi < words_.size(); ++wi)
      if (words_[wi]) return static_cast<std::uint32_t>(wi * 64 + std::countr_zero(words_[wi]));
    fail(errc::index_out_of_range, "first() on empty set");
  }

  std::string to_string() const {
    std::string s = "{";
    bool sep = false;
    for_each([&](std::uint32_t i) {
      if (sep) s += ",";
      s += std::to_string(i);
      sep = true;
    });
    return s + "}";
  }

 private:
  void set_unchecked(std::size_t i) { words_[i >> 6] |= std::uint64_t{1} << (i & 63); }

  void check_universe(const IndexSet& o) const {
    require(universe_ == o.universe_, errc::index_out_of_range,
            "universe mismatch: " + std::to_string(universe_) + " vs " +
                std::to_string(o.universe_));
  }

  std::size_t universe_ = 0;
  std::vector<std::uint64_t> words_;
};

inline IndexSet make_index_set(std::size_t universe, const std::vector<std::uint32_t>& indices) {
  IndexSet s(universe);
  for (auto i : indices) s.set(i);
  return s;
}

}  // namespace coarse
