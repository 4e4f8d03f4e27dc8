#pragma once

#include <compare>
#include <cstdint>
#include <string>

namespace coarse {

/// Position in a gauge ladder E_0 <= ... <= E_k, or Unbounded, meaning the
/// queried set or relation is not controlled within the space. Totally
/// ordered with Unbounded as the maximum, so "least scale such that ..."
/// queries compose with std::min/max.
class ScaleIndex {
 public:
  constexpr ScaleIndex() = default;  // unbounded

  static constexpr ScaleIndex at(std::uint32_t i) { return ScaleIndex(i); }
  static constexpr ScaleIndex unbounded() { return ScaleIndex(); }

  constexpr bool is_unbounded() const { return raw_ == kUnbounded; }
  constexpr bool is_finite() const { return raw_ != kUnbounded; }

  constexpr std::uint32_t value() const { return raw_; }  // callers check is_finite first

  constexpr auto operator<=>(const ScaleIndex&) const = default;

  std::string to_string() const {
    return is_unbounded() ? std::string("unbounded") : std::to_string(raw_);
  }

 private:
  explicit constexpr ScaleIndex(std::uint32_t i) : raw_(i) {}

  static constexpr std::uint32_t kUnbounded = 0xFFFFFFFFu;
  std::uint32_t raw_ = kUnbounded;
};

}  // namespace coarse
