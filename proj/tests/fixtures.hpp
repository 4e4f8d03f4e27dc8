#pragma once

#include <limits>

#include "coarse/constructions.hpp"

namespace tf {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// {0,1,2,3} on a line, thresholds 0..3: E_i is the band |x-y| <= i and
/// e_max is everything.
inline coarse::CoarseSpace line4() {
  return coarse::CoarseSpace::from_metric(
      {{0, 1, 2, 3}, {1, 0, 1, 2}, {2, 1, 0, 1}, {3, 2, 1, 0}}, {0, 1, 2, 3});
}

/// Two 2-point clusters at mutual distance infinity.
inline coarse::CoarseSpace pair2x2() {
  return coarse::CoarseSpace::from_metric(
      {{0, 1, kInf, kInf}, {1, 0, kInf, kInf}, {kInf, kInf, 0, 1}, {kInf, kInf, 1, 0}}, {0, 1});
}

/// The two-point image of Line4 under collapsing {0,1} and {2,3}: one
/// connected component, diameter 2.
inline coarse::CoarseSpace two_point_line() {
  return coarse::CoarseSpace::from_metric({{0, 2}, {2, 0}}, {0, 2});
}

inline coarse::IndexSet set(std::size_t universe, std::initializer_list<std::uint32_t> xs) {
  return coarse::IndexSet(universe, xs);
}

inline coarse::FiniteRelation band(const coarse::CoarseSpace& s, int width) {
  std::vector<std::pair<std::uint32_t, std::uint32_t>> yx;
  for (std::uint32_t y = 0; y < s.size(); ++y)
    for (std::uint32_t x = 0; x < s.size(); ++x)
      if (std::abs(static_cast<int>(y) - static_cast<int>(x)) <= width) yx.emplace_back(y, x);
  return coarse::FiniteRelation::from_pairs(s.ground(), s.ground(), yx);
}

/// Brute-force composition by the definition, used as the oracle against the
/// bitset implementation.
inline coarse::FiniteRelation compose_oracle(const coarse::FiniteRelation& r2,
                                             const coarse::FiniteRelation& r1) {
  std::vector<std::pair<std::uint32_t, std::uint32_t>> yx;
  for (std::uint32_t z = 0; z < r2.target().size(); ++z)
    for (std::uint32_t x = 0; x < r1.source().size(); ++x) {
      bool hit = false;
      for (std::uint32_t y = 0; y < r1.target().size() && !hit; ++y)
        if (r2.test(z, y) && r1.test(y, x)) hit = true;
      if (hit) yx.emplace_back(z, x);
    }
  return coarse::FiniteRelation::from_pairs(r1.source(), r2.target(), yx);
}

}  // namespace tf
