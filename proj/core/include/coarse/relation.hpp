#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "coarse/ground_set.hpp"
#include "coarse/index_set.hpp"

namespace coarse {

/// A relation from X to Y: a subset of Y x X. Pairs are written (y, x), and
/// the storage is one source-bitset per target element, so composition is a
/// word-parallel OR of rows. Values are immutable once built; every algebraic
/// operation returns a fresh relation.
///
/// Canonical pair order is lexicographic in (y, x); serialization and
/// iteration follow it.
class FiniteRelation {
 public:
  FiniteRelation(GroundSet source, GroundSet target);

  static FiniteRelation empty(const GroundSet& source, const GroundSet& target);
  static FiniteRelation full(const GroundSet& source, const GroundSet& target);
  static FiniteRelation diagonal(const GroundSet& x);
  /// Delta_A, the diagonal over a subset.
  static FiniteRelation diagonal_over(const GroundSet& x, const IndexSet& a);
  static FiniteRelation from_pairs(const GroundSet& source, const GroundSet& target,
                                   std::span<const std::pair<std::uint32_t, std::uint32_t>> yx);
  /// The rectangle b x a (all pairs with y in b, x in a).
  static FiniteRelation rectangle(const GroundSet& source, const GroundSet& target,
                                  const IndexSet& b, const IndexSet& a);

  const GroundSet& source() const { return source_; }
  const GroundSet& target() const { return target_; }
  bool square() const { return source_.same_as(target_); }

  bool test(std::uint32_t y, std::uint32_t x) const;
  const IndexSet& row(std::uint32_t y) const;

  std::size_t pair_count() const;
  bool is_empty() const;

  /// Pairs in canonical (y, x) order.
  std::vector<std::pair<std::uint32_t, std::uint32_t>> pairs() const;

  /// pi_X: the set of x appearing in some pair. For a map-like relation this
  /// is the literal domain.
  IndexSet domain() const;
  /// pi_Y: the set of y appearing in some pair.
  IndexSet image_set() const;

  bool is_symmetric() const;
  bool contains_diagonal() const;
  /// Gauge = symmetric and containing the diagonal (square relations only).
  bool is_gauge() const;
  /// compose(r, r) contained in r; with is_gauge this makes an equivalence
  /// relation.
  bool is_transitive() const;

  bool operator==(const FiniteRelation& o) const;

  std::string to_string() const;

 private:
  void add(std::uint32_t y, std::uint32_t x);

  GroundSet source_;
  GroundSet target_;
  std::vector<IndexSet> rows_;  // rows_[y] is a subset of the source

  friend FiniteRelation compose(const FiniteRelation&, const FiniteRelation&);
  friend FiniteRelation transpose(const FiniteRelation&);
  friend FiniteRelation set_union(const FiniteRelation&, const FiniteRelation&);
  friend FiniteRelation set_intersection(const FiniteRelation&, const FiniteRelation&);
  friend FiniteRelation restrict_to(const FiniteRelation&, const IndexSet&, const IndexSet&);
};

/// r2 o r1 = {(z, x) : exists y with (z,y) in r2 and (y,x) in r1}. Requires
/// r2.source == r1.target (the shared middle set).
FiniteRelation compose(const FiniteRelation& r2, const FiniteRelation& r1);

FiniteRelation transpose(const FiniteRelation& r);

/// R-image of a subset of the source: {y : exists x in a with (y,x) in r}.
IndexSet image(const FiniteRelation& r, const IndexSet& a);

/// B is r-separated from A when B and image(r, A) are disjoint.
bool is_separated(const IndexSet& b, const FiniteRelation& r, const IndexSet& a);

/// Image of d under the product relation e (x) e2, computed as
/// e o d o transpose(e2).
FiniteRelation product_image(const FiniteRelation& e, const FiniteRelation& e2,
                             const FiniteRelation& d);

FiniteRelation set_union(const FiniteRelation& a, const FiniteRelation& b);
FiniteRelation set_intersection(const FiniteRelation& a, const FiniteRelation& b);
/// True when inner is a subset of outer.
bool contains(const FiniteRelation& outer, const FiniteRelation& inner);
/// Keeps pairs (y, x) with y in b and x in a.
FiniteRelation restrict_to(const FiniteRelation& r, const IndexSet& a, const IndexSet& b);

/// k-fold image of a set: a, e(a), e(e(a)), ... applied k times.
IndexSet iterated_image(const FiniteRelation& e, IndexSet a, unsigned k);

}  // namespace coarse
