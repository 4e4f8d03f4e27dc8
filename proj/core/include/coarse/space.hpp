#pragma once

#include <limits>
#include <optional>
#include <vector>

#include "coarse/relation.hpp"
#include "coarse/scale.hpp"

namespace coarse {

/// Disjoint nonempty blocks covering the ground set. Disjointness and
/// covering are checked at construction.
class Partition {
 public:
  Partition(GroundSet ground, std::vector<IndexSet> blocks);

  static Partition singletons(const GroundSet& ground);
  static Partition single_block(const GroundSet& ground);

  const GroundSet& ground() const { return ground_; }
  std::size_t block_count() const { return blocks_.size(); }
  const IndexSet& block(std::size_t i) const { return blocks_[i]; }
  const std::vector<IndexSet>& blocks() const { return blocks_; }
  std::uint32_t block_of(std::uint32_t x) const;

  bool operator==(const Partition& o) const {
    return ground_.same_as(o.ground_) && blocks_ == o.blocks_;
  }

 private:
  GroundSet ground_;
  std::vector<IndexSet> blocks_;
  std::vector<std::uint32_t> block_of_;
};

struct LocalFinitenessReport {
  bool locally_finite = true;  // finite models always are; the profile is the content
  /// multiplicity[i] = max over x of the number of blocks meeting E_i(x).
  std::vector<std::size_t> multiplicity;
};

/// Finite model of a coarse space (X, E): a monotone ladder of gauges
/// E_0 <= ... <= E_k whose top is an equivalence relation e_max. The coarse
/// structure is everything below e_max; "exists a controlled entourage"
/// becomes "contained in e_max", and quantitative questions are answered on
/// the ladder.
class CoarseSpace {
 public:
  CoarseSpace(GroundSet ground, std::vector<FiniteRelation> ladder);

  /// Extended metric: dist entries may be +infinity, encoded disconnection.
  /// E_i = { d <= thresholds[i] }; e_max = { d < infinity } is appended as a
  /// final level when the top threshold does not already reach it.
  static CoarseSpace from_metric(const std::vector<std::vector<double>>& dist,
                                 const std::vector<double>& thresholds,
                                 std::vector<std::string> labels = {});

  const GroundSet& ground() const { return ground_; }
  std::size_t size() const { return ground_.size(); }

  std::size_t levels() const { return ladder_.size(); }
  std::uint32_t top_scale() const { return static_cast<std::uint32_t>(ladder_.size() - 1); }
  const FiniteRelation& entourage_at(std::uint32_t i) const;
  const FiniteRelation& entourage(ScaleIndex i) const;
  const FiniteRelation& e_max() const { return ladder_.back(); }
  const std::vector<FiniteRelation>& ladder() const { return ladder_; }

  /// Least i with r contained in E_i; Unbounded when r is not within e_max.
  ScaleIndex entourage_scale(const FiniteRelation& r) const;

  bool is_bounded(const IndexSet& a) const;
  /// Least i with a x a contained in E_i.
  ScaleIndex bound_scale(const IndexSet& a) const;

  std::uint32_t component_of(std::uint32_t x) const { return component_of_[x]; }
  std::size_t component_count() const { return component_count_; }
  Partition components() const;
  bool connected() const { return component_count_ == 1; }
  std::size_t coarse_cardinality() const { return component_count_; }
  IndexSet component_set(std::uint32_t id) const;

  IndexSet thicken(const IndexSet& a, ScaleIndex i) const;

  /// Least i with a contained in E_i(b); Unbounded when a is not within
  /// e_max(b).
  ScaleIndex coarse_containment(const IndexSet& a, const IndexSet& b) const;
  bool asymptotic(const IndexSet& a, const IndexSet& b) const;
  /// Coarsely dense = X coarsely contained in a.
  ScaleIndex dense_scale(const IndexSet& a) const;

  ScaleIndex partition_control_scale(const Partition& p) const;
  LocalFinitenessReport local_finiteness_report(const Partition& p) const;

 private:
  GroundSet ground_;
  std::vector<FiniteRelation> ladder_;
  std::vector<std::uint32_t> component_of_;
  std::size_t component_count_ = 0;
};

}  // namespace coarse
