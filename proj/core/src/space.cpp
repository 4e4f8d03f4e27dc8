#include "coarse/space.hpp"

#include <cmath>

namespace coarse {

Partition::Partition(GroundSet ground, std::vector<IndexSet> blocks)
    : ground_(std::move(ground)), blocks_(std::move(blocks)) {
  const std::size_t n = ground_.size();
  block_of_.assign(n, std::numeric_limits<std::uint32_t>::max());
  IndexSet seen(n);
  for (std::uint32_t b = 0; b < blocks_.size(); ++b) {
    const IndexSet& blk = blocks_[b];
    require(blk.universe() == n, errc::partition_invalid, "block universe mismatch");
    require(blk.any(), errc::partition_invalid, "empty block " + std::to_string(b));
    require(!seen.intersects(blk), errc::partition_invalid,
            "block " + std::to_string(b) + " overlaps an earlier block");
    seen |= blk;
    blk.for_each([&](std::uint32_t x) { block_of_[x] = b; });
  }
  require(seen == IndexSet::full(n), errc::partition_invalid, "blocks do not cover the set");
}

Partition Partition::singletons(const GroundSet& ground) {
  std::vector<IndexSet> blocks;
  blocks.reserve(ground.size());
  for (std::uint32_t x = 0; x < ground.size(); ++x)
    blocks.push_back(IndexSet::singleton(ground.size(), x));
  return Partition(ground, std::move(blocks));
}

Partition Partition::single_block(const GroundSet& ground) {
  return Partition(ground, {IndexSet::full(ground.size())});
}

std::uint32_t Partition::block_of(std::uint32_t x) const {
  require(x < block_of_.size(), errc::index_out_of_range, "element " + std::to_string(x));
  return block_of_[x];
}

CoarseSpace::CoarseSpace(GroundSet ground, std::vector<FiniteRelation> ladder)
    : ground_(std::move(ground)), ladder_(std::move(ladder)) {
  require(!ladder_.empty(), errc::ladder_violation, "ladder must have at least one level");
  for (std::size_t i = 0; i < ladder_.size(); ++i) {
    const FiniteRelation& e = ladder_[i];
    require_same_ground(e.source(), ground_, "ladder level");
    require_same_ground(e.target(), ground_, "ladder level");
    require(e.is_gauge(), errc::gauge_violation,
            "level " + std::to_string(i) + " is not a gauge (symmetric with diagonal)");
    if (i > 0)
      require(contains(e, ladder_[i - 1]), errc::ladder_violation,
              "ladder not monotone at level " + std::to_string(i));
  }
  require(e_max().is_transitive(), errc::ladder_violation,
          "e_max is not an equivalence relation");

  // e_max classes; since e_max is a gauge and transitive, the class of x is
  // its row.
  const std::size_t n = ground_.size();
  component_of_.assign(n, std::numeric_limits<std::uint32_t>::max());
  for (std::uint32_t x = 0; x < n; ++x) {
    if (component_of_[x] != std::numeric_limits<std::uint32_t>::max()) continue;
    const auto id = static_cast<std::uint32_t>(component_count_++);
    e_max().row(x).for_each([&](std::uint32_t y) { component_of_[y] = id; });
    component_of_[x] = id;
  }
}

CoarseSpace CoarseSpace::from_metric(const std::vector<std::vector<double>>& dist,
                                     const std::vector<double>& thresholds,
                                     std::vector<std::string> labels) {
  const std::size_t n = dist.size();
  require(n >= 1, errc::metric_violation, "empty metric");
  for (const auto& row : dist)
    require(row.size() == n, errc::metric_violation, "distance matrix is not square");
  for (std::size_t i = 0; i < n; ++i) {
    require(dist[i][i] == 0.0, errc::metric_violation,
            "nonzero diagonal at " + std::to_string(i));
    for (std::size_t j = 0; j < n; ++j) {
      require(!(dist[i][j] < 0.0) && !std::isnan(dist[i][j]), errc::metric_violation,
              "negative or NaN distance at (" + std::to_string(i) + "," + std::to_string(j) + ")");
      require(dist[i][j] == dist[j][i], errc::metric_violation,
              "asymmetry at (" + std::to_string(i) + "," + std::to_string(j) + ")");
    }
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t k = 0; k < n; ++k) {
        if (std::isinf(dist[i][k]) || std::isinf(dist[k][j])) continue;
        require(dist[i][j] <= dist[i][k] + dist[k][j], errc::metric_violation,
                "triangle inequality fails through " + std::to_string(k) + " for (" +
                    std::to_string(i) + "," + std::to_string(j) + ")");
      }

  require(!thresholds.empty(), errc::non_monotone_thresholds, "no thresholds");
  for (std::size_t t = 0; t + 1 < thresholds.size(); ++t)
    require(thresholds[t] < thresholds[t + 1], errc::non_monotone_thresholds,
            "thresholds must be strictly ascending");

  GroundSet ground(n, std::move(labels));
  std::vector<FiniteRelation> ladder;
  for (double r : thresholds) {
    FiniteRelation e(ground, ground);
    std::vector<std::pair<std::uint32_t, std::uint32_t>> yx;
    for (std::uint32_t i = 0; i < n; ++i)
      for (std::uint32_t j = 0; j < n; ++j)
        if (dist[i][j] <= r) yx.emplace_back(i, j);
    ladder.push_back(FiniteRelation::from_pairs(ground, ground, yx));
  }

  std::vector<std::pair<std::uint32_t, std::uint32_t>> finite_pairs;
  for (std::uint32_t i = 0; i < n; ++i)
    for (std::uint32_t j = 0; j < n; ++j)
      if (!std::isinf(dist[i][j])) finite_pairs.emplace_back(i, j);
  FiniteRelation emax = FiniteRelation::from_pairs(ground, ground, finite_pairs);
  if (!(emax == ladder.back())) ladder.push_back(emax);

  return CoarseSpace(std::move(ground), std::move(ladder));
}

const FiniteRelation& CoarseSpace::entourage_at(std::uint32_t i) const {
  require(i < ladder_.size(), errc::scale_out_of_range,
          "scale " + std::to_string(i) + " of " + std::to_string(ladder_.size()));
  return ladder_[i];
}

const FiniteRelation& CoarseSpace::entourage(ScaleIndex i) const {
  require(i.is_finite(), errc::scale_out_of_range, "unbounded scale");
  return entourage_at(i.value());
}

ScaleIndex CoarseSpace::entourage_scale(const FiniteRelation& r) const {
  for (std::uint32_t i = 0; i < ladder_.size(); ++i)
    if (contains(ladder_[i], r)) return ScaleIndex::at(i);
  return ScaleIndex::unbounded();
}

bool CoarseSpace::is_bounded(const IndexSet& a) const { return bound_scale(a).is_finite(); }

ScaleIndex CoarseSpace::bound_scale(const IndexSet& a) const {
  require(a.universe() == size(), errc::index_out_of_range, "bound_scale: subset universe");
  for (std::uint32_t i = 0; i < ladder_.size(); ++i) {
    bool ok = true;
    a.for_each([&](std::uint32_t x) {
      if (ok && !ladder_[i].row(x).contains(a)) ok = false;
    });
    if (ok) return ScaleIndex::at(i);
  }
  return ScaleIndex::unbounded();
}

Partition CoarseSpace::components() const {
  std::vector<IndexSet> blocks(component_count_, IndexSet(size()));
  for (std::uint32_t x = 0; x < size(); ++x) blocks[component_of_[x]].set(x);
  return Partition(ground_, std::move(blocks));
}

IndexSet CoarseSpace::component_set(std::uint32_t id) const {
  require(id < component_count_, errc::index_out_of_range, "component " + std::to_string(id));
  IndexSet out(size());
  for (std::uint32_t x = 0; x < size(); ++x)
    if (component_of_[x] == id) out.set(x);
  return out;
}

IndexSet CoarseSpace::thicken(const IndexSet& a, ScaleIndex i) const {
  return image(entourage(i), a);
}

ScaleIndex CoarseSpace::coarse_containment(const IndexSet& a, const IndexSet& b) const {
  require(a.universe() == size() && b.universe() == size(), errc::index_out_of_range,
          "coarse_containment: subset universes");
  for (std::uint32_t i = 0; i < ladder_.size(); ++i)
    if (image(ladder_[i], b).contains(a)) return ScaleIndex::at(i);
  return ScaleIndex::unbounded();
}

bool CoarseSpace::asymptotic(const IndexSet& a, const IndexSet& b) const {
  return coarse_containment(a, b).is_finite() && coarse_containment(b, a).is_finite();
}

ScaleIndex CoarseSpace::dense_scale(const IndexSet& a) const {
  return coarse_containment(IndexSet::full(size()), a);
}

ScaleIndex CoarseSpace::partition_control_scale(const Partition& p) const {
  require_same_ground(p.ground(), ground_, "partition_control_scale");
  ScaleIndex worst = ScaleIndex::at(0);
  for (const auto& blk : p.blocks()) {
    ScaleIndex s = bound_scale(blk);
    if (s.is_unbounded()) return ScaleIndex::unbounded();
    worst = std::max(worst, s);
  }
  return worst;
}

LocalFinitenessReport CoarseSpace::local_finiteness_report(const Partition& p) const {
  require_same_ground(p.ground(), ground_, "local_finiteness_report");
  LocalFinitenessReport report;
  report.multiplicity.assign(ladder_.size(), 0);
  for (std::uint32_t i = 0; i < ladder_.size(); ++i) {
    std::size_t best = 0;
    for (std::uint32_t x = 0; x < size(); ++x) {
      const IndexSet& section = ladder_[i].row(x);
      std::size_t hit = 0;
      for (const auto& blk : p.blocks())
        if (blk.intersects(section)) ++hit;
      best = std::max(best, hit);
    }
    report.multiplicity[i] = best;
  }
  return report;
}

}  // namespace coarse
