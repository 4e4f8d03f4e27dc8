#include "coarse/module.hpp"

namespace coarse {

namespace {

FiniteRelation build_block_gauge(const CoarseSpace& space, const Partition& atoms) {
  FiniteRelation g = FiniteRelation::empty(space.ground(), space.ground());
  for (const auto& a : atoms.blocks())
    g = set_union(g, FiniteRelation::rectangle(space.ground(), space.ground(), a, a));
  return g;
}

}  // namespace

GeoModule::GeoModule(CoarseSpace space, Partition atoms, std::vector<std::uint32_t> dims)
    : space_(std::move(space)),
      atoms_(std::move(atoms)),
      dims_(std::move(dims)),
      block_gauge_(FiniteRelation::diagonal(space_.ground())) {
  require_same_ground(atoms_.ground(), space_.ground(), "GeoModule");
  require(dims_.size() == atoms_.block_count(), errc::partition_invalid,
          "dims count " + std::to_string(dims_.size()) + " != atom count " +
              std::to_string(atoms_.block_count()));
  offsets_.reserve(dims_.size());
  for (auto d : dims_) {
    offsets_.push_back(total_dim_);
    total_dim_ += d;
  }
  block_gauge_ = build_block_gauge(space_, atoms_);
  block_gauge_scale_ = space_.entourage_scale(block_gauge_);
}

GeoModule GeoModule::uniform(const CoarseSpace& space, std::uint32_t rank) {
  return GeoModule(space, Partition::singletons(space.ground()),
                   std::vector<std::uint32_t>(space.size(), rank));
}

bool GeoModule::same_as(const GeoModule& o) const {
  return space_.ground().same_as(o.space_.ground()) && atoms_ == o.atoms_ && dims_ == o.dims_;
}

bool GeoModule::is_measurable(const IndexSet& a) const {
  require(a.universe() == space_.size(), errc::index_out_of_range, "is_measurable");
  for (const auto& atom : atoms_.blocks())
    if (atom.intersects(a) && !a.contains(atom)) return false;
  return true;
}

IndexSet GeoModule::atom_mask_of(const IndexSet& a) const {
  require(a.universe() == space_.size(), errc::index_out_of_range, "atom_mask_of");
  IndexSet mask(atom_count());
  for (std::uint32_t i = 0; i < atom_count(); ++i) {
    const IndexSet& atom = atoms_.block(i);
    if (!atom.intersects(a)) continue;
    if (!a.contains(atom)) {
      IndexSet straddle = atom - a;
      fail(errc::measurability, "set " + a.to_string() + " straddles atom " +
                                    std::to_string(i) + "; missing elements " +
                                    straddle.to_string());
    }
    mask.set(i);
  }
  return mask;
}

IndexSet GeoModule::atoms_meeting(const IndexSet& s) const {
  require(s.universe() == space_.size(), errc::index_out_of_range, "atoms_meeting");
  IndexSet mask(atom_count());
  for (std::uint32_t i = 0; i < atom_count(); ++i)
    if (atoms_.block(i).intersects(s)) mask.set(i);
  return mask;
}

IndexSet GeoModule::hull(const IndexSet& s) const { return points_of_atoms(atoms_meeting(s)); }

IndexSet GeoModule::points_of_atoms(const IndexSet& atom_mask) const {
  IndexSet out(space_.size());
  atom_mask.for_each([&](std::uint32_t i) { out |= atoms_.block(i); });
  return out;
}

IndexSet GeoModule::coords_of_atoms(const IndexSet& atom_mask) const {
  IndexSet out(total_dim_);
  atom_mask.for_each([&](std::uint32_t i) {
    for (std::uint32_t c = 0; c < dims_[i]; ++c) out.set(offsets_[i] + c);
  });
  return out;
}

Projection GeoModule::chi(const IndexSet& measurable) const {
  return chi_atoms(atom_mask_of(measurable));
}

Projection GeoModule::chi_atoms(const IndexSet& atom_mask) const {
  require(atom_mask.universe() == atom_count(), errc::index_out_of_range, "chi_atoms");
  return Projection{atom_mask, coords_of_atoms(atom_mask)};
}

IndexSet GeoModule::nontrivial_points() const {
  IndexSet out(space_.size());
  for (std::uint32_t i = 0; i < atom_count(); ++i)
    if (dims_[i] > 0) out |= atoms_.block(i);
  return out;
}

std::uint32_t GeoModule::nontrivial_atom_count() const {
  std::uint32_t n = 0;
  for (auto d : dims_)
    if (d > 0) ++n;
  return n;
}

ModuleReport GeoModule::classify() const {
  ModuleReport report;

  ScaleIndex nondeg = ScaleIndex::at(0);
  for (std::uint32_t i = 0; i < atom_count(); ++i)
    if (dims_[i] > 0) nondeg = std::max(nondeg, space_.bound_scale(atoms_.block(i)));
  report.nondegeneracy_scale = nondeg;

  report.discreteness_scale = space_.partition_control_scale(atoms_);
  report.admissibility_scale = space_.entourage_scale(block_gauge_);

  const IndexSet carried = nontrivial_points();
  if (carried.none()) {
    report.faithfulness_scale = ScaleIndex::unbounded();
  } else {
    report.faithfulness_scale = space_.dense_scale(carried);
  }

  std::optional<std::uint32_t> ample;
  for (std::uint32_t i = 0; i < atom_count(); ++i)
    if (dims_[i] > 0 && space_.is_bounded(atoms_.block(i)))
      ample = ample ? std::min(*ample, dims_[i]) : dims_[i];
  report.ampleness = ample;
  return report;
}

SeparatedSubfamily greedy_separated_subfamily(const CoarseSpace& space,
                                              std::span<const IndexSet> family, ScaleIndex e) {
  require(!family.empty(), errc::family_not_coarsely_dense, "empty family");
  const FiniteRelation& sep = space.entourage(e);

  IndexSet all(space.size());
  ScaleIndex ctrl = ScaleIndex::at(0);
  for (const auto& a : family) {
    require(a.universe() == space.size(), errc::index_out_of_range, "family member universe");
    require(a.any(), errc::family_not_coarsely_dense, "family member is empty");
    ctrl = std::max(ctrl, space.bound_scale(a));
    all |= a;
  }
  require(ctrl.is_finite(), errc::family_not_coarsely_dense, "family is not controlled");
  const ScaleIndex dense = space.dense_scale(all);
  if (dense.is_unbounded())
    fail(errc::family_not_coarsely_dense, "union " + all.to_string() + " is not coarsely dense");

  SeparatedSubfamily out;
  IndexSet forbidden(space.size());
  for (std::uint32_t l = 0; l < family.size(); ++l) {
    if (family[l].intersects(forbidden)) continue;
    out.kept.push_back(l);
    forbidden |= image(sep, family[l]);
  }

  // Density bound certified for the kept union: E_dense o E_ctrl o E_sep.
  const FiniteRelation bound =
      compose(space.entourage(dense), compose(space.entourage(ctrl), sep));
  out.certified_dense_scale = space.entourage_scale(bound);

  IndexSet kept_union(space.size());
  for (auto l : out.kept) kept_union |= family[l];
  out.dense_scale = space.dense_scale(kept_union);
  return out;
}

Partition refine_to_discrete_partition(const GeoModule& m, std::span<const IndexSet> seeds) {
  const CoarseSpace& space = m.space();
  require(!seeds.empty(), errc::seeds_not_coarsely_dense, "no seeds");

  IndexSet seed_union(space.size());
  ScaleIndex ctrl = ScaleIndex::at(0);
  for (const auto& b : seeds) {
    require(b.universe() == space.size(), errc::index_out_of_range, "seed universe");
    require(b.any(), errc::seeds_not_coarsely_dense, "empty seed");
    ScaleIndex s = space.bound_scale(b);
    require(s.is_finite(), errc::seeds_not_coarsely_dense, "seed " + b.to_string() +
                                                               " is unbounded");
    ctrl = std::max(ctrl, s);
    seed_union |= b;
  }
  const ScaleIndex dense = space.dense_scale(seed_union);
  if (dense.is_unbounded())
    fail(errc::seeds_not_coarsely_dense,
         "seed union " + seed_union.to_string() + " is not coarsely dense");

  const FiniteRelation& e_disc = space.entourage(m.classify().discreteness_scale);
  const FiniteRelation& e_ctrl = space.entourage(ctrl);
  const FiniteRelation& e_dense = space.entourage(dense);

  // Separation gauge: E_dense o E_ctrl o E_disc o E_ctrl o E_dense.
  const FiniteRelation e1 =
      compose(e_dense, compose(e_ctrl, compose(e_disc, compose(e_ctrl, e_dense))));

  const auto& atoms = m.atoms();
  const std::size_t na = atoms.block_count();

  // Phase 1: greedy e1-separated core atoms whose union stays coarsely dense.
  std::vector<std::uint32_t> cores;
  IndexSet forbidden(space.size());
  for (std::uint32_t i = 0; i < na; ++i) {
    if (atoms.block(i).intersects(forbidden)) continue;
    cores.push_back(i);
    forbidden |= image(e1, atoms.block(i));
  }

  // Attach to each core every atom meeting E_ctrl o E_dense of it.
  const FiniteRelation attach_rel = compose(e_ctrl, e_dense);
  std::vector<std::uint32_t> owner(na, std::numeric_limits<std::uint32_t>::max());
  for (std::uint32_t c = 0; c < cores.size(); ++c) {
    const IndexSet reach = image(attach_rel, atoms.block(cores[c]));
    for (std::uint32_t j = 0; j < na; ++j)
      if (owner[j] == std::numeric_limits<std::uint32_t>::max() &&
          atoms.block(j).intersects(reach))
        owner[j] = c;
  }

  // Phase 2: leftover atoms attach by ascending index to the first core whose
  // E_3-thickening reaches them, E_3 witnessing density of the core union.
  IndexSet core_union(space.size());
  for (auto c : cores) core_union |= atoms.block(c);
  const ScaleIndex core_dense = space.dense_scale(core_union);
  const FiniteRelation& e3 = space.entourage(core_dense);

  for (std::uint32_t j = 0; j < na; ++j) {
    if (owner[j] != std::numeric_limits<std::uint32_t>::max()) continue;
    for (std::uint32_t c = 0; c < cores.size(); ++c) {
      if (atoms.block(j).intersects(image(e3, atoms.block(cores[c])))) {
        owner[j] = c;
        break;
      }
    }
    require(owner[j] != std::numeric_limits<std::uint32_t>::max(), errc::seeds_not_coarsely_dense,
            "atom " + std::to_string(j) + " unreachable from the selected cores");
  }

  std::vector<IndexSet> blocks(cores.size(), IndexSet(space.size()));
  for (std::uint32_t j = 0; j < na; ++j) blocks[owner[j]] |= atoms.block(j);
  return Partition(space.ground(), std::move(blocks));
}

Partition discretize(const CoarseSpace& space, std::span<const IndexSet> covers) {
  require(!covers.empty(), errc::not_covering, "no covers");
  IndexSet all(space.size());
  for (const auto& a : covers) {
    require(a.universe() == space.size(), errc::index_out_of_range, "cover universe");
    require(space.is_bounded(a), errc::partition_not_controlled,
            "cover set " + a.to_string() + " is unbounded");
    all |= a;
  }
  require(all == IndexSet::full(space.size()), errc::not_covering,
          "covers miss " + (IndexSet::full(space.size()) - all).to_string());

  std::vector<IndexSet> blocks;
  IndexSet used(space.size());
  for (const auto& a : covers) {
    IndexSet c = a - used;
    if (c.any()) blocks.push_back(c);
    used |= a;
  }
  return Partition(space.ground(), std::move(blocks));
}

}  // namespace coarse
