#pragma once

#include <optional>
#include <span>

#include "coarse/space.hpp"

namespace coarse {

/// Diagonal 0/1 projection pattern, the image of chi. Carries both the atom
/// mask and its coordinate-level expansion.
struct Projection {
  IndexSet atom_mask;  // over atoms
  IndexSet coords;     // over the module's total dimension
};

struct ModuleReport {
  ScaleIndex nondegeneracy_scale;   // least i bounding every nontrivial atom
  ScaleIndex admissibility_scale;   // least i containing the block gauge
  ScaleIndex discreteness_scale;    // least i controlling the atom partition
  ScaleIndex faithfulness_scale;    // least i with E_i(nontrivial atoms) = X
  std::optional<std::uint32_t> ampleness;  // kappa* = min positive block dim; empty if degenerate
};

/// Finite-dimensional coarse geometric module: an atom partition of X with a
/// complex block of declared dimension over each atom. Measurable sets are
/// unions of atoms; blocks are laid out in atom order (offsets are
/// cumulative) and operators are entered in these coordinates. Atoms of
/// dimension zero model degenerate representations.
class GeoModule {
 public:
  GeoModule(CoarseSpace space, Partition atoms, std::vector<std::uint32_t> dims);

  static GeoModule uniform(const CoarseSpace& space, std::uint32_t rank);

  const CoarseSpace& space() const { return space_; }
  const Partition& atoms() const { return atoms_; }
  std::size_t atom_count() const { return atoms_.block_count(); }
  std::uint32_t dim(std::uint32_t atom) const { return dims_[atom]; }
  const std::vector<std::uint32_t>& dims() const { return dims_; }
  std::uint32_t offset(std::uint32_t atom) const { return offsets_[atom]; }
  std::uint32_t total_dim() const { return total_dim_; }

  /// Structural identity: same space token, same atoms, same dims.
  bool same_as(const GeoModule& o) const;

  bool is_measurable(const IndexSet& a) const;
  /// Atoms making up a measurable set; throws errc::measurability naming the
  /// straddled atoms otherwise.
  IndexSet atom_mask_of(const IndexSet& a) const;
  /// Atoms meeting an arbitrary set (the measurable hull, atom level).
  IndexSet atoms_meeting(const IndexSet& s) const;
  /// Point-level measurable hull: union of the atoms meeting s.
  IndexSet hull(const IndexSet& s) const;
  IndexSet points_of_atoms(const IndexSet& atom_mask) const;
  IndexSet coords_of_atoms(const IndexSet& atom_mask) const;

  Projection chi(const IndexSet& measurable) const;
  Projection chi_atoms(const IndexSet& atom_mask) const;

  /// Union of atom rectangles a x a over all atoms: a gauge witnessing
  /// non-degeneracy, admissibility and discreteness all at once.
  const FiniteRelation& block_gauge() const { return block_gauge_; }
  /// Atom-level block gauge on the atom index set (the diagonal).
  ScaleIndex block_gauge_scale() const { return block_gauge_scale_; }

  IndexSet nontrivial_points() const;
  std::uint32_t nontrivial_atom_count() const;

  ModuleReport classify() const;

 private:
  CoarseSpace space_;
  Partition atoms_;
  std::vector<std::uint32_t> dims_;
  std::vector<std::uint32_t> offsets_;
  std::uint32_t total_dim_ = 0;
  FiniteRelation block_gauge_;
  ScaleIndex block_gauge_scale_;
};

struct SeparatedSubfamily {
  std::vector<std::uint32_t> kept;  // ascending-greedy selection
  /// Ladder scale of the composed bound E_dense o E_ctrl o E_sep certifying
  /// density of the kept union.
  ScaleIndex certified_dense_scale;
  /// Least ladder scale at which the kept union is actually dense.
  ScaleIndex dense_scale;
};

/// Greedy (ascending index) maximal subfamily pairwise separated by the
/// entourage at scale e, with the density certificate from the composed
/// bound.
SeparatedSubfamily greedy_separated_subfamily(const CoarseSpace& space,
                                              std::span<const IndexSet> family, ScaleIndex e);

/// Coarsens the atom partition so that every new block contains one of the
/// seed sets: separated-core selection followed by attachment of leftover
/// atoms, both by ascending index.
Partition refine_to_discrete_partition(const GeoModule& m, std::span<const IndexSet> seeds);

/// Disjointification C_i = A_i minus the union of earlier covers, empties
/// dropped.
Partition discretize(const CoarseSpace& space, std::span<const IndexSet> covers);

}  // namespace coarse
