#pragma once

#include <array>
#include <random>

#include "coarse/operator.hpp"

namespace coarse {

enum class CoverKind { partial_isometry, isometry, coisometry, unitary };

const char* cover_kind_name(CoverKind k) noexcept;

/// Covering operator for a coarse map, with the certificate that its support
/// is close to the map's relation. The matching records the routing
/// phi: source atom -> target atom behind the basis injections.
struct CoverResult {
  BlockOperator op;
  CoverKind kind;
  ClosenessCertificate certificate;
  std::vector<std::pair<std::uint32_t, std::uint32_t>> matching;
  std::uint32_t routing_scale = 0;   // minimal ladder scale with eligible targets
  double kind_identity_error = 0.0;  // ||t*t - P||, ||tt* - 1|| etc., per kind
};

/// Builds a covering operator from canonical basis injections, following the
/// routing phi(i) = least eligible target block at the minimal ladder scale.
/// A seed switches the tie-breaking to a seeded uniform choice among the
/// eligible targets (and shuffles the coordinate assignment), used to
/// exercise closeness of different covers of one map.
///
/// Hypotheses per kind, checked and reported:
///   partial_isometry: routed target blocks large enough;
///   isometry:         f coarsely everywhere defined, ampleness as above;
///   coisometry:       f coarsely surjective, source side ample enough;
///   unitary:          both directions, matched dimensions equal.
CoverResult cover(const ControlledMap& f, const GeoModule& source_module,
                  const GeoModule& target_module, CoverKind kind,
                  std::optional<std::uint64_t> seed = std::nullopt);

struct CoverCloseness {
  /// measured[i][j] = propagation scale of t_i t_j^*; all finite when both
  /// operators cover the same map.
  std::array<std::array<ScaleIndex, 2>, 2> measured;
  /// ladder bound predicted from the supports: S_i o gauge o op S_j.
  std::array<std::array<ScaleIndex, 2>, 2> predicted;
  bool all_finite = false;
};

CoverCloseness covers_are_close(const CoverResult& t0, const CoverResult& t1);

/// Finite sum decomposition of a controlled-propagation operator into pieces
/// whose nonzero blocks form partial injections of the partition, via greedy
/// coloring of the block adjacency graph.
struct BandDecomposition {
  std::vector<BlockOperator> pieces;
  /// (block row, block col) -> color, for the nonzero blocks.
  std::vector<std::pair<std::pair<std::uint32_t, std::uint32_t>, std::uint32_t>> coloring;
  std::uint32_t max_degree = 0;
};

BandDecomposition band_decompose(const BlockOperator& t, const Partition& p);

/// Block-diagonal compression sum chi_C t chi_C over the partition blocks;
/// the faithful conditional expectation onto the Cartan candidate.
BlockOperator conditional_expectation(const BlockOperator& t, const Partition& p);

struct CommutantResult {
  std::uint32_t dimension = 0;   // computed by solving the commutation system
  std::uint32_t expected = 0;    // blocks of positive dimension
  std::vector<Matrix> basis;     // canonical scalar-block basis
};

/// Solves {z : z g = g z for the generators g of the block-diagonal algebra}
/// and reports the solution-space dimension next to the scalar-block count.
CommutantResult commutant_dimension(const Partition& p, const GeoModule& m);

struct ApproxUnitWitness {
  BlockOperator p_lambda;
  std::vector<Matrix> lambda;    // per-atom orthonormal columns
  double certified_bound = 0.0;  // 10 eps, 5 per parity
  double measured = 0.0;         // ||t - p_lambda t||
  double measured_even = 0.0;    // ||t chi_even - p t chi_even||, certified 5 eps
  double measured_odd = 0.0;
  /// Bookkeeping of the construction: the equivalence classes of atoms, the
  /// anuli per class with their even/odd split, and the kept rank per atom.
  std::vector<std::vector<std::uint32_t>> classes;
  std::vector<std::vector<IndexSet>> anuli;  // per class, point-level B_n
  IndexSet even_part;
  IndexSet odd_part;
  std::vector<std::uint32_t> kept_rank;  // per atom
  ScaleIndex p_propagation;              // inside the block gauge
};

/// Runs the approximate-unit construction at finite scale: joins the
/// discreteness gauge with the propagation entourage, splits the space into
/// concentric anuli per coarse class, and keeps per-atom subspaces from the
/// eps-truncated SVD of each anulus block. The certified bound is the
/// certified 10 eps ledger, 5 per parity.
ApproxUnitWitness approximate_unit(const BlockOperator& t, double epsilon);

struct ComponentDecomposition {
  std::vector<BlockOperator> pieces;               // chi_i t chi_i per component
  std::vector<ScaleIndex> component_propagation;   // per component
  ScaleIndex equi_scale;                           // max of the above
  bool sum_exact = false;                          // t == sum of pieces
  bool off_blocks_zero = false;
};

/// Splits an operator along the coarsely connected components; for finite
/// propagation the off-component blocks vanish and t is the sum of its
/// compressions.
ComponentDecomposition component_decompose(const BlockOperator& t);

struct KTheoryUnitary {
  Matrix u;  // 2D x 2D block unitary
  double selfadjoint_error = 0.0;
  double involution_error = 0.0;
  double unitary_error = 0.0;
  double conjugation_error = 0.0;  // max over sampled x of ||alpha_1(x) - u alpha_0(x) u*||
  std::array<ScaleIndex, 4> block_propagation;  // 1-t0t0*, t0t1*, t1t0*, 1-t1t1*
  bool blocks_controlled = false;
};

/// The 2x2 unitary involution intertwining the two corner embeddings
/// Ad(t_0) and Ad(t_1) of isometries with the same coarse support;
/// conjugation is sampled on `trials` seeded random arguments.
KTheoryUnitary ktheory_unitary(const BlockOperator& t0, const BlockOperator& t1,
                               std::uint32_t trials = 10, std::uint64_t seed = 0,
                               double isometry_tolerance = 1e-10);

struct QlIsometryCheck {
  bool pass = false;
  ScaleIndex propagation;
  /// On failure, the separated measurable pair (A', A) with ||chi_A' t chi_A||
  /// equal to 1.
  std::optional<std::pair<IndexSet, IndexSet>> witness;
  double witness_norm = 0.0;
};

/// Controlled quasi-local isometries have controlled propagation; emits the
/// norm-one separated witness when the propagation is unbounded.
QlIsometryCheck ql_controlled_isometry_check(const BlockOperator& t,
                                             double isometry_tolerance = 1e-10);

}  // namespace coarse
