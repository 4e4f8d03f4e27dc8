#pragma once

#include <Eigen/Dense>
#include <complex>
#include <optional>

#include "coarse/map.hpp"
#include "coarse/module.hpp"

namespace coarse {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;

/// Exact quasi-locality profiles enumerate measurable sets; past this many
/// atoms only the bound profiles are computed.
inline constexpr std::size_t kDefaultAtomLimit = 16;
inline constexpr double kDefaultRelativeTolerance = 1e-12;

/// Largest singular value, fixed reduction order (bit-stable across runs).
double operator_norm(const Matrix& m);

/// Bounded operator between the total spaces of two geometric modules, held
/// as a dense complex matrix in canonical block coordinates. The zero
/// tolerance decides which blocks count as nonzero in support and rank
/// computations; tau = 0 is exact mode (an entry is nonzero iff it is not
/// the float 0).
class BlockOperator {
 public:
  BlockOperator(GeoModule domain, GeoModule codomain, Matrix matrix,
                std::optional<double> tolerance = std::nullopt);

  static BlockOperator identity(const GeoModule& m, std::optional<double> tolerance = 0.0);
  static BlockOperator zero(const GeoModule& domain, const GeoModule& codomain);

  const GeoModule& domain_module() const { return domain_; }
  const GeoModule& codomain_module() const { return codomain_; }
  const Matrix& matrix() const { return matrix_; }
  double tolerance() const { return tolerance_; }

  /// Same module on both sides.
  bool endomorphism() const { return domain_.same_as(codomain_); }
  /// Domain and codomain modules live over the same coarse space.
  bool same_space() const {
    return domain_.space().ground().same_as(codomain_.space().ground());
  }

  Matrix block(std::uint32_t atom_row, std::uint32_t atom_col) const;
  double block_norm(std::uint32_t atom_row, std::uint32_t atom_col) const;
  bool block_nonzero(std::uint32_t atom_row, std::uint32_t atom_col) const;

  /// Norm of the submatrix selected by unions of atoms: chi_rows * t * chi_cols.
  double masked_norm(const IndexSet& atom_rows, const IndexSet& atom_cols) const;

  BlockOperator adjoint() const;
  /// chi_b t chi_a as an operator, atom-level masks.
  BlockOperator compress(const IndexSet& atom_rows, const IndexSet& atom_cols) const;

  friend BlockOperator operator*(const BlockOperator& t, const BlockOperator& s);
  friend BlockOperator operator+(const BlockOperator& t, const BlockOperator& s);
  friend BlockOperator operator-(const BlockOperator& t, const BlockOperator& s);
  BlockOperator scaled(Complex factor) const;

 private:
  GeoModule domain_;
  GeoModule codomain_;
  Matrix matrix_;
  double tolerance_;
};

struct SupportResult {
  FiniteRelation atom_level;   // (codomain atoms) x (domain atoms)
  FiniteRelation point_level;  // union of atom rectangles
};

/// S = {(b, a) : ||chi_b t chi_a|| > tau}, plus its pointwise lift. Distinct
/// blocks are orthogonal, so no cancellation hides support.
SupportResult support(const BlockOperator& t);

/// Least ladder scale containing the point-level support; Unbounded when the
/// support leaves e_max. Requires domain and codomain over the same space.
ScaleIndex propagation_scale(const BlockOperator& t);

struct QlProfile {
  bool exact = false;
  /// Per scale: in exact mode the true value, otherwise the single-block
  /// lower bound.
  std::vector<double> values;
  /// Per scale: the root-sum-of-squares upper bound (equals values only
  /// when the profile is exactly zero); retained in exact mode too.
  std::vector<double> upper;
};

/// eps(i) = max over measurable pairs (A', A) with A' E_i-separated from A of
/// ||chi_A' t chi_A||. Exact mode enumerates all unions of atoms A and takes
/// the maximal separated complement; monotonicity of submatrix norms makes
/// that maximizing pair canonical.
QlProfile ql_profile(const BlockOperator& t, std::size_t atom_limit = kDefaultAtomLimit);

/// Exact eps for one separation relation.
double ql_value_at(const BlockOperator& t, const FiniteRelation& separation,
                   std::size_t atom_limit = kDefaultAtomLimit);
/// [single separated block max, root sum of squared separated block norms].
std::pair<double, double> ql_bounds_at(const BlockOperator& t, const FiniteRelation& separation);

/// trunc(i) = min over j <= i of ||t - Pi_j(t)||, where Pi_j zeroes every
/// block not inside E_j: the best truncation distance within scale i, an
/// upper bound for the distance to E_i-propagation operators. The prefix
/// minimum keeps the profile nonincreasing; the raw ||t - Pi_i(t)|| is not
/// (zeroing blocks can raise a spectral norm).
std::vector<double> trunc_profile(const BlockOperator& t);
/// The scale-i pattern truncation Pi_i(t).
BlockOperator truncate_to_scale(const BlockOperator& t, ScaleIndex i);
/// The approximant realizing trunc(i): the best prefix truncation.
BlockOperator truncation_witness(const BlockOperator& t, ScaleIndex i);

struct OperatorProperness {
  bool proper = false;
  /// The support-based and the chi_B t = chi_B t chi_A characterizations,
  /// which must agree on admissible (atom) modules.
  bool characterizations_agree = false;
  std::optional<PropernessWitness> witness;
};

OperatorProperness is_proper_operator(const BlockOperator& t);

struct LocalRankProfile {
  std::vector<std::uint32_t> chi_t;  // rank of chi_a t, per codomain atom
  std::vector<std::uint32_t> t_chi;  // rank of t chi_a, per domain atom
};

LocalRankProfile local_rank_profile(const BlockOperator& t);

struct SupportComposeCheck {
  FiniteRelation supp_ts;  // point level
  FiniteRelation bound;    // S_t o gauge o S_s
  bool compose_ok = false;
  bool adjoint_ok = false;  // support(t*) == transpose(support(t)), both factors
};

/// Support calculus for a composition: Supp(ts) inside
/// S_t o E~ o S_s with E~ the middle module's block gauge; also re-checks the
/// adjoint law on both factors.
SupportComposeCheck compose_support_bound_check(const BlockOperator& t, const BlockOperator& s);

/// Supp(t+s) inside S_t u S_s, checked at the operators' tolerances.
bool sum_support_check(const BlockOperator& t, const BlockOperator& s);

struct AdResult {
  BlockOperator result;        // t x t*
  FiniteRelation predicted;    // S o E~ o E o E~ o op S
  ScaleIndex achieved_scale;   // ladder scale of Supp(t x t*)
  ScaleIndex predicted_scale;  // ladder scale of the predicted bound
  bool contained = false;      // Supp(t x t*) inside predicted, exact
};

/// Conjugation x -> t x t* with its quantitative propagation modulus;
/// E covers Supp(x) (the ladder entourage at x's propagation scale when
/// finite, else the literal support).
AdResult ad(const BlockOperator& t, const BlockOperator& x);

struct AdViolation {
  BlockOperator probe;              // matrix unit of bounded propagation
  ScaleIndex probe_scale;           // its propagation scale (finite)
  ScaleIndex conjugate_scale;       // propagation of t probe t* (unbounded)
  std::pair<std::uint32_t, std::uint32_t> source_atoms;
};

/// For a non-controlled t, the matrix-unit witness of the converse: an x of
/// bounded propagation whose conjugate escapes every ladder bound. Throws
/// errc::not_controlled_operator when t is in fact controlled.
AdViolation ad_violation_witness(const BlockOperator& t);

struct QlArithmeticRow {
  std::uint32_t scale;
  ScaleIndex composed_ladder_scale;  // E_i o E~ o E_i mapped into the ladder
  double lhs;                        // eps_st at the composed relation
  double rhs;                        // eps_s ||t|| + eps_t ||s||
  bool over_ladder;                  // composition escaped e_max (reserved)
};

struct QlArithmeticCheck {
  bool ok = false;
  std::vector<QlArithmeticRow> rows;
};

/// Quasi-locality arithmetic: eps_st(E_i o E~ o E_i) <= eps_s(i)||t|| +
/// eps_t(i)||s|| for every ladder scale, profiles exact.
QlArithmeticCheck ql_arithmetic_check(const BlockOperator& s, const BlockOperator& t,
                                      std::size_t atom_limit = kDefaultAtomLimit);

struct OperatorReport {
  SupportResult supp;
  ScaleIndex propagation;
  QlProfile ql;
  std::vector<double> trunc;
  /// Modulus table of the support as a controlled relation; empty with a
  /// witness when the support is not controlled.
  bool controlled = false;
  std::vector<ScaleIndex> controlled_modulus;
  std::optional<ControlledWitness> controlled_witness;
  OperatorProperness properness;
  LocalRankProfile local_ranks;
  double norm = 0.0;
  double tolerance = 0.0;
};

/// Full per-operator analysis (requires same-space modules).
OperatorReport analyze(const BlockOperator& t, std::size_t atom_limit = kDefaultAtomLimit);

namespace detail {
/// Numerical rank: singular values above max(tau, max(m,n)*eps*sigma_max).
std::uint32_t matrix_rank(const Matrix& m, double tau);
}  // namespace detail

}  // namespace coarse
