#pragma once

#include <optional>
#include <string>
#include <vector>

#include "coarse/space.hpp"

namespace coarse {

/// Two R-pairs whose source coordinates share an e_max class while the target
/// coordinates do not; defeats controlledness.
struct ControlledWitness {
  std::pair<std::uint32_t, std::uint32_t> first;   // (y, x)
  std::pair<std::uint32_t, std::uint32_t> second;  // (y', x')
  std::string to_string() const;
};

class ControlledMap;
struct ControlledCheck;
ControlledCheck check_controlled(const CoarseSpace& source, const CoarseSpace& target,
                                 const FiniteRelation& relation);

/// A relation between coarse spaces together with its certified moduli:
/// rho(i) = least j with R o E_i o transpose(R) contained in F_j, and the
/// least scale at which the domain projection is coarsely dense. Built via
/// check_controlled, which is the only way to certify controlledness.
class ControlledMap {
 public:
  const CoarseSpace& source_space() const { return source_; }
  const CoarseSpace& target_space() const { return target_; }
  const FiniteRelation& relation() const { return relation_; }

  ScaleIndex modulus(std::uint32_t source_scale) const;
  const std::vector<ScaleIndex>& modulus_table() const { return modulus_; }

  ScaleIndex everywhere_defined_scale() const { return everywhere_defined_; }
  bool coarsely_everywhere_defined() const { return everywhere_defined_.is_finite(); }

  IndexSet domain() const { return relation_.domain(); }
  IndexSet image_of_domain() const { return relation_.image_set(); }

  /// Partial controlled function representative: keeps the least y of every
  /// section R(x).
  FiniteRelation function_representative() const;

 private:
  friend ControlledCheck check_controlled(const CoarseSpace&, const CoarseSpace&,
                                          const FiniteRelation&);

  ControlledMap(CoarseSpace source, CoarseSpace target, FiniteRelation relation,
                std::vector<ScaleIndex> modulus, ScaleIndex everywhere_defined)
      : source_(std::move(source)),
        target_(std::move(target)),
        relation_(std::move(relation)),
        modulus_(std::move(modulus)),
        everywhere_defined_(everywhere_defined) {}

  CoarseSpace source_;
  CoarseSpace target_;
  FiniteRelation relation_;
  std::vector<ScaleIndex> modulus_;
  ScaleIndex everywhere_defined_;
};

/// Result of check_controlled: either the certified map or a witness pair.
/// The spread R o e_max o transpose(R) decides controlledness; on success the
/// full modulus table is computed.
struct ControlledCheck {
  std::optional<ControlledMap> map;
  std::optional<ControlledWitness> witness;
  bool ok() const { return map.has_value(); }
};

/// As check_controlled, but throws errc::not_controlled with the witness.
ControlledMap require_controlled(const CoarseSpace& source, const CoarseSpace& target,
                                 const FiniteRelation& relation);

/// Certificate that two relations are close: both containments
/// R' <= F_j o R o E_i and R <= F_j o R' o E_i hold at the same (i, j).
/// Scanning order makes the certificate deterministic: minimize i+j, then i.
struct ClosenessCertificate {
  bool close = false;
  ScaleIndex source_scale;  // i
  ScaleIndex target_scale;  // j
  /// Scale of g o transpose(f) as an entourage of the target, the one-sided
  /// closeness test; Unbounded when that composition leaves e_max.
  ScaleIndex one_sided_scale;
  std::string to_string() const;
};

ClosenessCertificate closeness(const ControlledMap& f, const ControlledMap& g);

struct CoarseComposition {
  FiniteRelation relation;       // the literal composition after thickening
  std::uint32_t receipt_scale;   // j used in f.relation o F_j
};

/// Coarse composition f o s for a relation s with target-side projection
/// coarsely contained in the domain of f. Thickens f by the minimal ladder
/// level F_j with pi_Y(s) inside the thickened domain, then composes
/// literally; the receipt makes the representative choice auditable.
CoarseComposition coarse_compose(const ControlledMap& f, const FiniteRelation& s);

struct PropernessWitness {
  std::uint32_t target_class;
  std::uint32_t source_class_a;
  std::uint32_t source_class_b;
};

struct PropernessReport {
  bool proper = false;
  std::optional<PropernessWitness> witness;
};

/// Preimages of bounded sets are bounded; on finite models, every e_max class
/// of the target pulls back into at most one e_max class of the source.
PropernessReport is_proper(const ControlledMap& f);

struct EmbeddingModulus {
  bool embedding = false;
  /// omega[j] = least i with transpose(R) o F_j o R inside E_i.
  std::vector<ScaleIndex> omega;
};

EmbeddingModulus embedding_modulus(const ControlledMap& f);

struct EquivalenceReport {
  bool equivalence = false;
  std::optional<ControlledMap> inverse;
  std::optional<ClosenessCertificate> cert_f_finv;  // f o transpose(f) ~ id_Y
  std::optional<ClosenessCertificate> cert_finv_f;  // transpose(f) o f ~ id_X
  std::string failure;
};

/// f is a coarse equivalence iff transpose(f) is its coarse inverse:
/// transpose must be controlled and both directions coarsely everywhere
/// defined; the certificates witness the compositions being close to the
/// identities.
EquivalenceReport is_coarse_equivalence(const ControlledMap& f);

struct QuotientResult {
  CoarseSpace space;        // over the block index set
  ControlledMap map;        // union of {block} x C_block, a coarse equivalence
  EquivalenceReport equivalence;
};

/// Controlled partitions induce a coarse equivalence onto their index set;
/// the quotient ladder is F_i = {(a,b) : C_a u C_b is E_i-bounded} completed
/// with the diagonal.
QuotientResult partition_quotient_equivalence(const CoarseSpace& space, const Partition& p);

}  // namespace coarse
