#include "coarse/map.hpp"

namespace coarse {

std::string ControlledWitness::to_string() const {
  return "pairs (" + std::to_string(first.first) + "," + std::to_string(first.second) +
         ") and (" + std::to_string(second.first) + "," + std::to_string(second.second) +
         ") have e_max-related sources but unrelated targets";
}

std::string ClosenessCertificate::to_string() const {
  if (!close) return "absent";
  return "(i=" + source_scale.to_string() + ", j=" + target_scale.to_string() +
         ", one-sided=" + one_sided_scale.to_string() + ")";
}

ScaleIndex ControlledMap::modulus(std::uint32_t source_scale) const {
  require(source_scale < modulus_.size(), errc::scale_out_of_range,
          "modulus at scale " + std::to_string(source_scale));
  return modulus_[source_scale];
}

FiniteRelation ControlledMap::function_representative() const {
  std::vector<std::pair<std::uint32_t, std::uint32_t>> yx;
  const FiniteRelation t = transpose(relation_);  // rows indexed by x
  for (std::uint32_t x = 0; x < source_.size(); ++x)
    if (t.row(x).any()) yx.emplace_back(t.row(x).first(), x);
  return FiniteRelation::from_pairs(relation_.source(), relation_.target(), yx);
}

ControlledCheck check_controlled(const CoarseSpace& source, const CoarseSpace& target,
                                 const FiniteRelation& relation) {
  require_same_ground(relation.source(), source.ground(), "check_controlled");
  require_same_ground(relation.target(), target.ground(), "check_controlled");

  const FiniteRelation spread =
      compose(relation, compose(source.e_max(), transpose(relation)));
  if (!contains(target.e_max(), spread)) {
    // Extract a witness: (y, y') in the spread but outside e_max^Y, then the
    // R-pairs behind it.
    for (std::uint32_t y = 0; y < target.size(); ++y) {
      IndexSet bad = spread.row(y);
      bad -= target.e_max().row(y);
      if (bad.none()) continue;
      const std::uint32_t y2 = bad.first();
      for (std::uint32_t x = 0; x < source.size(); ++x) {
        if (!relation.test(y, x)) continue;
        // partners = all x' with x ~ x' in e_max and (y2, x') in R
        IndexSet partners = source.e_max().row(x);
        partners &= relation.row(y2);
        if (partners.none()) continue;
        ControlledWitness w{{y, x}, {y2, partners.first()}};
        return ControlledCheck{std::nullopt, w};
      }
    }
    fail(errc::not_controlled, "spread left e_max but no witness found (internal)");
  }

  std::vector<ScaleIndex> modulus;
  modulus.reserve(source.levels());
  const FiniteRelation rt = transpose(relation);
  for (std::uint32_t i = 0; i < source.levels(); ++i)
    modulus.push_back(target.entourage_scale(compose(relation, compose(source.entourage_at(i), rt))));

  const ScaleIndex defined = source.dense_scale(relation.domain());
  ControlledMap map(source, target, relation, std::move(modulus), defined);
  return ControlledCheck{std::move(map), std::nullopt};
}

ControlledMap require_controlled(const CoarseSpace& source, const CoarseSpace& target,
                                 const FiniteRelation& relation) {
  ControlledCheck check = check_controlled(source, target, relation);
  if (!check.ok()) fail(errc::not_controlled, check.witness->to_string());
  return *std::move(check.map);
}

ClosenessCertificate closeness(const ControlledMap& f, const ControlledMap& g) {
  require_same_ground(f.source_space().ground(), g.source_space().ground(), "closeness");
  require_same_ground(f.target_space().ground(), g.target_space().ground(), "closeness");
  const CoarseSpace& sx = f.source_space();
  const CoarseSpace& sy = f.target_space();
  const FiniteRelation& r = f.relation();
  const FiniteRelation& r2 = g.relation();

  ClosenessCertificate cert;
  cert.one_sided_scale = sy.entourage_scale(compose(g.relation(), transpose(f.relation())));

  const auto feasible = [&](std::uint32_t i, std::uint32_t j) {
    const FiniteRelation& e = sx.entourage_at(i);
    const FiniteRelation& ff = sy.entourage_at(j);
    return contains(compose(ff, compose(r, e)), r2) && contains(compose(ff, compose(r2, e)), r);
  };

  const auto kx = static_cast<std::uint32_t>(sx.levels() - 1);
  const auto ky = static_cast<std::uint32_t>(sy.levels() - 1);
  for (std::uint32_t s = 0; s <= kx + ky; ++s) {
    for (std::uint32_t i = 0; i <= std::min(s, kx); ++i) {
      const std::uint32_t j = s - i;
      if (j > ky) continue;
      if (feasible(i, j)) {
        cert.close = true;
        cert.source_scale = ScaleIndex::at(i);
        cert.target_scale = ScaleIndex::at(j);
        return cert;
      }
    }
  }
  return cert;  // absent
}

CoarseComposition coarse_compose(const ControlledMap& f, const FiniteRelation& s) {
  require_same_ground(s.target(), f.source_space().ground(), "coarse_compose");
  const CoarseSpace& mid = f.source_space();
  const IndexSet proj = s.image_set();       // pi_Y(s), a subset of the middle space
  const IndexSet dom = f.relation().domain();

  const ScaleIndex j = mid.coarse_containment(proj, dom);
  if (j.is_unbounded())
    fail(errc::domain_not_covered,
         "pi_Y(s) = " + proj.to_string() + " is not coarsely contained in the domain " +
             dom.to_string());

  const FiniteRelation thickened = compose(f.relation(), mid.entourage(j));
  return CoarseComposition{compose(thickened, s), j.value()};
}

PropernessReport is_proper(const ControlledMap& f) {
  const CoarseSpace& sx = f.source_space();
  const CoarseSpace& sy = f.target_space();
  const FiniteRelation rt = transpose(f.relation());

  for (std::uint32_t c = 0; c < sy.component_count(); ++c) {
    const IndexSet pre = image(rt, sy.component_set(c));
    std::optional<std::uint32_t> cls;
    std::optional<PropernessWitness> witness;
    pre.for_each([&](std::uint32_t x) {
      if (witness) return;
      const std::uint32_t cx = sx.component_of(x);
      if (!cls) {
        cls = cx;
      } else if (*cls != cx) {
        witness = PropernessWitness{c, *cls, cx};
      }
    });
    if (witness) return PropernessReport{false, witness};
  }
  return PropernessReport{true, std::nullopt};
}

EmbeddingModulus embedding_modulus(const ControlledMap& f) {
  const CoarseSpace& sx = f.source_space();
  const CoarseSpace& sy = f.target_space();
  const FiniteRelation rt = transpose(f.relation());

  EmbeddingModulus out;
  out.omega.reserve(sy.levels());
  out.embedding = true;
  for (std::uint32_t j = 0; j < sy.levels(); ++j) {
    ScaleIndex i = sx.entourage_scale(compose(rt, compose(sy.entourage_at(j), f.relation())));
    if (i.is_unbounded()) out.embedding = false;
    out.omega.push_back(i);
  }
  return out;
}

EquivalenceReport is_coarse_equivalence(const ControlledMap& f) {
  EquivalenceReport report;
  if (!f.coarsely_everywhere_defined()) {
    report.failure = "not coarsely everywhere defined";
    return report;
  }
  ControlledCheck inv = check_controlled(f.target_space(), f.source_space(),
                                         transpose(f.relation()));
  if (!inv.ok()) {
    report.failure = "transpose is not controlled: " + inv.witness->to_string();
    return report;
  }
  if (!inv.map->coarsely_everywhere_defined()) {
    report.failure = "transpose is not coarsely everywhere defined (not coarsely surjective)";
    return report;
  }

  const CoarseSpace& sx = f.source_space();
  const CoarseSpace& sy = f.target_space();
  ControlledMap ffi = require_controlled(sy, sy, compose(f.relation(), transpose(f.relation())));
  ControlledMap fif = require_controlled(sx, sx, compose(transpose(f.relation()), f.relation()));
  ControlledMap idy = require_controlled(sy, sy, FiniteRelation::diagonal(sy.ground()));
  ControlledMap idx = require_controlled(sx, sx, FiniteRelation::diagonal(sx.ground()));

  report.cert_f_finv = closeness(ffi, idy);
  report.cert_finv_f = closeness(fif, idx);
  report.equivalence = report.cert_f_finv->close && report.cert_finv_f->close;
  if (!report.equivalence) report.failure = "composition not close to the identity";
  report.inverse = std::move(inv.map);
  return report;
}

QuotientResult partition_quotient_equivalence(const CoarseSpace& space, const Partition& p) {
  require_same_ground(p.ground(), space.ground(), "partition_quotient_equivalence");
  const ScaleIndex control = space.partition_control_scale(p);
  if (control.is_unbounded())
    fail(errc::partition_not_controlled, "some block is unbounded");

  GroundSet blocks_ground(p.block_count());
  std::vector<FiniteRelation> ladder;
  ladder.reserve(space.levels());
  for (std::uint32_t i = 0; i < space.levels(); ++i) {
    std::vector<std::pair<std::uint32_t, std::uint32_t>> yx;
    for (std::uint32_t a = 0; a < p.block_count(); ++a) {
      for (std::uint32_t b = 0; b < p.block_count(); ++b) {
        if (a == b) {
          yx.emplace_back(a, b);
          continue;
        }
        IndexSet both = p.block(a);
        both |= p.block(b);
        if (space.bound_scale(both) <= ScaleIndex::at(i)) yx.emplace_back(a, b);
      }
    }
    ladder.push_back(FiniteRelation::from_pairs(blocks_ground, blocks_ground, yx));
  }

  CoarseSpace quotient(blocks_ground, std::move(ladder));

  std::vector<std::pair<std::uint32_t, std::uint32_t>> yx;
  for (std::uint32_t a = 0; a < p.block_count(); ++a)
    p.block(a).for_each([&](std::uint32_t x) { yx.emplace_back(a, x); });
  FiniteRelation rel =
      FiniteRelation::from_pairs(space.ground(), quotient.ground(), yx);

  ControlledMap map = require_controlled(space, quotient, rel);
  EquivalenceReport eq = is_coarse_equivalence(map);
  return QuotientResult{std::move(quotient), std::move(map), std::move(eq)};
}

}  // namespace coarse
