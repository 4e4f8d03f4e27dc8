#include <doctest.h>

#include "coarse/suites.hpp"
#include "fixtures.hpp"

using namespace coarse;

namespace {

FiniteRelation graph_of(const CoarseSpace& sx, const CoarseSpace& sy,
                        const std::vector<std::uint32_t>& f) {
  std::vector<std::pair<std::uint32_t, std::uint32_t>> yx;
  for (std::uint32_t x = 0; x < f.size(); ++x) yx.emplace_back(f[x], x);
  return FiniteRelation::from_pairs(sx.ground(), sy.ground(), yx);
}

}  // namespace

TEST_CASE("check_controlled and moduli") {
  auto line = tf::line4();

  SUBCASE("identity") {
    auto check = check_controlled(line, line, FiniteRelation::diagonal(line.ground()));
    REQUIRE(check.ok());
    for (std::uint32_t i = 0; i < line.levels(); ++i)
      CHECK(check.map->modulus(i) == ScaleIndex::at(i));
    CHECK(check.map->everywhere_defined_scale() == ScaleIndex::at(0));
  }

  SUBCASE("doubling clipped to the line") {
    // x -> min(2x, 3); rho(1) computed against the brute-force composition
    auto check = check_controlled(line, line, graph_of(line, line, {0, 2, 3, 3}));
    REQUIRE(check.ok());
    const FiniteRelation r = check.map->relation();
    const FiniteRelation spread =
        tf::compose_oracle(r, tf::compose_oracle(line.entourage_at(1), transpose(r)));
    CHECK(line.entourage_scale(spread) == ScaleIndex::at(2));
    CHECK(check.map->modulus(1) == ScaleIndex::at(2));
  }

  SUBCASE("modulus tables are monotone") {
    testgen::Rng rng(97);
    for (int k = 0; k < 25; ++k) {
      CoarseSpace sx = testgen::random_space(rng, 8, 1, 2);
      CoarseSpace sy = testgen::random_space(rng, 8, 1, 2);
      ControlledMap f =
          require_controlled(sx, sy, testgen::random_controlled_graph(rng, sx, sy, false));
      for (std::uint32_t i = 0; i + 1 < sx.levels(); ++i)
        CHECK(f.modulus(i) <= f.modulus(i + 1));
      CHECK(f.modulus(sx.top_scale()).is_finite());
    }
  }

  SUBCASE("component mixing is rejected with a witness") {
    auto pair = tf::pair2x2();
    const std::vector<std::pair<std::uint32_t, std::uint32_t>> pairs{{0, 0}, {1, 1}, {2, 0}};
    auto check = check_controlled(pair, pair,
                                  FiniteRelation::from_pairs(pair.ground(), pair.ground(),
                                                             pairs));
    REQUIRE_FALSE(check.ok());
    REQUIRE(check.witness.has_value());
    const auto [w1, w2] = std::pair(check.witness->first, check.witness->second);
    CHECK(pair.component_of(w1.second) == pair.component_of(w2.second));
    CHECK(pair.component_of(w1.first) != pair.component_of(w2.first));
  }
}

TEST_CASE("closeness certificates") {
  auto line = tf::line4();
  ControlledMap id = require_controlled(line, line, FiniteRelation::diagonal(line.ground()));

  SUBCASE("reflexive at (0,0)") {
    auto cert = closeness(id, id);
    CHECK(cert.close);
    CHECK(cert.source_scale == ScaleIndex::at(0));
    CHECK(cert.target_scale == ScaleIndex::at(0));
    CHECK(cert.one_sided_scale == ScaleIndex::at(0));
  }

  SUBCASE("shift by one") {
    ControlledMap shift =
        require_controlled(line, line, graph_of(line, line, {1, 2, 3, 3}));
    auto cert = closeness(id, shift);
    REQUIRE(cert.close);
    CHECK(cert.target_scale == ScaleIndex::at(1));
    CHECK(cert.source_scale == ScaleIndex::at(0));
    CHECK(cert.one_sided_scale.is_finite());
  }

  SUBCASE("component swap is not close to the identity") {
    auto pair = tf::pair2x2();
    ControlledMap idp =
        require_controlled(pair, pair, FiniteRelation::diagonal(pair.ground()));
    ControlledMap swap = require_controlled(pair, pair, graph_of(pair, pair, {2, 3, 0, 1}));
    auto cert = closeness(idp, swap);
    CHECK_FALSE(cert.close);
    CHECK(cert.one_sided_scale.is_unbounded());
  }
}

TEST_CASE("coarse composition with receipt") {
  auto line = tf::line4();

  SUBCASE("identity gives receipt 0") {
    ControlledMap id = require_controlled(line, line, FiniteRelation::diagonal(line.ground()));
    GroundSet w(2);
    FiniteRelation s = FiniteRelation::from_pairs(
        w, line.ground(), std::vector<std::pair<std::uint32_t, std::uint32_t>>{{1, 0}, {2, 1}});
    auto out = coarse_compose(id, s);
    CHECK(out.receipt_scale == 0);
    CHECK(out.relation == compose(compose(id.relation(), line.entourage_at(0)), s));
  }

  SUBCASE("partial domain forces a thickening receipt") {
    // f defined on {0,1} only; s projects onto {2}
    ControlledMap f = require_controlled(
        line, line, FiniteRelation::diagonal_over(line.ground(), tf::set(4, {0, 1})));
    GroundSet w(1);
    FiniteRelation s = FiniteRelation::from_pairs(
        w, line.ground(), std::vector<std::pair<std::uint32_t, std::uint32_t>>{{2, 0}});
    auto out = coarse_compose(f, s);
    CHECK(out.receipt_scale == 1);
    CHECK(image(out.relation, IndexSet::full(1)).any());
  }

  SUBCASE("uncovered domain is an error") {
    auto pair = tf::pair2x2();
    ControlledMap f = require_controlled(
        pair, pair, FiniteRelation::diagonal_over(pair.ground(), tf::set(4, {0, 1})));
    GroundSet w(1);
    FiniteRelation s = FiniteRelation::from_pairs(
        w, pair.ground(), std::vector<std::pair<std::uint32_t, std::uint32_t>>{{2, 0}});
    CHECK_THROWS_AS(coarse_compose(f, s), Error);
    try {
      coarse_compose(f, s);
    } catch (const Error& e) {
      CHECK(e.code() == errc::domain_not_covered);
    }
  }

  SUBCASE("close representatives give close outputs") {
    testgen::Rng rng(41);
    for (int k = 0; k < 20; ++k) {
      CoarseSpace sx = testgen::random_space(rng, 7, 1, 2);
      CoarseSpace sy = testgen::random_space(rng, 7, 1, 2);
      CoarseSpace sw = testgen::random_space(rng, 5, 1, 2);
      ControlledMap f =
          require_controlled(sx, sy, testgen::random_controlled_graph(rng, sx, sy, false));
      FiniteRelation s = testgen::random_controlled_graph(rng, sw, sx, false);
      FiniteRelation s2 =
          compose(sx.entourage_at(testgen::pick(rng, 0, sx.top_scale())), s);
      ControlledMap o1 = require_controlled(sw, sy, coarse_compose(f, s).relation);
      ControlledMap o2 = require_controlled(sw, sy, coarse_compose(f, s2).relation);
      CHECK(closeness(o1, o2).close);
    }
  }
}

TEST_CASE("properness") {
  auto line = tf::line4();
  auto pair = tf::pair2x2();

  CHECK(is_proper(require_controlled(line, line, FiniteRelation::diagonal(line.ground())))
            .proper);

  // collapse of both clusters onto a single point
  CoarseSpace point = CoarseSpace::from_metric({{0.0}}, {0});
  FiniteRelation collapse = FiniteRelation::full(pair.ground(), point.ground());
  auto report = is_proper(require_controlled(pair, point, collapse));
  CHECK_FALSE(report.proper);
  REQUIRE(report.witness.has_value());
  CHECK(report.witness->source_class_a != report.witness->source_class_b);

  ControlledMap swap = require_controlled(
      pair, pair,
      FiniteRelation::from_pairs(pair.ground(), pair.ground(),
                                 std::vector<std::pair<std::uint32_t, std::uint32_t>>{
                                     {2, 0}, {3, 1}, {0, 2}, {1, 3}}));
  CHECK(is_proper(swap).proper);
}

TEST_CASE("embedding modulus") {
  auto line = tf::line4();

  SUBCASE("identity") {
    auto em = embedding_modulus(
        require_controlled(line, line, FiniteRelation::diagonal(line.ground())));
    REQUIRE(em.embedding);
    for (std::uint32_t j = 0; j < line.levels(); ++j) CHECK(em.omega[j] == ScaleIndex::at(j));
  }

  SUBCASE("two-point subspace inclusion") {
    auto sub = tf::two_point_line();  // {0,2} with its induced metric
    FiniteRelation incl = FiniteRelation::from_pairs(
        sub.ground(), line.ground(),
        std::vector<std::pair<std::uint32_t, std::uint32_t>>{{0, 0}, {2, 1}});
    auto em = embedding_modulus(require_controlled(sub, line, incl));
    REQUIRE(em.embedding);
    // oracle by enumeration: op(R) o F_j o R mapped into the sub ladder
    std::vector<ScaleIndex> expect;
    for (std::uint32_t j = 0; j < line.levels(); ++j)
      expect.push_back(sub.entourage_scale(
          compose(transpose(incl), compose(line.entourage_at(j), incl))));
    CHECK(em.omega == expect);
    CHECK(em.omega == std::vector<ScaleIndex>{ScaleIndex::at(0), ScaleIndex::at(0),
                                              ScaleIndex::at(1), ScaleIndex::at(1)});
  }

  SUBCASE("collapsing two components is not an embedding") {
    auto pair = tf::pair2x2();
    CoarseSpace point = CoarseSpace::from_metric({{0.0}}, {0});
    auto em = embedding_modulus(
        require_controlled(pair, point, FiniteRelation::full(pair.ground(), point.ground())));
    CHECK_FALSE(em.embedding);
  }
}

TEST_CASE("coarse equivalences") {
  auto line = tf::line4();

  SUBCASE("identity") {
    auto eq = is_coarse_equivalence(
        require_controlled(line, line, FiniteRelation::diagonal(line.ground())));
    CHECK(eq.equivalence);
    REQUIRE(eq.inverse.has_value());
    CHECK(eq.cert_f_finv->close);
    CHECK(eq.cert_finv_f->close);
  }

  SUBCASE("nearest-point retraction onto a coarsely dense pair") {
    auto sub = tf::two_point_line();
    FiniteRelation nearest = FiniteRelation::from_pairs(
        line.ground(), sub.ground(),
        std::vector<std::pair<std::uint32_t, std::uint32_t>>{{0, 0}, {0, 1}, {1, 2}, {1, 3}});
    auto eq = is_coarse_equivalence(require_controlled(line, sub, nearest));
    CHECK(eq.equivalence);
  }

  SUBCASE("inclusion of one component is not an equivalence") {
    auto pair = tf::pair2x2();
    CoarseSpace cluster = CoarseSpace::from_metric({{0, 1}, {1, 0}}, {0, 1});
    FiniteRelation incl = FiniteRelation::from_pairs(
        cluster.ground(), pair.ground(),
        std::vector<std::pair<std::uint32_t, std::uint32_t>>{{0, 0}, {1, 1}});
    auto eq = is_coarse_equivalence(require_controlled(cluster, pair, incl));
    CHECK_FALSE(eq.equivalence);
  }
}

TEST_CASE("partition quotient equivalence") {
  auto line = tf::line4();

  SUBCASE("singletons give an isomorphic copy") {
    auto q = partition_quotient_equivalence(line, Partition::singletons(line.ground()));
    CHECK(q.space.size() == 4);
    CHECK(q.equivalence.equivalence);
    CHECK(q.space.component_count() == 1);
  }

  SUBCASE("halving Line4") {
    Partition halves(line.ground(), {tf::set(4, {0, 1}), tf::set(4, {2, 3})});
    auto q = partition_quotient_equivalence(line, halves);
    CHECK(q.space.size() == 2);
    CHECK(q.space.connected());
    CHECK(q.equivalence.equivalence);
  }

  SUBCASE("components of Pair2x2") {
    auto pair = tf::pair2x2();
    auto q = partition_quotient_equivalence(pair, pair.components());
    CHECK(q.space.size() == 2);
    CHECK(q.space.component_count() == 2);
    CHECK(q.equivalence.equivalence);
  }

  SUBCASE("uncontrolled partition is rejected") {
    auto pair = tf::pair2x2();
    Partition cross(pair.ground(), {tf::set(4, {0, 2}), tf::set(4, {1, 3})});
    CHECK_THROWS_AS(partition_quotient_equivalence(pair, cross), Error);
  }
}

TEST_CASE("embeddings reflect coarse containment of images") {
  testgen::Rng rng(83);
  int covered = 0;
  for (int k = 0; k < 40; ++k) {
    CoarseSpace sx = testgen::random_space(rng, 7, 1, 2);
    CoarseSpace sy = testgen::random_space(rng, 7, 1, 2);
    ControlledMap f =
        require_controlled(sx, sy, testgen::random_controlled_graph(rng, sx, sy, false));
    if (!embedding_modulus(f).embedding) continue;
    ++covered;
    IndexSet z(sx.size()), z2(sx.size());
    for (std::uint32_t x = 0; x < sx.size(); ++x) {
      if (testgen::unit_real(rng) < 0.4) z.set(x);
      if (testgen::unit_real(rng) < 0.6) z2.set(x);
    }
    if (z.none() || z2.none()) continue;
    const IndexSet fz = image(f.relation(), z);
    const IndexSet fz2 = image(f.relation(), z2);
    if (fz.none() || fz2.none()) continue;
    if (sy.coarse_containment(fz, fz2).is_finite())
      CHECK(sx.coarse_containment(z, z2).is_finite());
  }
  CHECK(covered > 0);
}

TEST_CASE("function representative picks least targets") {
  auto line = tf::line4();
  FiniteRelation rel = FiniteRelation::from_pairs(
      line.ground(), line.ground(),
      std::vector<std::pair<std::uint32_t, std::uint32_t>>{{1, 0}, {3, 0}, {2, 2}});
  ControlledMap f = require_controlled(line, line, rel);
  FiniteRelation g = f.function_representative();
  CHECK(g.pairs() ==
        std::vector<std::pair<std::uint32_t, std::uint32_t>>{{1, 0}, {2, 2}});
}
