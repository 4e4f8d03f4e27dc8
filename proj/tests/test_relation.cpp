#include <doctest.h>

#include "coarse/suites.hpp"
#include "fixtures.hpp"

using namespace coarse;

TEST_CASE("composition basics") {
  auto space = tf::line4();
  const GroundSet& g = space.ground();
  FiniteRelation e1 = tf::band(space, 1);

  SUBCASE("identity of composition") {
    const FiniteRelation d = FiniteRelation::diagonal(g);
    CHECK(compose(d, e1) == e1);
    CHECK(compose(e1, d) == e1);
  }

  SUBCASE("band composition on Line4") {
    // E_1 o E_1 = E_2, checked against the brute-force oracle and the band.
    const FiniteRelation composed = compose(e1, e1);
    CHECK(composed == tf::compose_oracle(e1, e1));
    CHECK(composed == tf::band(space, 2));
  }

  SUBCASE("empty absorbs") {
    const FiniteRelation none = FiniteRelation::empty(g, g);
    CHECK(compose(none, e1).is_empty());
    CHECK(compose(e1, none).is_empty());
  }

  SUBCASE("ground set mismatch is a hard error") {
    GroundSet other(4);
    FiniteRelation r = FiniteRelation::diagonal(other);
    CHECK_THROWS_AS(compose(r, e1), Error);
    try {
      compose(r, e1);
    } catch (const Error& e) {
      CHECK(e.code() == errc::ground_set_mismatch);
    }
  }
}

TEST_CASE("transpose") {
  auto space = tf::line4();
  const GroundSet& g = space.ground();

  CHECK(transpose(FiniteRelation::diagonal(g)) == FiniteRelation::diagonal(g));

  const std::vector<std::pair<std::uint32_t, std::uint32_t>> one{{2, 0}};
  FiniteRelation r = FiniteRelation::from_pairs(g, g, one);
  CHECK(transpose(r).pairs() == std::vector<std::pair<std::uint32_t, std::uint32_t>>{{0, 2}});

  testgen::Rng rng(7);
  for (int k = 0; k < 50; ++k) {
    GroundSet x(testgen::pick(rng, 1, 9)), y(testgen::pick(rng, 1, 9)),
        z(testgen::pick(rng, 1, 9));
    FiniteRelation b = testgen::random_relation(rng, x, y, 0.3);
    FiniteRelation a = testgen::random_relation(rng, y, z, 0.3);
    CHECK(transpose(compose(a, b)) == compose(transpose(b), transpose(a)));
    CHECK(transpose(transpose(a)) == a);
  }
}

TEST_CASE("images and separation") {
  auto space = tf::line4();
  const GroundSet& g = space.ground();
  FiniteRelation e1 = tf::band(space, 1);

  CHECK(image(FiniteRelation::diagonal(g), tf::set(4, {1, 3})) == tf::set(4, {1, 3}));
  CHECK(image(e1, tf::set(4, {0})) == tf::set(4, {0, 1}));
  CHECK(image(e1, IndexSet(4)).none());

  CHECK(is_separated(tf::set(4, {3}), e1, tf::set(4, {0, 1})));
  CHECK_FALSE(is_separated(tf::set(4, {2}), e1, tf::set(4, {0, 1})));
  CHECK(is_separated(tf::set(4, {0}), FiniteRelation::empty(g, g), tf::set(4, {0})));
  CHECK_FALSE(is_separated(tf::set(4, {2}), FiniteRelation::diagonal(g), tf::set(4, {2})));
}

TEST_CASE("product relation image") {
  testgen::Rng rng(11);
  for (int k = 0; k < 60; ++k) {
    GroundSet x(testgen::pick(rng, 1, 6)), y(testgen::pick(rng, 1, 6)),
        x2(testgen::pick(rng, 1, 6)), y2(testgen::pick(rng, 1, 6));
    FiniteRelation e = testgen::random_relation(rng, x, y, 0.35);
    FiniteRelation e2 = testgen::random_relation(rng, x2, y2, 0.35);
    FiniteRelation d = testgen::random_relation(rng, x2, x, 0.35);

    // oracle: all quadruples
    std::vector<std::pair<std::uint32_t, std::uint32_t>> expect;
    for (std::uint32_t a = 0; a < y.size(); ++a)
      for (std::uint32_t b = 0; b < y2.size(); ++b) {
        bool hit = false;
        for (std::uint32_t u = 0; u < x.size() && !hit; ++u)
          for (std::uint32_t v = 0; v < x2.size() && !hit; ++v)
            if (e.test(a, u) && d.test(u, v) && e2.test(b, v)) hit = true;
        if (hit) expect.emplace_back(a, b);
      }
    CHECK(product_image(e, e2, d) == FiniteRelation::from_pairs(y2, y, expect));
  }

  auto space = tf::line4();
  const GroundSet& g = space.ground();
  FiniteRelation e1 = tf::band(space, 1);
  const FiniteRelation d = FiniteRelation::diagonal(g);
  CHECK(product_image(d, d, e1) == e1);
  CHECK(product_image(e1, e1, d) == compose(e1, transpose(e1)));
}

TEST_CASE("set algebra on relations") {
  auto space = tf::line4();
  const GroundSet& g = space.ground();
  FiniteRelation e1 = tf::band(space, 1), e2 = tf::band(space, 2);

  CHECK(contains(e2, e1));
  CHECK_FALSE(contains(e1, e2));
  CHECK(set_union(e1, FiniteRelation::empty(g, g)) == e1);
  CHECK(set_intersection(e1, e2) == e1);

  const IndexSet a = tf::set(4, {0, 2});
  CHECK(restrict_to(FiniteRelation::diagonal(g), a, a) ==
        FiniteRelation::diagonal_over(g, a));
}

TEST_CASE("relation algebra laws on random instances") {
  testgen::Rng rng(3);
  for (int k = 0; k < 60; ++k) {
    GroundSet w(testgen::pick(rng, 1, 9)), x(testgen::pick(rng, 1, 9)),
        y(testgen::pick(rng, 1, 9)), z(testgen::pick(rng, 1, 9));
    FiniteRelation c = testgen::random_relation(rng, w, x, 0.3);
    FiniteRelation b = testgen::random_relation(rng, x, y, 0.3);
    FiniteRelation a = testgen::random_relation(rng, y, z, 0.3);
    CHECK(compose(a, compose(b, c)) == compose(compose(a, b), c));

    IndexSet s(w.size());
    for (std::uint32_t i = 0; i < w.size(); ++i)
      if (testgen::unit_real(rng) < 0.5) s.set(i);
    CHECK(image(compose(b, c), s) == image(b, image(c, s)));
  }
}

TEST_CASE("canonical pair order is lexicographic") {
  GroundSet g(3);
  const std::vector<std::pair<std::uint32_t, std::uint32_t>> scrambled{
      {2, 1}, {0, 2}, {0, 0}, {1, 1}};
  FiniteRelation r = FiniteRelation::from_pairs(g, g, scrambled);
  const std::vector<std::pair<std::uint32_t, std::uint32_t>> expect{
      {0, 0}, {0, 2}, {1, 1}, {2, 1}};
  CHECK(r.pairs() == expect);
}
