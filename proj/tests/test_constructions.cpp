#include <doctest.h>

#include "coarse/suites.hpp"
#include "fixtures.hpp"

using namespace coarse;

namespace {

ControlledMap identity_map(const CoarseSpace& s) {
  return require_controlled(s, s, FiniteRelation::diagonal(s.ground()));
}

}  // namespace

TEST_CASE("covering isometries") {
  auto line = tf::line4();

  SUBCASE("unitary cover of the identity is the identity permutation") {
    GeoModule m1 = GeoModule::uniform(line, 1);
    const CoverResult c = cover(identity_map(line), m1, m1, CoverKind::unitary);
    CHECK(c.op.matrix() == Matrix::Identity(4, 4));
    CHECK(c.kind_identity_error <= 1e-12);
    REQUIRE(c.certificate.close);
    CHECK(c.certificate.source_scale == ScaleIndex::at(0));
    CHECK(c.certificate.target_scale == ScaleIndex::at(0));
  }

  SUBCASE("rank doubling isometry") {
    GeoModule m1 = GeoModule::uniform(line, 1);
    GeoModule m2 = GeoModule::uniform(line, 2);
    const CoverResult c = cover(identity_map(line), m1, m2, CoverKind::isometry);
    const Matrix gram = c.op.matrix().adjoint() * c.op.matrix();
    CHECK(operator_norm((gram - Matrix::Identity(4, 4)).eval()) == 0.0);
    CHECK(c.certificate.close);
  }

  SUBCASE("collapse onto the two-block quotient") {
    Partition halves(line.ground(), {tf::set(4, {0, 1}), tf::set(4, {2, 3})});
    auto q = partition_quotient_equivalence(line, halves);
    GeoModule mx = GeoModule::uniform(line, 1);
    GeoModule my = GeoModule::uniform(q.space, 2);
    const CoverResult c = cover(q.map, mx, my, CoverKind::isometry);
    CHECK(c.kind_identity_error <= 1e-12);
    CHECK(c.certificate.close);
  }

  SUBCASE("partial isometry on a restricted domain") {
    GeoModule m1 = GeoModule::uniform(line, 1);
    GeoModule m2 = GeoModule::uniform(line, 2);
    ControlledMap f = require_controlled(
        line, line, FiniteRelation::diagonal_over(line.ground(), tf::set(4, {1, 2})));
    const CoverResult c = cover(f, m1, m2, CoverKind::partial_isometry);
    CHECK(c.kind_identity_error <= 1e-12);
    CHECK(c.certificate.close);
    // t*t is the projection onto the routed blocks
    const Matrix gram = c.op.matrix().adjoint() * c.op.matrix();
    CHECK(gram(0, 0) == Complex(0, 0));
    CHECK(gram(1, 1) == Complex(1, 0));
  }

  SUBCASE("coisometry from an ample source") {
    Partition halves(line.ground(), {tf::set(4, {0, 1}), tf::set(4, {2, 3})});
    auto q = partition_quotient_equivalence(line, halves);
    GeoModule mx = GeoModule::uniform(line, 2);
    GeoModule my = GeoModule::uniform(q.space, 1);
    const CoverResult c = cover(q.map, mx, my, CoverKind::coisometry);
    const Matrix gg = c.op.matrix() * c.op.matrix().adjoint();
    CHECK(operator_norm((gg - Matrix::Identity(2, 2)).eval()) <= 1e-12);
    CHECK(c.certificate.close);
  }

  SUBCASE("insufficient ampleness is reported") {
    Partition halves(line.ground(), {tf::set(4, {0, 1}), tf::set(4, {2, 3})});
    auto q = partition_quotient_equivalence(line, halves);
    GeoModule mx = GeoModule::uniform(line, 1);
    GeoModule my = GeoModule::uniform(q.space, 1);  // needs 2 per block
    CHECK_THROWS_AS(cover(q.map, mx, my, CoverKind::isometry), Error);
    try {
      cover(q.map, mx, my, CoverKind::isometry);
    } catch (const Error& e) {
      CHECK(e.code() == errc::ampleness_insufficient);
    }
  }

  SUBCASE("isometry needs an everywhere defined map") {
    GeoModule m1 = GeoModule::uniform(tf::pair2x2(), 1);
    auto pair = tf::pair2x2();
    ControlledMap f = require_controlled(
        pair, pair, FiniteRelation::diagonal_over(pair.ground(), tf::set(4, {0, 1})));
    CHECK_THROWS_AS(cover(f, m1, m1, CoverKind::isometry), Error);
  }

  SUBCASE("coisometry needs a coarsely surjective map") {
    auto pair = tf::pair2x2();
    GeoModule m = GeoModule::uniform(pair, 4);
    // injects one cluster into itself, misses the other component entirely
    ControlledMap f = require_controlled(
        pair, pair,
        FiniteRelation::from_pairs(pair.ground(), pair.ground(),
                                   std::vector<std::pair<std::uint32_t, std::uint32_t>>{
                                       {0, 0}, {1, 1}, {0, 2}, {1, 3}}));
    CHECK_THROWS_AS(cover(f, m, m, CoverKind::coisometry), Error);
    try {
      cover(f, m, m, CoverKind::coisometry);
    } catch (const Error& e) {
      CHECK(e.code() == errc::surjectivity_missing);
    }
  }
}

TEST_CASE("covers of one map are close") {
  auto line = tf::line4();
  GeoModule m1 = GeoModule::uniform(line, 1);
  GeoModule m2 = GeoModule::uniform(line, 2);
  ControlledMap f = identity_map(line);

  const CoverResult a = cover(f, m1, m2, CoverKind::isometry);
  const CoverResult b = cover(f, m1, m2, CoverKind::isometry, 99);

  SUBCASE("self products are projections of small propagation") {
    const CoverCloseness cc = covers_are_close(a, a);
    CHECK(cc.all_finite);
    CHECK(cc.measured[0][0] <= cc.predicted[0][0]);
  }

  SUBCASE("cross products have controlled propagation") {
    const CoverCloseness cc = covers_are_close(a, b);
    CHECK(cc.all_finite);
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) CHECK(cc.measured[i][j] <= cc.predicted[i][j]);
  }
}

TEST_CASE("band decomposition") {
  auto line = tf::line4();
  GeoModule m = GeoModule::uniform(line, 1);

  SUBCASE("diagonal gives one piece") {
    const BandDecomposition bd =
        band_decompose(BlockOperator::identity(m), Partition::singletons(line.ground()));
    CHECK(bd.pieces.size() == 1);
  }

  SUBCASE("tridiagonal splits into at most three") {
    Matrix tm = Matrix::Zero(4, 4);
    for (int i = 0; i < 4; ++i) {
      tm(i, i) = 1;
      if (i > 0) tm(i, i - 1) = 2;
      if (i < 3) tm(i, i + 1) = 3;
    }
    BlockOperator t(m, m, tm, 0.0);
    const BandDecomposition bd = band_decompose(t, Partition::singletons(line.ground()));
    CHECK(bd.pieces.size() <= 3);
    Matrix sum = Matrix::Zero(4, 4);
    for (const auto& p : bd.pieces) sum += p.matrix();
    CHECK((sum - tm).cwiseAbs().maxCoeff() == 0.0);
    CHECK(bd.pieces.size() <= bd.max_degree + 1);
  }

  SUBCASE("zero yields no pieces") {
    const BandDecomposition bd =
        band_decompose(BlockOperator::zero(m, m), Partition::singletons(line.ground()));
    CHECK(bd.pieces.empty());
  }

  SUBCASE("unbounded propagation is rejected") {
    auto pair = tf::pair2x2();
    GeoModule mp = GeoModule::uniform(pair, 1);
    Matrix bad = Matrix::Zero(4, 4);
    bad(2, 0) = 1;
    CHECK_THROWS_AS(
        band_decompose(BlockOperator(mp, mp, bad, 0.0), Partition::singletons(pair.ground())),
        Error);
  }
}

TEST_CASE("conditional expectation") {
  auto line = tf::line4();
  GeoModule m = GeoModule::uniform(line, 1);
  Partition halves(line.ground(), {tf::set(4, {0, 1}), tf::set(4, {2, 3})});

  SUBCASE("block diagonal operators are fixed") {
    Matrix bm = Matrix::Zero(4, 4);
    bm.block(0, 0, 2, 2).setConstant(Complex(1, 1));
    bm.block(2, 2, 2, 2).setConstant(Complex(2, 0));
    BlockOperator t(m, m, bm, 0.0);
    CHECK(conditional_expectation(t, halves).matrix() == bm);
  }

  SUBCASE("all-ones compresses to two blocks") {
    Matrix ones = Matrix::Constant(4, 4, Complex(1, 0));
    BlockOperator t(m, m, ones, 0.0);
    Matrix expect = Matrix::Zero(4, 4);
    expect.block(0, 0, 2, 2).setConstant(Complex(1, 0));
    expect.block(2, 2, 2, 2).setConstant(Complex(1, 0));
    CHECK(conditional_expectation(t, halves).matrix() == expect);
  }

  SUBCASE("bimodule law is exact") {
    testgen::Rng rng(61);
    for (int k = 0; k < 20; ++k) {
      BlockOperator t(m, m, testgen::random_gaussian_matrix(rng, 4, 4), std::nullopt);
      BlockOperator x = conditional_expectation(
          BlockOperator(m, m, testgen::random_gaussian_matrix(rng, 4, 4), std::nullopt),
          halves);
      BlockOperator y = conditional_expectation(
          BlockOperator(m, m, testgen::random_gaussian_matrix(rng, 4, 4), std::nullopt),
          halves);
      const Matrix lhs = conditional_expectation(x * t * y, halves).matrix();
      const Matrix rhs = x.matrix() * conditional_expectation(t, halves).matrix() * y.matrix();
      CHECK(operator_norm((lhs - rhs).eval()) <= 1e-12);
    }
  }

  SUBCASE("faithful on the positive cone") {
    testgen::Rng rng(67);
    BlockOperator t(m, m, testgen::random_gaussian_matrix(rng, 4, 4), std::nullopt);
    const BlockOperator e = conditional_expectation(t.adjoint() * t, halves);
    double diag = 0.0;
    for (const auto& blk : halves.blocks()) {
      const IndexSet mask = m.atom_mask_of(blk);
      diag += e.masked_norm(mask, mask);
    }
    const double n = operator_norm(t.matrix());
    CHECK(n * n <= diag + 1e-9);
  }
}

TEST_CASE("commutant of the block algebra") {
  auto line = tf::line4();

  SUBCASE("single full block is scalar") {
    CoarseSpace tiny = CoarseSpace::from_metric({{0.0}}, {0});
    GeoModule m(tiny, Partition::single_block(tiny.ground()), {3});
    const CommutantResult c = commutant_dimension(m.atoms(), m);
    CHECK(c.dimension == 1);
    CHECK(c.expected == 1);
    CHECK(c.basis.size() == 1);
  }

  SUBCASE("two blocks of dimension two") {
    GeoModule m(line, Partition(line.ground(), {tf::set(4, {0, 1}), tf::set(4, {2, 3})}),
                {2, 2});
    const CommutantResult c = commutant_dimension(m.atoms(), m);
    CHECK(c.dimension == 2);
    CHECK(c.expected == 2);
  }

  SUBCASE("zero-dimensional blocks contribute nothing") {
    GeoModule m(line, Partition(line.ground(), {tf::set(4, {0, 1}), tf::set(4, {2, 3})}),
                {2, 0});
    const CommutantResult c = commutant_dimension(m.atoms(), m);
    CHECK(c.dimension == 1);
    CHECK(c.expected == 1);
  }
}

TEST_CASE("approximate unit") {
  auto line = tf::line4();
  GeoModule m2 = GeoModule::uniform(line, 2);

  SUBCASE("zero operator") {
    const ApproxUnitWitness w = approximate_unit(BlockOperator::zero(m2, m2), 0.5);
    CHECK(w.measured == 0.0);
    CHECK(w.measured <= w.certified_bound);
  }

  SUBCASE("projection onto one atom block is kept whole") {
    Matrix pm = Matrix::Zero(8, 8);
    pm(2, 2) = pm(3, 3) = 1;  // atom 1 block
    BlockOperator t(m2, m2, pm, 0.0);
    const ApproxUnitWitness w = approximate_unit(t, 0.5);
    CHECK(w.measured <= 1e-12);
  }

  SUBCASE("random tridiagonal at eps = 0.1") {
    testgen::Rng rng(71);
    BlockOperator t = testgen::random_finite_propagation_operator(rng, m2, 1, 0.8);
    const ApproxUnitWitness w = approximate_unit(t, 0.1);
    CHECK(w.certified_bound == doctest::Approx(1.0));
    CHECK(w.measured <= 1.0);
    CHECK(w.measured_even <= 0.5 + 1e-12);
    CHECK(w.measured_odd <= 0.5 + 1e-12);
    CHECK((w.even_part | w.odd_part) == IndexSet::full(4));
    CHECK((w.even_part & w.odd_part).none());
    const Matrix& p = w.p_lambda.matrix();
    CHECK(operator_norm((p * p - p).eval()) <= 1e-10);
    CHECK(operator_norm((p - p.adjoint()).eval()) <= 1e-10);
    CHECK(contains(m2.block_gauge(), support(w.p_lambda).point_level));
    // the kept per-atom columns are orthonormal
    for (std::uint32_t a = 0; a < m2.atom_count(); ++a) {
      const Matrix& q = w.lambda[a];
      if (q.cols() == 0) continue;
      CHECK(operator_norm(
                (q.adjoint() * q - Matrix::Identity(q.cols(), q.cols())).eval()) <= 1e-10);
    }
  }

  SUBCASE("anuli cover every class") {
    testgen::Rng rng(73);
    for (int k = 0; k < 10; ++k) {
      CoarseSpace s = testgen::random_space(rng, 12, 1, 3);
      GeoModule mm = testgen::random_module(rng, s, 2, 1, 3);
      BlockOperator t = testgen::random_finite_propagation_operator(
          rng, mm, testgen::pick(rng, 0, s.top_scale()), 0.5);
      const ApproxUnitWitness w = approximate_unit(t, 0.25);
      CHECK(w.measured <= w.certified_bound + 1e-12);
      IndexSet covered(s.size());
      for (const auto& cls : w.anuli)
        for (const auto& b : cls) covered |= b;
      CHECK(covered == IndexSet::full(s.size()));
    }
  }

  SUBCASE("unbounded propagation is rejected") {
    auto pair = tf::pair2x2();
    GeoModule mp = GeoModule::uniform(pair, 1);
    Matrix bad = Matrix::Zero(4, 4);
    bad(2, 0) = 1;
    CHECK_THROWS_AS(approximate_unit(BlockOperator(mp, mp, bad, 0.0), 0.1), Error);
  }
}

TEST_CASE("component decomposition") {
  auto pair = tf::pair2x2();
  GeoModule m = GeoModule::uniform(pair, 1);

  SUBCASE("finite propagation means componentwise") {
    testgen::Rng rng(79);
    BlockOperator t = testgen::random_finite_propagation_operator(rng, m, 1, 0.8);
    const ComponentDecomposition cd = component_decompose(t);
    CHECK(cd.pieces.size() == 2);
    CHECK(cd.off_blocks_zero);
    CHECK(cd.sum_exact);
    CHECK(cd.equi_scale.is_finite());
  }

  SUBCASE("a cross entry breaks the sum") {
    Matrix bad = Matrix::Zero(4, 4);
    bad(0, 0) = 1;
    bad(2, 0) = 1;
    BlockOperator t(m, m, bad, 0.0);
    const ComponentDecomposition cd = component_decompose(t);
    CHECK_FALSE(cd.sum_exact);
    CHECK(propagation_scale(t).is_unbounded());
  }

  SUBCASE("connected spaces give one piece") {
    auto line = tf::line4();
    GeoModule ml = GeoModule::uniform(line, 1);
    const ComponentDecomposition cd = component_decompose(BlockOperator::identity(ml));
    CHECK(cd.pieces.size() == 1);
    CHECK(cd.sum_exact);
  }

  SUBCASE("atoms straddling components are rejected") {
    GeoModule bad(pair, Partition(pair.ground(), {tf::set(4, {0, 1, 2}), tf::set(4, {3})}),
                  {2, 1});
    CHECK_THROWS_AS(component_decompose(BlockOperator::identity(bad)), Error);
    try {
      component_decompose(BlockOperator::identity(bad));
    } catch (const Error& e) {
      CHECK(e.code() == errc::components_not_measurable);
    }
  }
}

TEST_CASE("k-theory unitary witness") {
  auto line = tf::line4();
  GeoModule m1 = GeoModule::uniform(line, 1);
  GeoModule m2 = GeoModule::uniform(line, 2);
  ControlledMap f = identity_map(line);

  SUBCASE("equal isometries give the classic involution") {
    const CoverResult c = cover(f, m1, m2, CoverKind::isometry);
    const KTheoryUnitary u = ktheory_unitary(c.op, c.op, 5, 17);
    CHECK(u.selfadjoint_error <= 1e-10);
    CHECK(u.involution_error <= 1e-10);
    CHECK(u.unitary_error <= 1e-10);
    CHECK(u.conjugation_error <= 1e-10);
    CHECK(u.blocks_controlled);
  }

  SUBCASE("two rank-doubling covers") {
    const CoverResult c0 = cover(f, m1, m2, CoverKind::isometry, 5);
    const CoverResult c1 = cover(f, m1, m2, CoverKind::isometry, 6);
    const KTheoryUnitary u = ktheory_unitary(c0.op, c1.op, 10, 23);
    CHECK(u.selfadjoint_error <= 1e-10);
    CHECK(u.involution_error <= 1e-10);
    CHECK(u.conjugation_error <= 1e-10);
    CHECK(u.blocks_controlled);
    for (const auto& s : u.block_propagation) CHECK(s.is_finite());
  }

  SUBCASE("non-isometries are rejected") {
    BlockOperator z = BlockOperator::zero(m1, m2);
    CHECK_THROWS_AS(ktheory_unitary(z, z), Error);
    try {
      ktheory_unitary(z, z);
    } catch (const Error& e) {
      CHECK(e.code() == errc::not_isometry);
    }
  }
}

TEST_CASE("controlled quasi-local isometries") {
  auto line = tf::line4();
  GeoModule m = GeoModule::uniform(line, 1);

  SUBCASE("identity passes at scale zero") {
    const QlIsometryCheck c = ql_controlled_isometry_check(BlockOperator::identity(m));
    CHECK(c.pass);
    CHECK(c.propagation == ScaleIndex::at(0));
  }

  SUBCASE("neighbour permutation passes") {
    Matrix perm = Matrix::Zero(4, 4);
    perm(1, 0) = perm(0, 1) = perm(3, 2) = perm(2, 3) = 1;
    const QlIsometryCheck c = ql_controlled_isometry_check(BlockOperator(m, m, perm, 0.0));
    CHECK(c.pass);
    CHECK(c.propagation == ScaleIndex::at(1));
  }

  SUBCASE("component swap is witnessed at norm one") {
    auto pair = tf::pair2x2();
    GeoModule mp = GeoModule::uniform(pair, 1);
    Matrix swap = Matrix::Zero(4, 4);
    swap(2, 0) = swap(3, 1) = swap(0, 2) = swap(1, 3) = 1;
    const QlIsometryCheck c = ql_controlled_isometry_check(BlockOperator(mp, mp, swap, 0.0));
    CHECK_FALSE(c.pass);
    REQUIRE(c.witness.has_value());
    CHECK(c.witness_norm == doctest::Approx(1.0));
    // the witness pair is separated at every scale
    CHECK(is_separated(c.witness->first, pair.e_max(), c.witness->second));
  }
}
