#include <doctest.h>

#include "coarse/suites.hpp"
#include "fixtures.hpp"

using namespace coarse;

namespace {

/// Power-iteration oracle for the spectral norm, independent of the SVD path.
double power_iteration_norm(const Matrix& m, int iters = 600) {
  if (m.rows() == 0 || m.cols() == 0) return 0.0;
  const Matrix gram = m.adjoint() * m;
  Vector v = Vector::Ones(m.cols());
  v.normalize();
  double lambda = 0.0;
  for (int k = 0; k < iters; ++k) {
    Vector w = gram * v;
    lambda = w.norm();
    if (lambda == 0.0) return 0.0;
    v = w / lambda;
  }
  return std::sqrt(lambda);
}

/// Gaussian-elimination rank oracle with partial pivoting.
std::uint32_t elimination_rank(Matrix m, double tol = 1e-9) {
  std::uint32_t rank = 0;
  const Eigen::Index rows = m.rows(), cols = m.cols();
  Eigen::Index r = 0;
  for (Eigen::Index c = 0; c < cols && r < rows; ++c) {
    Eigen::Index pivot = r;
    for (Eigen::Index i = r + 1; i < rows; ++i)
      if (std::abs(m(i, c)) > std::abs(m(pivot, c))) pivot = i;
    if (std::abs(m(pivot, c)) <= tol) continue;
    m.row(pivot).swap(m.row(r));
    for (Eigen::Index i = r + 1; i < rows; ++i) m.row(i) -= (m(i, c) / m(r, c)) * m.row(r);
    ++rank;
    ++r;
  }
  return rank;
}

BlockOperator entry_operator(const GeoModule& m, std::uint32_t row, std::uint32_t col,
                             Complex value) {
  Matrix mat = Matrix::Zero(m.total_dim(), m.total_dim());
  mat(row, col) = value;
  return BlockOperator(m, m, std::move(mat), 0.0);
}

}  // namespace

TEST_CASE("operator norm") {
  Matrix d = Matrix::Zero(2, 2);
  d(0, 0) = 3;
  d(1, 1) = 1;
  CHECK(operator_norm(d) == doctest::Approx(3.0).epsilon(1e-12));

  Matrix n = Matrix::Zero(2, 2);
  n(0, 1) = 2;
  CHECK(operator_norm(n) == doctest::Approx(2.0).epsilon(1e-12));

  testgen::Rng rng(13);
  for (int k = 0; k < 30; ++k) {
    Matrix m = testgen::random_gaussian_matrix(rng, 5, 5);
    CHECK(std::abs(operator_norm(m) - power_iteration_norm(m)) <= 1e-9);
  }
}

TEST_CASE("support and propagation") {
  auto line = tf::line4();
  GeoModule m = GeoModule::uniform(line, 1);

  SUBCASE("identity is block diagonal") {
    BlockOperator id = BlockOperator::identity(m);
    const auto s = support(id);
    CHECK(s.point_level == FiniteRelation::diagonal(line.ground()));
    CHECK(propagation_scale(id) == ScaleIndex::at(0));
  }

  SUBCASE("single far entry") {
    BlockOperator t = entry_operator(m, 3, 0, Complex(1, 0));
    const auto s = support(t);
    CHECK(s.atom_level.pairs() ==
          std::vector<std::pair<std::uint32_t, std::uint32_t>>{{3, 0}});
    CHECK(propagation_scale(t) == ScaleIndex::at(3));
  }

  SUBCASE("zero operator") {
    BlockOperator z = BlockOperator::zero(m, m);
    CHECK(support(z).point_level.is_empty());
    CHECK(propagation_scale(z) == ScaleIndex::at(0));
  }

  SUBCASE("tridiagonal has propagation one") {
    Matrix tm = Matrix::Zero(4, 4);
    for (int i = 0; i < 4; ++i) {
      tm(i, i) = 1;
      if (i > 0) tm(i, i - 1) = 1;
      if (i < 3) tm(i, i + 1) = 1;
    }
    CHECK(propagation_scale(BlockOperator(m, m, tm, 0.0)) == ScaleIndex::at(1));
  }

  SUBCASE("cross-component entries are unbounded") {
    auto pair = tf::pair2x2();
    GeoModule mp = GeoModule::uniform(pair, 1);
    BlockOperator t = entry_operator(mp, 2, 0, Complex(1, 0));
    CHECK(propagation_scale(t).is_unbounded());
  }
}

TEST_CASE("quasi-locality profiles") {
  auto line = tf::line4();
  GeoModule m = GeoModule::uniform(line, 1);

  SUBCASE("profile of a single far entry") {
    const Complex c(0.0, -0.75);
    BlockOperator t = entry_operator(m, 3, 0, c);
    QlProfile p = ql_profile(t);
    REQUIRE(p.exact);
    CHECK(p.values[0] == doctest::Approx(std::abs(c)));
    CHECK(p.values[1] == doctest::Approx(std::abs(c)));
    CHECK(p.values[2] == doctest::Approx(std::abs(c)));
    CHECK(p.values[3] == 0.0);
  }

  SUBCASE("operators inside E_i vanish there") {
    testgen::Rng rng(19);
    for (int k = 0; k < 10; ++k) {
      BlockOperator t = testgen::random_finite_propagation_operator(rng, m, 1, 0.8);
      BlockOperator t0(m, m, t.matrix(), 0.0);
      CHECK(ql_value_at(t0, line.entourage_at(1)) == 0.0);
    }
  }

  SUBCASE("sandwich on random operators") {
    testgen::Rng rng(21);
    for (int k = 0; k < 20; ++k) {
      BlockOperator t(m, m, testgen::random_gaussian_matrix(rng, 4, 4), std::nullopt);
      for (std::uint32_t i = 0; i < line.levels(); ++i) {
        const double exact = ql_value_at(t, line.entourage_at(i));
        const auto [lo, hi] = ql_bounds_at(t, line.entourage_at(i));
        CHECK(lo <= exact + 1e-12);
        CHECK(exact <= hi + 1e-12);
      }
    }
  }

  SUBCASE("atom limit") {
    CHECK_THROWS_AS(ql_value_at(BlockOperator::identity(m), line.entourage_at(0), 2), Error);
    // past the limit the profile degrades to the bounds pair
    testgen::Rng rng(101);
    BlockOperator t(m, m, testgen::random_gaussian_matrix(rng, 4, 4), std::nullopt);
    const QlProfile p = ql_profile(t, 2);
    CHECK_FALSE(p.exact);
    for (std::size_t i = 0; i < p.values.size(); ++i) CHECK(p.values[i] <= p.upper[i] + 1e-12);
  }
}

TEST_CASE("truncation profiles") {
  auto line = tf::line4();
  GeoModule m = GeoModule::uniform(line, 1);

  SUBCASE("vanishing past the propagation scale") {
    Matrix tm = Matrix::Zero(4, 4);
    tm(0, 0) = 1;
    tm(1, 2) = 2;
    BlockOperator t(m, m, tm, 0.0);
    const auto tr = trunc_profile(t);
    const ScaleIndex p = propagation_scale(t);
    REQUIRE(p.is_finite());
    for (std::uint32_t i = p.value(); i < tr.size(); ++i) CHECK(tr[i] == 0.0);
  }

  SUBCASE("removed block norm") {
    Matrix tm = Matrix::Zero(4, 4);
    tm(0, 0) = 1;
    tm(3, 0) = Complex(0.0, 0.5);
    BlockOperator t(m, m, tm, 0.0);
    const auto tr = trunc_profile(t);
    CHECK(tr[1] == doctest::Approx(0.5));
    CHECK(tr[2] == doctest::Approx(0.5));
    CHECK(tr[3] == 0.0);
  }

  SUBCASE("monotone and dominating ql") {
    testgen::Rng rng(23);
    for (int k = 0; k < 20; ++k) {
      CoarseSpace s = testgen::random_space(rng, 8, 1, 2);
      GeoModule mm = testgen::random_module(rng, s, 2, 1, 2);
      BlockOperator t(mm, mm,
                      testgen::random_gaussian_matrix(rng, mm.total_dim(), mm.total_dim()),
                      std::nullopt);
      const auto tr = trunc_profile(t);
      const QlProfile ql = ql_profile(t);
      for (std::size_t i = 0; i < tr.size(); ++i) {
        CHECK(ql.values[i] <= tr[i] + 1e-10);
        if (i > 0) CHECK(tr[i] <= tr[i - 1] + 1e-12);
      }
      // truncation witness has the right propagation
      const BlockOperator pi1 = truncate_to_scale(t, ScaleIndex::at(0));
      CHECK(propagation_scale(BlockOperator(mm, mm, pi1.matrix(), 0.0)) <= ScaleIndex::at(0));
    }
  }
}

TEST_CASE("operator properness") {
  auto pair = tf::pair2x2();
  GeoModule m = GeoModule::uniform(pair, 1);

  SUBCASE("cross-pulling rows are improper") {
    Matrix tm = Matrix::Zero(4, 4);
    tm(0, 0) = 1;
    tm(0, 2) = 1;  // row in component {0,1} pulls from both components
    BlockOperator t(m, m, tm, 0.0);
    const auto rep = is_proper_operator(t);
    CHECK_FALSE(rep.proper);
    CHECK(rep.characterizations_agree);
  }

  SUBCASE("zero and identity are proper") {
    CHECK(is_proper_operator(BlockOperator::zero(m, m)).proper);
    CHECK(is_proper_operator(BlockOperator::identity(m)).proper);
  }

  SUBCASE("connected spaces make everything proper") {
    auto line = tf::line4();
    GeoModule ml = GeoModule::uniform(line, 1);
    testgen::Rng rng(3);
    BlockOperator t(ml, ml, testgen::random_gaussian_matrix(rng, 4, 4), std::nullopt);
    const auto rep = is_proper_operator(t);
    CHECK(rep.proper);
    CHECK(rep.characterizations_agree);
  }
}

TEST_CASE("local rank profiles") {
  auto line = tf::line4();

  SUBCASE("identity ranks are the dims") {
    GeoModule m(line, Partition(line.ground(), {tf::set(4, {0, 1}), tf::set(4, {2, 3})}),
                {2, 3});
    const auto lr = local_rank_profile(BlockOperator::identity(m));
    CHECK(lr.chi_t == std::vector<std::uint32_t>{2, 3});
    CHECK(lr.t_chi == std::vector<std::uint32_t>{2, 3});
  }

  SUBCASE("rank-one operators have local rank at most one") {
    GeoModule m = GeoModule::uniform(line, 2);
    testgen::Rng rng(29);
    Vector v = testgen::random_gaussian_matrix(rng, 8, 1).col(0);
    Vector w = testgen::random_gaussian_matrix(rng, 8, 1).col(0);
    BlockOperator t(m, m, v * w.adjoint(), std::nullopt);
    const auto lr = local_rank_profile(t);
    for (auto r : lr.chi_t) CHECK(r <= 1);
    for (auto r : lr.t_chi) CHECK(r <= 1);
  }

  SUBCASE("random matrices against the elimination oracle") {
    CoarseSpace six = CoarseSpace::from_metric(
        {{0, 1, 2, 3, 4, 5},
         {1, 0, 1, 2, 3, 4},
         {2, 1, 0, 1, 2, 3},
         {3, 2, 1, 0, 1, 2},
         {4, 3, 2, 1, 0, 1},
         {5, 4, 3, 2, 1, 0}},
        {0, 2, 5});
    GeoModule m(six, Partition(six.ground(), {tf::set(6, {0, 1, 2}), tf::set(6, {3, 4, 5})}),
                {3, 3});
    testgen::Rng rng(31);
    for (int k = 0; k < 20; ++k) {
      Matrix mm = testgen::random_gaussian_matrix(rng, 6, 6);
      if (testgen::unit_real(rng) < 0.5) mm.col(1) = mm.col(0);  // force rank drops sometimes
      BlockOperator t(m, m, mm, std::nullopt);
      const auto lr = local_rank_profile(t);
      for (std::uint32_t a = 0; a < 2; ++a) {
        CHECK(lr.chi_t[a] == elimination_rank(mm.middleRows(3 * a, 3)));
        CHECK(lr.t_chi[a] == elimination_rank(mm.middleCols(3 * a, 3)));
      }
    }
  }
}

TEST_CASE("support calculus for compositions") {
  auto line = tf::line4();
  GeoModule m = GeoModule::uniform(line, 1);
  testgen::Rng rng(37);

  SUBCASE("identity factor") {
    BlockOperator t = testgen::random_alphabet_operator(rng, m, m, 0.5);
    const auto chk = compose_support_bound_check(t, BlockOperator::identity(m));
    CHECK(chk.compose_ok);
    CHECK(chk.adjoint_ok);
  }

  SUBCASE("random pairs") {
    for (int k = 0; k < 40; ++k) {
      BlockOperator t = testgen::random_alphabet_operator(rng, m, m, 0.5);
      BlockOperator s = testgen::random_alphabet_operator(rng, m, m, 0.5);
      CHECK(compose_support_bound_check(t, s).compose_ok);
      CHECK(sum_support_check(t, s));
      CHECK(support(t.adjoint()).point_level == transpose(support(t).point_level));
    }
  }
}

TEST_CASE("conjugation modulus") {
  auto line = tf::line4();
  GeoModule m = GeoModule::uniform(line, 1);

  SUBCASE("identity conjugation") {
    testgen::Rng rng(43);
    BlockOperator x = testgen::random_finite_propagation_operator(rng, m, 1, 0.7);
    BlockOperator x0(m, m, x.matrix(), 0.0);
    const AdResult r = ad(BlockOperator::identity(m), x0);
    CHECK(r.contained);
    CHECK(r.achieved_scale <= r.predicted_scale);
  }

  SUBCASE("permutation operator") {
    Matrix perm = Matrix::Zero(4, 4);
    perm(1, 0) = perm(0, 1) = perm(3, 2) = perm(2, 3) = 1;  // swap neighbours
    BlockOperator t(m, m, perm, 0.0);
    testgen::Rng rng(47);
    for (int k = 0; k < 10; ++k) {
      BlockOperator x = testgen::random_finite_propagation_operator(
          rng, m, testgen::pick(rng, 0, 3), 0.6);
      BlockOperator x0(m, m, x.matrix(), 0.0);
      const AdResult r = ad(t, x0);
      CHECK(r.contained);
      CHECK(r.achieved_scale.is_finite());
    }
  }

  SUBCASE("rank-one conjugation lands in the image rectangle") {
    BlockOperator t = BlockOperator::identity(m);
    Matrix xm = Matrix::Zero(4, 4);
    xm(1, 2) = Complex(2, 1);  // |e_1><e_2|
    BlockOperator x(m, m, xm, 0.0);
    const AdResult r = ad(t, x);
    CHECK(r.contained);
    CHECK(support(r.result).atom_level.pairs() ==
          std::vector<std::pair<std::uint32_t, std::uint32_t>>{{1, 2}});
  }

  SUBCASE("non-controlled operators are rejected and witnessed") {
    auto pair = tf::pair2x2();
    GeoModule mp = GeoModule::uniform(pair, 1);
    Matrix swap = Matrix::Zero(4, 4);
    swap(2, 0) = swap(3, 1) = swap(0, 2) = swap(1, 3) = 1;
    Matrix half = Matrix::Zero(4, 4);
    half(0, 0) = 1;
    half(2, 1) = 1;  // {0,1} are e_max-related but land in distinct components
    BlockOperator t(mp, mp, half, 0.0);
    CHECK_THROWS_AS(ad(t, BlockOperator::identity(mp)), Error);
    const AdViolation v = ad_violation_witness(t);
    CHECK(v.probe_scale.is_finite());
    CHECK(v.conjugate_scale.is_unbounded());
    // the swap is controlled as a map, so no witness exists for it
    BlockOperator sw(mp, mp, swap, 0.0);
    CHECK_THROWS_AS(ad_violation_witness(sw), Error);
  }
}

TEST_CASE("quasi-local arithmetic") {
  auto line = tf::line4();
  GeoModule m = GeoModule::uniform(line, 1);
  testgen::Rng rng(53);

  SUBCASE("scalar degenerate case") {
    BlockOperator s(m, m, testgen::random_gaussian_matrix(rng, 4, 4), std::nullopt);
    BlockOperator t = BlockOperator::identity(m).scaled(Complex(0.5, 0));
    CHECK(ql_arithmetic_check(s, t).ok);
  }

  SUBCASE("random pairs") {
    for (int k = 0; k < 15; ++k) {
      BlockOperator s(m, m, testgen::random_gaussian_matrix(rng, 4, 4), std::nullopt);
      BlockOperator t(m, m, testgen::random_gaussian_matrix(rng, 4, 4), std::nullopt);
      const auto chk = ql_arithmetic_check(s, t);
      CHECK(chk.ok);
      for (const auto& row : chk.rows) CHECK_FALSE(row.over_ladder);
    }
  }

  SUBCASE("zero profiles multiply to zero") {
    BlockOperator s = truncate_to_scale(
        BlockOperator(m, m, testgen::random_gaussian_matrix(rng, 4, 4), 0.0),
        ScaleIndex::at(1));
    BlockOperator t = truncate_to_scale(
        BlockOperator(m, m, testgen::random_gaussian_matrix(rng, 4, 4), 0.0),
        ScaleIndex::at(1));
    const auto chk = ql_arithmetic_check(s, t);
    // eps_s(1) = eps_t(1) = 0, so the product must vanish at the composed
    // relation
    CHECK(chk.rows[1].rhs == 0.0);
    CHECK(chk.rows[1].lhs <= 1e-12);
  }
}

TEST_CASE("ql vanishing pins the propagation scale") {
  // On singleton-atom modules the two are exactly equivalent; on coarser
  // atoms the vanishing still traps the support inside the gauge-composed
  // entourage.
  testgen::Rng rng(89);
  for (int k = 0; k < 25; ++k) {
    CoarseSpace s = testgen::random_space(rng, 8, 1, 2);
    GeoModule u = GeoModule::uniform(s, testgen::pick(rng, 1, 2));
    BlockOperator t = testgen::random_alphabet_operator(rng, u, u, 0.4);
    const ScaleIndex p = propagation_scale(t);
    for (std::uint32_t i = 0; i < s.levels(); ++i) {
      const bool vanished = ql_value_at(t, s.entourage_at(i)) == 0.0;
      CHECK(vanished == (p <= ScaleIndex::at(i)));
    }

    GeoModule m = testgen::random_module(rng, s, 3, 1, 2);
    BlockOperator c = testgen::random_alphabet_operator(rng, m, m, 0.4);
    for (std::uint32_t i = 0; i < s.levels(); ++i) {
      if (ql_value_at(c, s.entourage_at(i)) != 0.0) continue;
      const FiniteRelation bound =
          compose(m.block_gauge(), compose(s.entourage_at(i), m.block_gauge()));
      CHECK(contains(bound, support(c).point_level));
    }
  }
}

TEST_CASE("local test equivalence on disconnected fixtures") {
  auto pair = tf::pair2x2();
  GeoModule m = GeoModule::uniform(pair, 2);
  testgen::Rng rng(59);
  for (int k = 0; k < 10; ++k) {
    // componentwise operator: finite propagation
    BlockOperator t = testgen::random_finite_propagation_operator(rng, m, 1, 0.7);
    const ComponentDecomposition cd = component_decompose(t);
    REQUIRE(cd.sum_exact);
    for (std::uint32_t i = 0; i < pair.levels(); ++i) {
      const double global = ql_value_at(t, pair.entourage_at(i));
      double local = 0.0;
      for (const auto& piece : cd.pieces)
        local = std::max(local, ql_value_at(piece, pair.entourage_at(i)));
      CHECK(global == doctest::Approx(local).epsilon(1e-10));
    }
  }
}

TEST_CASE("analyze bundles a full report") {
  auto line = tf::line4();
  GeoModule m = GeoModule::uniform(line, 1);
  BlockOperator id = BlockOperator::identity(m);
  const OperatorReport r = analyze(id);
  CHECK(r.propagation == ScaleIndex::at(0));
  CHECK(r.norm == doctest::Approx(1.0));
  CHECK(r.properness.proper);
  CHECK(r.ql.values == std::vector<double>{0, 0, 0, 0});
  CHECK(r.controlled);
  REQUIRE(r.controlled_modulus.size() == 4);
  CHECK(r.controlled_modulus[2] == ScaleIndex::at(2));
}

TEST_CASE("fully degenerate modules analyze cleanly") {
  auto line = tf::line4();
  GeoModule zero(line, Partition::singletons(line.ground()), {0, 0, 0, 0});
  CHECK(zero.total_dim() == 0);
  BlockOperator t = BlockOperator::zero(zero, zero);
  const OperatorReport r = analyze(t);
  CHECK(r.norm == 0.0);
  CHECK(r.propagation == ScaleIndex::at(0));
  CHECK(r.supp.point_level.is_empty());
  const ApproxUnitWitness w = approximate_unit(t, 0.5);
  CHECK(w.measured == 0.0);
}
