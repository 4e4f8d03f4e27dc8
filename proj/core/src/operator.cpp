#include "coarse/operator.hpp"

#include <cmath>

namespace coarse {

namespace {

Eigen::VectorXd singular_values(const Matrix& m) {
  if (m.rows() == 0 || m.cols() == 0) return Eigen::VectorXd();
  Eigen::JacobiSVD<Matrix> svd(m);
  return svd.singularValues();
}

bool rectangle_within(const FiniteRelation& e, const IndexSet& rows, const IndexSet& cols) {
  bool ok = true;
  rows.for_each([&](std::uint32_t y) {
    if (ok && !e.row(y).contains(cols)) ok = false;
  });
  return ok;
}

}  // namespace

double operator_norm(const Matrix& m) {
  const Eigen::VectorXd sv = singular_values(m);
  return sv.size() == 0 ? 0.0 : sv(0);
}

namespace detail {

std::uint32_t matrix_rank(const Matrix& m, double tau) {
  const Eigen::VectorXd sv = singular_values(m);
  if (sv.size() == 0) return 0;
  const double eps = std::numeric_limits<double>::epsilon();
  const double floor_ =
      std::max(tau, static_cast<double>(std::max(m.rows(), m.cols())) * eps * sv(0));
  std::uint32_t rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv(i) > floor_) ++rank;
  return rank;
}

}  // namespace detail

BlockOperator::BlockOperator(GeoModule domain, GeoModule codomain, Matrix matrix,
                             std::optional<double> tolerance)
    : domain_(std::move(domain)), codomain_(std::move(codomain)), matrix_(std::move(matrix)) {
  require(matrix_.rows() == static_cast<Eigen::Index>(codomain_.total_dim()) &&
              matrix_.cols() == static_cast<Eigen::Index>(domain_.total_dim()),
          errc::module_mismatch,
          "matrix is " + std::to_string(matrix_.rows()) + "x" + std::to_string(matrix_.cols()) +
              ", modules give " + std::to_string(codomain_.total_dim()) + "x" +
              std::to_string(domain_.total_dim()));
  require(matrix_.allFinite(), errc::module_mismatch, "matrix has non-finite entries");
  if (tolerance) {
    require(*tolerance >= 0.0, errc::module_mismatch, "negative tolerance");
    tolerance_ = *tolerance;
  } else {
    tolerance_ = kDefaultRelativeTolerance * operator_norm(matrix_);
  }
}

BlockOperator BlockOperator::identity(const GeoModule& m, std::optional<double> tolerance) {
  return BlockOperator(m, m, Matrix::Identity(m.total_dim(), m.total_dim()), tolerance);
}

BlockOperator BlockOperator::zero(const GeoModule& domain, const GeoModule& codomain) {
  return BlockOperator(domain, codomain, Matrix::Zero(codomain.total_dim(), domain.total_dim()),
                       0.0);
}

Matrix BlockOperator::block(std::uint32_t atom_row, std::uint32_t atom_col) const {
  require(atom_row < codomain_.atom_count() && atom_col < domain_.atom_count(),
          errc::index_out_of_range, "block index");
  return matrix_.block(codomain_.offset(atom_row), domain_.offset(atom_col),
                       codomain_.dim(atom_row), domain_.dim(atom_col));
}

double BlockOperator::block_norm(std::uint32_t atom_row, std::uint32_t atom_col) const {
  return operator_norm(block(atom_row, atom_col));
}

bool BlockOperator::block_nonzero(std::uint32_t atom_row, std::uint32_t atom_col) const {
  if (codomain_.dim(atom_row) == 0 || domain_.dim(atom_col) == 0) return false;
  if (tolerance_ == 0.0) {
    const Matrix b = block(atom_row, atom_col);
    for (Eigen::Index c = 0; c < b.cols(); ++c)
      for (Eigen::Index r = 0; r < b.rows(); ++r)
        if (b(r, c) != Complex(0.0, 0.0)) return true;
    return false;
  }
  return block_norm(atom_row, atom_col) > tolerance_;
}

double BlockOperator::masked_norm(const IndexSet& atom_rows, const IndexSet& atom_cols) const {
  const IndexSet rows = codomain_.coords_of_atoms(atom_rows);
  const IndexSet cols = domain_.coords_of_atoms(atom_cols);
  const auto ri = rows.to_indices();
  const auto ci = cols.to_indices();
  if (ri.empty() || ci.empty()) return 0.0;
  Matrix sub(ri.size(), ci.size());
  for (std::size_t c = 0; c < ci.size(); ++c)
    for (std::size_t r = 0; r < ri.size(); ++r) sub(r, c) = matrix_(ri[r], ci[c]);
  return operator_norm(sub);
}

BlockOperator BlockOperator::adjoint() const {
  return BlockOperator(codomain_, domain_, matrix_.adjoint(), tolerance_);
}

BlockOperator BlockOperator::compress(const IndexSet& atom_rows, const IndexSet& atom_cols) const {
  const IndexSet rows = codomain_.coords_of_atoms(atom_rows);
  const IndexSet cols = domain_.coords_of_atoms(atom_cols);
  Matrix out = Matrix::Zero(matrix_.rows(), matrix_.cols());
  rows.for_each([&](std::uint32_t r) {
    cols.for_each([&](std::uint32_t c) { out(r, c) = matrix_(r, c); });
  });
  return BlockOperator(domain_, codomain_, std::move(out), tolerance_);
}

BlockOperator operator*(const BlockOperator& t, const BlockOperator& s) {
  require(s.codomain_.same_as(t.domain_), errc::module_mismatch,
          "composition: middle modules differ");
  return BlockOperator(s.domain_, t.codomain_, t.matrix_ * s.matrix_,
                       std::max(t.tolerance_, s.tolerance_));
}

BlockOperator operator+(const BlockOperator& t, const BlockOperator& s) {
  require(s.domain_.same_as(t.domain_) && s.codomain_.same_as(t.codomain_),
          errc::module_mismatch, "sum: modules differ");
  return BlockOperator(t.domain_, t.codomain_, t.matrix_ + s.matrix_,
                       std::max(t.tolerance_, s.tolerance_));
}

BlockOperator operator-(const BlockOperator& t, const BlockOperator& s) {
  require(s.domain_.same_as(t.domain_) && s.codomain_.same_as(t.codomain_),
          errc::module_mismatch, "difference: modules differ");
  return BlockOperator(t.domain_, t.codomain_, t.matrix_ - s.matrix_,
                       std::max(t.tolerance_, s.tolerance_));
}

BlockOperator BlockOperator::scaled(Complex factor) const {
  return BlockOperator(domain_, codomain_, factor * matrix_, tolerance_);
}

SupportResult support(const BlockOperator& t) {
  const GeoModule& dm = t.domain_module();
  const GeoModule& cm = t.codomain_module();
  GroundSet atoms_x(dm.atom_count());
  GroundSet atoms_y(cm.atom_count());

  std::vector<std::pair<std::uint32_t, std::uint32_t>> atom_pairs;
  FiniteRelation point_level =
      FiniteRelation::empty(dm.space().ground(), cm.space().ground());
  for (std::uint32_t b = 0; b < cm.atom_count(); ++b)
    for (std::uint32_t a = 0; a < dm.atom_count(); ++a)
      if (t.block_nonzero(b, a)) {
        atom_pairs.emplace_back(b, a);
        point_level = set_union(point_level,
                                FiniteRelation::rectangle(dm.space().ground(),
                                                          cm.space().ground(),
                                                          cm.atoms().block(b), dm.atoms().block(a)));
      }
  FiniteRelation atom_level = FiniteRelation::from_pairs(atoms_x, atoms_y, atom_pairs);
  return SupportResult{std::move(atom_level), std::move(point_level)};
}

ScaleIndex propagation_scale(const BlockOperator& t) {
  require(t.same_space(), errc::module_mismatch,
          "propagation needs modules over the same space");
  return t.domain_module().space().entourage_scale(support(t).point_level);
}

double ql_value_at(const BlockOperator& t, const FiniteRelation& separation,
                   std::size_t atom_limit) {
  require(t.same_space(), errc::module_mismatch, "quasi-locality needs same-space modules");
  const GeoModule& dm = t.domain_module();
  const GeoModule& cm = t.codomain_module();
  require(dm.atom_count() <= atom_limit, errc::atom_limit_exceeded,
          std::to_string(dm.atom_count()) + " atoms exceeds exact-mode limit " +
              std::to_string(atom_limit));

  const std::size_t na = dm.atom_count();
  double best = 0.0;
  for (std::uint64_t mask = 1; mask < (std::uint64_t{1} << na); ++mask) {
    IndexSet a_atoms(na);
    for (std::size_t i = 0; i < na; ++i)
      if ((mask >> i) & 1) a_atoms.set(i);
    const IndexSet a_points = dm.points_of_atoms(a_atoms);
    const IndexSet reach = image(separation, a_points);
    // Maximal separated complement: the codomain atoms missing E(A) entirely.
    IndexSet b_atoms = cm.atoms_meeting(reach).complement();
    if (b_atoms.none()) continue;
    best = std::max(best, t.masked_norm(b_atoms, a_atoms));
  }
  return best;
}

std::pair<double, double> ql_bounds_at(const BlockOperator& t, const FiniteRelation& separation) {
  require(t.same_space(), errc::module_mismatch, "quasi-locality needs same-space modules");
  const GeoModule& dm = t.domain_module();
  const GeoModule& cm = t.codomain_module();
  double lower = 0.0;
  double sumsq = 0.0;
  for (std::uint32_t a = 0; a < dm.atom_count(); ++a) {
    const IndexSet reach = image(separation, dm.atoms().block(a));
    for (std::uint32_t b = 0; b < cm.atom_count(); ++b) {
      if (cm.atoms().block(b).intersects(reach)) continue;
      const double norm = t.block_norm(b, a);
      lower = std::max(lower, norm);
      sumsq += norm * norm;
    }
  }
  return {lower, std::sqrt(sumsq)};
}

QlProfile ql_profile(const BlockOperator& t, std::size_t atom_limit) {
  require(t.same_space(), errc::module_mismatch, "quasi-locality needs same-space modules");
  const CoarseSpace& space = t.domain_module().space();
  QlProfile out;
  out.exact = t.domain_module().atom_count() <= atom_limit;
  for (std::uint32_t i = 0; i < space.levels(); ++i) {
    const auto [lower, upper] = ql_bounds_at(t, space.entourage_at(i));
    out.values.push_back(out.exact ? ql_value_at(t, space.entourage_at(i), atom_limit) : lower);
    out.upper.push_back(upper);
  }
  return out;
}

namespace {

double raw_truncation_distance(const BlockOperator& t, std::uint32_t scale) {
  const CoarseSpace& space = t.domain_module().space();
  const GeoModule& dm = t.domain_module();
  const GeoModule& cm = t.codomain_module();
  Matrix residual = t.matrix();
  for (std::uint32_t b = 0; b < cm.atom_count(); ++b)
    for (std::uint32_t a = 0; a < dm.atom_count(); ++a)
      if (rectangle_within(space.entourage_at(scale), cm.atoms().block(b), dm.atoms().block(a)))
        residual.block(cm.offset(b), dm.offset(a), cm.dim(b), dm.dim(a)).setZero();
  return operator_norm(residual);
}

}  // namespace

std::vector<double> trunc_profile(const BlockOperator& t) {
  require(t.same_space(), errc::module_mismatch, "truncation needs same-space modules");
  const CoarseSpace& space = t.domain_module().space();
  std::vector<double> out;
  out.reserve(space.levels());
  double best = std::numeric_limits<double>::infinity();
  for (std::uint32_t i = 0; i < space.levels(); ++i) {
    best = std::min(best, raw_truncation_distance(t, i));
    out.push_back(best);
  }
  return out;
}

BlockOperator truncate_to_scale(const BlockOperator& t, ScaleIndex i) {
  require(t.same_space(), errc::module_mismatch, "truncation needs same-space modules");
  const CoarseSpace& space = t.domain_module().space();
  const GeoModule& dm = t.domain_module();
  const GeoModule& cm = t.codomain_module();
  Matrix kept = Matrix::Zero(t.matrix().rows(), t.matrix().cols());
  for (std::uint32_t b = 0; b < cm.atom_count(); ++b)
    for (std::uint32_t a = 0; a < dm.atom_count(); ++a)
      if (rectangle_within(space.entourage(i), cm.atoms().block(b), dm.atoms().block(a)))
        kept.block(cm.offset(b), dm.offset(a), cm.dim(b), dm.dim(a)) =
            t.matrix().block(cm.offset(b), dm.offset(a), cm.dim(b), dm.dim(a));
  return BlockOperator(dm, cm, std::move(kept), t.tolerance());
}

BlockOperator truncation_witness(const BlockOperator& t, ScaleIndex i) {
  require(t.same_space(), errc::module_mismatch, "truncation needs same-space modules");
  require(i.is_finite(), errc::scale_out_of_range, "truncation witness scale");
  std::uint32_t best = 0;
  double best_norm = std::numeric_limits<double>::infinity();
  for (std::uint32_t j = 0; j <= i.value(); ++j) {
    const double d = raw_truncation_distance(t, j);
    if (d < best_norm) {
      best_norm = d;
      best = j;
    }
  }
  return truncate_to_scale(t, ScaleIndex::at(best));
}

OperatorProperness is_proper_operator(const BlockOperator& t) {
  const CoarseSpace& sx = t.domain_module().space();
  const CoarseSpace& sy = t.codomain_module().space();
  const FiniteRelation supp = support(t).point_level;

  // Route 1: properness of the support as a coarse subspace.
  OperatorProperness out;
  out.proper = true;
  const FiniteRelation ts = transpose(supp);
  for (std::uint32_t c = 0; c < sy.component_count() && out.proper; ++c) {
    const IndexSet pre = image(ts, sy.component_set(c));
    std::optional<std::uint32_t> cls;
    pre.for_each([&](std::uint32_t x) {
      if (out.witness) return;
      const std::uint32_t cx = sx.component_of(x);
      if (!cls) {
        cls = cx;
      } else if (*cls != cx) {
        out.witness = PropernessWitness{c, *cls, cx};
        out.proper = false;
      }
    });
  }

  // Route 2: chi_B t = chi_B t chi_A with A bounded measurable, tested on the
  // maximal bounded measurable B per component.
  bool route2 = true;
  for (std::uint32_t c = 0; c < sy.component_count() && route2; ++c) {
    const IndexSet b_atoms = t.codomain_module().atoms_meeting(sy.component_set(c));
    IndexSet a_atoms(t.domain_module().atom_count());
    b_atoms.for_each([&](std::uint32_t b) {
      for (std::uint32_t a = 0; a < t.domain_module().atom_count(); ++a)
        if (t.block_nonzero(b, a)) a_atoms.set(a);
    });
    const IndexSet a_points = t.domain_module().points_of_atoms(a_atoms);
    if (a_points.any() && !sx.is_bounded(a_points)) route2 = false;
  }
  out.characterizations_agree = (route2 == out.proper);
  return out;
}

LocalRankProfile local_rank_profile(const BlockOperator& t) {
  LocalRankProfile out;
  const GeoModule& cm = t.codomain_module();
  const GeoModule& dm = t.domain_module();
  out.chi_t.reserve(cm.atom_count());
  for (std::uint32_t b = 0; b < cm.atom_count(); ++b)
    out.chi_t.push_back(detail::matrix_rank(
        t.matrix().middleRows(cm.offset(b), cm.dim(b)), t.tolerance()));
  out.t_chi.reserve(dm.atom_count());
  for (std::uint32_t a = 0; a < dm.atom_count(); ++a)
    out.t_chi.push_back(detail::matrix_rank(
        t.matrix().middleCols(dm.offset(a), dm.dim(a)), t.tolerance()));
  return out;
}

SupportComposeCheck compose_support_bound_check(const BlockOperator& t, const BlockOperator& s) {
  require(s.codomain_module().same_as(t.domain_module()), errc::module_mismatch,
          "compose_support_bound_check: middle modules differ");
  const BlockOperator ts = t * s;
  const FiniteRelation supp_ts = support(ts).point_level;
  const FiniteRelation bound =
      compose(support(t).point_level,
              compose(t.domain_module().block_gauge(), support(s).point_level));
  SupportComposeCheck out{supp_ts, bound, contains(bound, supp_ts), false};
  out.adjoint_ok = (support(t.adjoint()).point_level == transpose(support(t).point_level)) &&
                   (support(s.adjoint()).point_level == transpose(support(s).point_level));
  return out;
}

bool sum_support_check(const BlockOperator& t, const BlockOperator& s) {
  const FiniteRelation lhs = support(t + s).point_level;
  return contains(set_union(support(t).point_level, support(s).point_level), lhs);
}

AdResult ad(const BlockOperator& t, const BlockOperator& x) {
  require(x.domain_module().same_as(t.domain_module()) &&
              x.codomain_module().same_as(t.domain_module()),
          errc::module_mismatch, "ad: x must act on the domain module of t");
  const CoarseSpace& sx = t.domain_module().space();
  const CoarseSpace& sy = t.codomain_module().space();

  const FiniteRelation s = support(t).point_level;
  ControlledCheck ctrl = check_controlled(sx, sy, s);
  if (!ctrl.ok())
    fail(errc::not_controlled_operator,
         "support of t is not a controlled relation: " + ctrl.witness->to_string());

  const ScaleIndex xprop = sx.entourage_scale(support(x).point_level);
  const FiniteRelation e = xprop.is_finite() ? sx.entourage(xprop) : support(x).point_level;
  const FiniteRelation& gauge = t.domain_module().block_gauge();

  const FiniteRelation predicted =
      compose(s, compose(gauge, compose(e, compose(gauge, transpose(s)))));

  BlockOperator result = t * x * t.adjoint();
  const FiniteRelation supp_res = support(result).point_level;
  AdResult out{std::move(result), predicted, sy.entourage_scale(supp_res),
               sy.entourage_scale(predicted), contains(predicted, supp_res)};
  return out;
}

AdViolation ad_violation_witness(const BlockOperator& t) {
  const CoarseSpace& sx = t.domain_module().space();
  const CoarseSpace& sy = t.codomain_module().space();
  const FiniteRelation s = support(t).point_level;
  ControlledCheck ctrl = check_controlled(sx, sy, s);
  require(!ctrl.ok(), errc::not_controlled_operator,
          "t is controlled; no conjugation violation exists");

  const auto [y1, x1] = ctrl.witness->first;
  const auto [y2, x2] = ctrl.witness->second;
  const GeoModule& dm = t.domain_module();
  const GeoModule& cm = t.codomain_module();
  const std::uint32_t ax1 = dm.atoms().block_of(x1);
  const std::uint32_t ax2 = dm.atoms().block_of(x2);
  const std::uint32_t ay1 = cm.atoms().block_of(y1);
  const std::uint32_t ay2 = cm.atoms().block_of(y2);

  // Column of the (ay, ax) block with the largest entry; the block is on the
  // support, so some entry is nonzero.
  const auto pick_column = [&](std::uint32_t ay, std::uint32_t ax) -> std::uint32_t {
    const Matrix b = t.block(ay, ax);
    Eigen::Index best_c = -1;
    double best = 0.0;
    for (Eigen::Index c = 0; c < b.cols(); ++c)
      for (Eigen::Index r = 0; r < b.rows(); ++r)
        if (std::abs(b(r, c)) > best) {
          best = std::abs(b(r, c));
          best_c = c;
        }
    require(best_c >= 0, errc::not_controlled_operator, "support block unexpectedly empty");
    return dm.offset(ax) + static_cast<std::uint32_t>(best_c);
  };
  const std::uint32_t c1 = pick_column(ay1, ax1);
  const std::uint32_t c2 = pick_column(ay2, ax2);

  Matrix probe_m = Matrix::Zero(dm.total_dim(), dm.total_dim());
  probe_m(c1, c2) = Complex(1.0, 0.0);
  BlockOperator probe(dm, dm, std::move(probe_m), 0.0);

  BlockOperator conj = t * probe * t.adjoint();
  BlockOperator conj_exact(conj.domain_module(), conj.codomain_module(), conj.matrix(), 0.0);

  AdViolation out{probe, sx.entourage_scale(support(probe).point_level),
                  sy.entourage_scale(support(conj_exact).point_level), {ax1, ax2}};
  return out;
}

QlArithmeticCheck ql_arithmetic_check(const BlockOperator& s, const BlockOperator& t,
                                      std::size_t atom_limit) {
  require(s.endomorphism() && t.endomorphism() && s.domain_module().same_as(t.domain_module()),
          errc::module_mismatch, "ql_arithmetic_check: need endomorphisms of one module");
  const CoarseSpace& space = s.domain_module().space();
  const FiniteRelation& gauge = s.domain_module().block_gauge();
  const double ns = operator_norm(s.matrix());
  const double nt = operator_norm(t.matrix());
  const BlockOperator st = s * t;

  QlArithmeticCheck out;
  out.ok = true;
  for (std::uint32_t i = 0; i < space.levels(); ++i) {
    const FiniteRelation& e = space.entourage_at(i);
    const FiniteRelation composed = compose(e, compose(gauge, e));
    QlArithmeticRow row;
    row.scale = i;
    row.composed_ladder_scale = space.entourage_scale(composed);
    row.over_ladder = row.composed_ladder_scale.is_unbounded();
    row.lhs = ql_value_at(st, composed, atom_limit);
    row.rhs = ql_value_at(s, e, atom_limit) * nt + ql_value_at(t, e, atom_limit) * ns;
    if (row.lhs > row.rhs + 1e-9 * std::max(1.0, row.rhs)) out.ok = false;
    out.rows.push_back(row);
  }
  return out;
}

OperatorReport analyze(const BlockOperator& t, std::size_t atom_limit) {
  OperatorReport report{support(t),
                        propagation_scale(t),
                        ql_profile(t, atom_limit),
                        trunc_profile(t),
                        false,
                        {},
                        std::nullopt,
                        is_proper_operator(t),
                        local_rank_profile(t),
                        operator_norm(t.matrix()),
                        t.tolerance()};
  ControlledCheck ctrl = check_controlled(t.domain_module().space(),
                                          t.codomain_module().space(),
                                          report.supp.point_level);
  report.controlled = ctrl.ok();
  if (ctrl.ok()) {
    report.controlled_modulus = ctrl.map->modulus_table();
  } else {
    report.controlled_witness = ctrl.witness;
  }
  return report;
}

}  // namespace coarse
