#include "coarse/suites.hpp"

#include <chrono>
#include <cmath>

namespace coarse {

namespace testgen {

FiniteRelation random_relation(Rng& rng, const GroundSet& source, const GroundSet& target,
                               double density) {
  std::vector<std::pair<std::uint32_t, std::uint32_t>> yx;
  for (std::uint32_t y = 0; y < target.size(); ++y)
    for (std::uint32_t x = 0; x < source.size(); ++x)
      if (unit_real(rng) < density) yx.emplace_back(y, x);
  return FiniteRelation::from_pairs(source, target, yx);
}

RandomMetric random_metric(Rng& rng, std::uint32_t max_points, std::uint32_t min_components,
                           std::uint32_t max_components) {
  const std::uint32_t n = pick(rng, std::max(2u, min_components), std::max(2u, max_points));
  const std::uint32_t comps = std::min(n, pick(rng, min_components, max_components));

  std::vector<std::uint32_t> comp_of(n);
  for (std::uint32_t c = 0; c < comps; ++c) comp_of[c] = c;  // nonempty components
  for (std::uint32_t i = comps; i < n; ++i) comp_of[i] = pick(rng, 0, comps - 1);
  std::sort(comp_of.begin(), comp_of.end());

  std::vector<double> pos(n, 0.0);
  for (std::uint32_t i = 1; i < n; ++i)
    pos[i] = comp_of[i] == comp_of[i - 1] ? pos[i - 1] + pick(rng, 1, 3) : 0.0;

  const double inf = std::numeric_limits<double>::infinity();
  RandomMetric out;
  out.dist.assign(n, std::vector<double>(n, 0.0));
  for (std::uint32_t i = 0; i < n; ++i)
    for (std::uint32_t j = 0; j < n; ++j)
      out.dist[i][j] = comp_of[i] == comp_of[j] ? std::abs(pos[i] - pos[j]) : inf;

  out.thresholds = {0.0};
  double t = 0.0;
  const std::uint32_t extra = pick(rng, 1, 3);
  for (std::uint32_t k = 0; k < extra; ++k) {
    t += pick(rng, 1, 4);
    out.thresholds.push_back(t);
  }
  return out;
}

CoarseSpace random_space(Rng& rng, std::uint32_t max_points, std::uint32_t min_components,
                         std::uint32_t max_components) {
  const RandomMetric m = random_metric(rng, max_points, min_components, max_components);
  return CoarseSpace::from_metric(m.dist, m.thresholds);
}

GeoModule random_module(Rng& rng, const CoarseSpace& space, std::uint32_t max_atom_size,
                        std::uint32_t min_dim, std::uint32_t max_dim) {
  const std::size_t n = space.size();
  std::vector<IndexSet> atoms;
  std::uint32_t i = 0;
  while (i < n) {
    std::uint32_t len = std::min<std::uint32_t>(pick(rng, 1, max_atom_size),
                                                static_cast<std::uint32_t>(n) - i);
    // stay inside one component
    while (len > 1 && space.component_of(i + len - 1) != space.component_of(i)) --len;
    IndexSet atom(n);
    for (std::uint32_t k = 0; k < len; ++k) atom.set(i + k);
    atoms.push_back(std::move(atom));
    i += len;
  }
  std::vector<std::uint32_t> dims;
  dims.reserve(atoms.size());
  for (std::size_t a = 0; a < atoms.size(); ++a) dims.push_back(pick(rng, min_dim, max_dim));
  return GeoModule(space, Partition(space.ground(), std::move(atoms)), std::move(dims));
}

Matrix random_alphabet_matrix(Rng& rng, std::uint32_t rows, std::uint32_t cols, double density) {
  static const Complex alphabet[4] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}};
  Matrix m = Matrix::Zero(rows, cols);
  for (std::uint32_t c = 0; c < cols; ++c)
    for (std::uint32_t r = 0; r < rows; ++r)
      if (unit_real(rng) < density) m(r, c) = alphabet[pick(rng, 0, 3)];
  return m;
}

Matrix random_gaussian_matrix(Rng& rng, std::uint32_t rows, std::uint32_t cols) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Matrix m(rows, cols);
  for (std::uint32_t c = 0; c < cols; ++c)
    for (std::uint32_t r = 0; r < rows; ++r) m(r, c) = Complex(gauss(rng), gauss(rng));
  return m;
}

BlockOperator random_alphabet_operator(Rng& rng, const GeoModule& domain,
                                       const GeoModule& codomain, double density) {
  return BlockOperator(domain, codomain,
                       random_alphabet_matrix(rng, codomain.total_dim(), domain.total_dim(),
                                              density),
                       0.0);
}

BlockOperator random_finite_propagation_operator(Rng& rng, const GeoModule& m,
                                                 std::uint32_t scale, double density) {
  BlockOperator full(m, m, random_alphabet_matrix(rng, m.total_dim(), m.total_dim(), density),
                     std::nullopt);
  return truncate_to_scale(full, ScaleIndex::at(scale));
}

FiniteRelation random_controlled_graph(Rng& rng, const CoarseSpace& source,
                                       const CoarseSpace& target, bool onto) {
  const auto cx = static_cast<std::uint32_t>(source.component_count());
  const auto cy = static_cast<std::uint32_t>(target.component_count());
  require(!onto || cx >= cy, errc::index_out_of_range,
          "onto graph needs at least as many source components");

  std::vector<std::uint32_t> class_map(cx);
  for (std::uint32_t c = 0; c < cx; ++c)
    class_map[c] = onto && c < cy ? c : pick(rng, 0, cy - 1);

  std::vector<std::vector<std::uint32_t>> targets(cy);
  for (std::uint32_t y = 0; y < target.size(); ++y)
    targets[target.component_of(y)].push_back(y);

  std::vector<std::pair<std::uint32_t, std::uint32_t>> yx;
  for (std::uint32_t x = 0; x < source.size(); ++x) {
    const auto& pool = targets[class_map[source.component_of(x)]];
    yx.emplace_back(pool[pick(rng, 0, static_cast<std::uint32_t>(pool.size()) - 1)], x);
  }
  return FiniteRelation::from_pairs(source.ground(), target.ground(), yx);
}

Partition random_controlled_partition(Rng& rng, const CoarseSpace& space,
                                      std::uint32_t max_block) {
  const std::size_t n = space.size();
  std::vector<IndexSet> blocks;
  std::uint32_t i = 0;
  while (i < n) {
    std::uint32_t len = std::min<std::uint32_t>(pick(rng, 1, max_block),
                                                static_cast<std::uint32_t>(n) - i);
    while (len > 1 && space.component_of(i + len - 1) != space.component_of(i)) --len;
    IndexSet blk(n);
    for (std::uint32_t k = 0; k < len; ++k) blk.set(i + k);
    blocks.push_back(std::move(blk));
    i += len;
  }
  return Partition(space.ground(), std::move(blocks));
}

}  // namespace testgen

namespace suites {

namespace {

using testgen::pick;
using testgen::Rng;

class Timer {
 public:
  Timer() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

struct Tally {
  int failures = 0;
  int total = 0;
  std::string first;

  void count(bool ok, const std::string& what) {
    ++total;
    if (!ok) {
      ++failures;
      if (first.empty()) first = what;
    }
  }

  Check check(const std::string& name) const {
    Check c{name, failures == 0, ""};
    c.detail = std::to_string(total - failures) + "/" + std::to_string(total);
    if (failures > 0) c.detail += " first failure: " + first;
    return c;
  }
};

FiniteRelation brute_force_product_image(const FiniteRelation& e, const FiniteRelation& e2,
                                         const FiniteRelation& d) {
  // (E (x) E')(D) over all quadruples.
  FiniteRelation out = FiniteRelation::empty(e2.target(), e.target());
  std::vector<std::pair<std::uint32_t, std::uint32_t>> pairs;
  for (std::uint32_t y = 0; y < e.target().size(); ++y)
    for (std::uint32_t y2 = 0; y2 < e2.target().size(); ++y2) {
      bool hit = false;
      for (std::uint32_t x = 0; x < e.source().size() && !hit; ++x)
        for (std::uint32_t x2 = 0; x2 < e2.source().size() && !hit; ++x2)
          if (e.test(y, x) && d.test(x, x2) && e2.test(y2, x2)) hit = true;
      if (hit) pairs.emplace_back(y, y2);
    }
  return FiniteRelation::from_pairs(e2.target(), e.target(), pairs);
}

GeoModule small_module(Rng& rng, const CoarseSpace& space, std::uint32_t max_atoms,
                       std::uint32_t min_dim, std::uint32_t max_dim) {
  // Resample until the atom count fits the exact-profile limit.
  for (int tries = 0; tries < 64; ++tries) {
    GeoModule m = testgen::random_module(rng, space, 3, min_dim, max_dim);
    if (m.atom_count() <= max_atoms) return m;
  }
  return GeoModule::uniform(space, std::max(1u, min_dim));
}

}  // namespace

std::vector<std::string> names() {
  return {"relations",   "supports",     "ql",        "ql-arithmetic", "ad-modulus",
          "cover-closeness", "approx-unit", "cartan",    "disconnected",  "k-unitary",
          "coarse-maps"};
}

SuiteResult relation_laws(std::uint64_t seed, int instances, double time_budget_seconds) {
  Timer timer;
  Rng rng(seed);
  Tally assoc, antihom, functorial, product, separation;

  for (int k = 0; k < instances; ++k) {
    GroundSet w(pick(rng, 1, 12)), x(pick(rng, 1, 12)), y(pick(rng, 1, 12)),
        z(pick(rng, 1, 12));
    const double density = 0.05 + 0.3 * testgen::unit_real(rng);
    FiniteRelation c = testgen::random_relation(rng, w, x, density);   // W -> X
    FiniteRelation b = testgen::random_relation(rng, x, y, density);   // X -> Y
    FiniteRelation a = testgen::random_relation(rng, y, z, density);   // Y -> Z

    assoc.count(compose(a, compose(b, c)) == compose(compose(a, b), c), "associativity");
    antihom.count(transpose(compose(a, b)) == compose(transpose(b), transpose(a)),
                  "transpose anti-homomorphism");

    IndexSet sub(w.size());
    for (std::uint32_t i = 0; i < w.size(); ++i)
      if (testgen::unit_real(rng) < 0.4) sub.set(i);
    functorial.count(image(compose(b, c), sub) == image(b, image(c, sub)),
                     "image functoriality");

    // product relation image (E (x) E')(D) = E o D o op E'
    GroundSet x2(pick(rng, 1, 8)), y2(pick(rng, 1, 8));
    FiniteRelation e = testgen::random_relation(rng, x, y, density);    // X -> Y
    FiniteRelation e2 = testgen::random_relation(rng, x2, y2, density); // X' -> Y'
    FiniteRelation d = testgen::random_relation(rng, x2, x, density);   // subset of X x X'
    product.count(product_image(e, e2, d) == brute_force_product_image(e, e2, d),
                  "product image vs brute force");

    FiniteRelation r = testgen::random_relation(rng, x, x, density);
    FiniteRelation sym = set_union(r, transpose(r));
    IndexSet sa(x.size()), sb(x.size());
    for (std::uint32_t i = 0; i < x.size(); ++i) {
      if (testgen::unit_real(rng) < 0.4) sa.set(i);
      if (testgen::unit_real(rng) < 0.4) sb.set(i);
    }
    separation.count(is_separated(sb, sym, sa) == is_separated(sa, sym, sb),
                     "separation symmetry");
  }

  SuiteResult out{"relations", {}, 0.0};
  out.checks = {assoc.check("associativity"), antihom.check("transpose anti-homomorphism"),
                functorial.check("image functoriality"),
                product.check("product image identity"),
                separation.check("separation symmetry (symmetric relations)")};
  out.seconds = timer.seconds();
  out.checks.push_back({"runtime < " + std::to_string(time_budget_seconds) + "s",
                        out.seconds < time_budget_seconds,
                        std::to_string(out.seconds) + "s"});
  return out;
}

SuiteResult support_calculus(std::uint64_t seed, int instances) {
  Timer timer;
  Rng rng(seed);
  Tally sum, adjoint, comp;

  for (int k = 0; k < instances; ++k) {
    CoarseSpace space = testgen::random_space(rng, 8, 1, 2);
    GeoModule ma = small_module(rng, space, 8, 0, 3);
    GeoModule mb = small_module(rng, space, 8, 0, 3);
    const double density = 0.2 + 0.5 * testgen::unit_real(rng);

    BlockOperator r = testgen::random_alphabet_operator(rng, ma, mb, density);
    BlockOperator s = testgen::random_alphabet_operator(rng, ma, mb, density);
    BlockOperator t = testgen::random_alphabet_operator(rng, mb, ma, density);

    sum.count(sum_support_check(r, s), "Supp(r+s) in Sr u Ss");
    adjoint.count(support(r.adjoint()).point_level == transpose(support(r).point_level),
                  "Supp(r*) = op Supp(r)");
    comp.count(compose_support_bound_check(t, s).compose_ok, "Supp(ts) in St o E~ o Ss");
  }

  SuiteResult out{"supports",
                  {sum.check("sum law"), adjoint.check("adjoint law"),
                   comp.check("composition bound")},
                  timer.seconds()};
  return out;
}

SuiteResult ql_sandwich(std::uint64_t seed, int instances) {
  Timer timer;
  Rng rng(seed);
  Tally mono_ql, mono_trunc, dominated, sandwich, zero_prop;

  for (int k = 0; k < instances; ++k) {
    CoarseSpace space = testgen::random_space(rng, 8, 1, 2);
    GeoModule m = small_module(rng, space, 8, 1, 3);
    BlockOperator t(m, m, testgen::random_gaussian_matrix(rng, m.total_dim(), m.total_dim()),
                    std::nullopt);

    const QlProfile ql = ql_profile(t);
    const std::vector<double> trunc = trunc_profile(t);
    for (std::size_t i = 0; i < ql.values.size(); ++i) {
      dominated.count(ql.values[i] <= trunc[i] + 1e-10, "ql <= trunc");
      if (i > 0) {
        mono_ql.count(ql.values[i] <= ql.values[i - 1] + 1e-10, "ql nonincreasing");
        mono_trunc.count(trunc[i] <= trunc[i - 1] + 1e-10, "trunc nonincreasing");
      }
      const auto [lo, hi] = ql_bounds_at(t, space.entourage_at(static_cast<std::uint32_t>(i)));
      sandwich.count(lo <= ql.values[i] + 1e-10 && ql.values[i] <= hi + 1e-10,
                     "lower <= exact <= upper");
    }

    // exact tolerance-0 operators: vanishing profile exactly at the
    // propagation scale
    BlockOperator e = testgen::random_finite_propagation_operator(
        rng, m, pick(rng, 0, space.top_scale()), 0.5);
    BlockOperator e0(m, m, e.matrix(), 0.0);
    const ScaleIndex p = propagation_scale(e0);
    if (p.is_finite()) {
      const double at_p = ql_value_at(e0, space.entourage(p));
      zero_prop.count(at_p == 0.0, "ql vanishes at the propagation scale");
    }
  }

  SuiteResult out{"ql",
                  {dominated.check("ql <= trunc"), sandwich.check("bounds sandwich"),
                   mono_ql.check("ql monotone"), mono_trunc.check("trunc monotone"),
                   zero_prop.check("ql = 0 at propagation scale (tau = 0)")},
                  timer.seconds()};
  return out;
}

SuiteResult ql_arithmetic(std::uint64_t seed, int instances) {
  Timer timer;
  Rng rng(seed);
  Tally law;
  for (int k = 0; k < instances; ++k) {
    CoarseSpace space = testgen::random_space(rng, 6, 1, 2);
    GeoModule m = small_module(rng, space, 6, 1, 2);
    BlockOperator s(m, m, testgen::random_gaussian_matrix(rng, m.total_dim(), m.total_dim()),
                    std::nullopt);
    BlockOperator t(m, m, testgen::random_gaussian_matrix(rng, m.total_dim(), m.total_dim()),
                    std::nullopt);
    law.count(ql_arithmetic_check(s, t).ok, "st quasi-locality bound");
  }
  SuiteResult out{"ql-arithmetic", {law.check("product quasi-locality")}, timer.seconds()};
  return out;
}

SuiteResult ad_modulus(std::uint64_t seed, int instances) {
  Timer timer;
  Rng rng(seed);
  Tally contained, witness;

  for (int k = 0; k < instances; ++k) {
    CoarseSpace space = testgen::random_space(rng, 7, 1, 2);
    GeoModule mx = small_module(rng, space, 7, 1, 2);
    GeoModule my = small_module(rng, space, 7, 1, 2);

    // t controlled: blocks masked by a controlled graph.
    const FiniteRelation graph = testgen::random_controlled_graph(rng, space, space, false);
    Matrix tm = testgen::random_alphabet_matrix(rng, my.total_dim(), mx.total_dim(), 0.7);
    for (std::uint32_t b = 0; b < my.atom_count(); ++b)
      for (std::uint32_t a = 0; a < mx.atom_count(); ++a)
        if (!image(graph, mx.atoms().block(a)).intersects(my.atoms().block(b)))
          tm.block(my.offset(b), mx.offset(a), my.dim(b), mx.dim(a)).setZero();
    BlockOperator t(mx, my, std::move(tm), 0.0);

    BlockOperator x = testgen::random_finite_propagation_operator(
        rng, mx, pick(rng, 0, space.top_scale()), 0.6);
    BlockOperator x0(mx, mx, x.matrix(), 0.0);
    contained.count(ad(t, x0).contained, "Supp(txt*) in S o E~ o E o E~ o op S");
  }

  // Crafted non-controlled operator: neighbours of one cluster scatter into
  // different components, so the support is not a controlled relation and
  // the matrix-unit probe defeats every ladder bound.
  {
    const double inf = std::numeric_limits<double>::infinity();
    CoarseSpace pair2 = CoarseSpace::from_metric(
        {{0, 1, inf, inf}, {1, 0, inf, inf}, {inf, inf, 0, 1}, {inf, inf, 1, 0}}, {0, 1});
    GeoModule m = GeoModule::uniform(pair2, 1);
    Matrix scatter = Matrix::Zero(4, 4);
    scatter(0, 0) = Complex(1, 0);
    scatter(2, 1) = Complex(1, 0);
    BlockOperator t(m, m, std::move(scatter), 0.0);
    const AdViolation v = ad_violation_witness(t);
    witness.count(v.probe_scale.is_finite() && v.conjugate_scale.is_unbounded(),
                  "matrix-unit witness defeats the ladder");
  }

  SuiteResult out{"ad-modulus",
                  {contained.check("conjugation modulus"),
                   witness.check("non-controlled witness")},
                  timer.seconds()};
  return out;
}

SuiteResult covering(std::uint64_t seed, int instances) {
  Timer timer;
  Rng rng(seed);
  Tally identity, certificate, closeness_finite, closeness_bound;

  const CoverKind kinds[4] = {CoverKind::partial_isometry, CoverKind::isometry,
                              CoverKind::coisometry, CoverKind::unitary};
  for (int k = 0; k < instances; ++k) {
    const CoverKind kind = kinds[k % 4];
    try {
      if (kind == CoverKind::unitary) {
        // Two copies of one metric, permuted within components: a coarse
        // equivalence with exactly matched modules.
        const testgen::RandomMetric mm = testgen::random_metric(rng, 6, 1, 2);
        CoarseSpace sx = CoarseSpace::from_metric(mm.dist, mm.thresholds);
        CoarseSpace sy = CoarseSpace::from_metric(mm.dist, mm.thresholds);

        const std::uint32_t rank = pick(rng, 1, 2);
        GeoModule mx = GeoModule::uniform(sx, rank);
        GeoModule my = GeoModule::uniform(sy, rank);

        // Permutation preserving components.
        std::vector<std::uint32_t> perm(sx.size());
        std::iota(perm.begin(), perm.end(), 0u);
        for (std::uint32_t c = 0; c < sx.component_count(); ++c) {
          auto comp = sx.component_set(c).to_indices();
          auto shuffled = comp;
          std::shuffle(shuffled.begin(), shuffled.end(), rng);
          for (std::size_t i = 0; i < comp.size(); ++i) perm[comp[i]] = shuffled[i];
        }
        std::vector<std::pair<std::uint32_t, std::uint32_t>> yx;
        for (std::uint32_t x = 0; x < sx.size(); ++x) yx.emplace_back(perm[x], x);
        ControlledMap f = require_controlled(
            sx, sy, FiniteRelation::from_pairs(sx.ground(), sy.ground(), yx));

        CoverResult c0 = cover(f, mx, my, CoverKind::unitary);
        identity.count(c0.kind_identity_error <= 1e-10, "unitary identity");
        certificate.count(c0.certificate.close, "unitary certificate");

        CoverResult c1 = cover(f, mx, my, CoverKind::unitary, seed + k + 1);
        const CoverCloseness cc = covers_are_close(c0, c1);
        closeness_finite.count(cc.all_finite, "u1 u0* has controlled propagation");
        bool bounded = true;
        for (int i = 0; i < 2; ++i)
          for (int j = 0; j < 2; ++j)
            if (cc.measured[i][j] > cc.predicted[i][j]) bounded = false;
        closeness_bound.count(bounded, "measured within predicted");
        continue;
      }

      CoarseSpace sx = testgen::random_space(rng, 6, 1, 3);
      CoarseSpace sy = testgen::random_space(
          rng, 6, 1, kind == CoverKind::coisometry
                         ? static_cast<std::uint32_t>(sx.component_count())
                         : 3);
      const bool onto = kind == CoverKind::coisometry;
      FiniteRelation graph = testgen::random_controlled_graph(rng, sx, sy, onto);
      if (kind == CoverKind::partial_isometry) {
        // Restrict to a random nonempty domain.
        IndexSet keep(sx.size());
        for (std::uint32_t x = 0; x < sx.size(); ++x)
          if (testgen::unit_real(rng) < 0.6) keep.set(x);
        if (keep.none()) keep.set(0);
        graph = compose(graph, FiniteRelation::diagonal_over(sx.ground(), keep));
      }
      ControlledMap f = require_controlled(sx, sy, graph);

      // Coisometries need the source ample against the re-partitioned target
      // and enough target dimensions to deal one to every routed source atom.
      GeoModule mx = GeoModule::uniform(
          sx, kind == CoverKind::coisometry
                  ? static_cast<std::uint32_t>(sy.size() * sx.size())
                  : 1);
      GeoModule my = GeoModule::uniform(sy, static_cast<std::uint32_t>(sx.size()));

      CoverResult c0 = cover(f, mx, my, kind);
      identity.count(c0.kind_identity_error <= 1e-10,
                     std::string(cover_kind_name(kind)) + " identity");
      certificate.count(c0.certificate.close,
                        std::string(cover_kind_name(kind)) + " certificate");

      if (kind == CoverKind::isometry) {
        CoverResult c1 = cover(f, mx, my, kind, seed + 31 * k + 7);
        const CoverCloseness cc = covers_are_close(c0, c1);
        closeness_finite.count(cc.all_finite, "t1 t0* has controlled propagation");
        bool bounded = true;
        for (int i = 0; i < 2; ++i)
          for (int j = 0; j < 2; ++j)
            if (cc.measured[i][j] > cc.predicted[i][j]) bounded = false;
        closeness_bound.count(bounded, "measured within predicted");
      }
    } catch (const Error& e) {
      identity.count(false, std::string("construction threw: ") + e.what());
    }
  }

  SuiteResult out{"cover-closeness",
                  {identity.check("kind identities at 1e-10"),
                   certificate.check("support covers the map"),
                   closeness_finite.check("different covers stay close"),
                   closeness_bound.check("closeness within predicted scale")},
                  timer.seconds()};
  return out;
}

SuiteResult approx_unit(std::uint64_t seed, int instances, bool inject_bug,
                        double time_budget_seconds) {
  Timer timer;
  Rng rng(seed);
  Tally projection, propagation, ranks, bound;

  Tally parity;
  const double epsilons[3] = {0.5, 0.1, 0.01};
  for (int k = 0; k < instances; ++k) {
    CoarseSpace space = testgen::random_space(rng, 20, 1, 3);
    GeoModule m = testgen::random_module(rng, space, 2, 1, 4);
    BlockOperator t = testgen::random_finite_propagation_operator(
        rng, m, pick(rng, 0, space.top_scale()), 0.4);
    // keep the norm away from zero so the certified bound is a real test
    if (operator_norm(t.matrix()) < 1.0) {
      Matrix boosted = t.matrix();
      if (m.total_dim() > 0) boosted(0, 0) += Complex(2.0, 0.0);
      t = BlockOperator(m, m, std::move(boosted), std::nullopt);
    }

    const double eps = epsilons[k % 3];
    ApproxUnitWitness w = approximate_unit(t, eps);
    if (inject_bug) {
      // Simulated construction defect: report the same certificate for an
      // empty projection.
      w.p_lambda = BlockOperator::zero(m, m);
      w.measured = operator_norm(t.matrix());
    }

    const Matrix& p = w.p_lambda.matrix();
    projection.count(operator_norm((p * p - p).eval()) <= 1e-10 &&
                         operator_norm((p - p.adjoint()).eval()) <= 1e-10,
                     "p is a projection");
    propagation.count(contains(m.block_gauge(), support(w.p_lambda).point_level),
                      "p inside the discreteness gauge");
    bool rk = true;
    for (std::uint32_t a = 0; a < m.atom_count(); ++a)
      if (w.kept_rank[a] > m.dim(a)) rk = false;
    ranks.count(rk, "locally finite rank");
    bound.count(w.measured <= w.certified_bound + 1e-12,
                "||t - pt|| = " + std::to_string(w.measured) + " vs 10eps = " +
                    std::to_string(w.certified_bound));
    if (!inject_bug)
      parity.count(w.measured_even <= 5.0 * eps + 1e-12 &&
                       w.measured_odd <= 5.0 * eps + 1e-12,
                   "per-parity 5eps ledger");
  }

  SuiteResult out{"approx-unit",
                  {projection.check("projection identities"),
                   propagation.check("propagation in discreteness gauge"),
                   ranks.check("local ranks"), bound.check("certified 10eps bound"),
                   parity.check("per-parity 5eps ledger")},
                  timer.seconds()};
  out.checks.push_back({"runtime < " + std::to_string(time_budget_seconds) + "s",
                        out.seconds < time_budget_seconds,
                        std::to_string(out.seconds) + "s"});
  return out;
}

SuiteResult cartan(std::uint64_t seed, int expectation_instances, int commutant_instances) {
  Timer timer;
  Rng rng(seed);
  Tally idem, contractive, bimodule, faithful, commutant, band_exact, band_count, band_inj;

  for (int k = 0; k < expectation_instances; ++k) {
    CoarseSpace space = testgen::random_space(rng, 8, 1, 2);
    GeoModule m = small_module(rng, space, 8, 1, 3);
    Partition p = testgen::random_controlled_partition(rng, space, 3);
    // blocks must be unions of atoms: coarsen to the atom hull
    std::vector<IndexSet> blocks;
    IndexSet used(m.atom_count());
    for (const auto& blk : p.blocks()) {
      IndexSet atoms = m.atoms_meeting(blk);
      atoms -= used;
      if (atoms.none()) continue;
      used |= atoms;
      blocks.push_back(m.points_of_atoms(atoms));
    }
    Partition q(space.ground(), std::move(blocks));

    const std::uint32_t d = m.total_dim();
    if (d == 0) continue;
    Matrix tm = testgen::random_gaussian_matrix(rng, d, d);
    tm /= std::max(1.0, operator_norm(tm));
    BlockOperator t(m, m, tm, std::nullopt);

    BlockOperator et = conditional_expectation(t, q);
    idem.count(operator_norm((conditional_expectation(et, q).matrix() - et.matrix()).eval()) <=
                   1e-12,
               "E E = E");
    contractive.count(operator_norm(et.matrix()) <= operator_norm(t.matrix()) + 1e-12,
                      "||E(t)|| <= ||t||");

    BlockOperator x = conditional_expectation(
        BlockOperator(m, m, testgen::random_gaussian_matrix(rng, d, d), std::nullopt), q);
    BlockOperator y = conditional_expectation(
        BlockOperator(m, m, testgen::random_gaussian_matrix(rng, d, d), std::nullopt), q);
    const Matrix lhs = conditional_expectation(x * t * y, q).matrix();
    const Matrix rhs = x.matrix() * et.matrix() * y.matrix();
    const double denom = std::max(1.0, operator_norm(x.matrix()) * operator_norm(y.matrix()));
    bimodule.count(operator_norm((lhs - rhs).eval()) <= 1e-12 * denom * 100, "E(xty) = xE(t)y");

    // quantitative faithfulness: ||t||^2 bounded by the diagonal of E(t*t)
    BlockOperator ett = conditional_expectation(t.adjoint() * t, q);
    double diag_sum = 0.0;
    for (std::size_t b = 0; b < q.block_count(); ++b) {
      const IndexSet mask = m.atom_mask_of(q.block(b));
      diag_sum += ett.masked_norm(mask, mask);
    }
    const double tnorm = operator_norm(t.matrix());
    faithful.count(tnorm * tnorm <= diag_sum + 1e-9, "faithfulness certificate");
  }

  for (int k = 0; k < commutant_instances; ++k) {
    CoarseSpace space = testgen::random_space(rng, 6, 1, 2);
    GeoModule m = small_module(rng, space, 6, 0, 2);
    if (m.total_dim() == 0 || m.total_dim() > 12) continue;
    CommutantResult c = commutant_dimension(m.atoms(), m);
    commutant.count(c.dimension == c.expected && c.expected == m.nontrivial_atom_count(),
                    "commutant dimension = " + std::to_string(c.dimension) + " expected " +
                        std::to_string(c.expected));
  }

  for (int k = 0; k < commutant_instances; ++k) {
    CoarseSpace space = testgen::random_space(rng, 8, 1, 2);
    GeoModule m = small_module(rng, space, 8, 1, 2);
    BlockOperator t = testgen::random_finite_propagation_operator(
        rng, m, pick(rng, 0, space.top_scale()), 0.5);
    BandDecomposition bd = band_decompose(t, m.atoms());
    Matrix sum = Matrix::Zero(t.matrix().rows(), t.matrix().cols());
    for (const auto& piece : bd.pieces) sum += piece.matrix();
    band_exact.count((sum - t.matrix()).cwiseAbs().maxCoeff() == 0.0, "exact reconstruction");
    band_count.count(bd.pieces.size() <= bd.max_degree + 1, "piece count <= degree + 1");
    bool inj = true;
    for (const auto& piece : bd.pieces) {
      const FiniteRelation s = support(BlockOperator(piece.domain_module(),
                                                     piece.codomain_module(), piece.matrix(),
                                                     0.0))
                                   .atom_level;
      std::vector<int> row_seen(piece.codomain_module().atom_count(), 0);
      std::vector<int> col_seen(piece.domain_module().atom_count(), 0);
      for (auto [b, a] : s.pairs()) {
        if (++row_seen[b] > 1 || ++col_seen[a] > 1) inj = false;
      }
    }
    band_inj.count(inj, "one block per row/column");
  }

  SuiteResult out{"cartan",
                  {idem.check("expectation idempotent"),
                   contractive.check("expectation contractive"),
                   bimodule.check("bimodule law"), faithful.check("expectation faithful"),
                   commutant.check("commutant dimension"),
                   band_exact.check("band reconstruction"),
                   band_count.check("band piece count"),
                   band_inj.check("band injectivity")},
                  timer.seconds()};
  return out;
}

SuiteResult disconnected(std::uint64_t seed, int instances) {
  Timer timer;
  Rng rng(seed);
  Tally zero, sums, unbounded;

  for (int k = 0; k < instances; ++k) {
    CoarseSpace space = testgen::random_space(rng, 10, 2, 4);
    GeoModule m = testgen::random_module(rng, space, 2, 1, 3);
    BlockOperator t = testgen::random_finite_propagation_operator(
        rng, m, pick(rng, 0, space.top_scale()), 0.5);

    ComponentDecomposition cd = component_decompose(t);
    zero.count(cd.off_blocks_zero, "cross-component blocks vanish");
    sums.count(cd.sum_exact, "t equals the sum of its compressions");

    // one cross-component entry flips the classification
    const std::uint32_t c0 = 0, c1 = 1;
    IndexSet a0 = space.component_set(c0), a1 = space.component_set(c1);
    const IndexSet d0 = m.coords_of_atoms(m.atoms_meeting(a0));
    const IndexSet d1 = m.coords_of_atoms(m.atoms_meeting(a1));
    if (d0.any() && d1.any()) {
      Matrix bad = t.matrix();
      bad(d1.first(), d0.first()) = Complex(1.0, 0.0);
      BlockOperator tb(m, m, std::move(bad), std::nullopt);
      unbounded.count(propagation_scale(tb).is_unbounded(),
                      "cross entry classified unbounded");
    }
  }

  SuiteResult out{"disconnected",
                  {zero.check("off-component blocks zero"),
                   sums.check("strong sum decomposition"),
                   unbounded.check("cross entries unbounded")},
                  timer.seconds()};
  return out;
}

SuiteResult k_unitary(std::uint64_t seed, int instances) {
  Timer timer;
  Rng rng(seed);
  Tally algebra, conjugation, blocks;

  for (int k = 0; k < std::max(1, instances); ++k) {
    CoarseSpace space = testgen::random_space(rng, 6, 1, 2);
    GeoModule mx = GeoModule::uniform(space, 1);
    GeoModule my = GeoModule::uniform(space, 2);
    ControlledMap f =
        require_controlled(space, space, FiniteRelation::diagonal(space.ground()));

    CoverResult c0 = cover(f, mx, my, CoverKind::isometry, seed + 2 * k);
    CoverResult c1 = cover(f, mx, my, CoverKind::isometry, seed + 2 * k + 1);
    KTheoryUnitary u = ktheory_unitary(c0.op, c1.op, 10, seed + k);

    algebra.count(u.selfadjoint_error <= 1e-10 && u.involution_error <= 1e-10 &&
                      u.unitary_error <= 1e-10,
                  "u = u*, u^2 = 1");
    conjugation.count(u.conjugation_error <= 1e-10, "alpha_1 = Ad(u) alpha_0");
    blocks.count(u.blocks_controlled, "blocks of u have controlled propagation");
  }

  SuiteResult out{"k-unitary",
                  {algebra.check("unitary involution"), conjugation.check("conjugation"),
                   blocks.check("block propagation")},
                  timer.seconds()};
  return out;
}

SuiteResult coarse_maps(std::uint64_t seed, int instances) {
  Timer timer;
  Rng rng(seed);
  Tally reflexive, symmetric, transitive, compose_indep, embed_proper, quotient;

  for (int k = 0; k < instances; ++k) {
    CoarseSpace sx = testgen::random_space(rng, 8, 1, 2);
    CoarseSpace sy = testgen::random_space(rng, 8, 1, 2);
    FiniteRelation graph = testgen::random_controlled_graph(rng, sx, sy, false);
    ControlledMap f = require_controlled(sx, sy, graph);

    const ClosenessCertificate self = closeness(f, f);
    reflexive.count(self.close && self.source_scale == ScaleIndex::at(0) &&
                        self.target_scale == ScaleIndex::at(0),
                    "closeness reflexive at (0,0)");

    const std::uint32_t a = pick(rng, 0, sx.top_scale());
    const std::uint32_t b = pick(rng, 0, sy.top_scale());
    ControlledMap g = require_controlled(
        sx, sy,
        compose(sy.entourage_at(b), compose(graph, sx.entourage_at(a))));
    const ClosenessCertificate fg = closeness(f, g);
    const ClosenessCertificate gf = closeness(g, f);
    symmetric.count(fg.close && gf.close && fg.source_scale == gf.source_scale &&
                        fg.target_scale == gf.target_scale,
                    "closeness symmetric");

    const std::uint32_t a2 = pick(rng, 0, sx.top_scale());
    const std::uint32_t b2 = pick(rng, 0, sy.top_scale());
    ControlledMap h = require_controlled(
        sx, sy,
        compose(sy.entourage_at(b2), compose(g.relation(), sx.entourage_at(a2))));
    const ClosenessCertificate gh = closeness(g, h);
    const ClosenessCertificate fh = closeness(f, h);
    bool trans = fh.close;
    if (trans && fg.close && gh.close) {
      // composed-scale bound, checked literally on the relations
      const FiniteRelation ee =
          compose(sx.entourage(fg.source_scale), sx.entourage(gh.source_scale));
      const FiniteRelation ff =
          compose(sy.entourage(gh.target_scale), sy.entourage(fg.target_scale));
      trans = contains(compose(ff, compose(h.relation(), ee)), f.relation()) &&
              contains(compose(ff, compose(f.relation(), ee)), h.relation());
    }
    transitive.count(trans, "closeness transitive with composed bound");

    // coarse composition: close representatives give close outputs
    CoarseSpace sw = testgen::random_space(rng, 6, 1, 2);
    FiniteRelation s = testgen::random_controlled_graph(rng, sw, sx, false);
    FiniteRelation s2 = compose(sx.entourage_at(pick(rng, 0, sx.top_scale())), s);
    const CoarseComposition o1 = coarse_compose(f, s);
    const CoarseComposition o2 = coarse_compose(f, s2);
    ControlledMap m1 = require_controlled(sw, sy, o1.relation);
    ControlledMap m2 = require_controlled(sw, sy, o2.relation);
    compose_indep.count(closeness(m1, m2).close, "coarse composition representative-free");

    // embeddings are proper
    const EmbeddingModulus em = embedding_modulus(f);
    if (em.embedding) embed_proper.count(is_proper(f).proper, "embedding implies proper");

    Partition p = testgen::random_controlled_partition(rng, sx, 3);
    quotient.count(partition_quotient_equivalence(sx, p).equivalence.equivalence,
                   "partition quotient is a coarse equivalence");
  }

  SuiteResult out{"coarse-maps",
                  {reflexive.check("reflexivity"), symmetric.check("symmetry"),
                   transitive.check("transitivity"),
                   compose_indep.check("composition independence"),
                   embed_proper.check("embedding => proper"),
                   quotient.check("quotient equivalence")},
                  timer.seconds()};
  return out;
}

SuiteResult run(const std::string& name, const Options& opt, const Fixture* fixture) {
  const auto scaled = [&](int full) {
    return std::max(1, static_cast<int>(full * opt.fraction));
  };

  SuiteResult result{"", {}, 0.0};
  if (name == "relations") {
    result = relation_laws(opt.seed, scaled(1000));
  } else if (name == "supports") {
    result = support_calculus(opt.seed, scaled(500));
  } else if (name == "ql") {
    result = ql_sandwich(opt.seed, scaled(500));
  } else if (name == "ql-arithmetic") {
    result = ql_arithmetic(opt.seed, scaled(60));
  } else if (name == "ad-modulus") {
    result = ad_modulus(opt.seed, scaled(200));
  } else if (name == "cover-closeness") {
    result = covering(opt.seed, scaled(50));
  } else if (name == "approx-unit") {
    result = approx_unit(opt.seed, scaled(100), opt.inject_bug);
  } else if (name == "cartan") {
    result = cartan(opt.seed, scaled(200), scaled(50));
  } else if (name == "disconnected") {
    result = disconnected(opt.seed, scaled(50));
  } else if (name == "k-unitary") {
    result = k_unitary(opt.seed, scaled(10));
  } else if (name == "coarse-maps") {
    result = coarse_maps(opt.seed, scaled(50));
  } else {
    fail(errc::unknown_suite, "no suite named \"" + name + "\"");
  }

  if (fixture) {
    // Fixture operators run through the per-operator laws of the suite.
    for (const auto& [opname, entry] : fixture->operators) {
      const BlockOperator& t = entry.op;
      if (!t.same_space()) continue;
      if (name == "supports") {
        const bool ok =
            support(t.adjoint()).point_level == transpose(support(t).point_level);
        result.checks.push_back({"fixture " + opname + ": adjoint law", ok, ""});
      } else if (name == "ql" && t.domain_module().atom_count() <= kDefaultAtomLimit) {
        const QlProfile ql = ql_profile(t);
        const auto tr = trunc_profile(t);
        bool ok = true;
        for (std::size_t i = 0; i < ql.values.size(); ++i)
          if (ql.values[i] > tr[i] + 1e-10) ok = false;
        result.checks.push_back({"fixture " + opname + ": ql <= trunc", ok, ""});
      } else if (name == "approx-unit" && t.endomorphism() &&
                 propagation_scale(t).is_finite()) {
        const ApproxUnitWitness w = approximate_unit(t, 0.1);
        result.checks.push_back({"fixture " + opname + ": 10eps bound",
                                 w.measured <= w.certified_bound + 1e-12, ""});
      } else if (name == "cartan" && t.endomorphism()) {
        const BlockOperator e = conditional_expectation(t, t.domain_module().atoms());
        const bool ok = operator_norm((conditional_expectation(e, t.domain_module().atoms())
                                           .matrix() -
                                       e.matrix())
                                          .eval()) <= 1e-12;
        result.checks.push_back({"fixture " + opname + ": expectation idempotent", ok, ""});
      } else if (name == "disconnected") {
        if (propagation_scale(t).is_finite()) {
          const ComponentDecomposition cd = component_decompose(t);
          result.checks.push_back(
              {"fixture " + opname + ": component sum", cd.sum_exact, ""});
        }
      }
    }
  }
  return result;
}

}  // namespace suites

}  // namespace coarse
