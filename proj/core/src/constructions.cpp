#include "coarse/constructions.hpp"

#include <algorithm>
#include <numeric>

namespace coarse {

namespace {

/// Orthonormal basis of the span of the collected columns.
Matrix orthonormal_span(const Matrix& cols) {
  if (cols.cols() == 0 || cols.rows() == 0) return Matrix(cols.rows(), 0);
  Eigen::JacobiSVD<Matrix> svd(cols, Eigen::ComputeThinU);
  const auto& sv = svd.singularValues();
  const double floor_ = 1e-12 * (sv.size() ? sv(0) : 0.0);
  Eigen::Index rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv(i) > floor_) ++rank;
  return svd.matrixU().leftCols(rank);
}

struct Routing {
  std::vector<std::pair<std::uint32_t, std::uint32_t>> matching;  // (source atom, target atom)
  std::uint32_t scale = 0;
};

/// phi: each routed source atom goes to the least eligible target atom at the
/// minimal ladder scale where the image of the source atom meets a thickened
/// target atom. A seeded rng replaces "least" by a uniform pick.
Routing route_atoms(const CoarseSpace& target_space, const FiniteRelation& relation,
                    const std::vector<IndexSet>& source_sets,
                    const std::vector<std::uint32_t>& source_ids,
                    const std::vector<IndexSet>& target_sets,
                    const std::vector<std::uint32_t>& target_ids, std::mt19937_64* rng) {
  Routing out;
  require(!target_sets.empty() || source_sets.empty(), errc::ampleness_insufficient,
          "no nontrivial target blocks to route into");
  for (std::size_t s = 0; s < source_sets.size(); ++s) {
    const IndexSet img = image(relation, source_sets[s]);
    std::optional<std::uint32_t> pick;
    for (std::uint32_t level = 0; level < target_space.levels() && !pick; ++level) {
      std::vector<std::uint32_t> eligible;
      for (std::uint32_t ti = 0; ti < target_sets.size(); ++ti)
        if (img.intersects(image(target_space.entourage_at(level), target_sets[ti])))
          eligible.push_back(ti);
      if (eligible.empty()) continue;
      out.scale = std::max(out.scale, level);
      if (rng) {
        std::uniform_int_distribution<std::size_t> dist(0, eligible.size() - 1);
        pick = eligible[dist(*rng)];
      } else {
        pick = eligible.front();
      }
    }
    if (!pick)
      fail(errc::ampleness_insufficient,
           "no target block reachable from source block " + std::to_string(source_ids[s]) +
               " (target module not faithful towards the image)");
    out.matching.emplace_back(source_ids[s], target_ids[*pick]);
  }
  return out;
}

struct InjectionPlan {
  Matrix matrix;  // codomain_dim x domain_dim isometry-on-routed-blocks
  std::vector<std::uint32_t> used;  // per target atom, coordinates consumed
};

/// Canonical basis injections realizing a routing; sources ascending, target
/// coordinates ascending (or seeded-shuffled).
InjectionPlan inject(const GeoModule& dm, const GeoModule& cm,
                     const std::vector<std::pair<std::uint32_t, std::uint32_t>>& matching,
                     std::mt19937_64* rng) {
  InjectionPlan plan;
  plan.matrix = Matrix::Zero(cm.total_dim(), dm.total_dim());
  plan.used.assign(cm.atom_count(), 0);

  std::vector<std::vector<std::uint32_t>> slots(cm.atom_count());
  for (std::uint32_t j = 0; j < cm.atom_count(); ++j) {
    slots[j].resize(cm.dim(j));
    std::iota(slots[j].begin(), slots[j].end(), 0u);
    if (rng) std::shuffle(slots[j].begin(), slots[j].end(), *rng);
  }

  for (auto [i, j] : matching) {
    const std::uint32_t need = dm.dim(i);
    if (plan.used[j] + need > cm.dim(j))
      fail(errc::ampleness_insufficient,
           "target block " + std::to_string(j) + " needs " +
               std::to_string(plan.used[j] + need) + " dimensions but has " +
               std::to_string(cm.dim(j)));
    for (std::uint32_t c = 0; c < need; ++c) {
      const std::uint32_t row = cm.offset(j) + slots[j][plan.used[j] + c];
      plan.matrix(row, dm.offset(i) + c) = Complex(1.0, 0.0);
    }
    plan.used[j] += need;
  }
  return plan;
}

std::vector<std::uint32_t> nontrivial_atoms(const GeoModule& m) {
  std::vector<std::uint32_t> out;
  for (std::uint32_t i = 0; i < m.atom_count(); ++i)
    if (m.dim(i) > 0) out.push_back(i);
  return out;
}

ClosenessCertificate support_certificate(const BlockOperator& t, const ControlledMap& f) {
  const CoarseSpace& sx = t.domain_module().space();
  const CoarseSpace& sy = t.codomain_module().space();
  ControlledCheck sup = check_controlled(sx, sy, support(t).point_level);
  if (!sup.ok()) return ClosenessCertificate{};
  return closeness(*sup.map, f);
}

}  // namespace

const char* cover_kind_name(CoverKind k) noexcept {
  switch (k) {
    case CoverKind::partial_isometry: return "partial-isometry";
    case CoverKind::isometry: return "isometry";
    case CoverKind::coisometry: return "coisometry";
    case CoverKind::unitary: return "unitary";
  }
  return "?";
}

CoverResult cover(const ControlledMap& f, const GeoModule& source_module,
                  const GeoModule& target_module, CoverKind kind,
                  std::optional<std::uint64_t> seed) {
  require_same_ground(source_module.space().ground(), f.source_space().ground(), "cover");
  require_same_ground(target_module.space().ground(), f.target_space().ground(), "cover");
  std::mt19937_64 rng_store(seed.value_or(0));
  std::mt19937_64* rng = seed ? &rng_store : nullptr;

  const GeoModule& mx = source_module;
  const GeoModule& my = target_module;
  const CoarseSpace& sx = f.source_space();
  const CoarseSpace& sy = f.target_space();

  const auto finish = [&](BlockOperator op, CoverKind k, Routing routing,
                          double identity_err) {
    ClosenessCertificate cert = support_certificate(op, f);
    return CoverResult{std::move(op), k, cert, std::move(routing.matching), routing.scale,
                       identity_err};
  };

  if (kind == CoverKind::coisometry) {
    // Re-partition the target so every block swallows an image f(A_i), then
    // route every source atom and reverse the injections blockwise.
    if (sy.dense_scale(f.relation().image_set()).is_unbounded())
      fail(errc::surjectivity_missing, "image is not coarsely dense in the target");
    const FiniteRelation& rel = f.relation();
    const IndexSet dom = rel.domain();

    std::vector<std::uint32_t> sources = nontrivial_atoms(mx);
    std::erase_if(sources,
                  [&](std::uint32_t i) { return !mx.atoms().block(i).intersects(dom); });
    require(!sources.empty(), errc::domain_not_covered, "no source block meets the domain");

    std::vector<IndexSet> seeds;
    for (auto i : sources) seeds.push_back(image(rel, mx.atoms().block(i)));
    Partition repart = [&] {
      try {
        return refine_to_discrete_partition(my, seeds);
      } catch (const Error& e) {
        if (e.code() == errc::seeds_not_coarsely_dense)
          fail(errc::surjectivity_missing,
               std::string("images do not reach the whole target: ") + e.what());
        throw;
      }
    }();

    // phi, surjective: every block first takes the least source whose image
    // it contains, the rest route by minimal-scale eligibility.
    const std::size_t nb = repart.block_count();
    std::vector<std::optional<std::uint32_t>> phi(sources.size());
    for (std::uint32_t j = 0; j < nb; ++j) {
      for (std::size_t s = 0; s < sources.size(); ++s) {
        if (phi[s]) continue;
        if (repart.block(j).contains(seeds[s])) {
          phi[s] = j;
          break;
        }
      }
    }
    std::uint32_t routing_scale = 0;
    for (std::size_t s = 0; s < sources.size(); ++s) {
      if (phi[s]) continue;
      for (std::uint32_t level = 0; level < sy.levels() && !phi[s]; ++level) {
        std::vector<std::uint32_t> eligible;
        for (std::uint32_t j = 0; j < nb; ++j)
          if (seeds[s].intersects(image(sy.entourage_at(level), repart.block(j))))
            eligible.push_back(j);
        if (eligible.empty()) continue;
        routing_scale = std::max(routing_scale, level);
        if (rng) {
          std::uniform_int_distribution<std::size_t> dist(0, eligible.size() - 1);
          phi[s] = eligible[dist(*rng)];
        } else {
          phi[s] = eligible.front();
        }
      }
      require(phi[s].has_value(), errc::surjectivity_missing,
              "source block " + std::to_string(sources[s]) + " reaches no target block");
    }

    // s_j : H_{B_j} -> sum of routed source blocks; t is the adjoint. The
    // basis vectors are dealt round-robin over the routed source blocks so
    // the support reaches every routed atom the ambient dimensions allow.
    Matrix smat = Matrix::Zero(mx.total_dim(), my.total_dim());
    Routing reported;
    reported.scale = routing_scale;
    for (std::uint32_t j = 0; j < nb; ++j) {
      std::vector<std::vector<std::uint32_t>> atom_slots;
      std::size_t capacity = 0;
      for (std::size_t s = 0; s < sources.size(); ++s) {
        if (*phi[s] != j) continue;
        reported.matching.emplace_back(sources[s], j);
        std::vector<std::uint32_t> slots(mx.dim(sources[s]));
        std::iota(slots.begin(), slots.end(), mx.offset(sources[s]));
        if (rng) std::shuffle(slots.begin(), slots.end(), *rng);
        capacity += slots.size();
        atom_slots.push_back(std::move(slots));
      }
      const auto cols = my.coords_of_atoms(my.atom_mask_of(repart.block(j))).to_indices();
      if (cols.empty()) continue;
      if (capacity < cols.size())
        fail(errc::ampleness_insufficient,
             "target block " + std::to_string(j) + " carries " + std::to_string(cols.size()) +
                 " dimensions but its routed source blocks only have " +
                 std::to_string(capacity));
      std::vector<std::size_t> used(atom_slots.size(), 0);
      std::size_t cursor = 0;
      for (std::size_t c = 0; c < cols.size(); ++c) {
        while (used[cursor % atom_slots.size()] >=
               atom_slots[cursor % atom_slots.size()].size())
          ++cursor;
        const std::size_t a = cursor % atom_slots.size();
        smat(atom_slots[a][used[a]++], cols[c]) = Complex(1.0, 0.0);
        ++cursor;
      }
    }

    BlockOperator op(mx, my, smat.adjoint(), 0.0);
    const double err = operator_norm(
        (op.matrix() * op.matrix().adjoint() - Matrix::Identity(my.total_dim(), my.total_dim()))
            .eval());
    return finish(std::move(op), kind, std::move(reported), err);
  }

  FiniteRelation relation = f.relation();
  if (kind == CoverKind::isometry || kind == CoverKind::unitary) {
    if (!f.coarsely_everywhere_defined())
      fail(errc::domain_not_covered, "map is not coarsely everywhere defined");
    relation = compose(relation, sx.entourage(f.everywhere_defined_scale()));
  }

  std::vector<std::uint32_t> sources = nontrivial_atoms(mx);
  if (kind == CoverKind::partial_isometry) {
    // Only atoms meeting the literal domain are routed.
    const IndexSet dom = relation.domain();
    std::erase_if(sources,
                  [&](std::uint32_t i) { return !mx.atoms().block(i).intersects(dom); });
  }
  const auto targets = nontrivial_atoms(my);
  std::vector<IndexSet> source_sets, target_sets;
  for (auto i : sources) source_sets.push_back(mx.atoms().block(i));
  for (auto j : targets) target_sets.push_back(my.atoms().block(j));

  Routing routing = route_atoms(sy, relation, source_sets, sources, target_sets, targets, rng);
  InjectionPlan plan = inject(mx, my, routing.matching, rng);

  if (kind == CoverKind::unitary) {
    for (auto j : targets) {
      if (plan.used[j] == 0)
        fail(errc::surjectivity_missing,
             "target block " + std::to_string(j) + " receives no source block");
      if (plan.used[j] != my.dim(j))
        fail(errc::ampleness_insufficient,
             "target block " + std::to_string(j) + " matched with " +
                 std::to_string(plan.used[j]) + " of " + std::to_string(my.dim(j)) +
                 " dimensions; unitary needs equality");
    }
  }

  BlockOperator op(mx, my, std::move(plan.matrix), 0.0);

  double err = 0.0;
  const Matrix gram = op.matrix().adjoint() * op.matrix();
  switch (kind) {
    case CoverKind::partial_isometry: {
      Matrix proj = Matrix::Zero(mx.total_dim(), mx.total_dim());
      for (auto i : sources)
        for (std::uint32_t c = 0; c < mx.dim(i); ++c)
          proj(mx.offset(i) + c, mx.offset(i) + c) = Complex(1.0, 0.0);
      err = operator_norm((gram - proj).eval());
      break;
    }
    case CoverKind::isometry:
      err = operator_norm((gram - Matrix::Identity(gram.rows(), gram.cols())).eval());
      break;
    case CoverKind::unitary: {
      const Matrix gg = op.matrix() * op.matrix().adjoint();
      err = std::max(
          operator_norm((gram - Matrix::Identity(gram.rows(), gram.cols())).eval()),
          operator_norm((gg - Matrix::Identity(gg.rows(), gg.cols())).eval()));
      break;
    }
    case CoverKind::coisometry: break;  // handled above
  }
  return finish(std::move(op), kind, std::move(routing), err);
}

CoverCloseness covers_are_close(const CoverResult& t0, const CoverResult& t1) {
  require(t0.op.domain_module().same_as(t1.op.domain_module()) &&
              t0.op.codomain_module().same_as(t1.op.codomain_module()),
          errc::module_mismatch, "covers_are_close: modules differ");
  const CoarseSpace& sy = t0.op.codomain_module().space();
  const FiniteRelation& gauge = t0.op.domain_module().block_gauge();

  CoverCloseness out;
  out.all_finite = true;
  const BlockOperator* ops[2] = {&t0.op, &t1.op};
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      const BlockOperator prod = *ops[i] * ops[j]->adjoint();
      out.measured[i][j] = propagation_scale(prod);
      const FiniteRelation bound =
          compose(support(*ops[i]).point_level,
                  compose(gauge, transpose(support(*ops[j]).point_level)));
      out.predicted[i][j] = sy.entourage_scale(bound);
      if (out.measured[i][j].is_unbounded()) out.all_finite = false;
    }
  return out;
}

BandDecomposition band_decompose(const BlockOperator& t, const Partition& p) {
  require(t.same_space(), errc::module_mismatch, "band_decompose: same-space modules");
  require_same_ground(p.ground(), t.domain_module().space().ground(), "band_decompose");
  require(propagation_scale(t).is_finite(), errc::unbounded_propagation,
          "operator has unbounded propagation");
  const GeoModule& dm = t.domain_module();
  const GeoModule& cm = t.codomain_module();

  // p-block masks on both modules; throws MeasurabilityError when p does not
  // refine into atoms.
  std::vector<IndexSet> row_masks, col_masks;
  for (const auto& blk : p.blocks()) {
    row_masks.push_back(cm.atom_mask_of(blk));
    col_masks.push_back(dm.atom_mask_of(blk));
  }

  // A vertex per block pair holding any nonzero entry; exact detection so the
  // pieces reconstruct t exactly.
  const auto block_live = [&](std::uint32_t bi, std::uint32_t ai) {
    const IndexSet rows = cm.coords_of_atoms(row_masks[bi]);
    const IndexSet cols = dm.coords_of_atoms(col_masks[ai]);
    bool live = false;
    rows.for_each([&](std::uint32_t r) {
      if (live) return;
      cols.for_each([&](std::uint32_t c) {
        if (!live && t.matrix()(r, c) != Complex(0.0, 0.0)) live = true;
      });
    });
    return live;
  };

  const std::size_t nb = p.block_count();
  std::vector<std::pair<std::uint32_t, std::uint32_t>> vertices;
  for (std::uint32_t bi = 0; bi < nb; ++bi)
    for (std::uint32_t ai = 0; ai < nb; ++ai)
      if (block_live(bi, ai)) vertices.emplace_back(bi, ai);

  // Greedy coloring, ascending (row, col); neighbors share a row or column.
  std::vector<std::uint32_t> color(vertices.size());
  std::uint32_t colors_used = 0;
  std::uint32_t max_degree = 0;
  for (std::size_t v = 0; v < vertices.size(); ++v) {
    std::vector<bool> taken(colors_used + 1, false);
    std::uint32_t degree = 0;
    for (std::size_t w = 0; w < vertices.size(); ++w) {
      if (w == v) continue;
      if (vertices[w].first == vertices[v].first || vertices[w].second == vertices[v].second) {
        ++degree;
        if (w < v) taken[color[w]] = true;
      }
    }
    max_degree = std::max(max_degree, degree);
    std::uint32_t c = 0;
    while (c < taken.size() && taken[c]) ++c;
    color[v] = c;
    colors_used = std::max(colors_used, c + 1);
  }

  BandDecomposition out;
  out.max_degree = max_degree;
  for (std::uint32_t c = 0; c < colors_used; ++c) {
    Matrix piece = Matrix::Zero(t.matrix().rows(), t.matrix().cols());
    for (std::size_t v = 0; v < vertices.size(); ++v) {
      if (color[v] != c) continue;
      const IndexSet rows = cm.coords_of_atoms(row_masks[vertices[v].first]);
      const IndexSet cols = dm.coords_of_atoms(col_masks[vertices[v].second]);
      rows.for_each([&](std::uint32_t r) {
        cols.for_each([&](std::uint32_t cc) { piece(r, cc) = t.matrix()(r, cc); });
      });
    }
    out.pieces.emplace_back(dm, cm, std::move(piece), t.tolerance());
  }
  for (std::size_t v = 0; v < vertices.size(); ++v)
    out.coloring.emplace_back(vertices[v], color[v]);
  return out;
}

BlockOperator conditional_expectation(const BlockOperator& t, const Partition& p) {
  require(t.endomorphism(), errc::module_mismatch,
          "conditional_expectation: endomorphism required");
  const GeoModule& m = t.domain_module();
  require_same_ground(p.ground(), m.space().ground(), "conditional_expectation");
  Matrix out = Matrix::Zero(t.matrix().rows(), t.matrix().cols());
  for (const auto& blk : p.blocks()) {
    const IndexSet coords = m.coords_of_atoms(m.atom_mask_of(blk));
    coords.for_each([&](std::uint32_t r) {
      coords.for_each([&](std::uint32_t c) { out(r, c) = t.matrix()(r, c); });
    });
  }
  return BlockOperator(m, m, std::move(out), t.tolerance());
}

CommutantResult commutant_dimension(const Partition& p, const GeoModule& m) {
  require_same_ground(p.ground(), m.space().ground(), "commutant_dimension");
  CommutantResult out;
  const std::uint32_t dim = m.total_dim();

  std::vector<std::vector<std::uint32_t>> block_coords;
  for (const auto& blk : p.blocks())
    block_coords.push_back(m.coords_of_atoms(m.atom_mask_of(blk)).to_indices());
  for (const auto& bc : block_coords)
    if (!bc.empty()) ++out.expected;

  if (dim == 0) return out;

  // Generators of the block-diagonal algebra: diagonal units plus
  // nearest-neighbor shifts inside every block.
  std::vector<Matrix> gens;
  for (const auto& bc : block_coords) {
    for (std::size_t q = 0; q < bc.size(); ++q) {
      Matrix g = Matrix::Zero(dim, dim);
      g(bc[q], bc[q]) = Complex(1.0, 0.0);
      gens.push_back(std::move(g));
    }
    for (std::size_t q = 0; q + 1 < bc.size(); ++q) {
      Matrix g = Matrix::Zero(dim, dim);
      g(bc[q], bc[q + 1]) = Complex(1.0, 0.0);
      gens.push_back(g);
      gens.push_back(g.adjoint());
    }
  }

  // vec(zg - gz) = (g^T (x) I - I (x) g) vec(z); the generators are matrix
  // units, so each constraint row has at most two nonzeros. Accumulate the
  // normal matrix of the stacked system rowwise and read the dimension off
  // its kernel.
  const std::uint32_t n2 = dim * dim;
  Matrix normal = Matrix::Zero(n2, n2);
  for (const auto& g : gens) {
    // row -> (col, value) nonzeros of the constraint matrix for this g.
    std::vector<std::vector<std::pair<std::uint32_t, Complex>>> rows(n2);
    for (std::uint32_t a = 0; a < dim; ++a)
      for (std::uint32_t b = 0; b < dim; ++b) {
        const Complex gt = g(b, a);  // (g^T)(a, b)
        if (gt != Complex(0.0, 0.0))
          for (std::uint32_t r = 0; r < dim; ++r)
            rows[a * dim + r].emplace_back(b * dim + r, gt);
      }
    for (std::uint32_t c = 0; c < dim; ++c)
      for (std::uint32_t r = 0; r < dim; ++r)
        for (std::uint32_t r2 = 0; r2 < dim; ++r2)
          if (g(r, r2) != Complex(0.0, 0.0))
            rows[c * dim + r].emplace_back(c * dim + r2, -g(r, r2));
    for (const auto& row : rows)
      for (const auto& [ci, vi] : row)
        for (const auto& [cj, vj] : row) normal(ci, cj) += std::conj(vi) * vj;
  }

  Eigen::SelfAdjointEigenSolver<Matrix> eig(normal);
  const auto& ev = eig.eigenvalues();
  const double tol = 1e-8 * std::max(1.0, ev(ev.size() - 1));
  for (Eigen::Index i = 0; i < ev.size(); ++i)
    if (ev(i) <= tol) ++out.dimension;

  for (const auto& bc : block_coords) {
    if (bc.empty()) continue;
    Matrix b = Matrix::Zero(dim, dim);
    for (auto c : bc) b(c, c) = Complex(1.0, 0.0);
    out.basis.push_back(std::move(b));
  }
  return out;
}

ApproxUnitWitness approximate_unit(const BlockOperator& t, double epsilon) {
  require(t.endomorphism(), errc::module_mismatch, "approximate_unit: endomorphism required");
  require(epsilon > 0.0, errc::module_mismatch, "epsilon must be positive");
  const ScaleIndex prop = propagation_scale(t);
  require(prop.is_finite(), errc::unbounded_propagation,
          "operator has unbounded propagation");

  const GeoModule& m = t.domain_module();
  const CoarseSpace& space = m.space();
  const std::size_t n = space.size();
  const std::size_t na = m.atom_count();

  // Gauge join of the discreteness gauge and the propagation entourage.
  const FiniteRelation e = set_union(m.block_gauge(), space.entourage(prop));

  // ~_e classes of atoms: transitive closure of "thickenings meet".
  std::vector<std::uint32_t> cls(na, std::numeric_limits<std::uint32_t>::max());
  std::uint32_t nclasses = 0;
  for (std::uint32_t i = 0; i < na; ++i) {
    if (cls[i] != std::numeric_limits<std::uint32_t>::max()) continue;
    const std::uint32_t id = nclasses++;
    std::vector<std::uint32_t> queue{i};
    cls[i] = id;
    while (!queue.empty()) {
      const std::uint32_t a = queue.back();
      queue.pop_back();
      const IndexSet reach = image(e, m.atoms().block(a));
      for (std::uint32_t b = 0; b < na; ++b)
        if (cls[b] == std::numeric_limits<std::uint32_t>::max() &&
            m.atoms().block(b).intersects(reach)) {
          cls[b] = id;
          queue.push_back(b);
        }
    }
  }

  ApproxUnitWitness out{BlockOperator::zero(m, m),
                        std::vector<Matrix>(na),
                        10.0 * epsilon,
                        0.0,
                        0.0,
                        0.0,
                        {},
                        {},
                        IndexSet(n),
                        IndexSet(n),
                        std::vector<std::uint32_t>(na, 0),
                        ScaleIndex::unbounded()};
  out.classes.resize(nclasses);
  out.anuli.resize(nclasses);
  for (std::uint32_t a = 0; a < na; ++a) out.classes[cls[a]].push_back(a);

  // Collected per-atom directions from the truncated SVDs.
  std::vector<std::vector<Vector>> collected(na);

  for (std::uint32_t l = 0; l < nclasses; ++l) {
    IndexSet class_points(n);
    for (auto a : out.classes[l]) class_points |= m.atoms().block(a);

    IndexSet c_prev(n);
    IndexSet c_cur = m.atoms().block(out.classes[l].front());
    unsigned iter = 1;
    while (true) {
      IndexSet b = c_cur - c_prev;
      out.anuli[l].push_back(b);
      ((out.anuli[l].size() - 1) % 2 == 0 ? out.even_part : out.odd_part) |= b;
      if (b.any()) {
        // M = chi_hull(e(B)) t chi_B, truncated at accuracy epsilon.
        const IndexSet col_atoms = m.atom_mask_of(b);
        const IndexSet row_atoms = m.atoms_meeting(image(e, b));
        const auto rows = m.coords_of_atoms(row_atoms).to_indices();
        const auto colsv = m.coords_of_atoms(col_atoms).to_indices();
        if (!rows.empty() && !colsv.empty()) {
          Matrix sub(rows.size(), colsv.size());
          for (std::size_t c = 0; c < colsv.size(); ++c)
            for (std::size_t r = 0; r < rows.size(); ++r)
              sub(r, c) = t.matrix()(rows[r], colsv[c]);
          Eigen::JacobiSVD<Matrix> svd(sub, Eigen::ComputeThinU);
          const auto& sv = svd.singularValues();
          for (Eigen::Index k = 0; k < sv.size(); ++k) {
            if (!(sv(k) > epsilon)) break;
            const Vector u = svd.matrixU().col(k);
            // Slice the kept direction along the atoms of the row hull.
            std::size_t pos = 0;
            row_atoms.for_each([&](std::uint32_t atom) {
              Vector slice = Vector::Zero(m.dim(atom));
              for (std::uint32_t cc = 0; cc < m.dim(atom); ++cc) slice(cc) = u(pos + cc);
              pos += m.dim(atom);
              if (slice.norm() > 0.0) collected[atom].push_back(std::move(slice));
            });
          }
        }
      }
      if (c_cur.contains(class_points)) break;
      c_prev = c_cur;
      c_cur = m.hull(iterated_image(e, c_cur, std::max(2u * iter, 4u)));
      ++iter;
      require(iter < 2 * n + 4, errc::unbounded_propagation, "anulus construction diverged");
    }
  }

  Matrix p = Matrix::Zero(m.total_dim(), m.total_dim());
  for (std::uint32_t a = 0; a < na; ++a) {
    if (collected[a].empty()) {
      out.lambda[a] = Matrix(m.dim(a), 0);
      continue;
    }
    Matrix cols(m.dim(a), collected[a].size());
    for (std::size_t k = 0; k < collected[a].size(); ++k) cols.col(k) = collected[a][k];
    Matrix q = orthonormal_span(cols);
    out.kept_rank[a] = static_cast<std::uint32_t>(q.cols());
    p.block(m.offset(a), m.offset(a), m.dim(a), m.dim(a)) = q * q.adjoint();
    out.lambda[a] = std::move(q);
  }

  BlockOperator pl(m, m, std::move(p), t.tolerance());
  const Matrix resid = t.matrix() - pl.matrix() * t.matrix();
  out.measured = operator_norm(resid);
  const auto parity_norm = [&](const IndexSet& part) {
    Matrix masked = Matrix::Zero(resid.rows(), resid.cols());
    const IndexSet coords = m.coords_of_atoms(m.atom_mask_of(part));
    coords.for_each([&](std::uint32_t c) { masked.col(c) = resid.col(c); });
    return operator_norm(masked);
  };
  out.measured_even = parity_norm(out.even_part);
  out.measured_odd = parity_norm(out.odd_part);
  out.p_propagation = propagation_scale(pl);
  out.p_lambda = std::move(pl);
  return out;
}

ComponentDecomposition component_decompose(const BlockOperator& t) {
  require(t.same_space(), errc::module_mismatch, "component_decompose: same-space modules");
  const CoarseSpace& space = t.domain_module().space();
  const GeoModule& dm = t.domain_module();
  const GeoModule& cm = t.codomain_module();

  for (std::uint32_t c = 0; c < space.component_count(); ++c) {
    const IndexSet comp = space.component_set(c);
    require(dm.is_measurable(comp) && cm.is_measurable(comp), errc::components_not_measurable,
            "component " + comp.to_string() + " is not a union of atoms");
  }

  ComponentDecomposition out;
  Matrix sum = Matrix::Zero(t.matrix().rows(), t.matrix().cols());
  ScaleIndex equi = ScaleIndex::at(0);
  for (std::uint32_t c = 0; c < space.component_count(); ++c) {
    const IndexSet comp = space.component_set(c);
    BlockOperator piece = t.compress(cm.atom_mask_of(comp), dm.atom_mask_of(comp));
    sum += piece.matrix();
    const ScaleIndex s = propagation_scale(piece);
    equi = std::max(equi, s);
    out.component_propagation.push_back(s);
    out.pieces.push_back(std::move(piece));
  }
  out.equi_scale = equi;
  const double resid = operator_norm((t.matrix() - sum).eval());
  out.sum_exact = t.tolerance() == 0.0 ? resid == 0.0 : resid <= t.tolerance();
  out.off_blocks_zero = out.sum_exact;
  return out;
}

KTheoryUnitary ktheory_unitary(const BlockOperator& t0, const BlockOperator& t1,
                               std::uint32_t trials, std::uint64_t seed,
                               double isometry_tolerance) {
  require(t0.domain_module().same_as(t1.domain_module()) &&
              t0.codomain_module().same_as(t1.codomain_module()),
          errc::module_mismatch, "ktheory_unitary: modules differ");
  const std::uint32_t dx = t0.domain_module().total_dim();
  const std::uint32_t dy = t0.codomain_module().total_dim();
  const Matrix idx = Matrix::Identity(dx, dx);
  const Matrix idy = Matrix::Identity(dy, dy);
  for (const BlockOperator* t : {&t0, &t1})
    require(operator_norm((t->matrix().adjoint() * t->matrix() - idx).eval()) <=
                isometry_tolerance,
            errc::not_isometry, "input does not satisfy t*t = 1");

  const Matrix p0 = t0.matrix() * t0.matrix().adjoint();
  const Matrix p1 = t1.matrix() * t1.matrix().adjoint();
  const Matrix cross01 = t0.matrix() * t1.matrix().adjoint();
  const Matrix cross10 = t1.matrix() * t0.matrix().adjoint();

  KTheoryUnitary out;
  out.u = Matrix::Zero(2 * dy, 2 * dy);
  out.u.block(0, 0, dy, dy) = idy - p0;
  out.u.block(0, dy, dy, dy) = cross01;
  out.u.block(dy, 0, dy, dy) = cross10;
  out.u.block(dy, dy, dy, dy) = idy - p1;

  const Matrix id2 = Matrix::Identity(2 * dy, 2 * dy);
  out.selfadjoint_error = operator_norm((out.u - out.u.adjoint()).eval());
  out.involution_error = operator_norm((out.u * out.u - id2).eval());
  out.unitary_error = operator_norm((out.u * out.u.adjoint() - id2).eval());

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  double worst = 0.0;
  for (std::uint32_t k = 0; k < trials; ++k) {
    Matrix x(dx, dx);
    for (std::uint32_t c = 0; c < dx; ++c)
      for (std::uint32_t r = 0; r < dx; ++r) x(r, c) = Complex(gauss(rng), gauss(rng));
    Matrix a0 = Matrix::Zero(2 * dy, 2 * dy);
    a0.block(0, 0, dy, dy) = t0.matrix() * x * t0.matrix().adjoint();
    Matrix a1 = Matrix::Zero(2 * dy, 2 * dy);
    a1.block(dy, dy, dy, dy) = t1.matrix() * x * t1.matrix().adjoint();
    worst = std::max(worst,
                     operator_norm((a1 - out.u * a0 * out.u.adjoint()).eval()) /
                         std::max(1.0, operator_norm(x)));
  }
  out.conjugation_error = worst;

  const GeoModule& my = t0.codomain_module();
  const double tau = std::max({1e-10, t0.tolerance(), t1.tolerance()});
  const Matrix blocks[4] = {idy - p0, cross01, cross10, idy - p1};
  out.blocks_controlled = true;
  for (int k = 0; k < 4; ++k) {
    BlockOperator b(my, my, blocks[k], tau);
    out.block_propagation[k] = propagation_scale(b);
    if (out.block_propagation[k].is_unbounded()) out.blocks_controlled = false;
  }
  return out;
}

QlIsometryCheck ql_controlled_isometry_check(const BlockOperator& t,
                                             double isometry_tolerance) {
  require(t.same_space(), errc::module_mismatch, "ql check: same-space modules");
  const std::uint32_t dx = t.domain_module().total_dim();
  require(operator_norm((t.matrix().adjoint() * t.matrix() -
                         Matrix::Identity(dx, dx))
                            .eval()) <= isometry_tolerance,
          errc::not_isometry, "t*t != 1");

  QlIsometryCheck out;
  out.propagation = propagation_scale(t);
  if (out.propagation.is_finite()) {
    out.pass = true;
    return out;
  }

  // Witness: a bounded measurable A with every image vector
  // landing e_max-separated, so ||chi_A' t chi_A|| = 1.
  const CoarseSpace& space = t.domain_module().space();
  const GeoModule& dm = t.domain_module();
  const GeoModule& cm = t.codomain_module();
  const FiniteRelation supp = support(t).point_level;
  double best = -1.0;
  for (std::uint32_t a = 0; a < dm.atom_count(); ++a) {
    if (dm.dim(a) == 0) continue;
    const IndexSet apoints = dm.atoms().block(a);
    const IndexSet near = image(space.e_max(), apoints);
    IndexSet far_atoms = cm.atoms_meeting(image(supp, apoints));
    far_atoms -= cm.atoms_meeting(near);
    if (far_atoms.none()) continue;
    const double norm = t.masked_norm(far_atoms, IndexSet::singleton(dm.atom_count(), a));
    if (norm > best) {
      best = norm;
      out.witness = {cm.points_of_atoms(far_atoms), apoints};
      out.witness_norm = norm;
    }
  }
  out.pass = false;
  return out;
}

}  // namespace coarse
