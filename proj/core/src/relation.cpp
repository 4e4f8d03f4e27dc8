#include "coarse/relation.hpp"

namespace coarse {

FiniteRelation::FiniteRelation(GroundSet source, GroundSet target)
    : source_(std::move(source)), target_(std::move(target)) {
  rows_.assign(target_.size(), IndexSet(source_.size()));
}

FiniteRelation FiniteRelation::empty(const GroundSet& source, const GroundSet& target) {
  return FiniteRelation(source, target);
}

FiniteRelation FiniteRelation::full(const GroundSet& source, const GroundSet& target) {
  FiniteRelation r(source, target);
  IndexSet all = IndexSet::full(source.size());
  for (auto& row : r.rows_) row = all;
  return r;
}

FiniteRelation FiniteRelation::diagonal(const GroundSet& x) {
  FiniteRelation r(x, x);
  for (std::uint32_t i = 0; i < x.size(); ++i) r.add(i, i);
  return r;
}

FiniteRelation FiniteRelation::diagonal_over(const GroundSet& x, const IndexSet& a) {
  require(a.universe() == x.size(), errc::index_out_of_range, "diagonal_over: subset universe");
  FiniteRelation r(x, x);
  a.for_each([&](std::uint32_t i) { r.add(i, i); });
  return r;
}

FiniteRelation FiniteRelation::from_pairs(
    const GroundSet& source, const GroundSet& target,
    std::span<const std::pair<std::uint32_t, std::uint32_t>> yx) {
  FiniteRelation r(source, target);
  for (auto [y, x] : yx) {
    require(y < target.size() && x < source.size(), errc::index_out_of_range,
            "pair (" + std::to_string(y) + "," + std::to_string(x) + ")");
    r.add(y, x);
  }
  return r;
}

FiniteRelation FiniteRelation::rectangle(const GroundSet& source, const GroundSet& target,
                                         const IndexSet& b, const IndexSet& a) {
  require(b.universe() == target.size() && a.universe() == source.size(),
          errc::index_out_of_range, "rectangle: subset universes");
  FiniteRelation r(source, target);
  b.for_each([&](std::uint32_t y) { r.rows_[y] = a; });
  return r;
}

void FiniteRelation::add(std::uint32_t y, std::uint32_t x) { rows_[y].set(x); }

bool FiniteRelation::test(std::uint32_t y, std::uint32_t x) const {
  return y < rows_.size() && rows_[y].test(x);
}

const IndexSet& FiniteRelation::row(std::uint32_t y) const {
  require(y < rows_.size(), errc::index_out_of_range, "row " + std::to_string(y));
  return rows_[y];
}

std::size_t FiniteRelation::pair_count() const {
  std::size_t n = 0;
  for (const auto& row : rows_) n += row.count();
  return n;
}

bool FiniteRelation::is_empty() const {
  for (const auto& row : rows_)
    if (row.any()) return false;
  return true;
}

std::vector<std::pair<std::uint32_t, std::uint32_t>> FiniteRelation::pairs() const {
  std::vector<std::pair<std::uint32_t, std::uint32_t>> out;
  out.reserve(pair_count());
  for (std::uint32_t y = 0; y < rows_.size(); ++y)
    rows_[y].for_each([&](std::uint32_t x) { out.emplace_back(y, x); });
  return out;
}

IndexSet FiniteRelation::domain() const {
  IndexSet out(source_.size());
  for (const auto& row : rows_) out |= row;
  return out;
}

IndexSet FiniteRelation::image_set() const {
  IndexSet out(target_.size());
  for (std::uint32_t y = 0; y < rows_.size(); ++y)
    if (rows_[y].any()) out.set(y);
  return out;
}

bool FiniteRelation::is_symmetric() const {
  if (!square()) return false;
  for (std::uint32_t y = 0; y < rows_.size(); ++y) {
    bool bad = false;
    rows_[y].for_each([&](std::uint32_t x) {
      if (!rows_[x].test(y)) bad = true;
    });
    if (bad) return false;
  }
  return true;
}

bool FiniteRelation::contains_diagonal() const {
  if (source_.size() != target_.size()) return false;
  for (std::uint32_t i = 0; i < rows_.size(); ++i)
    if (!rows_[i].test(i)) return false;
  return true;
}

bool FiniteRelation::is_gauge() const {
  return square() && contains_diagonal() && is_symmetric();
}

bool FiniteRelation::is_transitive() const {
  return contains(*this, compose(*this, *this));
}

bool FiniteRelation::operator==(const FiniteRelation& o) const {
  return source_.same_as(o.source_) && target_.same_as(o.target_) && rows_ == o.rows_;
}

std::string FiniteRelation::to_string() const {
  std::string s = "{";
  bool sep = false;
  for (auto [y, x] : pairs()) {
    if (sep) s += ", ";
    s += "(" + std::to_string(y) + "," + std::to_string(x) + ")";
    sep = true;
  }
  return s + "}";
}

FiniteRelation compose(const FiniteRelation& r2, const FiniteRelation& r1) {
  require_same_ground(r2.source(), r1.target(), "compose");
  FiniteRelation out(r1.source_, r2.target_);
  for (std::uint32_t z = 0; z < out.rows_.size(); ++z) {
    IndexSet& acc = out.rows_[z];
    r2.rows_[z].for_each([&](std::uint32_t y) { acc |= r1.rows_[y]; });
  }
  return out;
}

FiniteRelation transpose(const FiniteRelation& r) {
  FiniteRelation out(r.target(), r.source());
  for (std::uint32_t y = 0; y < r.target().size(); ++y)
    r.row(y).for_each([&](std::uint32_t x) { out.add(x, y); });
  return out;
}

IndexSet image(const FiniteRelation& r, const IndexSet& a) {
  require(a.universe() == r.source().size(), errc::index_out_of_range,
          "image: subset universe " + std::to_string(a.universe()) + " vs source " +
              std::to_string(r.source().size()));
  IndexSet out(r.target().size());
  for (std::uint32_t y = 0; y < r.target().size(); ++y)
    if (r.row(y).intersects(a)) out.set(y);
  return out;
}

bool is_separated(const IndexSet& b, const FiniteRelation& r, const IndexSet& a) {
  require(b.universe() == r.target().size(), errc::index_out_of_range,
          "is_separated: B universe");
  return !b.intersects(image(r, a));
}

FiniteRelation product_image(const FiniteRelation& e, const FiniteRelation& e2,
                             const FiniteRelation& d) {
  return compose(e, compose(d, transpose(e2)));
}

FiniteRelation set_union(const FiniteRelation& a, const FiniteRelation& b) {
  require_same_ground(a.source(), b.source(), "set_union");
  require_same_ground(a.target(), b.target(), "set_union");
  FiniteRelation out = a;
  for (std::uint32_t y = 0; y < out.rows_.size(); ++y) out.rows_[y] |= b.rows_[y];
  return out;
}

FiniteRelation set_intersection(const FiniteRelation& a, const FiniteRelation& b) {
  require_same_ground(a.source(), b.source(), "set_intersection");
  require_same_ground(a.target(), b.target(), "set_intersection");
  FiniteRelation out = a;
  for (std::uint32_t y = 0; y < out.rows_.size(); ++y) out.rows_[y] &= b.rows_[y];
  return out;
}

bool contains(const FiniteRelation& outer, const FiniteRelation& inner) {
  require_same_ground(outer.source(), inner.source(), "contains");
  require_same_ground(outer.target(), inner.target(), "contains");
  for (std::uint32_t y = 0; y < outer.target().size(); ++y)
    if (!outer.row(y).contains(inner.row(y))) return false;
  return true;
}

FiniteRelation restrict_to(const FiniteRelation& r, const IndexSet& a, const IndexSet& b) {
  require(a.universe() == r.source().size() && b.universe() == r.target().size(),
          errc::index_out_of_range, "restrict_to: subset universes");
  FiniteRelation out(r.source(), r.target());
  b.for_each([&](std::uint32_t y) {
    out.rows_[y] = r.rows_[y];
    out.rows_[y] &= a;
  });
  return out;
}

IndexSet iterated_image(const FiniteRelation& e, IndexSet a, unsigned k) {
  for (unsigned i = 0; i < k; ++i) a = image(e, a);
  return a;
}

}  // namespace coarse
