#include "coarse/fixture.hpp"

#include <fstream>
#include <limits>

#include <nlohmann/json.hpp>

namespace coarse {

namespace {

[[noreturn]] void bad(const std::string& what) { fail(errc::fixture_error, what); }

double distance_entry(const json& v, std::size_t i, std::size_t j) {
  if (v.is_string()) {
    if (v.get<std::string>() == "inf") return std::numeric_limits<double>::infinity();
    bad("metric entry (" + std::to_string(i) + "," + std::to_string(j) +
        ") must be a number or \"inf\"");
  }
  if (!v.is_number()) bad("metric entry is not a number");
  return v.get<double>();
}

}  // namespace

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

ordered_json relation_to_json(const FiniteRelation& r) {
  ordered_json out;
  out["source"] = r.source().size();
  out["target"] = r.target().size();
  ordered_json pairs = ordered_json::array();
  for (auto [y, x] : r.pairs()) pairs.push_back({y, x});
  out["pairs"] = std::move(pairs);
  return out;
}

FiniteRelation relation_from_json(const json& j, const GroundSet& source,
                                  const GroundSet& target) {
  if (!j.is_object() || !j.contains("pairs")) bad("relation literal needs a \"pairs\" array");
  if (j.contains("source") && j["source"].get<std::size_t>() != source.size())
    bad("relation source size " + std::to_string(j["source"].get<std::size_t>()) +
        " does not match the referenced space (" + std::to_string(source.size()) + ")");
  if (j.contains("target") && j["target"].get<std::size_t>() != target.size())
    bad("relation target size does not match the referenced space");
  std::vector<std::pair<std::uint32_t, std::uint32_t>> yx;
  for (const auto& p : j["pairs"]) {
    if (!p.is_array() || p.size() != 2) bad("relation pair must be [y, x]");
    yx.emplace_back(p[0].get<std::uint32_t>(), p[1].get<std::uint32_t>());
  }
  return FiniteRelation::from_pairs(source, target, yx);
}

ordered_json space_to_json(const CoarseSpace& s) {
  ordered_json out;
  out["n"] = s.size();
  if (s.ground().has_labels()) out["labels"] = s.ground().labels();
  ordered_json ladder = ordered_json::array();
  for (const auto& e : s.ladder()) ladder.push_back(relation_to_json(e));
  out["ladder"] = std::move(ladder);
  return out;
}

ordered_json module_to_json(const GeoModule& m) {
  ordered_json out;
  ordered_json atoms = ordered_json::array();
  for (const auto& a : m.atoms().blocks()) atoms.push_back(a.to_indices());
  out["atoms"] = std::move(atoms);
  out["dims"] = m.dims();
  return out;
}

ordered_json matrix_to_json(const Matrix& m) {
  ordered_json rows = ordered_json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    ordered_json row = ordered_json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      row.push_back({m(r, c).real(), m(r, c).imag()});
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from_json(const json& j) {
  if (!j.is_array()) bad("matrix must be an array of rows");
  const std::size_t rows = j.size();
  std::size_t cols = 0;
  if (rows > 0) {
    if (!j[0].is_array()) bad("matrix row must be an array");
    cols = j[0].size();
  }
  Matrix m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    if (j[r].size() != cols) bad("ragged matrix rows");
    for (std::size_t c = 0; c < cols; ++c) {
      const auto& e = j[r][c];
      if (e.is_number()) {
        m(r, c) = Complex(e.get<double>(), 0.0);
      } else if (e.is_array() && e.size() == 2) {
        m(r, c) = Complex(e[0].get<double>(), e[1].get<double>());
      } else {
        bad("matrix entry must be a number or [re, im]");
      }
    }
  }
  return m;
}

ordered_json operator_to_json(const BlockOperator& t) {
  ordered_json out;
  out["matrix"] = matrix_to_json(t.matrix());
  out["tolerance"] = t.tolerance();
  return out;
}

ordered_json scale_to_json(ScaleIndex s) {
  if (s.is_unbounded()) return ordered_json("unbounded");
  return ordered_json(s.value());
}

ordered_json index_set_to_json(const IndexSet& s) { return ordered_json(s.to_indices()); }

namespace {

CoarseSpace space_from_json(const json& j, const std::string& name) {
  if (j.contains("metric")) {
    const auto& mj = j["metric"];
    if (!mj.is_array()) bad("space " + name + ": metric must be a matrix");
    std::vector<std::vector<double>> dist(mj.size());
    for (std::size_t r = 0; r < mj.size(); ++r)
      for (std::size_t c = 0; c < mj[r].size(); ++c)
        dist[r].push_back(distance_entry(mj[r][c], r, c));
    if (!j.contains("thresholds")) bad("space " + name + ": metric form needs thresholds");
    std::vector<double> thresholds = j["thresholds"].get<std::vector<double>>();
    std::vector<std::string> labels;
    if (j.contains("labels")) labels = j["labels"].get<std::vector<std::string>>();
    if (j.contains("n") && j["n"].get<std::size_t>() != dist.size())
      bad("space " + name + ": n does not match the metric size");
    return CoarseSpace::from_metric(dist, thresholds, std::move(labels));
  }
  if (j.contains("ladder")) {
    if (!j.contains("n")) bad("space " + name + ": ladder form needs n");
    std::vector<std::string> labels;
    if (j.contains("labels")) labels = j["labels"].get<std::vector<std::string>>();
    GroundSet ground(j["n"].get<std::size_t>(), std::move(labels));
    std::vector<FiniteRelation> ladder;
    for (const auto& lj : j["ladder"]) ladder.push_back(relation_from_json(lj, ground, ground));
    return CoarseSpace(std::move(ground), std::move(ladder));
  }
  bad("space " + name + ": need either metric+thresholds or ladder");
}

GeoModule module_from_json(const json& j, const std::string& name, const Fixture& fx) {
  if (!j.contains("space")) bad("module " + name + ": missing space reference");
  const CoarseSpace& space = fx.space(j["space"].get<std::string>());
  if (!j.contains("atoms") || !j.contains("dims")) bad("module " + name + ": need atoms, dims");
  std::vector<IndexSet> blocks;
  for (const auto& aj : j["atoms"])
    blocks.push_back(make_index_set(space.size(), aj.get<std::vector<std::uint32_t>>()));
  Partition atoms(space.ground(), std::move(blocks));
  return GeoModule(space, std::move(atoms), j["dims"].get<std::vector<std::uint32_t>>());
}

}  // namespace

const CoarseSpace& Fixture::space(const std::string& name) const {
  auto it = spaces.find(name);
  if (it == spaces.end()) bad("unknown space \"" + name + "\"");
  return it->second;
}

const GeoModule& Fixture::module(const std::string& name) const {
  auto it = modules.find(name);
  if (it == modules.end()) bad("unknown module \"" + name + "\"");
  return it->second;
}

const Fixture::MapEntry& Fixture::map(const std::string& name) const {
  auto it = maps.find(name);
  if (it == maps.end()) bad("unknown map \"" + name + "\"");
  return it->second;
}

const Fixture::OperatorEntry& Fixture::op(const std::string& name) const {
  auto it = operators.find(name);
  if (it == operators.end()) bad("unknown operator \"" + name + "\"");
  return it->second;
}

Fixture parse_fixture(const json& j) {
  Fixture fx;
  try {
    if (j.contains("spaces"))
      for (const auto& [name, sj] : j["spaces"].items()) {
        fx.spaces.emplace(name, space_from_json(sj, name));
        fx.hashes.emplace(name, fnv1a_hex(sj.dump()));
      }
    if (j.contains("modules"))
      for (const auto& [name, mj] : j["modules"].items()) {
        fx.modules.emplace(name, module_from_json(mj, name, fx));
        fx.hashes.emplace(name, fnv1a_hex(mj.dump()));
        fx.module_space.emplace(name, mj["space"].get<std::string>());
      }
    if (j.contains("maps"))
      for (const auto& [name, mj] : j["maps"].items()) {
        if (!mj.contains("source") || !mj.contains("target") || !mj.contains("relation"))
          bad("map " + name + ": need source, target, relation");
        const std::string src = mj["source"].get<std::string>();
        const std::string tgt = mj["target"].get<std::string>();
        FiniteRelation rel = relation_from_json(mj["relation"], fx.space(src).ground(),
                                                fx.space(tgt).ground());
        fx.maps.emplace(name, Fixture::MapEntry{src, tgt, std::move(rel)});
        fx.hashes.emplace(name, fnv1a_hex(mj.dump()));
      }
    if (j.contains("operators"))
      for (const auto& [name, oj] : j["operators"].items()) {
        std::string dom, cod;
        if (oj.contains("module")) {
          if (oj["module"].is_array()) {
            dom = oj["module"][0].get<std::string>();
            cod = oj["module"][1].get<std::string>();
          } else {
            dom = cod = oj["module"].get<std::string>();
          }
        } else {
          bad("operator " + name + ": missing module reference");
        }
        if (!oj.contains("matrix")) bad("operator " + name + ": missing matrix");
        std::optional<double> tol;
        if (oj.contains("tolerance")) tol = oj["tolerance"].get<double>();
        BlockOperator op(fx.module(dom), fx.module(cod), matrix_from_json(oj["matrix"]), tol);
        fx.operators.emplace(name, Fixture::OperatorEntry{dom, cod, std::move(op)});
        fx.hashes.emplace(name, fnv1a_hex(oj.dump()));
      }
  } catch (const Error&) {
    throw;
  } catch (const json::exception& e) {
    bad(std::string("malformed fixture: ") + e.what());
  }
  return fx;
}

Fixture load_fixture(const std::string& path) {
  std::ifstream in(path);
  if (!in) bad("cannot open fixture file " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    bad("cannot parse " + path + ": " + e.what());
  }
  return parse_fixture(j);
}

}  // namespace coarse
