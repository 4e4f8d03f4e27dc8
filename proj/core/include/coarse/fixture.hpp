#pragma once

#include <map>
#include <string>

#include <nlohmann/json_fwd.hpp>

#include "coarse/operator.hpp"

namespace coarse {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

inline constexpr const char* kToolVersion = "0.1.0";

/// Named collection of spaces, modules, maps and operators loaded from one
/// JSON file. Cross-references resolve at load time and every constructor
/// invariant is re-validated. Map entries keep the raw relation so that
/// non-controlled candidates can still be loaded and then reported on.
struct Fixture {
  struct MapEntry {
    std::string source;
    std::string target;
    FiniteRelation relation;
  };
  struct OperatorEntry {
    std::string domain;
    std::string codomain;
    BlockOperator op;
  };

  std::map<std::string, CoarseSpace> spaces;
  std::map<std::string, GeoModule> modules;
  std::map<std::string, MapEntry> maps;
  std::map<std::string, OperatorEntry> operators;
  /// FNV-1a over the canonical serialization of each named entry.
  std::map<std::string, std::string> hashes;
  /// Module name -> space name, kept for re-serialization.
  std::map<std::string, std::string> module_space;

  const CoarseSpace& space(const std::string& name) const;
  const GeoModule& module(const std::string& name) const;
  const MapEntry& map(const std::string& name) const;
  const OperatorEntry& op(const std::string& name) const;
};

Fixture load_fixture(const std::string& path);
Fixture parse_fixture(const json& j);

/// Relation literal: {"source": n, "target": m, "pairs": [[y, x], ...]},
/// pairs sorted lexicographically on output.
ordered_json relation_to_json(const FiniteRelation& r);
FiniteRelation relation_from_json(const json& j, const GroundSet& source,
                                  const GroundSet& target);

ordered_json space_to_json(const CoarseSpace& s);
ordered_json module_to_json(const GeoModule& m);
/// Complex entries as [re, im] pairs.
ordered_json matrix_to_json(const Matrix& m);
Matrix matrix_from_json(const json& j);
ordered_json operator_to_json(const BlockOperator& t);

ordered_json scale_to_json(ScaleIndex s);
ordered_json index_set_to_json(const IndexSet& s);

std::string fnv1a_hex(const std::string& bytes);

}  // namespace coarse
