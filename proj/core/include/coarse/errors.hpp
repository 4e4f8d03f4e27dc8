#pragma once

#include <stdexcept>
#include <string>

namespace coarse {

enum class errc {
  ground_set_mismatch,
  index_out_of_range,
  metric_violation,
  non_monotone_thresholds,
  gauge_violation,
  ladder_violation,
  scale_out_of_range,
  partition_invalid,
  partition_not_controlled,
  not_controlled,
  measurability,
  family_not_coarsely_dense,
  seeds_not_coarsely_dense,
  not_covering,
  domain_not_covered,
  ampleness_insufficient,
  surjectivity_missing,
  unbounded_propagation,
  not_isometry,
  not_controlled_operator,
  components_not_measurable,
  atom_limit_exceeded,
  module_mismatch,
  fixture_error,
  unknown_suite,
};

const char* errc_name(errc c) noexcept;

/// Every failed precondition in the library throws this; `code()` names the
/// predicate that failed and `what()` carries the witness.
class Error : public std::runtime_error {
 public:
  Error(errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

  errc code() const noexcept { return code_; }

 private:
  errc code_;
};

[[noreturn]] inline void fail(errc code, const std::string& what) { throw Error(code, what); }

inline void require(bool cond, errc code, const std::string& what) {
  if (!cond) fail(code, what);
}

}  // namespace coarse
