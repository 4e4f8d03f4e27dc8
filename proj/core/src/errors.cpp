#include "coarse/errors.hpp"

namespace coarse {

const char* errc_name(errc c) noexcept {
  switch (c) {
    case errc::ground_set_mismatch: return "GroundSetMismatch";
    case errc::index_out_of_range: return "IndexOutOfRange";
    case errc::metric_violation: return "MetricViolation";
    case errc::non_monotone_thresholds: return "NonMonotoneThresholds";
    case errc::gauge_violation: return "GaugeViolation";
    case errc::ladder_violation: return "LadderViolation";
    case errc::scale_out_of_range: return "ScaleOutOfRange";
    case errc::partition_invalid: return "PartitionInvalid";
    case errc::partition_not_controlled: return "PartitionNotControlled";
    case errc::not_controlled: return "NotControlled";
    case errc::measurability: return "MeasurabilityError";
    case errc::family_not_coarsely_dense: return "FamilyNotCoarselyDense";
    case errc::seeds_not_coarsely_dense: return "SeedsNotCoarselyDense";
    case errc::not_covering: return "NotCovering";
    case errc::domain_not_covered: return "DomainNotCovered";
    case errc::ampleness_insufficient: return "AmplenessInsufficient";
    case errc::surjectivity_missing: return "SurjectivityMissing";
    case errc::unbounded_propagation: return "UnboundedPropagation";
    case errc::not_isometry: return "NotIsometry";
    case errc::not_controlled_operator: return "NotControlledOperator";
    case errc::components_not_measurable: return "ComponentsNotMeasurable";
    case errc::atom_limit_exceeded: return "AtomLimitExceeded";
    case errc::module_mismatch: return "ModuleMismatch";
    case errc::fixture_error: return "FixtureError";
    case errc::unknown_suite: return "UnknownSuite";
  }
  return "UnknownError";
}

}  // namespace coarse
