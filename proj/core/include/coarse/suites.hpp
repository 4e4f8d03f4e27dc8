#pragma once

#include <random>

#include "coarse/constructions.hpp"
#include "coarse/fixture.hpp"

namespace coarse {

/// Seeded generators for randomized law checks. Everything is driven by one
/// mt19937_64 so a (suite, seed) pair reproduces byte-identical runs.
namespace testgen {

using Rng = std::mt19937_64;

inline std::uint32_t pick(Rng& rng, std::uint32_t lo, std::uint32_t hi) {
  std::uniform_int_distribution<std::uint32_t> d(lo, hi);
  return d(rng);
}

inline double unit_real(Rng& rng) {
  std::uniform_real_distribution<double> d(0.0, 1.0);
  return d(rng);
}

FiniteRelation random_relation(Rng& rng, const GroundSet& source, const GroundSet& target,
                               double density);

/// Extended metric: points on integer lines, one line per component, with
/// thresholds starting at 0 so E_0 is the diagonal.
struct RandomMetric {
  std::vector<std::vector<double>> dist;
  std::vector<double> thresholds;
};

RandomMetric random_metric(Rng& rng, std::uint32_t max_points, std::uint32_t min_components = 1,
                           std::uint32_t max_components = 1);

CoarseSpace random_space(Rng& rng, std::uint32_t max_points, std::uint32_t min_components = 1,
                         std::uint32_t max_components = 1);

/// Atom partition by consecutive runs inside components, dims uniform in
/// [min_dim, max_dim] (0 allowed).
GeoModule random_module(Rng& rng, const CoarseSpace& space, std::uint32_t max_atom_size,
                        std::uint32_t min_dim, std::uint32_t max_dim);

/// Entries from {0, +-1, +-i}: exact in floating point, products of such
/// matrices stay exact integers.
Matrix random_alphabet_matrix(Rng& rng, std::uint32_t rows, std::uint32_t cols, double density);

Matrix random_gaussian_matrix(Rng& rng, std::uint32_t rows, std::uint32_t cols);

BlockOperator random_alphabet_operator(Rng& rng, const GeoModule& domain,
                                       const GeoModule& codomain, double density);

/// Random operator truncated to the entourage at `scale`.
BlockOperator random_finite_propagation_operator(Rng& rng, const GeoModule& m,
                                                 std::uint32_t scale, double density = 0.6);

/// Graph of a component-preserving random function (always controlled and
/// everywhere defined); surjective on components when onto = true.
FiniteRelation random_controlled_graph(Rng& rng, const CoarseSpace& source,
                                       const CoarseSpace& target, bool onto);

/// Blocks are runs inside components, so the partition is controlled.
Partition random_controlled_partition(Rng& rng, const CoarseSpace& space,
                                      std::uint32_t max_block);

}  // namespace testgen

namespace suites {

struct Check {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct SuiteResult {
  std::string suite;
  std::vector<Check> checks;
  double seconds = 0.0;
  bool passed() const {
    for (const auto& c : checks)
      if (!c.pass) return false;
    return true;
  }
};

/// Acceptance-grade law suites; instance counts default to the full gate
/// parameters, the CLI verify command runs them scaled down.
SuiteResult relation_laws(std::uint64_t seed, int instances = 1000,
                          double time_budget_seconds = 5.0);
SuiteResult support_calculus(std::uint64_t seed, int instances = 500);
SuiteResult ql_sandwich(std::uint64_t seed, int instances = 500);
SuiteResult ql_arithmetic(std::uint64_t seed, int instances = 60);
SuiteResult ad_modulus(std::uint64_t seed, int instances = 200);
SuiteResult covering(std::uint64_t seed, int instances = 50);
SuiteResult approx_unit(std::uint64_t seed, int instances = 100, bool inject_bug = false,
                        double time_budget_seconds = 30.0);
SuiteResult cartan(std::uint64_t seed, int expectation_instances = 200,
                   int commutant_instances = 50);
SuiteResult disconnected(std::uint64_t seed, int instances = 50);
SuiteResult k_unitary(std::uint64_t seed, int instances = 10);
SuiteResult coarse_maps(std::uint64_t seed, int instances = 50);

struct Options {
  std::uint64_t seed = 0;
  bool inject_bug = false;
  /// Scales the instance counts down for interactive runs; 1 = full gate.
  double fraction = 0.2;
};

std::vector<std::string> names();

/// Dispatch by suite name; unknown names raise errc::unknown_suite. When a
/// fixture is supplied, its square operators are additionally run through the
/// suite's per-operator laws.
SuiteResult run(const std::string& name, const Options& opt, const Fixture* fixture = nullptr);

}  // namespace suites

}  // namespace coarse
