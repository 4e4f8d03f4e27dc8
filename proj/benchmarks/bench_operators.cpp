#include <benchmark/benchmark.h>

#include "coarse/suites.hpp"

using namespace coarse;

namespace {

struct OperatorCase {
  CoarseSpace space;
  GeoModule module;
  BlockOperator op;
};

OperatorCase make_case(std::uint32_t points, std::uint32_t dims) {
  testgen::Rng rng(7);
  CoarseSpace s = testgen::random_space(rng, points, 1, 2);
  GeoModule m = testgen::random_module(rng, s, 2, dims, dims);
  BlockOperator t = testgen::random_finite_propagation_operator(rng, m, s.top_scale(), 0.4);
  return {std::move(s), std::move(m), std::move(t)};
}

}  // namespace

static void BM_QlProfileExact(benchmark::State& state) {
  OperatorCase c = make_case(static_cast<std::uint32_t>(state.range(0)), 2);
  for (auto _ : state) {
    QlProfile p = ql_profile(c.op);
    benchmark::DoNotOptimize(p);
  }
}
BENCHMARK(BM_QlProfileExact)->Arg(8)->Arg(12)->Arg(16);

static void BM_TruncProfile(benchmark::State& state) {
  OperatorCase c = make_case(static_cast<std::uint32_t>(state.range(0)), 2);
  for (auto _ : state) {
    auto p = trunc_profile(c.op);
    benchmark::DoNotOptimize(p);
  }
}
BENCHMARK(BM_TruncProfile)->Arg(8)->Arg(16)->Arg(24);

static void BM_ApproximateUnit(benchmark::State& state) {
  OperatorCase c = make_case(static_cast<std::uint32_t>(state.range(0)), 3);
  for (auto _ : state) {
    ApproxUnitWitness w = approximate_unit(c.op, 0.1);
    benchmark::DoNotOptimize(w);
  }
}
BENCHMARK(BM_ApproximateUnit)->Arg(10)->Arg(16)->Arg(20);

static void BM_Cover(benchmark::State& state) {
  testgen::Rng rng(9);
  CoarseSpace s = testgen::random_space(rng, static_cast<std::uint32_t>(state.range(0)), 1, 2);
  GeoModule m1 = GeoModule::uniform(s, 1);
  GeoModule m2 = GeoModule::uniform(s, 2);
  ControlledMap f = require_controlled(s, s, FiniteRelation::diagonal(s.ground()));
  for (auto _ : state) {
    CoverResult c = cover(f, m1, m2, CoverKind::isometry);
    benchmark::DoNotOptimize(c);
  }
}
BENCHMARK(BM_Cover)->Arg(8)->Arg(16);
