#include <benchmark/benchmark.h>

#include "coarse/suites.hpp"

using namespace coarse;

static void BM_Compose(benchmark::State& state) {
  testgen::Rng rng(1);
  const auto n = static_cast<std::uint32_t>(state.range(0));
  GroundSet g(n);
  FiniteRelation a = testgen::random_relation(rng, g, g, 0.1);
  FiniteRelation b = testgen::random_relation(rng, g, g, 0.1);
  for (auto _ : state) {
    FiniteRelation c = compose(a, b);
    benchmark::DoNotOptimize(c);
  }
  state.SetComplexityN(n);
}
BENCHMARK(BM_Compose)->RangeMultiplier(2)->Range(16, 512)->Complexity();

static void BM_EntourageScale(benchmark::State& state) {
  testgen::Rng rng(2);
  CoarseSpace s = testgen::random_space(rng, static_cast<std::uint32_t>(state.range(0)), 1, 3);
  FiniteRelation r = testgen::random_relation(rng, s.ground(), s.ground(), 0.05);
  r = set_intersection(r, s.e_max());
  for (auto _ : state) {
    ScaleIndex i = s.entourage_scale(r);
    benchmark::DoNotOptimize(i);
  }
}
BENCHMARK(BM_EntourageScale)->Arg(16)->Arg(64)->Arg(128);

static void BM_QuotientEquivalence(benchmark::State& state) {
  testgen::Rng rng(3);
  CoarseSpace s = testgen::random_space(rng, static_cast<std::uint32_t>(state.range(0)), 1, 2);
  Partition p = testgen::random_controlled_partition(rng, s, 3);
  for (auto _ : state) {
    auto q = partition_quotient_equivalence(s, p);
    benchmark::DoNotOptimize(q);
  }
}
BENCHMARK(BM_QuotientEquivalence)->Arg(16)->Arg(32);
