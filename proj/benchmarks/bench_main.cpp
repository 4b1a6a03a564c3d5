#include <benchmark/benchmark.h>

#include <vector>

#include "trimlab/meanfield.hpp"
#include "trimlab/numerics.hpp"
#include "trimlab/operators.hpp"
#include "trimlab/particle.hpp"

using namespace trimlab;

namespace {

RateTable rates(double eps, int d, double L) {
  return build_q_from_b(DriftModel::tanh_well(2.0), MollifierSpec{}, GridSpec(eps, d, L));
}

void BM_Lstar(benchmark::State& st) {
  const RateTable rt = rates(1.0 / static_cast<double>(st.range(0)), 1, 8.0);
  const std::size_t n = rt.grid().site_count();
  std::vector<double> in(n, 1.0 / static_cast<double>(n)), out(n);
  for (auto _ : st) {
    lstar_into(rt, in, out);
    benchmark::DoNotOptimize(out.data());
  }
  st.SetItemsProcessed(st.iterations() * static_cast<std::int64_t>(n));
}
BENCHMARK(BM_Lstar)->Arg(10)->Arg(50)->Arg(200);

void BM_Lstar2d(benchmark::State& st) {
  const RateTable rt = rates(0.05, 2, 3.0);
  const std::size_t n = rt.grid().site_count();
  std::vector<double> in(n, 1.0 / static_cast<double>(n)), out(n);
  for (auto _ : st) {
    lstar_into(rt, in, out);
    benchmark::DoNotOptimize(out.data());
  }
  st.SetItemsProcessed(st.iterations() * static_cast<std::int64_t>(n));
}
BENCHMARK(BM_Lstar2d);

void BM_WaterLevel(benchmark::State& st) {
  RandomStream r(1, 0);
  std::vector<double> f(static_cast<std::size_t>(st.range(0)));
  for (auto& v : f) v = r.uniform();
  for (auto _ : st) benchmark::DoNotOptimize(water_level_cap(f, 0.01).level);
  st.SetItemsProcessed(st.iterations() * st.range(0));
}
BENCHMARK(BM_WaterLevel)->Arg(161)->Arg(801)->Arg(10000);

void BM_SplittingStep(benchmark::State& st) {
  const RateTable rt = rates(0.02, 1, 8.0);
  GridFunction u(rt.grid(), 1.0 / static_cast<double>(rt.grid().site_count()));
  for (auto _ : st) benchmark::DoNotOptimize(step_trim_splitting(rt, u, 1e-4).level);
}
BENCHMARK(BM_SplittingStep);

// Candidate events per second of the thinning engine.
void BM_TrimmedEngine(benchmark::State& st) {
  const RateTable rt = rates(0.1, 1, 6.0);
  const auto init = ParticleConfiguration::all_at(rt.grid(), rt.grid().site_count() / 2, st.range(0));
  std::uint64_t seed = 0, events = 0;
  for (auto _ : st) {
    const auto run = simulate_trimmed(init, rt, 0.05, SimSeed{seed++}, {});
    events += run.stats.candidates;
  }
  st.SetItemsProcessed(static_cast<std::int64_t>(events));
}
BENCHMARK(BM_TrimmedEngine)->Arg(1000)->Arg(100000)->Unit(benchmark::kMillisecond);

void BM_CoupledEngine(benchmark::State& st) {
  const RateTable rt = rates(0.1, 1, 6.0);
  const auto init = ParticleConfiguration::all_at(rt.grid(), rt.grid().site_count() / 2, 1000);
  std::uint64_t seed = 0, events = 0;
  for (auto _ : st) {
    const auto run = simulate_coupled_pair(init, rt, 0.2, SimSeed{seed++}, {});
    events += run.stats.candidates;
  }
  st.SetItemsProcessed(static_cast<std::int64_t>(events));
}
BENCHMARK(BM_CoupledEngine)->Unit(benchmark::kMillisecond);

void BM_ArgmaxTracker(benchmark::State& st) {
  GridSpec g(0.05, 2, 3.0);
  std::vector<Count> c(g.site_count(), 5);
  ParticleConfiguration cfg(g, c);
  RandomStream r(2, 0);
  for (auto _ : st) {
    const SiteIndex x = r.below(g.site_count());
    cfg.add(x);
    cfg.remove(cfg.argmax());
  }
}
BENCHMARK(BM_ArgmaxTracker);

}  // namespace

BENCHMARK_MAIN();
