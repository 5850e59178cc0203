#include <benchmark/benchmark.h>

#include "flexbus/instance_io.hpp"

using namespace flexbus;

namespace {

const ServiceInstance& three_zone() {
  static ServiceInstance inst = load_instance(std::string(FLEXBUS_FIXTURE_DIR) +
                                              "/three_zone.json");
  return inst;
}

const ServiceInstance& five_zone() {
  static ServiceInstance inst =
      load_instance(std::string(FLEXBUS_FIXTURE_DIR) + "/five_zone.json");
  return inst;
}

void bm_tn_quantile(benchmark::State& state) {
  Distribution d = Distribution::truncated_normal(16.0, 6.0, 0.0);
  double p = 0.0;
  for (auto _ : state) {
    p += 1e-4;
    if (p >= 0.999) p = 1e-4;
    benchmark::DoNotOptimize(d.quantile(p));
  }
}
BENCHMARK(bm_tn_quantile);

void bm_sample_scenarios(benchmark::State& state) {
  const ServiceInstance& inst = three_zone();
  std::uint64_t seed = 0;
  for (auto _ : state)
    benchmark::DoNotOptimize(sample_scenarios(inst, static_cast<int>(state.range(0)), ++seed));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(bm_sample_scenarios)->Arg(10)->Arg(50);

void bm_solve_p1_three_zone(benchmark::State& state) {
  const ServiceInstance& inst = three_zone();
  ReliabilityVector rho;
  rho.category = {0.3};
  rho.zone = {0.25, 0.25, 0.3};
  for (auto _ : state) benchmark::DoNotOptimize(solve_p1(inst, rho));
}
BENCHMARK(bm_solve_p1_three_zone);

void bm_solve_p1_five_zone(benchmark::State& state) {
  const ServiceInstance& inst = five_zone();
  ReliabilityVector rho = ReliabilityVector::uniform(inst, 0.5);
  for (auto _ : state) benchmark::DoNotOptimize(solve_p1(inst, rho));
}
BENCHMARK(bm_solve_p1_five_zone);

void bm_solve_p2_three_zone(benchmark::State& state) {
  const ServiceInstance& inst = three_zone();
  ReliabilityVector rho;
  rho.category = {0.3};
  rho.zone = {0.25, 0.25, 0.3};
  Plan plan = solve_p1(inst, rho);
  std::vector<Scenario> scenarios = sample_scenarios(inst, 16, 7);
  std::size_t k = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(solve_p2(inst, plan, scenarios[k % scenarios.size()]));
    ++k;
  }
}
BENCHMARK(bm_solve_p2_three_zone);

void bm_solve_p2_five_zone(benchmark::State& state) {
  const ServiceInstance& inst = five_zone();
  Plan plan = solve_p1(inst, ReliabilityVector::uniform(inst, 0.5));
  std::vector<Scenario> scenarios = sample_scenarios(inst, 8, 7);
  std::size_t k = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(solve_p2(inst, plan, scenarios[k % scenarios.size()]));
    ++k;
  }
}
BENCHMARK(bm_solve_p2_five_zone);

}  // namespace

BENCHMARK_MAIN();
