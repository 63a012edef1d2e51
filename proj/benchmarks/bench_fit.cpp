#include <benchmark/benchmark.h>

#include <string>

#include "gplsiam/fit.hpp"
#include "gplsiam/sim.hpp"

using namespace gplsiam;

namespace {

// One full fit of replicate 0 of a simulation scenario.
void BM_ScenarioFit(benchmark::State& state, const std::string& scenario) {
  const sim::Scenario sc = sim::make_scenario(scenario);
  const sim::Design design = sim::make_design(sc, state.range(0), 1);
  const Dataset data = sim::generate(sc, design, 1, 0);
  const Problem pb(sim::scenario_spec(sc), data);
  int iterations = 0;
  for (auto _ : state) {
    const FittedModel m = fit(pb);
    iterations = m.iterations;
    benchmark::DoNotOptimize(m.psi.data());
  }
  state.counters["fit_iterations"] = iterations;
}
BENCHMARK_CAPTURE(BM_ScenarioFit, poisson1, std::string("poisson1"))
    ->Arg(200)->Arg(800)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_ScenarioFit, poisson2, std::string("poisson2"))
    ->Arg(200)->Arg(800)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_ScenarioFit, gamma1, std::string("gamma1"))
    ->Arg(200)->Arg(3200)->Unit(benchmark::kMillisecond);

}  // namespace
