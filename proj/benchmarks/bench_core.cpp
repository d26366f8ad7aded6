#include <benchmark/benchmark.h>

#include "nanotwin/estimators.hpp"
#include "nanotwin/photophysics.hpp"
#include "nanotwin/scenario.hpp"
#include "nanotwin/session.hpp"

using namespace nanotwin;

namespace {

void BM_FieldAt(benchmark::State& state) {
    const ModeField field(reference_device_scenario().mode("II").mode);
    double x = -4000.0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(field.field_at({x, 10.0, 50.0}));
        x = x > 4000.0 ? -4000.0 : x + 1.0;
    }
}
BENCHMARK(BM_FieldAt);

void BM_SimulateG2(benchmark::State& state) {
    G2Model m;
    m.omega = 2.7;
    m.gamma = 1.37;
    std::uint64_t seed = 0;
    for (auto _ : state)
        benchmark::DoNotOptimize(simulate_g2_histogram(m, static_cast<std::uint64_t>(state.range(0)), ++seed));
}
BENCHMARK(BM_SimulateG2)->Arg(100'000)->Arg(10'000'000);

void BM_FitG2(benchmark::State& state) {
    G2Model m;
    m.omega = 2.7;
    m.gamma = 1.37;
    const auto rec = simulate_g2_histogram(m, 100'000, 42);
    for (auto _ : state) benchmark::DoNotOptimize(fit_g2(rec));
}
BENCHMARK(BM_FitG2)->Unit(benchmark::kMillisecond);

void BM_OptimizeFull(benchmark::State& state) {
    const Scenario sc = reference_device_scenario();
    std::uint64_t seed = 0;
    for (auto _ : state) {
        Session s(sc, ++seed);
        benchmark::DoNotOptimize(s.optimize("full", "II", 25));
    }
}
BENCHMARK(BM_OptimizeFull)->Unit(benchmark::kMillisecond)->Iterations(5);

}  // namespace

BENCHMARK_MAIN();
