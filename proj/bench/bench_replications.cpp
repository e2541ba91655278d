// Serial loop vs OpenMP replications on the reference layout, 11 AGVs.

#include <benchmark/benchmark.h>
#include <omp.h>

#include "agvsim/workflow.hpp"

using namespace agvsim;

namespace {

Scenario reference(int days) {
    Scenario sc = load_scenario(AGVSIM_DATA_DIR "/reference_M.scn");
    sc.days = days;
    return sc;
}

RunOptions quiet() {
    RunOptions o;
    o.keep_trips = false;
    return o;
}

void serial(benchmark::State& st) {
    Scenario sc = reference(static_cast<int>(st.range(1)));
    for (auto _ : st)
        benchmark::DoNotOptimize(run_replications_serial(sc, FleetPlan::constant(11), static_cast<int>(st.range(0)), quiet()));
    st.counters["reps/s"] = benchmark::Counter(static_cast<double>(st.range(0) * st.iterations()), benchmark::Counter::kIsRate);
}

void parallel(benchmark::State& st) {
    Scenario sc = reference(static_cast<int>(st.range(1)));
    int jobs = omp_get_max_threads();
    for (auto _ : st)
        benchmark::DoNotOptimize(run_replications(sc, FleetPlan::constant(11), static_cast<int>(st.range(0)), jobs, quiet()));
    st.counters["reps/s"] = benchmark::Counter(static_cast<double>(st.range(0) * st.iterations()), benchmark::Counter::kIsRate);
    st.counters["threads"] = jobs;
}

}  // namespace

BENCHMARK(serial)->Args({30, 30})->Args({8, 10})->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(parallel)->Args({30, 30})->Args({8, 10})->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK_MAIN();
