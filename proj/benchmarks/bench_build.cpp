#include <benchmark/benchmark.h>

#include "relu_forge/families.hpp"

namespace rf = relu_forge;

namespace {

void bm_build_max_net(benchmark::State& state) {
    const int d = static_cast<int>(state.range(0));
    for (auto _ : state) {
        benchmark::DoNotOptimize(rf::max_net(d));
    }
}

void bm_build_product_net(benchmark::State& state) {
    const int d = static_cast<int>(state.range(0));
    for (auto _ : state) {
        benchmark::DoNotOptimize(rf::product_net(d, 1.0, 1e-3));
    }
}

void bm_build_tower(benchmark::State& state) {
    const int d = static_cast<int>(state.range(0));
    const rf::FunctionSpec spec = rf::builtin_family("tower", d);
    rf::SampleConfig cfg = rf::pipeline_sample_defaults();
    cfg.samples = 64;
    cfg.pairs = 16;
    for (auto _ : state) {
        benchmark::DoNotOptimize(rf::build(spec, 0.25, cfg));
    }
}

} // namespace

BENCHMARK(bm_build_max_net)->Arg(64);
BENCHMARK(bm_build_product_net)->Arg(8);
BENCHMARK(bm_build_tower)->Arg(3)->Unit(benchmark::kMillisecond);
