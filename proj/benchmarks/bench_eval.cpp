#include <benchmark/benchmark.h>

#include <random>

#include "relu_forge/constructors.hpp"

namespace rf = relu_forge;

namespace {

Eigen::MatrixXd random_batch(int dim, int cols, double lo, double hi) {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(lo, hi);
    Eigen::MatrixXd m(dim, cols);
    for (int j = 0; j < cols; ++j)
        for (int i = 0; i < dim; ++i) m(i, j) = u(rng);
    return m;
}

void bm_max_net_eval(benchmark::State& state) {
    const int d = static_cast<int>(state.range(0));
    const rf::Network net = rf::max_net(d);
    const Eigen::MatrixXd batch = random_batch(d, 1024, -10.0, 10.0);
    for (auto _ : state) {
        benchmark::DoNotOptimize(net.evaluate_batch(batch));
    }
    state.SetItemsProcessed(state.iterations() * batch.cols());
}

void bm_product_net_eval(benchmark::State& state) {
    const int d = static_cast<int>(state.range(0));
    const rf::Network net = rf::product_net(d, 1.0, 1e-2);
    const Eigen::MatrixXd batch = random_batch(d, 1024, -1.0, 1.0);
    for (auto _ : state) {
        benchmark::DoNotOptimize(net.evaluate_batch(batch));
    }
    state.SetItemsProcessed(state.iterations() * batch.cols());
}

void bm_maxconv_scan_eval(benchmark::State& state) {
    rf::LipschitzBlockSpec block;
    block.dim = 2;
    block.expr = rf::parse_expression("cos(x1+2*x2)", 2);
    block.lipschitz = 3.0;
    const rf::Hypercube Q{-1.0, 1.0, 2};
    const rf::Network net = rf::maxconv_net(block, Q, 0.25);
    const Eigen::MatrixXd batch = random_batch(2, 256, -1.0, 1.0);
    for (auto _ : state) {
        benchmark::DoNotOptimize(net.evaluate_batch(batch));
    }
    state.SetItemsProcessed(state.iterations() * batch.cols());
}

} // namespace

BENCHMARK(bm_max_net_eval)->Arg(8)->Arg(64);
BENCHMARK(bm_product_net_eval)->Arg(4)->Arg(10);
BENCHMARK(bm_maxconv_scan_eval);

BENCHMARK_MAIN();
