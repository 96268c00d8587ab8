#include <benchmark/benchmark.h>

#include "wasgd/averaging.hpp"
#include "wasgd/inference.hpp"
#include "wasgd/models.hpp"
#include "wasgd/optimal_weights.hpp"
#include "wasgd/sgd.hpp"

using namespace wasgd;

namespace {

SchemeConfig scheme_for(int k) {
    switch (k) {
        case 0: return UniformScheme{};
        case 1: return PolyDecayScheme{3.0};
        case 2: return SuffixScheme{0.5};
        case 3: return OnlineSuffixScheme{};
        default: return AdaptiveScheme{0.505};
    }
}

void BM_AveragerUpdate(benchmark::State& state) {
    const SchemeConfig scheme = scheme_for(static_cast<int>(state.range(0)));
    const auto d = static_cast<Eigen::Index>(state.range(1));
    constexpr std::size_t n = 1 << 16;
    RngStream rng(1, 0);
    const Vector x = gaussian_vector(rng, d);
    for (auto _ : state) {
        Averager avg(scheme, d, n);
        for (std::size_t i = 1; i <= n; ++i) avg.update(i, x);
        benchmark::DoNotOptimize(avg.estimate());
    }
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * n));
    state.SetLabel(scheme_name(scheme));
}
BENCHMARK(BM_AveragerUpdate)->ArgsProduct({{0, 1, 2, 3, 4}, {1, 5}});

void BM_SgdTrajectory(benchmark::State& state) {
    const ModelSpec model = ModelSpec::linear(Vector::Ones(state.range(0)));
    const StepSchedule schedule{1.0, 0.505, std::nullopt};
    constexpr std::size_t n = 10'000;
    std::uint64_t rep = 0;
    for (auto _ : state) {
        RngStream rng(1, rep++);
        benchmark::DoNotOptimize(run_trajectory(schedule, model, n, rng, {}).x);
    }
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * n));
}
BENCHMARK(BM_SgdTrajectory)->Arg(1)->Arg(5)->Arg(20);

void BM_RandomScalingUpdate(benchmark::State& state) {
    const auto d = static_cast<Eigen::Index>(state.range(0));
    RngStream rng(1, 0);
    const Vector x = gaussian_vector(rng, d);
    RandomScalingState rs(d);
    for (auto _ : state) rs.update(x);
    benchmark::DoNotOptimize(rs.covariance());
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()));
}
BENCHMARK(BM_RandomScalingUpdate)->Arg(1)->Arg(5)->Arg(20);

void BM_PluginUpdate(benchmark::State& state) {
    const auto d = static_cast<Eigen::Index>(state.range(0));
    const ModelSpec model = ModelSpec::linear(Vector::Zero(d));
    RngStream rng(1, 0);
    const Observation obs = draw(model, rng);
    const Vector x = gaussian_vector(rng, d);
    PluginState plugin(d);
    for (auto _ : state) plugin.update(model, x, obs);
    benchmark::DoNotOptimize(plugin.a_acc.data());
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()));
}
BENCHMARK(BM_PluginUpdate)->Arg(1)->Arg(5)->Arg(20);

void BM_PivotSimulation(benchmark::State& state) {
    const auto grid = static_cast<std::size_t>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(simulate_pivots(grid, 4096, 1));
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * 4096 * grid));
}
BENCHMARK(BM_PivotSimulation)->Arg(1000)->Arg(10'000)->Unit(benchmark::kMillisecond);

void BM_SmoothnessSum(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(1));
    const WeightVector w = materialize_weights(scheme_for(static_cast<int>(state.range(0))), n);
    const StepSchedule schedule{1.0, 0.505, std::nullopt};
    for (auto _ : state) benchmark::DoNotOptimize(smoothness_sum(w.w, 0.5, schedule));
}
BENCHMARK(BM_SmoothnessSum)->ArgsProduct({{2, 4}, {1'000, 10'000, 100'000}})->Unit(benchmark::kMillisecond);

void BM_BlueWeights(benchmark::State& state) {
    const auto n = static_cast<Eigen::Index>(state.range(0));
    RngStream rng(1, 0);
    DenseMatrix g(n, n);
    rng.fill_normal(std::span<double>(g.data(), static_cast<std::size_t>(g.size())));
    const DenseMatrix sigma = g * g.transpose() + DenseMatrix::Identity(n, n);
    for (auto _ : state) benchmark::DoNotOptimize(blue_weights(sigma).c);
}
BENCHMARK(BM_BlueWeights)->Arg(50)->Arg(200)->Arg(500);

}  // namespace
BENCHMARK_MAIN();
