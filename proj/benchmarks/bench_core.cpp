#include "growthlab/asymptotics.hpp"

#include <benchmark/benchmark.h>

using namespace growthlab;

static MarketPath chain_path(std::size_t T)
{
    return simulate_discrete(euler_kernel(make_diffusion(wright_fisher_benchmark()), 0.02), T, uniform_point(2), 1);
}

static void BM_BestConstantHalfDouble(benchmark::State& state)
{
    MarketPath path = alternating_path(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(best_constant(path).log_value);
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_BestConstantHalfDouble)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);

static void BM_WealthDiscrete(benchmark::State& state)
{
    MarketPath path = chain_path(static_cast<std::size_t>(state.range(0)));
    auto map = PortfolioMapSpec::constant(Eigen::Vector2d(0.5, 0.5));
    for (auto _ : state) benchmark::DoNotOptimize(wealth_discrete(path, map).final_log());
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_WealthDiscrete)->Arg(100000)->Unit(benchmark::kMillisecond);

static void BM_UniversalLipschitz(benchmark::State& state)
{
    MarketPath path = chain_path(10000);
    ClassSpec cls;
    cls.kind = MapClass::Lipschitz;
    MixtureMeasure mix = sample_mixture(cls, 2, static_cast<std::size_t>(state.range(0)), 3);
    for (auto _ : state) benchmark::DoNotOptimize(wealth_universal(path, mix, WealthMode::Discrete).curve.final_log());
}
BENCHMARK(BM_UniversalLipschitz)->Arg(100)->Arg(1000)->Unit(benchmark::kMillisecond);

static void BM_FgWeights(benchmark::State& state)
{
    const int d = static_cast<int>(state.range(0));
    GeneratorFunction G = geometric_mean_generator(d);
    Eigen::VectorXd x = Eigen::VectorXd::LinSpaced(d, 1.0, 2.0);
    x /= x.sum();
    Eigen::VectorXd w(d);
    for (auto _ : state) {
        fg_weights_raw(G, x.data(), w.data());
        benchmark::DoNotOptimize(w.data());
    }
}
BENCHMARK(BM_FgWeights)->Arg(2)->Arg(10);

static void BM_LipschitzConstant(benchmark::State& state)
{
    auto grid = shared_grid(static_cast<int>(state.range(0)), 16);
    Eigen::MatrixXd values = grid->nodes();
    for (auto _ : state) benchmark::DoNotOptimize(lipschitz_constant(*grid, values));
}
BENCHMARK(BM_LipschitzConstant)->Arg(2)->Arg(3);

static void BM_BestLipschitz(benchmark::State& state)
{
    MarketPath path = chain_path(10000);
    LipschitzOptions opts;
    opts.starts = 1;
    for (auto _ : state) benchmark::DoNotOptimize(best_lipschitz(path, 5.0, 32, opts).log_value);
}
BENCHMARK(BM_BestLipschitz)->Unit(benchmark::kMillisecond);

static void BM_LogOptimalState(benchmark::State& state)
{
    MarkovKernel kernel = euler_kernel(make_diffusion(wright_fisher_benchmark()), 0.02);
    auto x = make_simplex_point(std::vector<double>{0.3, 0.7});
    for (auto _ : state)
        benchmark::DoNotOptimize(log_optimal_state(x, kernel, static_cast<std::size_t>(state.range(0)), 0.0, 5).L);
}
BENCHMARK(BM_LogOptimalState)->Arg(2000)->Arg(20000)->Unit(benchmark::kMicrosecond);

static void BM_SimulateDiffusion(benchmark::State& state)
{
    DiffusionSpec spec = make_diffusion(wright_fisher_benchmark());
    for (auto _ : state) benchmark::DoNotOptimize(simulate_diffusion(spec, 100.0, 1e-3, uniform_point(2), 1).size());
    state.SetItemsProcessed(state.iterations() * 100000);
}
BENCHMARK(BM_SimulateDiffusion)->Unit(benchmark::kMillisecond);

static void BM_MasterEquation(benchmark::State& state)
{
    DiffusionSpec spec = make_diffusion(wright_fisher_benchmark());
    MarketPath path =
        quadratic_variation(simulate_diffusion(spec, 100.0, 1e-3, uniform_point(2), 1), RefiningPartition{1e-3, 0});
    GeneratorFunction G(GeneratorFamily::Quadratic, 2, {2.0, 1.0, 1.0});
    for (auto _ : state) benchmark::DoNotOptimize(wealth_master_equation(path, G).final_log());
}
BENCHMARK(BM_MasterEquation)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
