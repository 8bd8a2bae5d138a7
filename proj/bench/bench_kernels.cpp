// Serial reference kernels against their OpenMP counterparts, plus the two
// solves the gradient path runs per region.

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "stss/fixtures.hpp"
#include "stss/kernels.hpp"
#include "stss/pde.hpp"

namespace {

struct Problem {
    stss::MaskedDomain domain;
    std::vector<double> u;
    std::vector<double> out;
};

Problem make_problem(int side) {
    stss::fixtures::Rng rng(1234);
    const auto region = stss::fixtures::random_connected_mask(side, side, 0.8, rng);
    Problem p{stss::MaskedDomain::build(region), {}, {}};
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    p.u.resize(p.domain.slots());
    for (double& v : p.u) v = unit(rng);
    p.out.resize(p.u.size());
    return p;
}

template <void (*Kernel)(const stss::MaskedDomain&, double, std::span<const double>,
                         std::span<double>)>
void BM_Stencil(benchmark::State& state) {
    Problem p = make_problem(static_cast<int>(state.range(0)));
    for (auto _ : state) {
        Kernel(p.domain, 0.2, p.u, p.out);
        benchmark::DoNotOptimize(p.out.data());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(p.u.size()));
}

template <double (*Dot)(std::span<const double>, std::span<const double>)>
void BM_Dot(benchmark::State& state) {
    Problem p = make_problem(static_cast<int>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(Dot(p.u, p.u));
    state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(p.u.size()));
}

void BM_ScreenedPoissonSolve(benchmark::State& state) {
    const int side = static_cast<int>(state.range(0));
    stss::fixtures::Rng rng(5);
    const auto region = stss::fixtures::random_connected_mask(side, side, 0.5, rng);
    const auto image = stss::fixtures::smooth_random_image(side, side, rng);
    stss::SolverConfig cfg;
    for (auto _ : state) {
        auto v = stss::solve_screened_poisson(image, region, cfg.alpha, cfg);
        benchmark::DoNotOptimize(v.values().data());
    }
}

void BM_ZeroMeanPoissonSolve(benchmark::State& state) {
    const int side = static_cast<int>(state.range(0));
    stss::fixtures::Rng rng(6);
    const auto region = stss::fixtures::random_connected_mask(side, side, 0.5, rng);
    const auto rhs = stss::fixtures::smooth_random_image(side, side, rng);
    stss::SolverConfig cfg;
    for (auto _ : state) {
        auto v = stss::solve_zero_mean_poisson(rhs, region, cfg);
        benchmark::DoNotOptimize(v.values().data());
    }
}

}  // namespace

BENCHMARK(BM_Stencil<stss::kernels::serial::heat_step>)->Name("heat_step/serial")->Arg(128)->Arg(512);
BENCHMARK(BM_Stencil<stss::kernels::parallel::heat_step>)->Name("heat_step/omp")->Arg(128)->Arg(512);
BENCHMARK(BM_Stencil<stss::kernels::serial::screened_apply>)->Name("screened_apply/serial")->Arg(128)->Arg(512);
BENCHMARK(BM_Stencil<stss::kernels::parallel::screened_apply>)->Name("screened_apply/omp")->Arg(128)->Arg(512);
BENCHMARK(BM_Dot<stss::kernels::serial::dot>)->Name("dot/serial")->Arg(128)->Arg(512);
BENCHMARK(BM_Dot<stss::kernels::parallel::dot>)->Name("dot/omp")->Arg(128)->Arg(512);
BENCHMARK(BM_ScreenedPoissonSolve)->Arg(64)->Arg(128);
BENCHMARK(BM_ZeroMeanPoissonSolve)->Arg(64)->Arg(128);

BENCHMARK_MAIN();
