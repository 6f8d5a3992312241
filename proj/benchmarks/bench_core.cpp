#include <benchmark/benchmark.h>

#include <cstdint>

#include "turbcancel/experiment.hpp"
#include "turbcancel/propagation.hpp"
#include "turbcancel/turbulence.hpp"
#include "turbcancel/two_photon.hpp"

namespace tc = turbcancel;

namespace {

const tc::PhysicalSetup kSetup;

tc::Grid2D grid_for(const benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  // Same dx as the experiment grid so the sampling guards hold at every size.
  return tc::Grid2D(n, tc::experiment_grid(kSetup).dx());
}

void BM_FresnelPropagate(benchmark::State& state) {
  const auto grid = grid_for(state);
  const auto field = tc::converging_gaussian(grid, kSetup.k_cal(), kSetup.w0, 0.45);
  for (auto _ : state) benchmark::DoNotOptimize(tc::fresnel_propagate(field, 0.45));
}
BENCHMARK(BM_FresnelPropagate)->Arg(512)->Arg(1024)->Unit(benchmark::kMillisecond);

void BM_KolmogorovScreen(benchmark::State& state) {
  const auto grid = grid_for(state);
  std::uint64_t seed = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(tc::make_kolmogorov_screen(grid, 1.2e-3, kSetup.k_cal(), ++seed));
  }
}
BENCHMARK(BM_KolmogorovScreen)->Arg(512)->Arg(1024)->Unit(benchmark::kMillisecond);

void BM_CoincidenceFastScreen(benchmark::State& state) {
  const auto grid = grid_for(state);
  const auto pump = tc::converging_gaussian(grid, kSetup.k_pump(), kSetup.w_pump, 0.45);
  const auto screen = tc::make_kolmogorov_screen(grid, 2e-3, kSetup.k_down(), 1, 3, 0.45);
  const auto mode = static_cast<tc::CoincidenceMode>(state.range(1));
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        tc::fresnel_propagate(tc::apply_screen(pump, tc::pair_screen(screen, mode, kSetup.k_pump())),
                              0.45));
  }
}
BENCHMARK(BM_CoincidenceFastScreen)
    ->Args({512, static_cast<int>(tc::CoincidenceMode::direct)})
    ->Args({512, static_cast<int>(tc::CoincidenceMode::inverted_x)})
    ->Unit(benchmark::kMillisecond);

void BM_CoincidenceFastKernel(benchmark::State& state) {
  const tc::Grid2D grid(256, 30e-6);
  const auto pump = tc::converging_gaussian(grid, kSetup.k_pump(), kSetup.w_pump, kSetup.distance);
  const tc::KernelConvolver convolver(pump, kSetup.distance);
  const auto kernel = tc::sample_tilt_kernel(grid, 1e-4, kSetup.k_down(), 1);
  for (auto _ : state) {
    benchmark::DoNotOptimize(tc::coincidence_fast(convolver, kernel, tc::CoincidenceMode::inverted_x));
  }
}
BENCHMARK(BM_CoincidenceFastKernel)->Unit(benchmark::kMillisecond);

void BM_SlitFlux(benchmark::State& state) {
  const auto grid = tc::experiment_grid(kSetup);
  const auto field = tc::converging_gaussian(grid, kSetup.k_cal(), kSetup.w0, 0.0);
  for (auto _ : state) benchmark::DoNotOptimize(tc::slit_flux(field, kSetup.slit_width));
}
BENCHMARK(BM_SlitFlux)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
