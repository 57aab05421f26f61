#include "blowup/bounds.h"
#include "blowup/fbm.h"
#include "blowup/rpde.h"
#include "blowup/special_functions.h"

#include <benchmark/benchmark.h>

using namespace blowup;

static void BM_SamplePath(benchmark::State& state) {
  const fbm::TimeGrid grid(1.0, static_cast<std::size_t>(state.range(0)));
  const fbm::PathSampler sampler(fbm::HurstParameter(0.75), grid);
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(sampler.sample(seed++));
}
BENCHMARK(BM_SamplePath)->Arg(256)->Arg(1024)->Arg(4096);

static void BM_Solve(benchmark::State& state) {
  rpde::ModelParams p;
  p.k = 0.1;
  p.delta = 0.5;
  p.eta = 0.2;
  p.q = 3.0;
  p.m = 1.0;
  const spectral::SpectralBasis basis(spectral::DomainSpec::interval(4.0, static_cast<std::size_t>(state.range(0))),
                                      static_cast<std::size_t>(state.range(0)) - 1);
  const auto f = rpde::InitialDatum::multiple_of_phi(basis, 20.0);
  const auto path = fbm::sample_path(p.hurst, fbm::TimeGrid(0.5, 1024), 3);
  rpde::SolverControls c;
  c.output_dt = 0.001;
  for (auto _ : state) benchmark::DoNotOptimize(rpde::solve(p, basis, f, path, c));
}
BENCHMARK(BM_Solve)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

static void BM_TauLowerStar(benchmark::State& state) {
  rpde::ModelParams p;
  p.k = 0.1;
  p.delta = 0.5;
  p.eta = 0.2;
  p.q = 3.0;
  p.m = 1.0;
  const spectral::SpectralBasis basis(spectral::DomainSpec::interval(4.0, 64), 63);
  const fbm::TimeGrid grid(0.5, 1024);
  const bounds::SemigroupEnvelope env(basis, p.effective_gamma(), grid);
  const auto path = fbm::sample_path(p.hurst, grid, 5);
  for (auto _ : state) benchmark::DoNotOptimize(bounds::tau_lower_star(path, p, basis, 10.0, &env));
}
BENCHMARK(BM_TauLowerStar);

static void BM_BesselZeros(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(special::bessel_j_zeros(1.3, static_cast<std::size_t>(state.range(0))));
}
BENCHMARK(BM_BesselZeros)->Arg(16)->Arg(256);
BENCHMARK_MAIN();
