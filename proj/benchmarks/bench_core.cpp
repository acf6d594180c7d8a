#include <benchmark/benchmark.h>

#include <vector>

#include "gpp/calibrate.hpp"
#include "gpp/image.hpp"
#include "gpp/prng.hpp"
#include "gpp/sensing.hpp"
#include "gpp/tensornet.hpp"

namespace {

using namespace gpp;

std::vector<double> unit_vector(int n, std::uint64_t seed) {
  Splitmix64 rng(seed);
  std::vector<double> x(static_cast<std::size_t>(n));
  for (auto& v : x) v = rng.next_unit();
  return x;
}

void BM_MakeOperator(benchmark::State& state) {
  for (auto _ : state) {
    benchmark::DoNotOptimize(make_operator(102, 1024, 7));
  }
}
BENCHMARK(BM_MakeOperator);

void BM_ForwardLinear(benchmark::State& state) {
  const auto op = make_operator(102, 1024, 7);
  const auto x = unit_vector(1024, 9);
  for (auto _ : state) {
    benchmark::DoNotOptimize(forward_linear(op, x));
  }
}
BENCHMARK(BM_ForwardLinear);

void BM_AdjointLinear(benchmark::State& state) {
  const auto op = make_operator(102, 1024, 7);
  const auto r = unit_vector(102, 10);
  for (auto _ : state) {
    benchmark::DoNotOptimize(adjoint_linear(op, r));
  }
}
BENCHMARK(BM_AdjointLinear);

void BM_CalibSolve(benchmark::State& state) {
  const auto op = make_operator(102, 1024, 7);
  const auto x = unit_vector(1024, 9);
  const auto y = forward_calibrated(op, {0.85, 0.5}, x);
  for (auto _ : state) {
    benchmark::DoNotOptimize(solve_calibration(calib_stats(op, y, x)));
  }
}
BENCHMARK(BM_CalibSolve);

void BM_Generate16(benchmark::State& state) {
  auto net = make_generator_arch(64, 16);
  init_weights(net, 3, 0.02);
  const auto z = unit_vector(64, 4);
  for (auto _ : state) {
    benchmark::DoNotOptimize(generate(net, z));
  }
}
BENCHMARK(BM_Generate16);

void BM_LatentGradient16(benchmark::State& state) {
  auto net = make_generator_arch(64, 16);
  init_weights(net, 3, 0.02);
  const auto z = unit_vector(64, 4);
  const auto upstream = unit_vector(256, 5);
  for (auto _ : state) {
    benchmark::DoNotOptimize(grad_wrt_latent(net, z, upstream));
  }
}
BENCHMARK(BM_LatentGradient16);

void BM_PatchTransform(benchmark::State& state) {
  Image img(256, 256);
  Splitmix64 rng(6);
  for (auto& v : img.data) v = rng.next_unit();
  for (auto _ : state) {
    benchmark::DoNotOptimize(patch_transform(img, 32));
  }
}
BENCHMARK(BM_PatchTransform);

}  // namespace

BENCHMARK_MAIN();
