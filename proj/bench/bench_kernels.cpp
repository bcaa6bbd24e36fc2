// Copyright 2026  aqeval authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

// Serial reference vs OpenMP kernels on clip-sized inputs.

#include <benchmark/benchmark.h>
#include <omp.h>

#include "aqeval/distort.hpp"
#include "aqeval/judges.hpp"
#include "aqeval/kernels.hpp"
#include "aqeval/metrics.hpp"
#include "aqeval/rng.hpp"

namespace {

using namespace aqeval;

std::vector<double> noise(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> v(n);
  for (auto& x : v) x = rng.uniform(-1.0, 1.0);
  return v;
}

template <auto Fn>
void BM_Convolve(benchmark::State& state) {
  const auto x = noise(static_cast<std::size_t>(state.range(0)), 1);
  // 0.3 s room at 16 kHz.
  const auto h = reverb_impulse_response(0.3, 16000, 2);
  for (auto _ : state) benchmark::DoNotOptimize(Fn(x, h));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

template <auto Fn>
void BM_Spectra(benchmark::State& state) {
  const auto x = noise(static_cast<std::size_t>(state.range(0)), 3);
  for (auto _ : state) benchmark::DoNotOptimize(Fn(x, kBaselineFrame, kBaselineHop));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

template <auto Fn>
void BM_Bootstrap(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto x = noise(n, 4);
  auto y = noise(n, 5);
  for (std::size_t i = 0; i < n; ++i) y[i] += x[i];
  for (auto _ : state) benchmark::DoNotOptimize(Fn(x, y, &spearman, 1000, 7, 16));
}

}  // namespace

BENCHMARK(BM_Convolve<&kernels::serial::convolve>)->Name("convolve/serial")->Arg(16000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Convolve<&kernels::omp::convolve>)->Name("convolve/omp")->Arg(16000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Spectra<&kernels::serial::magnitude_spectra>)->Name("spectra/serial")->Arg(160000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Spectra<&kernels::omp::magnitude_spectra>)->Name("spectra/omp")->Arg(160000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Bootstrap<&kernels::serial::bootstrap>)->Name("bootstrap/serial")->Arg(200)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Bootstrap<&kernels::omp::bootstrap>)->Name("bootstrap/omp")->Arg(200)->Unit(benchmark::kMillisecond);

int main(int argc, char** argv) {
  benchmark::Initialize(&argc, argv);
  benchmark::AddCustomContext("omp_max_threads", std::to_string(omp_get_max_threads()));
  benchmark::RunSpecifiedBenchmarks();
  benchmark::Shutdown();
  return 0;
}
