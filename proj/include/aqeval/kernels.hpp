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

#pragma once

// Data-parallel inner loops. Each kernel has a serial reference and an
// OpenMP version with the same signature; the OpenMP versions keep the
// per-element accumulation order of the reference, so both produce
// bit-identical results and tests compare them with exact equality.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace aqeval::kernels {

// y[n] = sum_{k <= n, k < h.size()} h[k] * x[n - k] for n < x.size().
// The tail past the input length is dropped.
using ConvolveFn = std::vector<double> (*)(std::span<const double> x, std::span<const double> h);

// Hann-windowed magnitude spectra, bins 0..frame/2, one row per frame.
// Frames start every `hop` samples; a trailing partial frame is zero padded.
using SpectraFn = std::vector<std::vector<double>> (*)(std::span<const double> x,
                                                       std::size_t frame, std::size_t hop);

// RMS of consecutive non-overlapping frames; a trailing partial frame is
// averaged over its own length.
using FrameRmsFn = std::vector<double> (*)(std::span<const double> x, std::size_t frame);

using PairStatistic = std::optional<double> (*)(std::span<const double>, std::span<const double>);

// Evaluates `stat` on `resamples` bootstrap resamples of the pairs. Resample
// b draws its indices from an engine seeded with derive_seed(seed, b), so
// the result is independent of thread count. Undefined statistics are
// redrawn (next attempt uses derive_seed(seed, b + attempt * resamples)) up
// to `max_attempts` times; *skipped counts the redraws.
struct BootstrapOut {
  std::vector<double> values;  // sorted ascending
  std::size_t skipped = 0;
  std::size_t failed = 0;  // resamples that never produced a defined value
};
using BootstrapFn = BootstrapOut (*)(std::span<const double> x, std::span<const double> y,
                                     PairStatistic stat, std::size_t resamples,
                                     std::uint64_t seed, std::size_t max_attempts);

namespace serial {
std::vector<double> convolve(std::span<const double> x, std::span<const double> h);
std::vector<std::vector<double>> magnitude_spectra(std::span<const double> x, std::size_t frame,
                                                   std::size_t hop);
std::vector<double> frame_rms(std::span<const double> x, std::size_t frame);
BootstrapOut bootstrap(std::span<const double> x, std::span<const double> y, PairStatistic stat,
                       std::size_t resamples, std::uint64_t seed, std::size_t max_attempts);
}  // namespace serial

namespace omp {
std::vector<double> convolve(std::span<const double> x, std::span<const double> h);
std::vector<std::vector<double>> magnitude_spectra(std::span<const double> x, std::size_t frame,
                                                   std::size_t hop);
std::vector<double> frame_rms(std::span<const double> x, std::size_t frame);
BootstrapOut bootstrap(std::span<const double> x, std::span<const double> y, PairStatistic stat,
                       std::size_t resamples, std::uint64_t seed, std::size_t max_attempts);
}  // namespace omp

// Shared per-element helpers; both variants call these so the floating-point
// operation order is identical.
namespace detail {
double convolve_at(std::span<const double> x, std::span<const double> h, std::size_t n);
struct DftTable {
  std::size_t frame = 0;
  std::vector<double> window;
  std::vector<double> cos_table;  // (frame/2 + 1) * frame
  std::vector<double> sin_table;
};
const DftTable& dft_table(std::size_t frame);
std::vector<double> frame_spectrum(std::span<const double> x, std::size_t start,
                                   const DftTable& table);
double rms_of(std::span<const double> x);
std::optional<double> bootstrap_one(std::span<const double> x, std::span<const double> y,
                                    PairStatistic stat, std::size_t b, std::size_t resamples,
                                    std::uint64_t seed, std::size_t max_attempts,
                                    std::size_t* skipped);
std::size_t frame_count(std::size_t n, std::size_t frame, std::size_t hop);
}  // namespace detail

}  // namespace aqeval::kernels
