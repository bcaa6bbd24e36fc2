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

#include <omp.h>

#include <algorithm>
#include <cstdint>

#include "aqeval/kernels.hpp"

namespace aqeval::kernels::omp {

std::vector<double> convolve(std::span<const double> x, std::span<const double> h) {
  std::vector<double> y(x.size());
  const auto n = static_cast<std::int64_t>(x.size());
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) {
    y[static_cast<std::size_t>(i)] = detail::convolve_at(x, h, static_cast<std::size_t>(i));
  }
  return y;
}

std::vector<std::vector<double>> magnitude_spectra(std::span<const double> x, std::size_t frame,
                                                   std::size_t hop) {
  const auto& table = detail::dft_table(frame);
  const auto count = static_cast<std::int64_t>(detail::frame_count(x.size(), frame, hop));
  std::vector<std::vector<double>> out(static_cast<std::size_t>(count));
#pragma omp parallel for schedule(static)
  for (std::int64_t f = 0; f < count; ++f) {
    out[static_cast<std::size_t>(f)] =
        detail::frame_spectrum(x, static_cast<std::size_t>(f) * hop, table);
  }
  return out;
}

std::vector<double> frame_rms(std::span<const double> x, std::size_t frame) {
  const auto count = static_cast<std::int64_t>(frame ? (x.size() + frame - 1) / frame : 0);
  std::vector<double> out(static_cast<std::size_t>(count));
#pragma omp parallel for schedule(static)
  for (std::int64_t f = 0; f < count; ++f) {
    const auto start = static_cast<std::size_t>(f) * frame;
    out[static_cast<std::size_t>(f)] =
        detail::rms_of(x.subspan(start, std::min(frame, x.size() - start)));
  }
  return out;
}

BootstrapOut bootstrap(std::span<const double> x, std::span<const double> y, PairStatistic stat,
                       std::size_t resamples, std::uint64_t seed, std::size_t max_attempts) {
  const auto count = static_cast<std::int64_t>(resamples);
  std::vector<double> values(resamples);
  std::vector<unsigned char> defined(resamples, 0);
  std::size_t skipped = 0;
#pragma omp parallel for schedule(dynamic, 16) reduction(+ : skipped)
  for (std::int64_t b = 0; b < count; ++b) {
    std::size_t local = 0;
    auto v = detail::bootstrap_one(x, y, stat, static_cast<std::size_t>(b), resamples, seed,
                                   max_attempts, &local);
    skipped += local;
    if (v) {
      values[static_cast<std::size_t>(b)] = *v;
      defined[static_cast<std::size_t>(b)] = 1;
    }
  }
  BootstrapOut out;
  out.skipped = skipped;
  for (std::size_t b = 0; b < resamples; ++b) {
    if (defined[b]) {
      out.values.push_back(values[b]);
    } else {
      ++out.failed;
    }
  }
  std::sort(out.values.begin(), out.values.end());
  return out;
}

}  // namespace aqeval::kernels::omp
