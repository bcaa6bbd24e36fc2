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

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>

#include "aqeval/kernels.hpp"
#include "aqeval/rng.hpp"

namespace aqeval::kernels {

namespace detail {

double convolve_at(std::span<const double> x, std::span<const double> h, std::size_t n) {
  const std::size_t kmax = std::min(h.size(), n + 1);
  double acc = 0.0;
  for (std::size_t k = 0; k < kmax; ++k) acc += h[k] * x[n - k];
  return acc;
}

const DftTable& dft_table(std::size_t frame) {
  static std::mutex mu;
  static std::map<std::size_t, std::unique_ptr<DftTable>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto& slot = cache[frame];
  if (!slot) {
    auto t = std::make_unique<DftTable>();
    t->frame = frame;
    t->window.resize(frame);
    for (std::size_t i = 0; i < frame; ++i) {
      t->window[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) /
                                          static_cast<double>(frame));
    }
    const std::size_t bins = frame / 2 + 1;
    t->cos_table.resize(bins * frame);
    t->sin_table.resize(bins * frame);
    for (std::size_t k = 0; k < bins; ++k) {
      for (std::size_t i = 0; i < frame; ++i) {
        // Reduce k*i mod frame first so the angle stays small and exact.
        const double angle = 2.0 * std::numbers::pi * static_cast<double>((k * i) % frame) /
                             static_cast<double>(frame);
        t->cos_table[k * frame + i] = std::cos(angle);
        t->sin_table[k * frame + i] = std::sin(angle);
      }
    }
    slot = std::move(t);
  }
  return *slot;
}

std::vector<double> frame_spectrum(std::span<const double> x, std::size_t start,
                                   const DftTable& table) {
  const std::size_t frame = table.frame;
  std::vector<double> windowed(frame, 0.0);
  for (std::size_t i = 0; i < frame && start + i < x.size(); ++i) {
    windowed[i] = x[start + i] * table.window[i];
  }
  const std::size_t bins = frame / 2 + 1;
  std::vector<double> mag(bins);
  for (std::size_t k = 0; k < bins; ++k) {
    const double* c = &table.cos_table[k * frame];
    const double* s = &table.sin_table[k * frame];
    double re = 0.0;
    double im = 0.0;
    for (std::size_t i = 0; i < frame; ++i) {
      re += windowed[i] * c[i];
      im -= windowed[i] * s[i];
    }
    mag[k] = std::sqrt(re * re + im * im);
  }
  return mag;
}

double rms_of(std::span<const double> x) {
  if (x.empty()) return 0.0;
  double acc = 0.0;
  for (double v : x) acc += v * v;
  return std::sqrt(acc / static_cast<double>(x.size()));
}

std::optional<double> bootstrap_one(std::span<const double> x, std::span<const double> y,
                                    PairStatistic stat, std::size_t b, std::size_t resamples,
                                    std::uint64_t seed, std::size_t max_attempts,
                                    std::size_t* skipped) {
  const std::size_t n = x.size();
  std::vector<double> rx(n);
  std::vector<double> ry(n);
  for (std::size_t attempt = 0; attempt < max_attempts; ++attempt) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(b + attempt * resamples)));
    for (std::size_t i = 0; i < n; ++i) {
      const auto j = static_cast<std::size_t>(rng.below(n));
      rx[i] = x[j];
      ry[i] = y[j];
    }
    if (auto v = stat(rx, ry)) return v;
    ++*skipped;
  }
  return std::nullopt;
}

std::size_t frame_count(std::size_t n, std::size_t frame, std::size_t hop) {
  if (n == 0 || frame == 0 || hop == 0) return 0;
  if (n <= frame) return 1;
  return 1 + (n - frame + hop - 1) / hop;
}

}  // namespace detail

namespace serial {

std::vector<double> convolve(std::span<const double> x, std::span<const double> h) {
  std::vector<double> y(x.size());
  for (std::size_t n = 0; n < x.size(); ++n) y[n] = detail::convolve_at(x, h, n);
  return y;
}

std::vector<std::vector<double>> magnitude_spectra(std::span<const double> x, std::size_t frame,
                                                   std::size_t hop) {
  const auto& table = detail::dft_table(frame);
  const std::size_t count = detail::frame_count(x.size(), frame, hop);
  std::vector<std::vector<double>> out(count);
  for (std::size_t f = 0; f < count; ++f) out[f] = detail::frame_spectrum(x, f * hop, table);
  return out;
}

std::vector<double> frame_rms(std::span<const double> x, std::size_t frame) {
  const std::size_t count = frame ? (x.size() + frame - 1) / frame : 0;
  std::vector<double> out(count);
  for (std::size_t f = 0; f < count; ++f) {
    out[f] = detail::rms_of(x.subspan(f * frame, std::min(frame, x.size() - f * frame)));
  }
  return out;
}

BootstrapOut bootstrap(std::span<const double> x, std::span<const double> y, PairStatistic stat,
                       std::size_t resamples, std::uint64_t seed, std::size_t max_attempts) {
  BootstrapOut out;
  for (std::size_t b = 0; b < resamples; ++b) {
    std::size_t skipped = 0;
    auto v = detail::bootstrap_one(x, y, stat, b, resamples, seed, max_attempts, &skipped);
    out.skipped += skipped;
    if (v) {
      out.values.push_back(*v);
    } else {
      ++out.failed;
    }
  }
  std::sort(out.values.begin(), out.values.end());
  return out;
}

}  // namespace serial

}  // namespace aqeval::kernels
