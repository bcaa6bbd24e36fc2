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

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "aqeval/audio.hpp"
#include "aqeval/corpus.hpp"

namespace aqeval::testing {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag = "aqeval");
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

// Checked-in data directory (data/ at the repository root).
std::filesystem::path data_dir();

void write_text(const std::filesystem::path& path, const std::string& text);

AudioBuffer sine(int sample_rate, double seconds, double freq, double amplitude);
AudioBuffer white_noise(int sample_rate, double seconds, double amplitude, std::uint64_t seed);
// Odd-harmonic square wave at the given amplitude.
AudioBuffer square(int sample_rate, double seconds, double freq, double amplitude);

// Train record on task "t" with a [1, 5] continuous scale unless overridden.
EvalRecord make_record(const std::string& id, double score, Split split = Split::kTrain,
                       CalibrationScale scale = CalibrationScale::make(1, 5));

TaskRegistry mini_tasks();
std::vector<EvalRecord> mini_records();

}  // namespace aqeval::testing

namespace aqeval::testing {

struct DetectorScore {
  std::size_t clips = 0;
  std::size_t distorted = 0;
  std::size_t correct = 0;
};

// Writes `n` clean clips (noise over a tone, no natural pauses), runs the
// silence-injection synthesis at rate 0.5 and scores the energy detector
// against the emitted labels.
DetectorScore silence_detector_run(const std::filesystem::path& dir, std::size_t n,
                                   std::uint64_t seed);

}  // namespace aqeval::testing

namespace aqeval::testing {

// Run config over the bundled mini corpus with every stage enabled. Paths
// are absolute so the file can live anywhere.
std::string mini_run_config(const std::filesystem::path& out_dir,
                            const std::filesystem::path& cache_dir,
                            const std::string& backend_mode = "echo");

}  // namespace aqeval::testing

namespace aqeval::testing {

// Fixed record behind the checked-in render golden file.
EvalRecord golden_record();

}  // namespace aqeval::testing
