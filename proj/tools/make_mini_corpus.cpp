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

// Regenerates data/mini: a small deterministic corpus of synthetic 8 kHz
// "speech-like" clips (amplitude-modulated harmonic tones) degraded by
// additive noise and clipping, with two-decimal labels derived from the
// degradation parameters.
//
//   make_mini_corpus <out_dir>

#include <cmath>
#include <cstdio>
#include <iostream>
#include <numbers>

#include "aqeval/audio.hpp"
#include "aqeval/corpus.hpp"
#include "aqeval/rng.hpp"

using namespace aqeval;
namespace fs = std::filesystem;

namespace {

constexpr int kRate = 8000;
constexpr std::size_t kFrames = 4000;  // 0.5 s
constexpr int kClipsPerSource = 12;

struct Clip {
  std::string id;
  AudioBuffer audio;
  double snr_db;
  double drive;  // >1 adds hard clipping
};

std::vector<double> voice(Rng& rng) {
  const double f0 = rng.uniform(110.0, 220.0);
  const double rate = rng.uniform(3.0, 6.0);
  std::vector<double> x(kFrames);
  for (std::size_t n = 0; n < kFrames; ++n) {
    const double t = static_cast<double>(n) / kRate;
    const double env = 0.55 + 0.45 * std::sin(2.0 * std::numbers::pi * rate * t);
    double s = 0.0;
    for (int h = 1; h <= 5; ++h) s += std::sin(2.0 * std::numbers::pi * f0 * h * t) / h;
    x[n] = 0.25 * env * s;
  }
  return x;
}

Clip make_clip(const std::string& id, double snr_db, double drive, bool stereo, Rng& rng) {
  auto x = voice(rng);
  double power = 0.0;
  for (double v : x) power += v * v;
  power /= static_cast<double>(x.size());
  const double noise_rms = std::sqrt(power / std::pow(10.0, snr_db / 10.0));
  for (double& v : x) {
    v = drive * (v + noise_rms * rng.normal());
    v = std::clamp(v, -0.999, 0.999);
  }
  if (!stereo) return {id, AudioBuffer::mono(kRate, std::move(x)), snr_db, drive};
  std::vector<double> right(x);
  for (double& v : right) v *= 0.8;
  return {id, AudioBuffer(kRate, {std::move(x), std::move(right)}), snr_db, drive};
}

double round2(double v) { return std::round(v * 100.0) / 100.0; }

}  // namespace

int main(int argc, char** argv) {
  if (argc != 2) {
    std::cerr << "usage: make_mini_corpus <out_dir>\n";
    return 1;
  }
  const fs::path out = argv[1];
  fs::create_directories(out / "audio");

  TaskRegistry tasks;
  tasks.add({"mos_overall", "Overall quality",
             "Please listen to the speech recording and rate its overall quality, considering "
             "noise, distortion and clarity. Use a scale from 1 (bad) to 5 (excellent).",
             CalibrationScale::make(1, 5), true});
  tasks.add({"noise_level", "Background noise",
             "Listen to the recording <audio> and judge how clean it is from background noise. "
             "A score of 1 means very noisy and 5 means no audible noise.",
             CalibrationScale::make(1, 5), true});
  tasks.add({"distortion_10", "Distortion",
             "Rate how free of distortion and clipping this speech is, on an integer scale from "
             "1 (heavily distorted) to 10 (clean).",
             CalibrationScale::make(1, 10, ScaleKind::kInteger), true});

  Rng rng(20260101);
  std::vector<EvalRecord> records;
  for (const std::string source : {"studio", "field"}) {
    for (int i = 0; i < kClipsPerSource; ++i) {
      const double snr = source == "studio" ? rng.uniform(5.0, 40.0) : rng.uniform(-5.0, 25.0);
      const double drive = i % 4 == 3 ? rng.uniform(1.5, 4.0) : 1.0;
      char id[64];
      std::snprintf(id, sizeof id, "%s-%03d", source.c_str(), i);
      const Clip clip = make_clip(id, snr, drive, source == "field" && i % 6 == 5, rng);
      const fs::path wav = out / "audio" / (clip.id + ".wav");
      write_wav(clip.audio, wav);

      // Quality components in [0, 1].
      const double clean = std::clamp((snr + 5.0) / 45.0, 0.0, 1.0);
      const double undistorted = std::clamp(1.0 - (drive - 1.0) / 3.0, 0.0, 1.0);
      const Split split = i < 6 ? Split::kTest : i < 11 ? Split::kTrain : Split::kValidation;

      auto add = [&](const std::string& task_id, double score,
                     std::optional<std::string> instruction = std::nullopt) {
        EvalRecord r;
        r.id = clip.id + "-" + task_id;
        r.origin_id = r.id;
        r.source = source;
        r.task = tasks.at(task_id);
        r.audio.path = wav;
        r.additional_instruction = std::move(instruction);
        r.score = score;
        r.split = split;
        r.label_kind = LabelKind::kHuman;
        validate_record(r);
        records.push_back(std::move(r));
      };
      const double jitter = rng.uniform(-0.2, 0.2);
      add("mos_overall", round2(std::clamp(1.0 + 4.0 * (0.6 * clean + 0.4 * undistorted) + jitter,
                                           1.0, 5.0)));
      add("noise_level", round2(std::clamp(1.0 + 4.0 * clean + rng.uniform(-0.15, 0.15), 1.0, 5.0)),
          i % 3 == 0 ? std::optional<std::string>("Ignore any clipping when rating noise.")
                     : std::nullopt);
      add("distortion_10", std::round(1.0 + 9.0 * (0.8 * undistorted + 0.2 * clean)));
    }
  }

  write_tasks(tasks, out / "tasks.json");
  write_manifest(records, tasks, out / "records.jsonl");
  std::cout << records.size() << " records written to " << out.string() << "\n";
  return 0;
}
