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

#include "aqeval/distort.hpp"

#include <gtest/gtest.h>

#include <cmath>

#include "aqeval/digest.hpp"
#include "aqeval/error.hpp"
#include "aqeval/rng.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace aqeval;
using aqeval::testing::TempDir;

namespace {

double rms(const std::vector<double>& x, std::size_t begin, std::size_t end) {
  double acc = 0;
  for (std::size_t i = begin; i < end; ++i) acc += x[i] * x[i];
  return std::sqrt(acc / static_cast<double>(end - begin));
}

}  // namespace

TEST(ReverbIr, DecaysSixtyDecibelsAtRt60) {
  const auto ir = reverb_impulse_response(0.5, 16000, 3);
  ASSERT_EQ(ir.size(), 12000u);
  const double ratio = ir[8000] * ir[8000] / (ir[0] * ir[0]);
  // Analytic envelope: exp(-2 * ln(1e3)) = 1e-6.
  EXPECT_GT(ratio, 0.5e-6);
  EXPECT_LT(ratio, 2e-6);
  EXPECT_NEAR(ratio, 1e-6, 1e-12);
  double energy = 0;
  for (double v : ir) energy += v * v;
  EXPECT_NEAR(energy, 1.0, 1e-12);
}

TEST(ReverbIr, RejectsOutOfRangeRt60) {
  EXPECT_THROW(reverb_impulse_response(0.0, 16000, 1), ValidationError);
  EXPECT_THROW(reverb_impulse_response(6.0, 16000, 1), ValidationError);
}

TEST(Reverb, DryMixIsPassthrough) {
  const auto a = aqeval::testing::white_noise(8000, 0.3, 0.5, 1);
  EXPECT_EQ(apply_reverb(a, 0.4, 0.0, 9), a);
}

TEST(Reverb, UnitImpulseGivesIrPrefix) {
  std::vector<double> x(4000, 0.0);
  x[0] = 1.0;
  const auto out = apply_reverb(AudioBuffer::mono(8000, x), 0.5, 1.0, 21);
  const auto ir = reverb_impulse_response(0.5, 8000, 21);
  ASSERT_LE(out.frames(), ir.size());
  for (std::size_t i = 0; i < out.frames(); ++i) ASSERT_EQ(out.channel(0)[i], ir[i]) << i;
}

TEST(Reverb, NeverExceedsFullScale) {
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const auto a = aqeval::testing::square(8000, 0.25, rng.uniform(50, 400), 1.0);
    const auto out = apply_reverb(a, rng.uniform(0.1, 1.0), rng.uniform(0.01, 1.0), trial);
    EXPECT_LE(out.peak(), 1.0);
    EXPECT_EQ(out.frames(), a.frames());
  }
}

TEST(Reverb, SerialAndParallelAgree) {
  const auto a = aqeval::testing::white_noise(8000, 0.5, 0.4, 5);
  EXPECT_EQ(apply_reverb(a, 0.6, 0.5, 7, true), apply_reverb(a, 0.6, 0.5, 7, false));
}

TEST(Silence, ExactSpanAt16k) {
  const auto a = aqeval::testing::white_noise(16000, 1.5, 0.5, 2);
  const auto out = inject_silence(a, 0.5, 0.5);
  for (std::size_t i = 8000; i < 16000; ++i) ASSERT_EQ(out.channel(0)[i], 0.0);
  EXPECT_EQ(out.channel(0)[7999], a.channel(0)[7999]);
  EXPECT_EQ(out.channel(0)[16000], a.channel(0)[16000]);
}

TEST(Silence, ZeroDurationAndFullClip) {
  const auto a = aqeval::testing::white_noise(8000, 0.5, 0.5, 4);
  EXPECT_EQ(inject_silence(a, 0.1, 0.0), a);
  const auto all = inject_silence(a, 0.0, 0.5);
  for (double v : all.channel(0)) ASSERT_EQ(v, 0.0);
  EXPECT_THROW(inject_silence(a, 0.4, 0.2), ValidationError);
}

TEST(Silence, LocalityOverRandomSpans) {
  Rng rng(100);
  for (int trial = 0; trial < 100; ++trial) {
    const int sr = rng.below(2) ? 8000 : 16000;
    const AudioBuffer a(sr, {aqeval::testing::white_noise(sr, 0.6, 0.8, rng.next()).channel(0),
                             aqeval::testing::white_noise(sr, 0.6, 0.8, rng.next()).channel(0)});
    const double start = rng.uniform(0.0, 0.5);
    const double duration = rng.uniform(0.0, 0.6 - start - 1e-3);
    const auto out = inject_silence(a, start, duration);
    const auto b = static_cast<std::size_t>(std::llround(start * sr));
    const auto e = static_cast<std::size_t>(std::llround((start + duration) * sr));
    for (int c = 0; c < 2; ++c) {
      for (std::size_t i = 0; i < a.frames(); ++i) {
        if (i >= b && i < e) {
          ASSERT_EQ(out.channel(c)[i], 0.0);
        } else {
          ASSERT_EQ(out.channel(c)[i], a.channel(c)[i]) << "trial " << trial << " i " << i;
        }
      }
    }
  }
}

TEST(Anomaly, ToneAtZeroDbMatchesSignalRms) {
  // Unit-RMS signal: a full-scale square wave.
  const auto a = aqeval::testing::square(16000, 1.0, 50, 1.0);
  DistortionSpec spec;
  spec.kind = DistortionKind::kAnomalyTone;
  spec.frequency = 1000;
  spec.duration = 0.2;
  spec.snr_db = 0;
  spec.seed = 17;
  const auto out = inject_anomaly(a, spec);
  const std::size_t pos = anomaly_position(a.frames(), 3200, 17);
  std::vector<double> burst(a.frames());
  for (std::size_t i = 0; i < a.frames(); ++i) burst[i] = out.channel(0)[i] - a.channel(0)[i];
  const double burst_rms = rms(burst, pos, pos + 3200);
  const double signal_rms = rms(a.channel(0), pos, pos + 3200);
  EXPECT_NEAR(burst_rms / signal_rms, 1.0, 0.05);
  // Nothing outside the window moved.
  for (std::size_t i = 0; i < pos; ++i) ASSERT_EQ(burst[i], 0.0);
  for (std::size_t i = pos + 3200; i < a.frames(); ++i) ASSERT_EQ(burst[i], 0.0);
}

TEST(Anomaly, NoiseBurstHitsRequestedSnr) {
  const auto a = aqeval::testing::white_noise(16000, 1.0, 0.5, 8);
  DistortionSpec spec;
  spec.kind = DistortionKind::kNoiseBurst;
  spec.duration = 0.25;
  spec.snr_db = 6;
  spec.seed = 4;
  const auto out = inject_anomaly(a, spec);
  const std::size_t pos = anomaly_position(a.frames(), 4000, 4);
  std::vector<double> burst(a.frames());
  for (std::size_t i = 0; i < a.frames(); ++i) burst[i] = out.channel(0)[i] - a.channel(0)[i];
  const double snr = 20 * std::log10(rms(a.channel(0), pos, pos + 4000) / rms(burst, pos, pos + 4000));
  EXPECT_NEAR(snr, 6.0, 1e-6);
}

TEST(Anomaly, HighSnrLeavesSignalAlmostUntouched) {
  const auto a = aqeval::testing::white_noise(8000, 0.5, 0.5, 1);
  DistortionSpec spec;
  spec.kind = DistortionKind::kAnomalyTone;
  spec.snr_db = 120;
  spec.duration = 0.1;
  const auto out = inject_anomaly(a, spec);
  for (std::size_t i = 0; i < a.frames(); ++i) {
    ASSERT_LT(std::abs(out.channel(0)[i] - a.channel(0)[i]), 1e-4);
  }
}

TEST(Anomaly, DeterministicAndValidated) {
  const auto a = aqeval::testing::white_noise(8000, 0.5, 0.5, 1);
  DistortionSpec spec;
  spec.kind = DistortionKind::kNoiseBurst;
  spec.seed = 99;
  EXPECT_EQ(inject_anomaly(a, spec), inject_anomaly(a, spec));
  spec.duration = 1.0;
  EXPECT_THROW(inject_anomaly(a, spec), ValidationError);
  spec.kind = DistortionKind::kReverb;
  EXPECT_THROW(inject_anomaly(a, spec), ValidationError);
}

TEST(Synth, SeededSelectionCountsAndCopies) {
  TempDir dir;
  std::vector<ClipSource> clean;
  for (int i = 0; i < 10; ++i) {
    ClipSource c{"c" + std::to_string(i), {}};
    c.audio.path = dir / ("in/c" + std::to_string(i) + ".wav");
    std::filesystem::create_directories(c.audio.path.parent_path());
    write_wav(aqeval::testing::white_noise(8000, 0.5, 0.3, i), c.audio.path);
    clean.push_back(c);
  }
  for (auto kind : {DistortionKind::kSilence, DistortionKind::kReverb,
                    DistortionKind::kAnomalyTone, DistortionKind::kNoiseBurst}) {
    SynthOptions o;
    o.kind = kind;
    o.rate = 0.5;
    o.seed = 42;
    const auto out_dir = dir / std::string(to_string(kind));
    const auto recs = synth_proxy_corpus(clean, o, out_dir);
    ASSERT_EQ(recs.size(), 10u);
    std::size_t ones = 0;
    for (std::size_t i = 0; i < recs.size(); ++i) {
      const auto& r = recs[i];
      EXPECT_EQ(r.label_kind, LabelKind::kProxy);
      EXPECT_EQ(r.scale(), CalibrationScale::binary());
      EXPECT_EQ(r.split, Split::kTrain);
      EXPECT_NO_THROW(validate_record(r));
      const bool same = sha256_file(r.audio.path) == sha256_file(clean[i].audio.path);
      if (r.score == 1.0) {
        ++ones;
        EXPECT_FALSE(same) << r.id;
      } else {
        EXPECT_TRUE(same) << r.id;
      }
    }
    EXPECT_EQ(ones, 5u);
    // Same seed, same bytes.
    const auto again = synth_proxy_corpus(clean, o, dir / "again");
    for (std::size_t i = 0; i < recs.size(); ++i) {
      EXPECT_EQ(sha256_file(recs[i].audio.path), sha256_file(again[i].audio.path));
    }
  }
}

TEST(Synth, EmptyInputAndBadRate) {
  TempDir dir;
  SynthOptions o;
  EXPECT_TRUE(synth_proxy_corpus({}, o, dir.path()).empty());
  o.rate = 1.0;
  EXPECT_THROW(synth_proxy_corpus({}, o, dir.path()), ValidationError);
}

TEST(Synth, MissingInputIsIoError) {
  TempDir dir;
  std::vector<ClipSource> clean{{"gone", {}}};
  clean[0].audio.path = dir / "gone.wav";
  SynthOptions o;
  o.rate = 0.5;
  EXPECT_THROW(synth_proxy_corpus(clean, o, dir.path()), IoError);
}

TEST(Synth, EnergyDetectorRecoversSilenceLabels) {
  TempDir dir;
  const auto score = aqeval::testing::silence_detector_run(dir.path(), 200, 31);
  EXPECT_EQ(score.clips, 200u);
  EXPECT_EQ(score.distorted, 100u);
  EXPECT_EQ(score.correct, score.clips);
}
