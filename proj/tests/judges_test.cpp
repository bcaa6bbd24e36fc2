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

#include "aqeval/judges.hpp"

#include <gtest/gtest.h>

#include <atomic>
#include <complex>
#include <numbers>
#include <set>

#include "aqeval/cache.hpp"
#include "aqeval/digest.hpp"
#include "aqeval/error.hpp"
#include "aqeval/rng.hpp"
#include "test_util.hpp"

using namespace aqeval;
using aqeval::testing::TempDir;

namespace {

RenderedPrompt prompt_for(const std::string& id, double score,
                          CalibrationScale scale = CalibrationScale::make(1, 5),
                          const std::filesystem::path& audio = {}) {
  auto r = aqeval::testing::make_record(id, score, Split::kTest, scale);
  if (!audio.empty()) r.audio.path = audio;
  return render(r);
}

// Straight-line feature computation used as an oracle for the baseline.
BaselineFeatures oracle_features(const std::vector<double>& x) {
  BaselineFeatures f;
  double sq = 0;
  for (double v : x) sq += v * v;
  f.rms = std::sqrt(sq / static_cast<double>(x.size()));
  if (f.rms > 0) f.level = std::clamp((20 * std::log10(f.rms) + 60) / 40, 0.0, 1.0);
  double clipped = 0;
  for (double v : x) clipped += std::abs(v) > 0.99;
  f.clipping_ratio = clipped / static_cast<double>(x.size());

  const std::size_t frame = 256, hop = 128;
  double silent = 0, frames = 0;
  for (std::size_t s = 0; s < x.size(); s += frame) {
    const std::size_t e = std::min(x.size(), s + frame);
    double acc = 0;
    for (std::size_t i = s; i < e; ++i) acc += x[i] * x[i];
    silent += std::sqrt(acc / static_cast<double>(e - s)) < 1e-3;
    ++frames;
  }
  f.silence_ratio = silent / frames;

  std::vector<std::vector<double>> spectra;
  for (std::size_t s = 0;; s += hop) {
    std::vector<double> mag(frame / 2 + 1);
    for (std::size_t k = 0; k <= frame / 2; ++k) {
      std::complex<double> acc = 0;
      for (std::size_t i = 0; i < frame; ++i) {
        const double w = 0.5 - 0.5 * std::cos(2 * std::numbers::pi * static_cast<double>(i) / frame);
        const double v = s + i < x.size() ? x[s + i] : 0.0;
        acc += v * w * std::polar(1.0, -2 * std::numbers::pi * static_cast<double>(k * i) / frame);
      }
      mag[k] = std::abs(acc);
    }
    spectra.push_back(mag);
    if (s + frame >= x.size()) break;
  }
  double total = 0;
  for (std::size_t t = 1; t < spectra.size(); ++t) {
    double diff = 0, mass = 0;
    for (std::size_t k = 0; k < spectra[t].size(); ++k) {
      diff += std::abs(spectra[t][k] - spectra[t - 1][k]);
      mass += spectra[t][k] + spectra[t - 1][k];
    }
    total += mass > 0 ? diff / mass : 0;
  }
  if (spectra.size() > 1) f.spectral_flux = total / static_cast<double>(spectra.size() - 1);
  return f;
}

void expect_features_near(const BaselineFeatures& a, const BaselineFeatures& b) {
  EXPECT_NEAR(a.rms, b.rms, 1e-12);
  EXPECT_NEAR(a.level, b.level, 1e-12);
  EXPECT_EQ(a.clipping_ratio, b.clipping_ratio);
  EXPECT_EQ(a.silence_ratio, b.silence_ratio);
  EXPECT_NEAR(a.spectral_flux, b.spectral_flux, 1e-9);
}

// Full-scale pulses with dead zones: +1 for k samples, 0 for m, -1 for k,
// 0 for m. Every non-zero sample counts as clipped.
AudioBuffer clipped_pulses(int sr, std::size_t frames, std::size_t k, std::size_t m) {
  std::vector<double> x(frames);
  const std::size_t period = 2 * (k + m);
  for (std::size_t i = 0; i < frames; ++i) {
    const std::size_t p = i % period;
    x[i] = p < k ? 1.0 : p < k + m ? 0.0 : p < 2 * k + m ? -1.0 : 0.0;
  }
  return AudioBuffer::mono(sr, std::move(x));
}

class ScriptedJudge final : public Judge {
 public:
  std::string identity() const override { return "scripted/1"; }
  BackendKind kind() const override { return BackendKind::kMock; }
  JudgeResponse judge(const RenderedPrompt& p) override {
    ++calls;
    JudgeResponse r;
    r.record_id = p.record_id;
    r.attempts = 1;
    const int n = std::stoi(p.record_id.substr(1));
    if (n % 3 == 0) {
      r.raw_text = "I cannot tell.";
      r.error = "no score in response";
    } else if (n % 3 == 1) {
      r.raw_text = "Score: " + p.target_text;
      r.extracted_score = extract_score(r.raw_text, p.scale);
    } else {
      throw std::runtime_error("connection reset");
    }
    return r;
  }
  std::atomic<int> calls{0};
};

}  // namespace

TEST(MockJudge, EchoModes) {
  const auto p = prompt_for("a", 4.2);
  MockJudge echo({{"a", 4.2}}, {MockMode::kEcho});
  const auto r = echo.judge(p);
  EXPECT_EQ(r.raw_text, "4.20");
  EXPECT_EQ(r.extracted_score, 4.2);
  MockJudge inv({{"a", 4.2}}, {MockMode::kEchoInverted});
  EXPECT_EQ(inv.judge(p).raw_text, "1.80");
  MockJudge flat({{"a", 4.2}}, {MockMode::kNoisy, 0.0, 9});
  EXPECT_EQ(flat.judge(p).raw_text, "4.20");
}

TEST(MockJudge, UnknownIdIsReferenceError) {
  MockJudge echo({{"a", 4.2}}, {});
  EXPECT_THROW(echo.judge(prompt_for("b", 3)), ReferenceError);
}

TEST(MockJudge, NoisyIsSeededAndClamped) {
  std::unordered_map<std::string, double> labels;
  std::vector<RenderedPrompt> prompts;
  for (int i = 0; i < 200; ++i) {
    const std::string id = "r" + std::to_string(i);
    labels[id] = 4.9;
    prompts.push_back(prompt_for(id, 4.9));
  }
  MockJudge a(labels, {MockMode::kNoisy, 0.5, 3});
  MockJudge b(labels, {MockMode::kNoisy, 0.5, 3});
  MockJudge c(labels, {MockMode::kNoisy, 0.5, 4});
  int differs = 0;
  for (const auto& p : prompts) {
    const auto ra = a.judge(p);
    EXPECT_EQ(ra.raw_text, b.judge(p).raw_text);
    ASSERT_TRUE(ra.extracted_score);
    EXPECT_LE(*ra.extracted_score, 5.0);
    EXPECT_GE(*ra.extracted_score, 1.0);
    differs += ra.raw_text != c.judge(p).raw_text;
  }
  EXPECT_GT(differs, 100);
  EXPECT_NE(a.identity(), c.identity());
}

TEST(MockJudge, LabelsFromPrompts) {
  const auto labels = labels_from_prompts({prompt_for("x", 3.25), prompt_for("y", 1)});
  EXPECT_EQ(labels.at("x"), 3.25);
  EXPECT_EQ(labels.at("y"), 1.0);
}

TEST(Baseline, SilenceMapsToScaleMinimum) {
  BaselineJudge judge;
  const AudioBuffer zeros(8000, 1, 4000);
  EXPECT_EQ(judge.judge_audio(prompt_for("z", 3), zeros).extracted_score, 1.0);
  EXPECT_EQ(judge.judge_audio(prompt_for("z", 50, CalibrationScale::make(0, 100)), zeros)
                .extracted_score,
            0.0);
  EXPECT_THROW(judge.judge_audio(prompt_for("z", 3), AudioBuffer(8000, 1, 0)), AudioError);
}

TEST(Baseline, FeaturesMatchOracle) {
  const auto noise = aqeval::testing::white_noise(8000, 0.7, 0.4, 2);
  expect_features_near(compute_baseline_features(noise), oracle_features(noise.channel(0)));
  const auto pulses = clipped_pulses(8000, 4000, 12, 13);
  expect_features_near(compute_baseline_features(pulses, false), oracle_features(pulses.channel(0)));
}

TEST(Baseline, ClippedScoresBelowCleanSineAtEqualRms) {
  // Pulse RMS is sqrt(12/25); the sine amplitude below gives the same RMS
  // over whole periods and stays clear of the clipping threshold.
  const auto pulses = clipped_pulses(8000, 4000, 12, 13);
  const auto clean = aqeval::testing::sine(8000, 0.5, 250, std::sqrt(2.0 * 12.0 / 25.0));
  const auto fp = oracle_features(pulses.channel(0));
  const auto fs = oracle_features(clean.channel(0));
  ASSERT_NEAR(fp.rms, fs.rms, 1e-12);
  EXPECT_EQ(fs.clipping_ratio, 0.0);
  EXPECT_DOUBLE_EQ(fp.clipping_ratio, 24.0 / 50.0);
  EXPECT_LT(baseline_quality(fp), baseline_quality(fs));

  BaselineJudge judge;
  const auto sp = judge.judge_audio(prompt_for("p", 3), pulses).extracted_score;
  const auto ss = judge.judge_audio(prompt_for("s", 3), clean).extracted_score;
  ASSERT_TRUE(sp && ss);
  EXPECT_LT(*sp, *ss);
}

TEST(Baseline, DeterministicAcrossCallsAndKernels) {
  const auto a = aqeval::testing::white_noise(16000, 1.0, 0.3, 8);
  BaselineJudge judge;
  const auto p = prompt_for("d", 3);
  EXPECT_EQ(judge.judge_audio(p, a).raw_text, judge.judge_audio(p, a).raw_text);
  const auto f1 = compute_baseline_features(a, true);
  const auto f2 = compute_baseline_features(a, false);
  EXPECT_EQ(f1.spectral_flux, f2.spectral_flux);
  EXPECT_EQ(f1.silence_ratio, f2.silence_ratio);
}

TEST(Baseline, QualityToScaleKinds) {
  EXPECT_EQ(quality_to_scale(0.5, CalibrationScale::make(1, 5)), 3.0);
  EXPECT_EQ(quality_to_scale(0.56, CalibrationScale::make(1, 10, ScaleKind::kInteger)), 6.0);
  EXPECT_EQ(quality_to_scale(0.5, CalibrationScale::binary()), 1.0);
  EXPECT_EQ(quality_to_scale(0.49, CalibrationScale::binary()), 0.0);
}

TEST(CacheKey, ChangesWithEveryTextCharacter) {
  const auto p = prompt_for("k", 4.2);
  const std::string digest = "abc";
  const auto base = cache_key("id/1", p, digest);
  std::set<std::string> keys{base};
  for (std::size_t seg : {0u, 2u}) {
    for (std::size_t i = 0; i < p.segments[seg].text.size(); ++i) {
      auto q = p;
      q.segments[seg].text[i] = static_cast<char>(q.segments[seg].text[i] ^ 0x01);
      ASSERT_TRUE(keys.insert(cache_key("id/1", q, digest)).second) << seg << ":" << i;
    }
  }
  EXPECT_NE(cache_key("id/2", p, digest), base);
  EXPECT_NE(cache_key("id/1", p, "abd"), base);
}

TEST(CacheKey, ChangesWithEveryAudioByte) {
  TempDir dir;
  const std::string bytes = encode_wav_pcm16(aqeval::testing::white_noise(8000, 0.01, 0.5, 1));
  std::set<std::string> digests;
  for (std::size_t i = 0; i < bytes.size(); ++i) {
    std::string b = bytes;
    b[i] = static_cast<char>(b[i] ^ 0x80);
    write_file_atomic(dir / "a.wav", b);
    AudioRef ref;
    ref.path = dir / "a.wav";
    ASSERT_TRUE(digests.insert(audio_digest(ref)).second) << i;
  }
}

TEST(Batch, PreservesOrderAndCountsFailures) {
  std::vector<RenderedPrompt> prompts;
  for (int i = 0; i < 30; ++i) prompts.push_back(prompt_for("r" + std::to_string(i), 2.5));
  ScriptedJudge judge;
  const auto result = judge_batch(prompts, judge, {{}, 6});
  ASSERT_EQ(result.responses.size(), 30u);
  for (std::size_t i = 0; i < 30; ++i) EXPECT_EQ(result.responses[i].record_id, prompts[i].record_id);
  EXPECT_EQ(result.successes, 10u);
  EXPECT_EQ(result.failures, 20u);
  EXPECT_EQ(result.responses[1].extracted_score, 2.5);
  EXPECT_EQ(result.responses[2].error, "connection reset");
  const auto manifest = result.failure_manifest();
  EXPECT_EQ(manifest["successes"], 10);
  EXPECT_EQ(manifest["failures"], 20);
  EXPECT_EQ(manifest["failed"].size(), 20u);
}

TEST(Batch, CachesAnsweredPromptsOnly) {
  TempDir dir;
  std::vector<RenderedPrompt> prompts;
  for (int i = 0; i < 9; ++i) prompts.push_back(prompt_for("r" + std::to_string(i), 2.5));
  ScriptedJudge judge;
  BatchOptions opts{dir / "cache", 3};
  const auto first = judge_batch(prompts, judge, opts);
  EXPECT_EQ(judge.calls.load(), 9);
  const auto second = judge_batch(prompts, judge, opts);
  // Transport failures (ids 2, 5, 8) are retried; everything else is a hit.
  EXPECT_EQ(judge.calls.load(), 12);
  EXPECT_EQ(second.cache_hits, 6u);
  for (std::size_t i = 0; i < 9; ++i) {
    EXPECT_EQ(response_to_json(first.responses[i]), response_to_json(second.responses[i]));
  }
}

TEST(Batch, UnusableCacheDirWarnsAndContinues) {
  TempDir dir;
  aqeval::testing::write_text(dir / "file", "x");
  MockJudge echo({{"a", 3}}, {});
  const auto result = judge_batch({prompt_for("a", 3)}, echo, {dir / "file" / "cache", 1});
  EXPECT_EQ(result.successes, 1u);
  ASSERT_EQ(result.warnings.size(), 1u);
}

TEST(Batch, MockReferenceErrorsPropagate) {
  MockJudge echo({}, {});
  EXPECT_THROW(judge_batch({prompt_for("a", 3)}, echo, {{}, 2}), ReferenceError);
}

TEST(Cache, CorruptEntryIsAMiss) {
  TempDir dir;
  ResponseCache cache(dir / "c");
  ASSERT_TRUE(cache.enabled());
  JudgeResponse r;
  r.record_id = "a";
  r.raw_text = "3.00";
  r.extracted_score = 3.0;
  const std::string key = sha256_hex("k");
  ASSERT_TRUE(cache.put(key, r));
  ASSERT_TRUE(cache.get(key));
  EXPECT_EQ(cache.get(key)->extracted_score, 3.0);
  write_file_atomic(cache.entry_path(key), "{not json");
  EXPECT_FALSE(cache.get(key));
  EXPECT_FALSE(cache.get(sha256_hex("other")));
}

TEST(Responses, FileRoundTripWithSidecars) {
  TempDir dir;
  std::vector<RenderedPrompt> prompts;
  for (int i = 0; i < 6; ++i) prompts.push_back(prompt_for("r" + std::to_string(i), 4));
  ScriptedJudge judge;
  const auto result = judge_batch(prompts, judge, {{}, 1});
  write_responses(result, dir / "responses.jsonl");
  const auto back = read_responses(dir / "responses.jsonl");
  ASSERT_EQ(back.size(), 6u);
  for (std::size_t i = 0; i < 6; ++i) {
    EXPECT_EQ(response_to_json(back[i]), response_to_json(result.responses[i]));
  }
  EXPECT_TRUE(std::filesystem::exists(dir / "responses.meta.jsonl"));
  const auto failures = nlohmann::json::parse(read_file(dir / "responses.failures.json"));
  EXPECT_EQ(failures["failures"], 4);

  write_file_atomic(dir / "bad.jsonl", read_file(dir / "responses.jsonl") + "{oops\n");
  try {
    read_responses(dir / "bad.jsonl");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 7u);
  }
}
