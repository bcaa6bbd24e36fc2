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

// Judge backends realize the scoring function s = f(T, A) over rendered
// prompts. Three kinds ship: a remote HTTP judge, a DSP-feature baseline and a
// mock oracle for tests.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "aqeval/audio.hpp"
#include "aqeval/prompting.hpp"
#include "json.hpp"

namespace aqeval {

enum class BackendKind { kRemote, kBaseline, kMock };
std::string_view to_string(BackendKind k);

struct JudgeResponse {
  std::string record_id;
  std::string backend;
  std::string raw_text;
  std::optional<double> extracted_score;
  double latency_ms = 0.0;
  int attempts = 0;
  bool cache_hit = false;
  // Empty on success. Transport failures and extraction failures both land
  // here; extracted_score is absent in either case.
  std::string error;

  bool ok() const { return extracted_score.has_value(); }
};

// Stable fields only; latency, attempts and cache_hit are runtime facts.
nlohmann::json response_to_json(const JudgeResponse& r);
nlohmann::json response_meta_to_json(const JudgeResponse& r);
JudgeResponse response_from_json(const nlohmann::json& j);
std::vector<JudgeResponse> read_responses(const std::filesystem::path& path);

class Judge {
 public:
  virtual ~Judge() = default;
  // "name/version"; stamped into every response and folded into cache keys.
  virtual std::string identity() const = 0;
  virtual BackendKind kind() const = 0;
  // Must be safe to call concurrently.
  virtual JudgeResponse judge(const RenderedPrompt& prompt) = 0;
};

// ---------------------------------------------------------------------------
// Mock

enum class MockMode { kEcho, kEchoInverted, kNoisy };

class MockJudge final : public Judge {
 public:
  struct Options {
    MockMode mode = MockMode::kEcho;
    double sigma = 0.0;
    std::uint64_t seed = 0;
  };

  MockJudge(std::unordered_map<std::string, double> labels, Options options);
  std::string identity() const override;
  BackendKind kind() const override { return BackendKind::kMock; }
  // Throws ReferenceError for ids without a label.
  JudgeResponse judge(const RenderedPrompt& prompt) override;

 private:
  std::unordered_map<std::string, double> labels_;
  Options options_;
};

// Label map recovered from the prompts' own target text.
std::unordered_map<std::string, double> labels_from_prompts(
    const std::vector<RenderedPrompt>& prompts);

// ---------------------------------------------------------------------------
// DSP baseline

struct BaselineFeatures {
  double rms = 0.0;             // overall RMS of the downmix
  double level = 0.0;           // RMS in dBFS mapped from [-60, -20] onto [0, 1]
  double clipping_ratio = 0.0;  // fraction of |x| > 0.99
  double silence_ratio = 0.0;   // fraction of frames below -60 dBFS
  double spectral_flux = 0.0;   // mean normalised frame-to-frame flux, in [0, 1]
};

struct BaselineWeights {
  double level = 0.3;
  double clipping = 0.5;
  double flux = 0.2;
};

inline constexpr std::size_t kBaselineFrame = 256;
inline constexpr std::size_t kBaselineHop = 128;

BaselineFeatures compute_baseline_features(const AudioBuffer& audio, bool parallel = true);

// Quality in [0, 1]:
//   (1 - silence) * (w.level * level + w.clipping * (1 - sqrt(clip)) + w.flux * (1 - flux))
double baseline_quality(const BaselineFeatures& f, const BaselineWeights& w = {});

// Affine map of a [0, 1] quality onto the scale; integer scales round and
// binary scales threshold at 0.5.
double quality_to_scale(double quality, const CalibrationScale& scale);

class BaselineJudge final : public Judge {
 public:
  explicit BaselineJudge(BaselineWeights weights = {}) : weights_(weights) {}
  std::string identity() const override { return "dsp-baseline/1"; }
  BackendKind kind() const override { return BackendKind::kBaseline; }
  JudgeResponse judge(const RenderedPrompt& prompt) override;
  // Same scoring on an already decoded buffer. Throws AudioError when empty.
  JudgeResponse judge_audio(const RenderedPrompt& prompt, const AudioBuffer& audio) const;

 private:
  BaselineWeights weights_;
};

// ---------------------------------------------------------------------------
// Remote

enum class AudioTransport { kBase64, kUrl };

struct RemoteEndpoint {
  std::string identity = "remote/unversioned";
  std::string url;  // scheme://host[:port]/path
  std::string auth_env_var;  // empty: no auth header
  std::string auth_header = "Authorization";
  std::string auth_prefix = "Bearer ";
  // JSON text; string values may hold {{placeholders}} (see render_request).
  std::string request_template;
  // JSON pointer to the answer in the response body; empty means the body is
  // free text.
  std::string response_path;
  int retry_max = 3;
  int retry_base_delay_ms = 200;
  int timeout_ms = 30000;
  AudioTransport audio_transport = AudioTransport::kBase64;
  std::string audio_url_prefix;
  std::size_t max_audio_bytes = 25u * 1024u * 1024u;
};

using TemplateValues = std::map<std::string, nlohmann::json>;

// Parses the template and substitutes placeholders. A string that is exactly
// "{{name}}" is replaced by the value itself (which may be an array or
// object); placeholders embedded in longer strings are replaced textually.
std::string render_request(const std::string& request_template, const TemplateValues& values);

struct HttpReply {
  int status = 0;
  std::string body;
  int attempts = 0;
  std::string error;
  bool ok() const { return error.empty() && status >= 200 && status < 300; }
};

// POST with retries on transport errors, 429 and 5xx, exponential backoff
// base * 2^(attempt-1). Throws AuthError on 401/403.
HttpReply post_json(const RemoteEndpoint& endpoint, const std::string& body);

// Answer text out of a response body according to response_path.
std::string response_text(const RemoteEndpoint& endpoint, const std::string& body);

class RemoteJudge final : public Judge {
 public:
  explicit RemoteJudge(std::shared_ptr<const RemoteEndpoint> endpoint);
  std::string identity() const override { return endpoint_->identity; }
  BackendKind kind() const override { return BackendKind::kRemote; }
  JudgeResponse judge(const RenderedPrompt& prompt) override;

 private:
  std::shared_ptr<const RemoteEndpoint> endpoint_;
};

// ---------------------------------------------------------------------------
// Batch dispatch

struct BatchOptions {
  std::filesystem::path cache_dir;  // empty disables caching
  std::size_t parallelism = 1;
};

struct BatchResult {
  std::vector<JudgeResponse> responses;  // input order
  std::size_t successes = 0;
  std::size_t failures = 0;
  std::size_t cache_hits = 0;
  std::vector<std::string> warnings;

  nlohmann::json failure_manifest() const;
};

// Digest of the audio file bytes, or of the path when the file is absent
// (mock prompts do not need audio on disk).
std::string audio_digest(const AudioRef& audio);

std::string cache_key(const std::string& backend_identity, const RenderedPrompt& prompt,
                      const std::string& audio_digest);

BatchResult judge_batch(const std::vector<RenderedPrompt>& prompts, Judge& backend,
                        const BatchOptions& options);

void write_responses(const BatchResult& result, const std::filesystem::path& path);

}  // namespace aqeval
