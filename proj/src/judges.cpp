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

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

#include "aqeval/augment.hpp"
#include "aqeval/cache.hpp"
#include "aqeval/digest.hpp"
#include "aqeval/error.hpp"
#include "aqeval/kernels.hpp"
#include "aqeval/parallel.hpp"
#include "aqeval/rng.hpp"

namespace aqeval {

using nlohmann::json;

std::string_view to_string(BackendKind k) {
  switch (k) {
    case BackendKind::kRemote: return "remote";
    case BackendKind::kBaseline: return "baseline";
    case BackendKind::kMock: return "mock";
  }
  return "?";
}

json response_to_json(const JudgeResponse& r) {
  json j = json::object();
  j["record_id"] = r.record_id;
  j["backend"] = r.backend;
  j["raw_text"] = r.raw_text;
  j["extracted_score"] = r.extracted_score ? json(*r.extracted_score) : json(nullptr);
  if (!r.error.empty()) j["error"] = r.error;
  return j;
}

json response_meta_to_json(const JudgeResponse& r) {
  return json{{"record_id", r.record_id},
              {"latency_ms", r.latency_ms},
              {"attempts", r.attempts},
              {"cache_hit", r.cache_hit}};
}

JudgeResponse response_from_json(const json& j) {
  if (!j.is_object()) throw SchemaError("response line is not an object");
  JudgeResponse r;
  try {
    r.record_id = j.at("record_id").get<std::string>();
    r.backend = j.value("backend", std::string());
    r.raw_text = j.value("raw_text", std::string());
    const auto& s = j.at("extracted_score");
    if (!s.is_null()) r.extracted_score = s.get<double>();
    r.error = j.value("error", std::string());
    r.latency_ms = j.value("latency_ms", 0.0);
    r.attempts = j.value("attempts", 0);
    r.cache_hit = j.value("cache_hit", false);
  } catch (const json::exception& e) {
    throw SchemaError(std::string("malformed response: ") + e.what());
  }
  return r;
}

std::vector<JudgeResponse> read_responses(const std::filesystem::path& path) {
  std::istringstream in(read_file(path));
  std::vector<JudgeResponse> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw ParseError(path.string() + ": " + e.what(), line_no);
    }
    try {
      out.push_back(response_from_json(j));
    } catch (const SchemaError& e) {
      throw ParseError(path.string() + ": " + e.what(), line_no);
    }
  }
  return out;
}

namespace {

JudgeResponse scored_response(const RenderedPrompt& prompt, std::string backend, double value) {
  JudgeResponse r;
  r.record_id = prompt.record_id;
  r.backend = std::move(backend);
  r.raw_text = format_score(value);
  r.extracted_score = extract_score(r.raw_text, prompt.scale);
  r.attempts = 1;
  if (!r.extracted_score) r.error = "score " + r.raw_text + " outside the scale";
  return r;
}

}  // namespace

// ---------------------------------------------------------------------------
// Mock

MockJudge::MockJudge(std::unordered_map<std::string, double> labels, Options options)
    : labels_(std::move(labels)), options_(options) {
  if (options_.sigma < 0.0) throw ValidationError("mock sigma must be non-negative");
}

std::string MockJudge::identity() const {
  switch (options_.mode) {
    case MockMode::kEcho: return "mock-echo/1";
    case MockMode::kEchoInverted: return "mock-echo-inverted/1";
    case MockMode::kNoisy:
      return "mock-noisy(sigma=" + format_param(options_.sigma) +
             ",seed=" + std::to_string(options_.seed) + ")/1";
  }
  return "mock/1";
}

JudgeResponse MockJudge::judge(const RenderedPrompt& prompt) {
  const auto it = labels_.find(prompt.record_id);
  if (it == labels_.end()) {
    throw ReferenceError("mock judge has no label for '" + prompt.record_id + "'",
                         {prompt.record_id});
  }
  double value = it->second;
  switch (options_.mode) {
    case MockMode::kEcho:
      break;
    case MockMode::kEchoInverted:
      value = invert_score(value, prompt.scale, InvertMode::kRangePreserving).value;
      break;
    case MockMode::kNoisy:
      if (options_.sigma > 0.0) {
        Rng rng(derive_seed(options_.seed, prompt.record_id));
        value = std::clamp(value + options_.sigma * rng.normal(), prompt.scale.min,
                           prompt.scale.max);
      }
      break;
  }
  return scored_response(prompt, identity(), value);
}

std::unordered_map<std::string, double> labels_from_prompts(
    const std::vector<RenderedPrompt>& prompts) {
  std::unordered_map<std::string, double> labels;
  for (const auto& p : prompts) {
    double v = 0.0;
    const auto& t = p.target_text;
    const auto [end, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || end != t.data() + t.size()) {
      throw ValidationError("prompt '" + p.record_id + "' has a non-numeric target", {p.record_id});
    }
    labels[p.record_id] = v;
  }
  return labels;
}

// ---------------------------------------------------------------------------
// DSP baseline

namespace {

constexpr double kSilenceRms = 1e-3;  // -60 dBFS
constexpr double kClipLevel = 0.99;

}  // namespace

BaselineFeatures compute_baseline_features(const AudioBuffer& audio, bool parallel) {
  if (audio.empty()) throw AudioError("baseline judge: empty audio");
  const std::vector<double> x = audio.downmix();
  BaselineFeatures f;
  f.rms = kernels::detail::rms_of(x);
  if (f.rms > 0.0) {
    const double db = 20.0 * std::log10(f.rms);
    f.level = std::clamp((db + 60.0) / 40.0, 0.0, 1.0);
  }

  std::size_t clipped = 0;
  for (double v : x) clipped += std::abs(v) > kClipLevel ? 1 : 0;
  f.clipping_ratio = static_cast<double>(clipped) / static_cast<double>(x.size());

  const auto rms = parallel ? kernels::omp::frame_rms(x, kBaselineFrame)
                            : kernels::serial::frame_rms(x, kBaselineFrame);
  std::size_t silent = 0;
  for (double r : rms) silent += r < kSilenceRms ? 1 : 0;
  f.silence_ratio = static_cast<double>(silent) / static_cast<double>(rms.size());

  const auto spectra = parallel ? kernels::omp::magnitude_spectra(x, kBaselineFrame, kBaselineHop)
                                : kernels::serial::magnitude_spectra(x, kBaselineFrame, kBaselineHop);
  if (spectra.size() >= 2) {
    double total = 0.0;
    for (std::size_t t = 1; t < spectra.size(); ++t) {
      double diff = 0.0;
      double mass = 0.0;
      for (std::size_t k = 0; k < spectra[t].size(); ++k) {
        diff += std::abs(spectra[t][k] - spectra[t - 1][k]);
        mass += spectra[t][k] + spectra[t - 1][k];
      }
      total += mass > 0.0 ? diff / mass : 0.0;
    }
    f.spectral_flux = total / static_cast<double>(spectra.size() - 1);
  }
  return f;
}

double baseline_quality(const BaselineFeatures& f, const BaselineWeights& w) {
  const double q = (1.0 - f.silence_ratio) *
                   (w.level * f.level + w.clipping * (1.0 - std::sqrt(f.clipping_ratio)) +
                    w.flux * (1.0 - f.spectral_flux));
  return std::clamp(q, 0.0, 1.0);
}

double quality_to_scale(double quality, const CalibrationScale& scale) {
  const double q = std::clamp(quality, 0.0, 1.0);
  if (scale.kind == ScaleKind::kBinary) return q >= 0.5 ? scale.max : scale.min;
  const double v = scale.min + q * scale.range();
  if (scale.kind == ScaleKind::kInteger) return std::round(v);
  return v;
}

JudgeResponse BaselineJudge::judge(const RenderedPrompt& prompt) {
  return judge_audio(prompt, read_wav(prompt.audio().path));
}

JudgeResponse BaselineJudge::judge_audio(const RenderedPrompt& prompt,
                                         const AudioBuffer& audio) const {
  const auto features = compute_baseline_features(audio);
  return scored_response(prompt, identity(),
                         quality_to_scale(baseline_quality(features, weights_), prompt.scale));
}

// ---------------------------------------------------------------------------
// Batch dispatch

json BatchResult::failure_manifest() const {
  json failed = json::array();
  for (const auto& r : responses) {
    if (r.ok()) continue;
    failed.push_back({{"record_id", r.record_id}, {"error", r.error}});
  }
  return json{{"successes", successes}, {"failures", failures}, {"failed", failed}};
}

std::string audio_digest(const AudioRef& audio) {
  std::error_code ec;
  if (std::filesystem::is_regular_file(audio.path, ec)) return sha256_file(audio.path);
  return "path:" + audio.path.generic_string();
}

std::string cache_key(const std::string& backend_identity, const RenderedPrompt& prompt,
                      const std::string& audio_digest) {
  const json parts = json::array(
      {backend_identity, prompt.full_sequence(), scale_to_json(prompt.scale), audio_digest});
  return sha256_hex(parts.dump());
}

BatchResult judge_batch(const std::vector<RenderedPrompt>& prompts, Judge& backend,
                        const BatchOptions& options) {
  if (options.parallelism < 1) throw ValidationError("parallelism must be >= 1");
  BatchResult result;
  ResponseCache cache(options.cache_dir);
  if (!cache.warning().empty()) result.warnings.push_back(cache.warning());

  const std::string identity = backend.identity();
  result.responses.resize(prompts.size());
  std::vector<char> write_failed(prompts.size(), 0);

  bounded_parallel_for(prompts.size(), options.parallelism, [&](std::size_t i) {
    const auto& prompt = prompts[i];
    std::string key;
    if (cache.enabled()) {
      key = cache_key(identity, prompt, audio_digest(prompt.audio()));
      // Content-addressed: an identical request made for another record
      // is served from the same entry.
      if (auto hit = cache.get(key)) {
        hit->record_id = prompt.record_id;
        hit->cache_hit = true;
        hit->attempts = 0;
        hit->latency_ms = 0.0;
        result.responses[i] = std::move(*hit);
        return;
      }
    }
    const auto start = std::chrono::steady_clock::now();
    JudgeResponse r;
    try {
      r = backend.judge(prompt);
    } catch (const AuthError&) {
      throw;
    } catch (const ValidationError&) {
      throw;
    } catch (const std::exception& e) {
      r.record_id = prompt.record_id;
      r.error = e.what();
      r.attempts = std::max(r.attempts, 1);
    }
    r.record_id = prompt.record_id;
    r.backend = identity;
    r.latency_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    // Transport failures are retried next run; answered prompts are cached
    // whether or not a score could be extracted.
    if (cache.enabled() && (r.ok() || !r.raw_text.empty())) {
      if (!cache.put(key, r)) write_failed[i] = 1;
    }
    result.responses[i] = std::move(r);
  });

  for (std::size_t i = 0; i < prompts.size(); ++i) {
    const auto& r = result.responses[i];
    if (r.ok()) {
      ++result.successes;
    } else {
      ++result.failures;
    }
    if (r.cache_hit) ++result.cache_hits;
    if (write_failed[i]) result.warnings.push_back("cache write failed for " + r.record_id);
  }
  return result;
}

void write_responses(const BatchResult& result, const std::filesystem::path& path) {
  std::string body;
  std::string meta;
  for (const auto& r : result.responses) {
    body += response_to_json(r).dump() + "\n";
    meta += response_meta_to_json(r).dump() + "\n";
  }
  write_file_atomic(path, body);
  auto meta_path = path;
  meta_path.replace_extension(".meta.jsonl");
  write_file_atomic(meta_path, meta);
  auto failures_path = path;
  failures_path.replace_extension(".failures.json");
  write_file_atomic(failures_path, result.failure_manifest().dump(2) + "\n");
}

}  // namespace aqeval
