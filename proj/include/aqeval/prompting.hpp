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

// Chat-template rendering. The full sequence is
//
//   user_marker + T1 + audio_marker + T2 + model_marker + target_text
//
// where T1 is the task description (up to the audio placeholder when the
// description carries one) and T2 is the rest of the description, the
// additional instruction and the elicitation suffix. target_span() gives the
// byte range of target_text so a trainer can restrict its loss to it.

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "aqeval/corpus.hpp"
#include "json.hpp"

namespace aqeval {

inline constexpr std::string_view kDefaultElicitation =
    "Now, please predict the score of this waveform.";

struct Markers {
  std::string user = "«USER»";
  std::string model = "«MODEL»";
  std::string audio = "<audio>";
  std::string elicitation = std::string(kDefaultElicitation);

  friend bool operator==(const Markers&, const Markers&) = default;
};

enum class SegmentKind { kText, kAudio };

struct Segment {
  SegmentKind kind = SegmentKind::kText;
  std::string text;  // kText only
  AudioRef audio;    // kAudio only

  friend bool operator==(const Segment&, const Segment&) = default;
};

struct Span {
  std::size_t start = 0;
  std::size_t end = 0;
  std::size_t length() const { return end - start; }
  friend bool operator==(const Span&, const Span&) = default;
};

struct RenderedPrompt {
  std::string record_id;
  CalibrationScale scale;
  // [text: user marker + T1] [audio] [text: T2]
  std::vector<Segment> segments;
  std::string target_text;
  std::string elicitation_suffix;
  Markers markers;

  const AudioRef& audio() const;
  // Everything before target_text: user turn plus model marker.
  std::string context_text() const;
  std::string full_sequence() const;

  friend bool operator==(const RenderedPrompt&, const RenderedPrompt&) = default;
};

RenderedPrompt render(const EvalRecord& record, const Markers& markers = {});

// Byte offsets of target_text inside full_sequence().
Span target_span(const RenderedPrompt& prompt);

// Exactly two fractional digits, half-to-even on the shortest decimal form
// of the value, no exponent and no sign on zero. Throws std::domain_error for
// non-finite input.
std::string format_score(double score);

// Extraction grammar, first matching rule wins:
//   1. last number following a "score" or "rating" keyword
//   2. "x/y" with y equal to scale.max, yielding x
//   3. first standalone number inside the scale
// A candidate outside the scale is a failure, never clamped.
std::optional<double> extract_score(std::string_view text, const CalibrationScale& scale);

// prompts.jsonl line: {id, segments, target_text, target_span, scale,
// elicitation_suffix, markers}.
nlohmann::json prompt_to_json(const RenderedPrompt& prompt,
                              const std::filesystem::path& base_dir = {});
RenderedPrompt prompt_from_json(const nlohmann::json& j,
                                const std::filesystem::path& base_dir = {});
std::vector<RenderedPrompt> read_prompts(const std::filesystem::path& path);
void write_prompts(const std::vector<RenderedPrompt>& prompts, const std::filesystem::path& path);

}  // namespace aqeval
