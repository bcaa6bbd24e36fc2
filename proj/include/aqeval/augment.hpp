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

// Score calibration transforms and description rewriting for train-split
// records. Every transform appends an AugmentationTag that is enough to
// replay it (see replay_provenance).

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "aqeval/corpus.hpp"
#include "aqeval/rewriter.hpp"

namespace aqeval {

enum class RescaleMode { kProportional, kAffine };
enum class InvertMode { kRangePreserving, kLiteral };
enum class Direction { kNormal, kInverted };

std::string_view to_string(RescaleMode m);
std::string_view to_string(InvertMode m);
std::string_view to_string(Direction d);
RescaleMode parse_rescale_mode(std::string_view s);
InvertMode parse_invert_mode(std::string_view s);
Direction parse_direction(std::string_view s);

// Token that marks the audio position inside an expanded description.
inline constexpr std::string_view kAudioPlaceholder = "<audio>";

struct Rescaled {
  double value = 0.0;
  bool clamped = false;
};

struct Inverted {
  double value = 0.0;
  // Literal inversion on a scale whose min is not 0 may leave the scale.
  bool warning = false;
};

// proportional: score * (to.max / from.max)
// affine:       to.min + (score - from.min) * (to.range / from.range)
// The result is clamped into `to`; Rescaled::clamped reports it.
// Throws ValidationError if score lies outside `from`.
Rescaled rescale_score(double score, const CalibrationScale& from, const CalibrationScale& to,
                       RescaleMode mode = RescaleMode::kProportional);

// range_preserving: max + min - score
// literal:          max - score
Inverted invert_score(double score, const CalibrationScale& scale,
                      InvertMode mode = InvertMode::kRangePreserving);

// 1 iff score >= threshold. threshold must lie strictly inside the scale.
int binarize_score(double score, const CalibrationScale& scale, double threshold);

// Record-level transforms. Each requires a train record, rewrites score and
// scale, and appends its tag.
EvalRecord rescale_record(const EvalRecord& record, const CalibrationScale& to,
                          RescaleMode mode = RescaleMode::kProportional);
EvalRecord invert_record(const EvalRecord& record,
                         InvertMode mode = InvertMode::kRangePreserving);
EvalRecord binarize_record(const EvalRecord& record, double threshold);

class PromptTemplate {
 public:
  // Throws TemplateError unless body holds {audio} exactly once.
  PromptTemplate(std::string template_id, std::string body,
                 Direction direction = Direction::kNormal,
                 CalibrationScale calibration = CalibrationScale{},
                 std::optional<double> threshold = std::nullopt);

  // Template file: "key: value" front-matter lines (id, direction,
  // calibration = "min,max[,kind]", threshold), a line holding only "---",
  // then the body. Without an id line the file stem is used.
  static PromptTemplate parse(std::string_view text, std::string default_id = {});
  static PromptTemplate load(const std::filesystem::path& path);

  const std::string& id() const { return id_; }
  const std::string& body() const { return body_; }
  Direction direction() const { return direction_; }
  const CalibrationScale& calibration() const { return calibration_; }
  // Binary templates binarize at this fraction of the source range.
  std::optional<double> threshold() const { return threshold_; }

  // Substitutes {description}, {min}, {max} and {audio}. Any other
  // placeholder raises TemplateError.
  std::string expand(const std::string& description, const CalibrationScale& target) const;

 private:
  std::string id_;
  std::string body_;
  Direction direction_;
  CalibrationScale calibration_;
  std::optional<double> threshold_;
};

std::vector<PromptTemplate> load_templates(const std::filesystem::path& dir);

// Expands the template into the description and composes invert/rescale (or
// binarize for binary calibrations) on the score. `target` overrides the
// template's own calibration. Throws IsolationError for non-train records.
EvalRecord apply_template(const EvalRecord& record, const PromptTemplate& tmpl,
                          const std::optional<CalibrationScale>& target = std::nullopt,
                          RescaleMode mode = RescaleMode::kProportional);

// Never throws for rewriter failures: the record comes back unchanged with a
// paraphrase tag whose status param is "skipped".
EvalRecord paraphrase_description(const EvalRecord& record, Rewriter& rewriter,
                                  RewriteStyle style);

// Re-applies the tag sequence to a raw record.
EvalRecord replay_provenance(const EvalRecord& raw, std::span<const AugmentationTag> tags);

struct AugmentationPlan {
  std::vector<PromptTemplate> templates;
  // Target calibrations crossed with templates. Empty means each template's
  // own calibration.
  std::vector<CalibrationScale> calibrations;
  bool include_inverted = true;
  RescaleMode rescale_mode = RescaleMode::kProportional;
  // 0 selects every template.
  std::size_t templates_per_record = 0;
  std::vector<RewriteStyle> paraphrase_styles;
  std::size_t paraphrases_per_record = 0;
  std::size_t rewrite_concurrency = 4;
};

// Output keeps every input record in order, each train record followed by its
// augmented copies. Validation and test records pass through untouched.
// Deterministic in (records, plan, seed) regardless of rewrite concurrency.
std::vector<EvalRecord> augment_corpus(std::span<const EvalRecord> records,
                                       const AugmentationPlan& plan, std::uint64_t seed,
                                       Rewriter* rewriter = nullptr);

// Shortest round-trip decimal form, used for tag params.
std::string format_param(double v);
double parse_param(const std::string& s);

}  // namespace aqeval
