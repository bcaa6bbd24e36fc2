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

// Prompt-robustness sweeps: judge the same records under several phrasings
// of the task description (and a logically inverted one) and compare the
// resulting rankings.

#include <cstddef>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "aqeval/corpus.hpp"
#include "aqeval/judges.hpp"

namespace aqeval {

enum class VariantStyle { kOriginal, kShort, kLong, kRestructured, kDetailed, kInverted };
std::string_view to_string(VariantStyle s);
VariantStyle parse_variant_style(std::string_view s);

struct Variant {
  VariantStyle style = VariantStyle::kOriginal;
  std::string description;
  // Scores under an inverted rubric run the other way and are flipped back
  // before comparison.
  bool inverted() const { return style == VariantStyle::kInverted; }
};

struct VariantSet {
  std::string task_id;
  std::vector<Variant> variants;  // file order

  const Variant& original() const;
};

// TOML:
//   task_id = "..."
//   [[variant]]
//   style = "original"
//   description = "..."
// Throws ValidationError on a duplicate style or a missing original.
VariantSet parse_variants(std::string_view toml_text, const std::string& source = "<text>");
VariantSet load_variants(const std::filesystem::path& path);
// Every *.toml in the directory, sorted by file name.
std::vector<VariantSet> load_variant_dir(const std::filesystem::path& dir);

struct VariantScores {
  Variant variant;
  std::string backend;
  std::vector<std::optional<double>> raw;       // as extracted
  std::vector<std::optional<double>> oriented;  // inverted variants flipped back
  std::size_t failures = 0;
};

struct SweepResult {
  std::string task_id;
  std::vector<std::string> record_ids;
  std::vector<double> human;
  std::vector<VariantScores> variants;  // same order as the VariantSet
};

// Builds the judge used for one variant; `index` is the variant's position.
using JudgeFactory = std::function<std::unique_ptr<Judge>(const Variant&, std::size_t index)>;

// Re-renders every record with each variant's description and judges it.
// Throws ValidationError when a record belongs to another task.
SweepResult run_sweep(std::span<const EvalRecord> records, const VariantSet& variants,
                      const JudgeFactory& make_judge, const BatchOptions& options);

struct StabilityReport {
  std::string task_id;
  std::vector<VariantStyle> styles;
  std::vector<std::optional<double>> human_srcc;
  // Pairwise SRCC of oriented scores. Symmetric with an exact unit diagonal;
  // a cell with fewer than two shared scored records is undefined.
  std::vector<std::vector<std::optional<double>>> matrix;
  std::vector<std::vector<std::size_t>> pair_counts;
  // Mean off-diagonal SRCC over pairs of non-inverted variants.
  std::optional<double> consistency_index;
  // SRCC of the original against the inverted variant, before and after the
  // orientation flip. Absent without an inverted variant.
  std::optional<double> inverted_check_raw;
  std::optional<double> inverted_check_oriented;
  std::size_t failures = 0;
};

// Throws ValidationError for fewer than two variants.
StabilityReport stability_report(const SweepResult& sweep);

std::string stability_csv(std::span<const StabilityReport> reports);
std::string stability_markdown(std::span<const StabilityReport> reports);

}  // namespace aqeval
