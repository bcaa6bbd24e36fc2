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

// Universal record format: one (task description, audio, score) example per
// record, plus split and provenance. Manifests are a tasks.json array and a
// records.jsonl file with one record per line.

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace aqeval {

enum class ScaleKind { kContinuous, kInteger, kBinary };
enum class Split { kTrain, kValidation, kTest };
enum class LabelKind { kHuman, kPseudo, kProxy };

std::string_view to_string(ScaleKind k);
std::string_view to_string(Split s);
std::string_view to_string(LabelKind k);
ScaleKind parse_scale_kind(std::string_view s);
Split parse_split(std::string_view s);
LabelKind parse_label_kind(std::string_view s);

// Integer-kind scores must be whole numbers within this tolerance.
inline constexpr double kWholeNumberTolerance = 1e-9;

struct CalibrationScale {
  double min = 1.0;
  double max = 5.0;
  ScaleKind kind = ScaleKind::kContinuous;

  // Checked constructor; throws ValidationError when min >= max or a binary
  // scale is not [0, 1].
  static CalibrationScale make(double min, double max,
                               ScaleKind kind = ScaleKind::kContinuous);
  static CalibrationScale binary() { return make(0.0, 1.0, ScaleKind::kBinary); }

  bool contains(double score) const { return score >= min && score <= max; }
  // Range check plus the whole-number rule for integer and binary kinds.
  bool admits(double score) const;
  double range() const { return max - min; }

  friend bool operator==(const CalibrationScale&, const CalibrationScale&) = default;
};

struct TaskDefinition {
  std::string task_id;
  std::string name;
  std::string description;
  CalibrationScale scale;
  bool higher_is_better = true;

  friend bool operator==(const TaskDefinition&, const TaskDefinition&) = default;
};

struct AudioRef {
  std::filesystem::path path;
  int sample_rate = 0;  // 0 until probed
  int channels = 0;     // 0 until probed
  std::optional<double> duration;

  bool probed() const { return duration.has_value(); }
  friend bool operator==(const AudioRef&, const AudioRef&) = default;
};

enum class TagKind { kRescale, kInvert, kBinarize, kTemplate, kParaphrase };
std::string_view to_string(TagKind k);
TagKind parse_tag_kind(std::string_view s);

// One augmentation step. The params map carries everything needed to replay
// the step on the record it was applied to.
struct AugmentationTag {
  TagKind kind = TagKind::kRescale;
  std::map<std::string, std::string> params;

  std::string param(const std::string& key) const;
  bool has(const std::string& key) const { return params.count(key) != 0; }
  friend bool operator==(const AugmentationTag&, const AugmentationTag&) = default;
};

struct EvalRecord {
  std::string id;
  // Id of the manifest line this record descends from; equals id for raw
  // records.
  std::string origin_id;
  std::string source;
  // Per-record copy of the task. Augmentation may rewrite description and
  // scale; task_id never changes.
  TaskDefinition task;
  AudioRef audio;
  std::optional<std::string> additional_instruction;
  double score = 0.0;
  Split split = Split::kTrain;
  std::vector<AugmentationTag> provenance;
  LabelKind label_kind = LabelKind::kHuman;

  const CalibrationScale& scale() const { return task.scale; }
  friend bool operator==(const EvalRecord&, const EvalRecord&) = default;
};

class TaskRegistry {
 public:
  TaskRegistry() = default;
  explicit TaskRegistry(std::vector<TaskDefinition> tasks);

  // Throws ValidationError on a duplicate task_id or empty description.
  void add(TaskDefinition task);
  const TaskDefinition* find(std::string_view task_id) const;
  const TaskDefinition& at(std::string_view task_id) const;
  const std::vector<TaskDefinition>& tasks() const { return tasks_; }
  bool empty() const { return tasks_.empty(); }

 private:
  std::vector<TaskDefinition> tasks_;
  std::map<std::string, std::size_t, std::less<>> index_;
};

TaskRegistry load_tasks(const std::filesystem::path& path);
TaskRegistry parse_tasks(const nlohmann::json& doc);
nlohmann::json tasks_to_json(const TaskRegistry& tasks);
void write_tasks(const TaskRegistry& tasks, const std::filesystem::path& path);

// Validates every EvalRecord invariant that can be checked without touching
// audio. Throws ValidationError naming the record id.
void validate_record(const EvalRecord& record);

// Parses records.jsonl. Relative audio paths resolve against the manifest's
// directory. Errors: ParseError (with line number) for malformed lines,
// ValidationError for invariant violations and duplicate ids, ReferenceError
// for unknown task ids.
std::vector<EvalRecord> parse_manifest(const std::filesystem::path& path,
                                       const TaskRegistry& tasks);
std::vector<EvalRecord> parse_manifest_text(std::string_view text,
                                            const TaskRegistry& tasks,
                                            const std::filesystem::path& base_dir = {});

// Single record codec. Audio paths are written relative to base_dir when
// given. Description and scale are written only when they differ from the
// registered task.
nlohmann::json record_to_json(const EvalRecord& record, const TaskRegistry* tasks = nullptr,
                              const std::filesystem::path& base_dir = {});
EvalRecord record_from_json(const nlohmann::json& j, const TaskRegistry& tasks,
                            const std::filesystem::path& base_dir = {});

std::string serialize_manifest(std::span<const EvalRecord> records, const TaskRegistry& tasks,
                               const std::filesystem::path& base_dir = {});
void write_manifest(std::span<const EvalRecord> records, const TaskRegistry& tasks,
                    const std::filesystem::path& path);

// Reads the WAV header and fills sample rate, channels and duration.
// Throws AudioError for a missing file, bad magic or truncated data.
AudioRef validate_audio(const EvalRecord& record);

std::vector<EvalRecord> split_filter(std::span<const EvalRecord> records, Split split);

nlohmann::json scale_to_json(const CalibrationScale& s);
CalibrationScale scale_from_json(const nlohmann::json& j);
nlohmann::json tag_to_json(const AugmentationTag& t);
AugmentationTag tag_from_json(const nlohmann::json& j);

}  // namespace aqeval
