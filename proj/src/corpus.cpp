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

#include "aqeval/corpus.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "aqeval/audio.hpp"
#include "aqeval/digest.hpp"
#include "aqeval/error.hpp"

namespace aqeval {

using nlohmann::json;

std::string_view to_string(ScaleKind k) {
  switch (k) {
    case ScaleKind::kContinuous: return "continuous";
    case ScaleKind::kInteger: return "integer";
    case ScaleKind::kBinary: return "binary";
  }
  return "?";
}

std::string_view to_string(Split s) {
  switch (s) {
    case Split::kTrain: return "train";
    case Split::kValidation: return "validation";
    case Split::kTest: return "test";
  }
  return "?";
}

std::string_view to_string(LabelKind k) {
  switch (k) {
    case LabelKind::kHuman: return "human";
    case LabelKind::kPseudo: return "pseudo";
    case LabelKind::kProxy: return "proxy";
  }
  return "?";
}

std::string_view to_string(TagKind k) {
  switch (k) {
    case TagKind::kRescale: return "rescale";
    case TagKind::kInvert: return "invert";
    case TagKind::kBinarize: return "binarize";
    case TagKind::kTemplate: return "template";
    case TagKind::kParaphrase: return "paraphrase";
  }
  return "?";
}

ScaleKind parse_scale_kind(std::string_view s) {
  if (s == "continuous") return ScaleKind::kContinuous;
  if (s == "integer") return ScaleKind::kInteger;
  if (s == "binary") return ScaleKind::kBinary;
  throw ValidationError("unknown scale kind '" + std::string(s) + "'");
}

Split parse_split(std::string_view s) {
  if (s == "train") return Split::kTrain;
  if (s == "validation") return Split::kValidation;
  if (s == "test") return Split::kTest;
  throw ValidationError("unknown split '" + std::string(s) + "'");
}

LabelKind parse_label_kind(std::string_view s) {
  if (s == "human") return LabelKind::kHuman;
  if (s == "pseudo") return LabelKind::kPseudo;
  if (s == "proxy") return LabelKind::kProxy;
  throw ValidationError("unknown label_kind '" + std::string(s) + "'");
}

TagKind parse_tag_kind(std::string_view s) {
  if (s == "rescale") return TagKind::kRescale;
  if (s == "invert") return TagKind::kInvert;
  if (s == "binarize") return TagKind::kBinarize;
  if (s == "template") return TagKind::kTemplate;
  if (s == "paraphrase") return TagKind::kParaphrase;
  throw ValidationError("unknown augmentation tag '" + std::string(s) + "'");
}

CalibrationScale CalibrationScale::make(double min, double max, ScaleKind kind) {
  if (!std::isfinite(min) || !std::isfinite(max) || !(min < max)) {
    throw ValidationError("calibration scale needs finite min < max");
  }
  if (kind == ScaleKind::kBinary && (min != 0.0 || max != 1.0)) {
    throw ValidationError("binary scale must be [0, 1]");
  }
  return CalibrationScale{min, max, kind};
}

bool CalibrationScale::admits(double score) const {
  if (!std::isfinite(score) || !contains(score)) return false;
  if (kind == ScaleKind::kContinuous) return true;
  return std::abs(score - std::round(score)) <= kWholeNumberTolerance;
}

std::string AugmentationTag::param(const std::string& key) const {
  auto it = params.find(key);
  if (it == params.end()) {
    throw ValidationError("augmentation tag '" + std::string(to_string(kind)) +
                          "' missing param '" + key + "'");
  }
  return it->second;
}

TaskRegistry::TaskRegistry(std::vector<TaskDefinition> tasks) {
  for (auto& t : tasks) add(std::move(t));
}

void TaskRegistry::add(TaskDefinition task) {
  if (task.task_id.empty()) throw ValidationError("task with empty task_id");
  if (task.description.empty()) {
    throw ValidationError("task '" + task.task_id + "' has an empty description",
                          {task.task_id});
  }
  if (index_.count(task.task_id)) {
    throw ValidationError("duplicate task_id '" + task.task_id + "'", {task.task_id});
  }
  index_.emplace(task.task_id, tasks_.size());
  tasks_.push_back(std::move(task));
}

const TaskDefinition* TaskRegistry::find(std::string_view task_id) const {
  auto it = index_.find(task_id);
  return it == index_.end() ? nullptr : &tasks_[it->second];
}

const TaskDefinition& TaskRegistry::at(std::string_view task_id) const {
  if (const auto* t = find(task_id)) return *t;
  throw ReferenceError("unknown task_id '" + std::string(task_id) + "'",
                       {std::string(task_id)});
}

json scale_to_json(const CalibrationScale& s) {
  return json{{"min", s.min}, {"max", s.max}, {"kind", std::string(to_string(s.kind))}};
}

CalibrationScale scale_from_json(const json& j) {
  if (!j.is_object()) throw ValidationError("scale must be an object");
  const auto kind = j.contains("kind") ? parse_scale_kind(j.at("kind").get<std::string>())
                                       : ScaleKind::kContinuous;
  return CalibrationScale::make(j.at("min").get<double>(), j.at("max").get<double>(), kind);
}

json tag_to_json(const AugmentationTag& t) {
  return json{{"kind", std::string(to_string(t.kind))}, {"params", t.params}};
}

AugmentationTag tag_from_json(const json& j) {
  AugmentationTag t;
  t.kind = parse_tag_kind(j.at("kind").get<std::string>());
  if (j.contains("params")) {
    t.params = j.at("params").get<std::map<std::string, std::string>>();
  }
  return t;
}

TaskRegistry parse_tasks(const json& doc) {
  if (!doc.is_array()) throw ParseError("tasks file must hold a JSON array");
  TaskRegistry reg;
  for (const auto& j : doc) {
    try {
      TaskDefinition t;
      t.task_id = j.at("task_id").get<std::string>();
      t.name = j.value("name", t.task_id);
      t.description = j.at("description").get<std::string>();
      t.scale = scale_from_json(j.at("scale"));
      t.higher_is_better = j.value("higher_is_better", true);
      reg.add(std::move(t));
    } catch (const json::exception& e) {
      throw ParseError(std::string("bad task entry: ") + e.what());
    }
  }
  return reg;
}

TaskRegistry load_tasks(const std::filesystem::path& path) {
  json doc;
  try {
    doc = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  return parse_tasks(doc);
}

json tasks_to_json(const TaskRegistry& tasks) {
  json arr = json::array();
  for (const auto& t : tasks.tasks()) {
    arr.push_back(json{{"task_id", t.task_id},
                       {"name", t.name},
                       {"description", t.description},
                       {"scale", scale_to_json(t.scale)},
                       {"higher_is_better", t.higher_is_better}});
  }
  return arr;
}

void write_tasks(const TaskRegistry& tasks, const std::filesystem::path& path) {
  write_file_atomic(path, tasks_to_json(tasks).dump(2) + "\n");
}

void validate_record(const EvalRecord& r) {
  if (r.id.empty()) throw ValidationError("record with empty id");
  if (r.task.description.empty()) {
    throw ValidationError("record '" + r.id + "' has an empty task description", {r.id});
  }
  if (!r.scale().admits(r.score)) {
    std::ostringstream msg;
    msg << "record '" << r.id << "': score " << r.score << " outside scale [" << r.scale().min
        << ", " << r.scale().max << "] (" << to_string(r.scale().kind) << ")";
    throw ValidationError(msg.str(), {r.id});
  }
  if (r.split == Split::kTest && !r.provenance.empty()) {
    throw ValidationError("record '" + r.id + "': test records must not carry augmentation",
                          {r.id});
  }
}

EvalRecord record_from_json(const json& j, const TaskRegistry& tasks,
                            const std::filesystem::path& base_dir) {
  if (!j.is_object()) throw ParseError("record must be a JSON object");
  EvalRecord r;
  try {
    r.id = j.at("id").get<std::string>();
    r.origin_id = j.value("origin_id", r.id);
    r.source = j.at("source").get<std::string>();
    const auto task_id = j.at("task_id").get<std::string>();
    r.task = tasks.at(task_id);
    if (j.contains("description")) r.task.description = j.at("description").get<std::string>();
    if (j.contains("scale")) r.task.scale = scale_from_json(j.at("scale"));
    if (j.contains("higher_is_better")) {
      r.task.higher_is_better = j.at("higher_is_better").get<bool>();
    }
    std::filesystem::path audio = j.at("audio_path").get<std::string>();
    if (audio.is_relative() && !base_dir.empty()) audio = base_dir / audio;
    r.audio.path = audio.lexically_normal();
    if (j.contains("additional_instruction") && !j.at("additional_instruction").is_null()) {
      r.additional_instruction = j.at("additional_instruction").get<std::string>();
    }
    r.score = j.at("score").get<double>();
    r.split = parse_split(j.at("split").get<std::string>());
    r.label_kind = parse_label_kind(j.at("label_kind").get<std::string>());
    if (j.contains("provenance")) {
      for (const auto& t : j.at("provenance")) r.provenance.push_back(tag_from_json(t));
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("bad record: ") + e.what());
  }
  return r;
}

json record_to_json(const EvalRecord& r, const TaskRegistry* tasks,
                    const std::filesystem::path& base_dir) {
  json j;
  j["id"] = r.id;
  if (r.origin_id != r.id) j["origin_id"] = r.origin_id;
  j["source"] = r.source;
  j["task_id"] = r.task.task_id;
  const TaskDefinition* registered = tasks ? tasks->find(r.task.task_id) : nullptr;
  if (!registered || registered->description != r.task.description) {
    j["description"] = r.task.description;
  }
  if (!registered || !(registered->scale == r.task.scale)) j["scale"] = scale_to_json(r.scale());
  if (!registered || registered->higher_is_better != r.task.higher_is_better) {
    j["higher_is_better"] = r.task.higher_is_better;
  }
  auto audio = r.audio.path;
  if (!base_dir.empty()) {
    audio = std::filesystem::absolute(audio).lexically_normal().lexically_proximate(
        std::filesystem::absolute(base_dir).lexically_normal());
  }
  j["audio_path"] = audio.generic_string();
  if (r.additional_instruction) j["additional_instruction"] = *r.additional_instruction;
  j["score"] = r.score;
  j["split"] = std::string(to_string(r.split));
  j["label_kind"] = std::string(to_string(r.label_kind));
  json prov = json::array();
  for (const auto& t : r.provenance) prov.push_back(tag_to_json(t));
  j["provenance"] = std::move(prov);
  return j;
}

std::vector<EvalRecord> parse_manifest_text(std::string_view text, const TaskRegistry& tasks,
                                            const std::filesystem::path& base_dir) {
  std::vector<EvalRecord> out;
  std::set<std::string, std::less<>> ids;
  std::map<std::string, LabelKind, std::less<>> source_kind;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) {
      if (nl == text.size()) break;
      continue;
    }
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(std::string("malformed JSON: ") + e.what(), line_no);
    }
    EvalRecord r;
    try {
      r = record_from_json(j, tasks, base_dir);
    } catch (const ReferenceError& e) {
      throw ReferenceError(std::string(e.what()) + " (line " + std::to_string(line_no) + ")",
                           e.ids());
    } catch (const ParseError& e) {
      throw ParseError(e.what(), line_no);
    }
    validate_record(r);
    if (!ids.insert(r.id).second) {
      throw ValidationError("duplicate record id '" + r.id + "' (line " +
                                std::to_string(line_no) + ")",
                            {r.id});
    }
    // A source belongs to exactly one label category.
    auto [it, inserted] = source_kind.emplace(r.source, r.label_kind);
    if (!inserted && it->second != r.label_kind) {
      throw ValidationError("record '" + r.id + "': source '" + r.source + "' declared as " +
                                std::string(to_string(it->second)) + " but labelled " +
                                std::string(to_string(r.label_kind)),
                            {r.id});
    }
    out.push_back(std::move(r));
    if (nl == text.size()) break;
  }
  return out;
}

std::vector<EvalRecord> parse_manifest(const std::filesystem::path& path,
                                       const TaskRegistry& tasks) {
  return parse_manifest_text(read_file(path), tasks, path.parent_path());
}

std::string serialize_manifest(std::span<const EvalRecord> records, const TaskRegistry& tasks,
                               const std::filesystem::path& base_dir) {
  std::string out;
  for (const auto& r : records) {
    out += record_to_json(r, &tasks, base_dir).dump();
    out += '\n';
  }
  return out;
}

void write_manifest(std::span<const EvalRecord> records, const TaskRegistry& tasks,
                    const std::filesystem::path& path) {
  write_file_atomic(path, serialize_manifest(records, tasks, path.parent_path()));
}

AudioRef validate_audio(const EvalRecord& record) {
  const WavInfo info = probe_wav(record.audio.path);
  AudioRef ref = record.audio;
  ref.sample_rate = info.sample_rate;
  ref.channels = info.channels;
  ref.duration = info.duration();
  return ref;
}

std::vector<EvalRecord> split_filter(std::span<const EvalRecord> records, Split split) {
  std::vector<EvalRecord> out;
  for (const auto& r : records) {
    if (r.split == split) out.push_back(r);
  }
  return out;
}

}  // namespace aqeval
