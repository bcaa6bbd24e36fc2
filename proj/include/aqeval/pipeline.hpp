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

// End-to-end run: ingest -> augment -> synth -> render -> judge -> score ->
// robustness. Each stage writes plain files under out_dir/<stage>/ and
// records its input digest in out_dir/.stages/, so an unchanged stage is
// skipped on rerun. The manifest is written last, to out_dir/manifest.json.

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "aqeval/config.hpp"
#include "aqeval/robustness.hpp"
#include "json.hpp"

namespace aqeval {

enum class StageStatus { kCompleted, kSkipped, kFailed, kBlocked, kDisabled };
std::string_view to_string(StageStatus s);

struct StageOutcome {
  std::string name;
  StageStatus status = StageStatus::kDisabled;
  std::string message;
  bool validation_failure = false;  // failed on bad input rather than a runtime fault
  std::size_t failures = 0;         // per-item failures inside a completed stage
  std::vector<std::string> outputs;  // relative to out_dir
};

struct RunManifest {
  std::string run_id;
  std::string started_at;
  std::string finished_at;
  std::uint64_t seed = 0;
  std::string config_digest;
  std::map<std::string, std::string> input_digests;
  std::string backend_identity;
  std::vector<StageOutcome> stages;
  std::map<std::string, std::string> output_digests;  // path relative to out_dir

  const StageOutcome* stage(std::string_view name) const;
  // 0 success, 1 validation error, 2 stage failure, 3 partial completion
  // (every stage ran but some items failed).
  int exit_code() const;
  nlohmann::json to_json() const;
};

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitStageFailure = 2;
inline constexpr int kExitPartial = 3;

RunManifest run_pipeline(const RunConfig& config);

// Builds a backend for robustness sweeps. Mock backends follow the rubric:
// inverted variants get inverted labels and noisy mocks a per-variant seed.
JudgeFactory variant_judge_factory(const BackendConfig& backend,
                                   const std::vector<EvalRecord>& records);

}  // namespace aqeval
