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

// TOML configuration: backend files for `judge`/`robustness`, augmentation
// plans, and the run file consumed by `run`. Relative paths resolve against
// the directory of the file that names them.

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "aqeval/augment.hpp"
#include "aqeval/distort.hpp"
#include "aqeval/judges.hpp"
#include "aqeval/metrics.hpp"
#include "aqeval/rewriter.hpp"

namespace aqeval {

struct BackendConfig {
  BackendKind kind = BackendKind::kMock;
  MockJudge::Options mock;
  std::shared_ptr<RemoteEndpoint> remote;  // kRemote only
  std::size_t parallelism = 4;
};

// Accepts either a [backend] table or the keys at top level:
//   kind = "mock" | "baseline" | "remote"
//   parallelism = 4
//   mode = "echo" | "echo_inverted" | "noisy"; sigma; seed        (mock)
//   identity, endpoint_url, auth_env_var, auth_header, auth_prefix,
//   request_template or request_template_file, response_score_path,
//   free_text, timeout_ms, audio_transport = "base64" | "url",
//   audio_url_prefix, max_audio_bytes, [retry] max / base_delay_ms  (remote)
BackendConfig parse_backend(std::string_view toml_text, const std::filesystem::path& base_dir,
                            const std::string& source = "<backend>");
BackendConfig load_backend(const std::filesystem::path& path);

// Mock backends need id -> label; the other kinds ignore `labels`.
std::unique_ptr<Judge> make_judge(const BackendConfig& config,
                                  std::unordered_map<std::string, double> labels = {});

struct RewriterConfig {
  std::string kind = "rule-based";  // or "remote"
  std::shared_ptr<RemoteEndpoint> remote;
};

std::unique_ptr<Rewriter> make_rewriter(const RewriterConfig& config);

// Keys: seed, templates (directory), calibrations = ["min,max[,kind]", ...],
// include_inverted, rescale_mode, templates_per_record, paraphrase_styles,
// paraphrases_per_record, rewrite_concurrency, [rewriter].
struct PlanConfig {
  AugmentationPlan plan;
  RewriterConfig rewriter;
  std::optional<std::uint64_t> seed;
};
PlanConfig parse_plan(std::string_view toml_text, const std::filesystem::path& base_dir,
                      const std::string& source = "<plan>");
PlanConfig load_plan(const std::filesystem::path& path);

CalibrationScale parse_calibration(std::string_view spec);

struct RunConfig {
  std::filesystem::path source;  // file the config was read from
  std::string digest;            // sha256 of its bytes
  // sha256 per top-level table, folding in referenced template files. Used
  // to decide whether a stage's parameters changed.
  std::map<std::string, std::string> section_digests;
  std::uint64_t seed = 0;
  std::filesystem::path out_dir;

  std::filesystem::path tasks;
  std::filesystem::path records;
  bool check_audio = true;

  bool augment = false;
  PlanConfig plan;

  bool synth = false;
  SynthOptions synth_options;

  bool render = true;
  std::optional<Split> render_split = Split::kTest;  // nullopt renders every split
  Markers markers;

  bool judge = true;
  std::optional<BackendConfig> backend;
  std::filesystem::path cache_dir;  // empty disables the cache

  bool score = true;
  ReportOptions report;

  bool robustness = false;
  std::filesystem::path variants_dir;
};

// Schema errors surface before any stage runs: the judge and robustness
// stages require a backend section.
RunConfig parse_run_config(std::string_view toml_text, const std::filesystem::path& base_dir,
                           const std::string& source = "<config>");
RunConfig load_run_config(const std::filesystem::path& path);

// Sets the run seed and the per-stage seeds derived from it.
void set_seed(RunConfig& config, std::uint64_t seed);

}  // namespace aqeval
