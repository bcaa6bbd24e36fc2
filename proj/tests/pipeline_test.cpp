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

#include "aqeval/pipeline.hpp"

#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>

#include "aqeval/digest.hpp"
#include "aqeval/error.hpp"
#include "test_util.hpp"

using namespace aqeval;
using aqeval::testing::TempDir;
using aqeval::testing::mini_run_config;
using aqeval::testing::write_text;
namespace fs = std::filesystem;

namespace {

RunManifest run_in(const fs::path& cfg_dir, const std::string& text) {
  write_text(cfg_dir / "run.toml", text);
  return run_pipeline(load_run_config(cfg_dir / "run.toml"));
}

int cli(const std::string& args) {
  const std::string cmd = std::string(AQEVAL_CLI) + " --log-level error " + args + " 2>/dev/null";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

StageStatus status_of(const RunManifest& m, const std::string& stage) {
  const auto* s = m.stage(stage);
  return s ? s->status : StageStatus::kDisabled;
}

// Mini corpus copy in which one test record points at a missing file.
fs::path broken_corpus(const fs::path& dir) {
  auto records = aqeval::testing::mini_records();
  for (auto& r : records) {
    if (r.split == Split::kTest) {
      r.audio.path = dir / "missing.wav";
      break;
    }
  }
  const auto tasks = aqeval::testing::mini_tasks();
  write_tasks(tasks, dir / "tasks.json");
  write_manifest(records, tasks, dir / "records.jsonl");
  return dir / "records.jsonl";
}

}  // namespace

TEST(Pipeline, FullRunThenSkipOnRerun) {
  TempDir tmp("pipeline");
  const auto text = mini_run_config(tmp / "out", tmp / "cache");
  const auto first = run_in(tmp.path(), text);
  EXPECT_EQ(first.exit_code(), kExitOk);
  for (const auto* name : {"ingest", "augment", "synth", "render", "judge", "score", "robustness"}) {
    EXPECT_EQ(status_of(first, name), StageStatus::kCompleted) << name;
  }
  EXPECT_EQ(first.backend_identity, "mock-echo/1");
  EXPECT_TRUE(fs::exists(tmp / "out/manifest.json"));
  EXPECT_TRUE(fs::exists(tmp / "out/score/report.csv"));
  EXPECT_TRUE(fs::exists(tmp / "out/robustness/stability.csv"));
  EXPECT_TRUE(fs::exists(tmp / "out/synth/records.jsonl"));

  // Every recorded output digest matches the file on disk.
  for (const auto& [rel, sha] : first.output_digests) {
    EXPECT_EQ(sha256_file(tmp / "out" / rel), sha) << rel;
  }

  const auto second = run_in(tmp.path(), text);
  EXPECT_EQ(second.exit_code(), kExitOk);
  for (const auto& s : second.stages) EXPECT_EQ(s.status, StageStatus::kSkipped) << s.name;
  EXPECT_EQ(second.output_digests, first.output_digests);
}

TEST(Pipeline, ChangedSectionRerunsOnlyDownstream) {
  TempDir tmp("pipeline");
  const auto text = mini_run_config(tmp / "out", tmp / "cache");
  run_in(tmp.path(), text);
  std::string changed = text;
  const auto pos = changed.find("bootstrap_resamples = 200");
  ASSERT_NE(pos, std::string::npos);
  changed.replace(pos, 25, "bootstrap_resamples = 300");
  const auto m = run_in(tmp.path(), changed);
  EXPECT_EQ(status_of(m, "ingest"), StageStatus::kSkipped);
  EXPECT_EQ(status_of(m, "judge"), StageStatus::kSkipped);
  EXPECT_EQ(status_of(m, "score"), StageStatus::kCompleted);
  EXPECT_EQ(status_of(m, "robustness"), StageStatus::kSkipped);

  // A damaged output forces its stage to run again.
  write_text(tmp / "out/render/prompts.jsonl", "");
  const auto again = run_in(tmp.path(), changed);
  EXPECT_EQ(status_of(again, "render"), StageStatus::kCompleted);
  EXPECT_EQ(status_of(again, "judge"), StageStatus::kSkipped);
}

TEST(Pipeline, FreshRunsAreByteIdentical) {
  TempDir a("pipeline");
  TempDir b("pipeline");
  run_in(a.path(), mini_run_config(a / "out", a / "cache"));
  run_in(b.path(), mini_run_config(b / "out", b / "cache"));
  for (const auto* rel : {"ingest/records.jsonl", "augment/records.jsonl", "render/prompts.jsonl",
                          "judge/responses.jsonl", "score/report.csv", "score/report.md",
                          "robustness/stability.csv"}) {
    EXPECT_EQ(read_file(a / "out" / rel), read_file(b / "out" / rel)) << rel;
  }
  for (const auto& e : fs::directory_iterator(a / "out/synth/audio")) {
    const auto other = b / "out/synth/audio" / e.path().filename().string();
    EXPECT_EQ(sha256_file(e.path()), sha256_file(other)) << e.path();
  }
}

TEST(Pipeline, EchoReportIsPerfect) {
  TempDir tmp("pipeline");
  run_in(tmp.path(), mini_run_config(tmp / "out", tmp / "cache"));
  const auto csv = read_file(tmp / "out/score/report.csv");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 7);  // header + 2 datasets x 3 tasks
  EXPECT_EQ(csv.find("undefined"), std::string::npos);
}

TEST(Pipeline, SchemaErrorStopsBeforeAnyWork) {
  TempDir tmp("pipeline");
  std::string text = mini_run_config(tmp / "out", tmp / "cache");
  text.replace(text.find("[backend]"), 9, "[bogus]");
  write_text(tmp / "run.toml", text);
  EXPECT_THROW(load_run_config(tmp / "run.toml"), SchemaError);
  EXPECT_EQ(cli("--config " + (tmp / "run.toml").string() + " run"), kExitValidation);
  EXPECT_FALSE(fs::exists(tmp / "out"));
}

TEST(Pipeline, ValidationFailureBlocksDownstream) {
  TempDir tmp("pipeline");
  const auto records = broken_corpus(tmp.path());
  std::string text = mini_run_config(tmp / "out", tmp / "cache");
  const auto from = text.find("records = ");
  const auto to = text.find('\n', from);
  text.replace(from, to - from, "records = \"" + records.generic_string() + "\"");
  const auto m = run_in(tmp.path(), text);
  EXPECT_EQ(status_of(m, "ingest"), StageStatus::kFailed);
  EXPECT_EQ(status_of(m, "render"), StageStatus::kBlocked);
  EXPECT_EQ(status_of(m, "score"), StageStatus::kBlocked);
  EXPECT_EQ(m.exit_code(), kExitValidation);
  EXPECT_TRUE(fs::exists(tmp / "out/manifest.json"));
}

TEST(PipelineCli, ExitCodes) {
  TempDir tmp("cli");
  write_text(tmp / "run.toml", mini_run_config(tmp / "out", tmp / "cache"));
  EXPECT_EQ(cli("--config " + (tmp / "run.toml").string() + " run"), kExitOk);
  EXPECT_EQ(cli("--config " + (tmp / "run.toml").string() + " --out-dir " +
                (tmp / "other").string() + " run"),
            kExitOk);
  EXPECT_TRUE(fs::exists(tmp / "other/manifest.json"));
  EXPECT_EQ(cli("run"), kExitValidation);
  EXPECT_EQ(cli("--config " + (tmp / "absent.toml").string() + " run"), kExitStageFailure);
  EXPECT_EQ(cli("frobnicate"), kExitValidation);

  // Baseline judge over a corpus with one unreadable clip: partial success.
  const auto records = broken_corpus(tmp.path());
  std::string text = mini_run_config(tmp / "partial", tmp / "cache2");
  text.replace(text.find("[corpus]"), 8, "[corpus]\ncheck_audio = false");
  const auto from = text.find("records = ");
  text.replace(from, text.find('\n', from) - from,
               "records = \"" + records.generic_string() + "\"");
  const std::string mock = "kind = \"mock\"\nmode = \"echo\"";
  text.replace(text.find(mock), mock.size(), "kind = \"baseline\"");
  text.replace(text.find("[synth]"), 7, "[synth]\nenabled = false");
  write_text(tmp / "partial.toml", text);
  EXPECT_EQ(cli("--config " + (tmp / "partial.toml").string() + " run"), kExitPartial);
}

TEST(PipelineCli, Subcommands) {
  TempDir tmp("cli");
  const std::string d = aqeval::testing::data_dir().string();
  const std::string out = tmp.path().string();
  EXPECT_EQ(cli("--out-dir " + out + "/ing ingest --tasks " + d + "/mini/tasks.json --records " +
                d + "/mini/records.jsonl"),
            kExitOk);
  EXPECT_EQ(cli("--out-dir " + out + " augment --plan " + d + "/configs/plan.toml --in " + out +
                "/ing/records.jsonl --out " + out + "/aug/records.jsonl"),
            kExitOk);
  EXPECT_EQ(cli("--out-dir " + out + " render --in " + out + "/aug/records.jsonl --split test"),
            kExitOk);
  EXPECT_EQ(cli("--out-dir " + out + " judge --backend " + d + "/configs/mock_echo.toml --prompts " +
                out + "/prompts.jsonl"),
            kExitOk);
  EXPECT_EQ(cli("--out-dir " + out + " score --responses " + out + "/responses.jsonl --records " +
                out + "/aug/records.jsonl --bootstrap 100"),
            kExitOk);
  EXPECT_TRUE(fs::exists(tmp / "report.csv"));
  EXPECT_EQ(cli("--out-dir " + out + " score --responses " + out + "/responses.jsonl --records " +
                out + "/aug/records.jsonl --bootstrap 10"),
            kExitValidation);
  EXPECT_EQ(cli("--seed 3 --out-dir " + out + "/syn synth-distort --kind reverb --rate 0.5 --in " +
                out + "/ing/records.jsonl"),
            kExitOk);
  EXPECT_TRUE(fs::exists(tmp / "syn/records.jsonl"));
  EXPECT_EQ(cli("--out-dir " + out + " robustness --variants " + d + "/variants --records " + out +
                "/ing/records.jsonl --backend " + d + "/configs/mock_noisy.toml"),
            kExitOk);
  EXPECT_TRUE(fs::exists(tmp / "stability.csv"));
  EXPECT_EQ(cli("--out-dir " + out + "/bad ingest --tasks " + d + "/mini/tasks.json --records " +
                out + "/nope.jsonl"),
            kExitStageFailure);
}
