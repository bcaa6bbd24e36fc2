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

#include "aqeval/config.hpp"

#include <gtest/gtest.h>

#include "aqeval/error.hpp"
#include "test_util.hpp"

using namespace aqeval;
using aqeval::testing::data_dir;

namespace {

const char* kMinimalRun = R"(
[corpus]
tasks = "tasks.json"
records = "records.jsonl"

[backend]
kind = "mock"
)";

RunConfig parse_run(const std::string& text) { return parse_run_config(text, "/base", "cfg"); }

}  // namespace

TEST(Config, ShippedBackendsParse) {
  const auto echo = load_backend(data_dir() / "configs" / "mock_echo.toml");
  EXPECT_EQ(echo.kind, BackendKind::kMock);
  EXPECT_EQ(echo.mock.mode, MockMode::kEcho);
  EXPECT_EQ(echo.parallelism, 4u);

  const auto noisy = load_backend(data_dir() / "configs" / "mock_noisy.toml");
  EXPECT_EQ(noisy.mock.mode, MockMode::kNoisy);
  EXPECT_EQ(noisy.mock.sigma, 0.3);
  EXPECT_EQ(noisy.mock.seed, 11u);
  EXPECT_EQ(make_judge(noisy, {{"a", 1.0}})->identity(), "mock-noisy(sigma=0.3,seed=11)/1");

  const auto base = load_backend(data_dir() / "configs" / "baseline.toml");
  EXPECT_EQ(base.kind, BackendKind::kBaseline);
  EXPECT_EQ(base.parallelism, 2u);

  const auto remote = load_backend(data_dir() / "configs" / "remote_example.toml");
  ASSERT_TRUE(remote.remote);
  EXPECT_EQ(remote.remote->identity, "example-judge/2026-01");
  EXPECT_EQ(remote.remote->retry_max, 4);
  EXPECT_EQ(remote.remote->retry_base_delay_ms, 500);
  EXPECT_EQ(remote.remote->response_path, "/output/text");
  EXPECT_FALSE(remote.remote->request_template.empty());
  EXPECT_EQ(make_judge(remote)->identity(), "example-judge/2026-01");
}

TEST(Config, ShippedPlanParses) {
  const auto plan = load_plan(data_dir() / "configs" / "plan.toml");
  EXPECT_EQ(plan.seed, 5u);
  EXPECT_EQ(plan.plan.templates.size(), 4u);
  EXPECT_TRUE(plan.plan.include_inverted);
  EXPECT_EQ(plan.plan.paraphrase_styles.size(), 3u);
  EXPECT_EQ(plan.rewriter.kind, "rule-based");
}

TEST(Config, ShippedRunParses) {
  const auto cfg = load_run_config(data_dir() / "configs" / "mini_echo.toml");
  EXPECT_EQ(cfg.seed, 7u);
  EXPECT_TRUE(cfg.augment);
  EXPECT_TRUE(cfg.synth);
  EXPECT_TRUE(cfg.robustness);
  EXPECT_EQ(cfg.render_split, Split::kTest);
  EXPECT_EQ(cfg.report.bootstrap_resamples, 1000u);
  EXPECT_EQ(cfg.tasks.lexically_normal(), (data_dir() / "mini" / "tasks.json").lexically_normal());
  EXPECT_FALSE(cfg.section_digests.empty());
}

TEST(Config, BackendSchemaErrors) {
  EXPECT_THROW(parse_backend("kind = \"mock\"\ncolour = 1\n", "/"), SchemaError);
  EXPECT_THROW(parse_backend("mode = \"echo\"\n", "/"), SchemaError);
  EXPECT_THROW(parse_backend("kind = \"oracle\"\n", "/"), SchemaError);
  EXPECT_THROW(parse_backend("kind = \"mock\"\nmode = \"psychic\"\n", "/"), SchemaError);
  EXPECT_THROW(parse_backend("kind = \"mock\"\nmode = \"noisy\"\nsigma = -1.0\n", "/"), SchemaError);
  EXPECT_THROW(parse_backend("kind = \"mock\"\nparallelism = 0\n", "/"), SchemaError);
  EXPECT_THROW(parse_backend("kind = \"mock\"\nparallelism = \"four\"\n", "/"), SchemaError);
  EXPECT_THROW(parse_backend("kind = \"remote\"\n", "/"), SchemaError);
  EXPECT_THROW(parse_backend("kind = \"remote\"\nendpoint_url = \"http://x/\"\n"
                             "request_template = \"{}\"\nfree_text = false\n",
                             "/"),
               SchemaError);
  EXPECT_THROW(parse_backend("kind = ", "/"), ParseError);
  EXPECT_NO_THROW(parse_backend("[backend]\nkind = \"mock\"\n", "/"));
}

TEST(Config, RunSchemaErrors) {
  EXPECT_NO_THROW(parse_run(kMinimalRun));
  EXPECT_THROW(parse_run(std::string(kMinimalRun) + "extra = 1\n"), SchemaError);
  EXPECT_THROW(parse_run("[corpus]\ntasks = \"t\"\nrecords = \"r\"\n"), SchemaError);
  EXPECT_THROW(parse_run("[backend]\nkind = \"mock\"\n"), SchemaError);
  EXPECT_THROW(parse_run(std::string(kMinimalRun) + "[synth]\nrate = 1.0\n"), SchemaError);
  EXPECT_THROW(parse_run(std::string(kMinimalRun) + "[score]\nbootstrap_resamples = 50\n"),
               SchemaError);
  EXPECT_THROW(parse_run(std::string(kMinimalRun) + "[score]\ngroup_by = [\"system\"]\n"),
               SchemaError);
  EXPECT_THROW(parse_run(std::string(kMinimalRun) + "[robustness]\nenabled = true\n"),
               SchemaError);
  EXPECT_THROW(parse_run(std::string(kMinimalRun) + "[render]\nenabled = false\n"), SchemaError);
}

TEST(Config, RunDefaultsAndSeeds) {
  auto cfg = parse_run(kMinimalRun);
  EXPECT_EQ(cfg.out_dir, std::filesystem::path("/base/out"));
  EXPECT_EQ(cfg.tasks, std::filesystem::path("/base/tasks.json"));
  EXPECT_TRUE(cfg.render && cfg.judge && cfg.score);
  EXPECT_FALSE(cfg.augment || cfg.synth || cfg.robustness);
  const auto synth_seed = cfg.synth_options.seed;
  set_seed(cfg, 99);
  EXPECT_EQ(cfg.seed, 99u);
  EXPECT_NE(cfg.synth_options.seed, synth_seed);
  EXPECT_NE(cfg.synth_options.seed, cfg.report.seed);
}

TEST(Config, SectionDigestsTrackChanges) {
  const auto a = parse_run(kMinimalRun);
  const auto b = parse_run(std::string(kMinimalRun) + "[score]\nbootstrap_resamples = 200\n");
  EXPECT_EQ(a.section_digests.at("corpus"), b.section_digests.at("corpus"));
  EXPECT_EQ(a.section_digests.at("backend"), b.section_digests.at("backend"));
  EXPECT_FALSE(a.section_digests.count("score"));
  EXPECT_NE(a.digest, b.digest);
}

TEST(Config, Calibrations) {
  const auto s = parse_calibration("1,10,integer");
  EXPECT_EQ(s.min, 1.0);
  EXPECT_EQ(s.max, 10.0);
  EXPECT_EQ(s.kind, ScaleKind::kInteger);
  EXPECT_EQ(parse_calibration("0,100").kind, ScaleKind::kContinuous);
  EXPECT_THROW(parse_calibration("1"), SchemaError);
  EXPECT_THROW(parse_calibration("a,b"), SchemaError);
}
