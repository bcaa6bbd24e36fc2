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

// aqeval: command-line front end. Data goes to files (or stdout); logs go to
// stderr as one line per event.

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <iostream>
#include <optional>
#include <set>
#include <string>

#include "CLI11.hpp"
#include "aqeval/augment.hpp"
#include "aqeval/config.hpp"
#include "aqeval/corpus.hpp"
#include "aqeval/digest.hpp"
#include "aqeval/distort.hpp"
#include "aqeval/error.hpp"
#include "aqeval/judges.hpp"
#include "aqeval/metrics.hpp"
#include "aqeval/pipeline.hpp"
#include "aqeval/prompting.hpp"
#include "aqeval/robustness.hpp"
#include "aqeval/rng.hpp"

namespace fs = std::filesystem;
using namespace aqeval;

namespace {

struct Globals {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out_dir = ".";
  std::string log_level = "info";
};

// tasks.json next to the records file unless given explicitly.
fs::path tasks_for(const std::string& explicit_tasks, const fs::path& records) {
  if (!explicit_tasks.empty()) return explicit_tasks;
  return records.parent_path() / "tasks.json";
}

fs::path in_out_dir(const Globals& g, const std::string& path, const std::string& fallback) {
  const fs::path p = path.empty() ? fs::path(fallback) : fs::path(path);
  return p.is_absolute() || !path.empty() ? p : fs::path(g.out_dir) / p;
}

std::optional<Split> parse_split_option(const std::string& s) {
  if (s == "all") return std::nullopt;
  return parse_split(s);
}

std::optional<RunConfig> optional_config(const Globals& g) {
  if (g.config.empty()) return std::nullopt;
  auto cfg = load_run_config(g.config);
  if (g.seed) set_seed(cfg, *g.seed);
  return cfg;
}

void log_stage_summary(const RunManifest& m) {
  for (const auto& s : m.stages) {
    spdlog::info("stage={} status={} failures={}{}", s.name, to_string(s.status), s.failures,
                 s.message.empty() ? "" : " message=\"" + s.message + "\"");
  }
}

}  // namespace

int main(int argc, char** argv) {
  auto logger = spdlog::stderr_color_mt("aqeval");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("%Y-%m-%dT%H:%M:%S.%e level=%l %v");

  CLI::App app{"Audio quality judge evaluation harness"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--config", g.config, "Run configuration (TOML)");
  app.add_option("--seed", g.seed, "Seed for every randomized step");
  app.add_option("--out-dir", g.out_dir, "Directory for outputs")->capture_default_str();
  app.add_option("--log-level", g.log_level, "trace, debug, info, warn, error")
      ->capture_default_str()
      ->each([](const std::string& s) { spdlog::set_level(spdlog::level::from_str(s)); });

  int code = kExitOk;

  // ingest
  auto* ingest = app.add_subcommand("ingest", "Validate tasks and records, probe audio");
  std::string ingest_tasks, ingest_records;
  bool skip_audio = false;
  ingest->add_option("--tasks", ingest_tasks, "tasks.json")->required();
  ingest->add_option("--records", ingest_records, "records.jsonl")->required();
  ingest->add_flag("--skip-audio-check", skip_audio, "Do not open the WAV files");
  ingest->callback([&] {
    const auto tasks = load_tasks(ingest_tasks);
    auto records = parse_manifest(ingest_records, tasks);
    if (!skip_audio) {
      std::vector<std::string> bad;
      for (auto& r : records) {
        try {
          r.audio = validate_audio(r);
        } catch (const AudioError& e) {
          spdlog::error("record {}: {}", r.id, e.what());
          bad.push_back(r.id);
        }
      }
      if (!bad.empty()) throw ValidationError(std::to_string(bad.size()) + " records with bad audio", bad);
    }
    const fs::path out(g.out_dir);
    write_tasks(tasks, out / "tasks.json");
    write_manifest(records, tasks, out / "records.jsonl");
    spdlog::info("ingest: {} records, {} tasks -> {}", records.size(), tasks.tasks().size(),
                 out.string());
  });

  // augment
  auto* aug = app.add_subcommand("augment", "Expand train records with templates and paraphrases");
  std::string aug_plan, aug_in, aug_tasks, aug_out;
  aug->add_option("--plan", aug_plan, "Augmentation plan (TOML)")->required();
  aug->add_option("--in", aug_in, "records.jsonl")->required();
  aug->add_option("--tasks", aug_tasks, "tasks.json (default: next to --in)");
  aug->add_option("--out", aug_out, "Output records.jsonl (default: <out-dir>/records.jsonl)");
  aug->callback([&] {
    const auto plan = load_plan(aug_plan);
    const auto tasks = load_tasks(tasks_for(aug_tasks, aug_in));
    const auto records = parse_manifest(aug_in, tasks);
    auto rewriter = make_rewriter(plan.rewriter);
    const std::uint64_t seed = g.seed.value_or(plan.seed.value_or(0));
    const auto out = augment_corpus(records, plan.plan, seed, rewriter.get());
    const fs::path path = in_out_dir(g, aug_out, "records.jsonl");
    write_manifest(out, tasks, path);
    if (!path.parent_path().empty()) write_tasks(tasks, path.parent_path() / "tasks.json");
    spdlog::info("augment: {} -> {} records", records.size(), out.size());
  });

  // synth-distort
  auto* synth = app.add_subcommand("synth-distort", "Build a labelled proxy corpus by distortion");
  std::string synth_kind = "silence", synth_in, synth_tasks, synth_out;
  double synth_rate = 0.5;
  synth->add_option("--kind", synth_kind, "reverb, silence, anomaly_tone, noise_burst")
      ->capture_default_str();
  synth->add_option("--rate", synth_rate, "Fraction of clips to distort, in (0, 1)")
      ->capture_default_str();
  synth->add_option("--in", synth_in, "Manifest of clean clips")->required();
  synth->add_option("--tasks", synth_tasks, "tasks.json (default: next to --in)");
  synth->add_option("--out", synth_out, "Output directory (default: --out-dir)");
  synth->callback([&] {
    SynthOptions opt;
    if (auto cfg = optional_config(g)) opt = cfg->synth_options;
    opt.kind = parse_distortion_kind(synth_kind);
    opt.rate = synth_rate;
    opt.seed = g.seed.value_or(opt.seed);
    const auto tasks = load_tasks(tasks_for(synth_tasks, synth_in));
    const auto records = parse_manifest(synth_in, tasks);
    std::vector<ClipSource> clips;
    std::set<fs::path> seen;
    for (const auto& r : records) {
      if (seen.insert(r.audio.path).second) clips.push_back({r.id, r.audio});
    }
    const fs::path dir = synth_out.empty() ? fs::path(g.out_dir) : fs::path(synth_out);
    const auto proxy = synth_proxy_corpus(clips, opt, dir);
    TaskRegistry proxy_tasks;
    proxy_tasks.add(proxy_task(opt.kind));
    write_tasks(proxy_tasks, dir / "tasks.json");
    write_manifest(proxy, proxy_tasks, dir / "records.jsonl");
    std::size_t distorted = 0;
    for (const auto& r : proxy) distorted += r.score == 1.0 ? 1 : 0;
    spdlog::info("synth-distort: {} clips, {} distorted -> {}", proxy.size(), distorted,
                 dir.string());
  });

  // render
  auto* rend = app.add_subcommand("render", "Render records into chat-template prompts");
  std::string rend_in, rend_tasks, rend_out, rend_split = "all";
  rend->add_option("--in", rend_in, "records.jsonl")->required();
  rend->add_option("--tasks", rend_tasks, "tasks.json (default: next to --in)");
  rend->add_option("--out", rend_out, "prompts.jsonl (default: <out-dir>/prompts.jsonl)");
  rend->add_option("--split", rend_split, "train, validation, test or all")->capture_default_str();
  rend->callback([&] {
    Markers markers;
    if (auto cfg = optional_config(g)) markers = cfg->markers;
    const auto tasks = load_tasks(tasks_for(rend_tasks, rend_in));
    auto records = parse_manifest(rend_in, tasks);
    if (auto split = parse_split_option(rend_split)) records = split_filter(records, *split);
    std::vector<RenderedPrompt> prompts;
    for (const auto& r : records) prompts.push_back(render(r, markers));
    const fs::path path = in_out_dir(g, rend_out, "prompts.jsonl");
    write_prompts(prompts, path);
    spdlog::info("render: {} prompts -> {}", prompts.size(), path.string());
  });

  // judge
  auto* jud = app.add_subcommand("judge", "Score prompts with a judge backend");
  std::string jud_backend, jud_prompts, jud_cache, jud_out;
  std::optional<std::size_t> jud_parallel;
  jud->add_option("--backend", jud_backend, "Backend config (TOML)")->required();
  jud->add_option("--prompts", jud_prompts, "prompts.jsonl")->required();
  jud->add_option("--cache", jud_cache, "Response cache directory");
  jud->add_option("--out", jud_out, "responses.jsonl (default: <out-dir>/responses.jsonl)");
  jud->add_option("--parallelism", jud_parallel, "In-flight requests (overrides the backend)");
  jud->callback([&] {
    const auto backend_cfg = load_backend(jud_backend);
    const auto prompts = read_prompts(jud_prompts);
    std::unordered_map<std::string, double> labels;
    if (backend_cfg.kind == BackendKind::kMock) labels = labels_from_prompts(prompts);
    auto backend = make_judge(backend_cfg, std::move(labels));
    const BatchResult batch = judge_batch(
        prompts, *backend, {jud_cache, jud_parallel.value_or(backend_cfg.parallelism)});
    for (const auto& w : batch.warnings) spdlog::warn("judge: {}", w);
    const fs::path path = in_out_dir(g, jud_out, "responses.jsonl");
    write_responses(batch, path);
    spdlog::info("judge: backend={} ok={} failed={} cache_hits={}", backend->identity(),
                 batch.successes, batch.failures, batch.cache_hits);
    if (batch.failures > 0) code = kExitPartial;
  });

  // score
  auto* sc = app.add_subcommand("score", "Correlate judge scores with human labels");
  std::string sc_responses, sc_records, sc_tasks, sc_out, sc_md;
  std::size_t sc_boot = 0;
  std::vector<std::string> sc_group{"dataset", "task"};
  sc->add_option("--responses", sc_responses, "responses.jsonl")->required();
  sc->add_option("--records", sc_records, "records.jsonl")->required();
  sc->add_option("--tasks", sc_tasks, "tasks.json (default: next to --records)");
  sc->add_option("--out", sc_out, "report.csv (default: <out-dir>/report.csv)");
  sc->add_option("--md", sc_md, "Markdown report path");
  sc->add_option("--bootstrap", sc_boot, "Bootstrap resamples for 95% CIs (0 = off)")
      ->capture_default_str();
  sc->add_option("--group-by", sc_group, "dataset and/or task")->capture_default_str();
  sc->callback([&] {
    ReportOptions opt;
    opt.bootstrap_resamples = sc_boot;
    opt.seed = g.seed.value_or(0);
    opt.group_by.clear();
    for (const auto& k : sc_group) {
      if (k == "dataset") {
        opt.group_by.push_back(GroupKey::kDataset);
      } else if (k == "task") {
        opt.group_by.push_back(GroupKey::kTask);
      } else {
        throw ValidationError("--group-by accepts dataset and task");
      }
    }
    if (sc_boot != 0 && sc_boot < 100) throw ValidationError("--bootstrap must be 0 or >= 100");
    const auto responses = read_responses(sc_responses);
    const auto records = parse_manifest(sc_records, load_tasks(tasks_for(sc_tasks, sc_records)));
    const auto reports = build_report(responses, records, opt);
    const fs::path path = in_out_dir(g, sc_out, "report.csv");
    write_file_atomic(path, report_csv(reports));
    if (!sc_md.empty()) {
      write_file_atomic(sc_md, report_markdown(reports, responses.empty() ? "" : responses[0].backend));
    }
    for (const auto& r : reports) {
      spdlog::info("score: dataset={} task={} n={} pcc={} srcc={}", r.dataset, r.task_id,
                   r.n_pairs, format_metric(r.pcc), format_metric(r.srcc));
    }
  });

  // robustness
  auto* rob = app.add_subcommand("robustness", "Prompt-variant stability sweep");
  std::string rob_variants, rob_records, rob_tasks, rob_backend, rob_out, rob_md, rob_cache;
  std::string rob_split = "all";
  rob->add_option("--variants", rob_variants, "Directory of variant files (TOML)")->required();
  rob->add_option("--records", rob_records, "records.jsonl")->required();
  rob->add_option("--tasks", rob_tasks, "tasks.json (default: next to --records)");
  rob->add_option("--backend", rob_backend, "Backend config (TOML)")->required();
  rob->add_option("--out", rob_out, "stability.csv (default: <out-dir>/stability.csv)");
  rob->add_option("--md", rob_md, "Markdown report path");
  rob->add_option("--cache", rob_cache, "Response cache directory");
  rob->add_option("--split", rob_split, "train, validation, test or all")->capture_default_str();
  rob->callback([&] {
    const auto backend_cfg = load_backend(rob_backend);
    auto records = parse_manifest(rob_records, load_tasks(tasks_for(rob_tasks, rob_records)));
    if (auto split = parse_split_option(rob_split)) records = split_filter(records, *split);
    std::vector<StabilityReport> reports;
    std::size_t failures = 0;
    for (const auto& set : load_variant_dir(rob_variants)) {
      std::vector<EvalRecord> subset;
      for (const auto& r : records) {
        if (r.task.task_id == set.task_id) subset.push_back(r);
      }
      if (subset.size() < 2) {
        spdlog::warn("robustness: fewer than 2 records for task {}, skipped", set.task_id);
        continue;
      }
      const auto sweep = run_sweep(subset, set, variant_judge_factory(backend_cfg, subset),
                                   {rob_cache, backend_cfg.parallelism});
      reports.push_back(stability_report(sweep));
      failures += reports.back().failures;
      spdlog::info("robustness: task={} consistency_index={}", set.task_id,
                   format_metric(reports.back().consistency_index));
    }
    const fs::path path = in_out_dir(g, rob_out, "stability.csv");
    write_file_atomic(path, stability_csv(reports));
    if (!rob_md.empty()) write_file_atomic(rob_md, stability_markdown(reports));
    if (failures > 0) code = kExitPartial;
  });

  // run
  auto* run = app.add_subcommand("run", "Run every configured stage");
  run->callback([&] {
    if (g.config.empty()) throw ValidationError("run needs --config");
    auto cfg = load_run_config(g.config);
    if (g.seed) set_seed(cfg, *g.seed);
    if (app.get_option("--out-dir")->count() > 0) cfg.out_dir = g.out_dir;
    const RunManifest m = run_pipeline(cfg);
    log_stage_summary(m);
    code = m.exit_code();
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitValidation;
  } catch (const ValidationError& e) {
    spdlog::error("{}", e.what());
    return kExitValidation;
  } catch (const ParseError& e) {
    spdlog::error("{}", e.what());
    return kExitValidation;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kExitStageFailure;
  }
  return code;
}
