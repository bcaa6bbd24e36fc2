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

#include <spdlog/spdlog.h>

#include <chrono>
#include <ctime>
#include <functional>
#include <set>

#include "aqeval/augment.hpp"
#include "aqeval/digest.hpp"
#include "aqeval/distort.hpp"
#include "aqeval/error.hpp"
#include "aqeval/metrics.hpp"
#include "aqeval/prompting.hpp"
#include "aqeval/rng.hpp"

namespace aqeval {

using nlohmann::json;
namespace fs = std::filesystem;

std::string_view to_string(StageStatus s) {
  switch (s) {
    case StageStatus::kCompleted: return "completed";
    case StageStatus::kSkipped: return "skipped";
    case StageStatus::kFailed: return "failed";
    case StageStatus::kBlocked: return "blocked";
    case StageStatus::kDisabled: return "disabled";
  }
  return "?";
}

const StageOutcome* RunManifest::stage(std::string_view name) const {
  for (const auto& s : stages) {
    if (s.name == name) return &s;
  }
  return nullptr;
}

int RunManifest::exit_code() const {
  bool validation = false;
  bool failed = false;
  bool partial = false;
  for (const auto& s : stages) {
    if (s.status == StageStatus::kFailed) {
      (s.validation_failure ? validation : failed) = true;
    }
    if (s.failures > 0) partial = true;
  }
  if (validation) return kExitValidation;
  if (failed) return kExitStageFailure;
  if (partial) return kExitPartial;
  return kExitOk;
}

json RunManifest::to_json() const {
  json stage_list = json::array();
  for (const auto& s : stages) {
    json j{{"name", s.name}, {"status", to_string(s.status)}, {"failures", s.failures},
           {"outputs", s.outputs}};
    if (!s.message.empty()) j["message"] = s.message;
    stage_list.push_back(std::move(j));
  }
  json failures = json::object();
  for (const auto& s : stages) failures[s.name] = s.failures;
  return json{{"run_id", run_id},
              {"started_at", started_at},
              {"finished_at", finished_at},
              {"seed", seed},
              {"config_digest", config_digest},
              {"input_digests", input_digests},
              {"backend_identity", backend_identity},
              {"stages", stage_list},
              {"failure_counts", failures},
              {"outputs", output_digests},
              {"exit_code", exit_code()}};
}

JudgeFactory variant_judge_factory(const BackendConfig& backend,
                                   const std::vector<EvalRecord>& records) {
  std::unordered_map<std::string, double> labels;
  std::unordered_map<std::string, double> inverted_labels;
  for (const auto& r : records) {
    labels[r.id] = r.score;
    inverted_labels[r.id] = invert_score(r.score, r.scale(), InvertMode::kRangePreserving).value;
  }
  return [backend, labels = std::move(labels), inverted_labels = std::move(inverted_labels)](
             const Variant& variant, std::size_t index) -> std::unique_ptr<Judge> {
    if (backend.kind != BackendKind::kMock) return make_judge(backend);
    MockJudge::Options opt = backend.mock;
    switch (opt.mode) {
      case MockMode::kEcho:
        if (variant.inverted()) opt.mode = MockMode::kEchoInverted;
        return std::make_unique<MockJudge>(labels, opt);
      case MockMode::kEchoInverted:
        if (variant.inverted()) opt.mode = MockMode::kEcho;
        return std::make_unique<MockJudge>(labels, opt);
      case MockMode::kNoisy:
        opt.seed = derive_seed(opt.seed, static_cast<std::uint64_t>(index));
        return std::make_unique<MockJudge>(variant.inverted() ? inverted_labels : labels, opt);
    }
    return make_judge(backend, labels);
  };
}

namespace {

std::string utc_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string rel(const fs::path& p, const fs::path& base) {
  return p.lexically_relative(base).generic_string();
}

struct StageResult {
  std::vector<fs::path> outputs;
  std::size_t failures = 0;
  std::string message;
};

class Runner {
 public:
  explicit Runner(const RunConfig& cfg) : cfg_(cfg), out_(fs::absolute(cfg.out_dir).lexically_normal()) {}

  RunManifest run();

 private:
  using StageFn = std::function<StageResult()>;

  // Input digest for a stage: its name, config digests and upstream files.
  std::string input_digest(const std::string& name, const std::vector<std::string>& sections,
                           const std::vector<fs::path>& files) const {
    json j{{"stage", name}, {"seed", cfg_.seed}};
    for (const auto& s : sections) {
      const auto it = cfg_.section_digests.find(s);
      j["sections"][s] = it == cfg_.section_digests.end() ? "" : it->second;
    }
    json f = json::array();
    for (const auto& p : files) f.push_back({rel(p, out_), sha256_file(p)});
    j["files"] = f;
    return sha256_hex(j.dump());
  }

  fs::path state_path(const std::string& name) const { return out_ / ".stages" / (name + ".json"); }

  std::optional<StageResult> cached(const std::string& name, const std::string& digest) const {
    const auto path = state_path(name);
    std::error_code ec;
    if (!fs::is_regular_file(path, ec)) return std::nullopt;
    try {
      const json state = json::parse(read_file(path));
      if (state.at("inputs").get<std::string>() != digest) return std::nullopt;
      StageResult r;
      for (const auto& [file, sha] : state.at("outputs").items()) {
        const fs::path p = out_ / file;
        if (!fs::is_regular_file(p, ec) || sha256_file(p) != sha.get<std::string>()) {
          return std::nullopt;
        }
        r.outputs.push_back(p);
      }
      r.failures = state.value("failures", std::size_t{0});
      return r;
    } catch (const std::exception&) {
      return std::nullopt;
    }
  }

  void save(const std::string& name, const std::string& digest, const StageResult& r) const {
    json outputs = json::object();
    for (const auto& p : r.outputs) outputs[rel(p, out_)] = sha256_file(p);
    write_file_atomic(state_path(name),
                      json{{"inputs", digest}, {"outputs", outputs}, {"failures", r.failures}}
                              .dump(2) +
                          "\n");
  }

  // Runs or skips one stage. `inputs` is evaluated lazily so a blocked
  // stage never touches missing upstream files.
  void stage(const std::string& name, bool enabled, const std::vector<std::string>& deps,
             const std::function<std::string()>& inputs, const StageFn& fn) {
    StageOutcome out;
    out.name = name;
    if (!enabled) {
      out.status = StageStatus::kDisabled;
      manifest_.stages.push_back(out);
      return;
    }
    for (const auto& d : deps) {
      const auto* s = manifest_.stage(d);
      if (s && (s->status == StageStatus::kFailed || s->status == StageStatus::kBlocked)) {
        out.status = StageStatus::kBlocked;
        out.message = "upstream stage " + d + " did not complete";
        spdlog::warn("stage {}: blocked by {}", name, d);
        manifest_.stages.push_back(out);
        return;
      }
    }
    try {
      const std::string digest = inputs();
      std::optional<StageResult> result = cached(name, digest);
      if (result) {
        out.status = StageStatus::kSkipped;
        spdlog::info("stage {}: inputs unchanged, skipped", name);
      } else {
        spdlog::info("stage {}: running", name);
        result = fn();
        save(name, digest, *result);
        out.status = StageStatus::kCompleted;
      }
      out.failures = result->failures;
      out.message = result->message;
      for (const auto& p : result->outputs) out.outputs.push_back(rel(p, out_));
      if (out.failures) spdlog::warn("stage {}: {} item failures", name, out.failures);
    } catch (const ValidationError& e) {
      fail(out, e.what(), true);
    } catch (const ParseError& e) {
      fail(out, e.what(), true);
    } catch (const std::exception& e) {
      fail(out, e.what(), false);
    }
    manifest_.stages.push_back(out);
  }

  static void fail(StageOutcome& out, const std::string& what, bool validation) {
    out.status = StageStatus::kFailed;
    out.message = what;
    out.validation_failure = validation;
    spdlog::error("stage {}: {}", out.name, what);
  }

  bool available(const std::string& name) const {
    const auto* s = manifest_.stage(name);
    return s && (s->status == StageStatus::kCompleted || s->status == StageStatus::kSkipped);
  }

  fs::path corpus_dir() const { return cfg_.augment ? out_ / "augment" : out_ / "ingest"; }

  std::vector<EvalRecord> load_corpus(const fs::path& dir) const {
    return parse_manifest(dir / "records.jsonl", load_tasks(dir / "tasks.json"));
  }

  std::vector<EvalRecord> eval_records() const {
    auto records = load_corpus(corpus_dir());
    if (!cfg_.render_split) return records;
    return split_filter(records, *cfg_.render_split);
  }

  StageResult ingest();
  StageResult augment();
  StageResult synth();
  StageResult render_stage();
  StageResult judge();
  StageResult score();
  StageResult robustness();

  const RunConfig& cfg_;
  fs::path out_;
  RunManifest manifest_;
};

StageResult Runner::ingest() {
  const TaskRegistry tasks = load_tasks(cfg_.tasks);
  auto records = parse_manifest(cfg_.records, tasks);
  if (cfg_.check_audio) {
    std::vector<std::string> bad;
    std::string first;
    for (auto& r : records) {
      try {
        r.audio = validate_audio(r);
      } catch (const AudioError& e) {
        if (first.empty()) first = e.what();
        bad.push_back(r.id);
      }
    }
    if (!bad.empty()) {
      throw ValidationError(std::to_string(bad.size()) + " records with unusable audio; first: " +
                                first,
                            bad);
    }
  }
  const fs::path dir = out_ / "ingest";
  write_tasks(tasks, dir / "tasks.json");
  write_manifest(records, tasks, dir / "records.jsonl");
  return {{dir / "tasks.json", dir / "records.jsonl"}, 0, std::to_string(records.size()) + " records"};
}

StageResult Runner::augment() {
  const fs::path in = out_ / "ingest";
  const TaskRegistry tasks = load_tasks(in / "tasks.json");
  const auto records = parse_manifest(in / "records.jsonl", tasks);
  auto rewriter = make_rewriter(cfg_.plan.rewriter);
  const std::uint64_t seed =
      cfg_.plan.seed.value_or(derive_seed(cfg_.seed, std::string_view("augment")));
  const auto out = augment_corpus(records, cfg_.plan.plan, seed, rewriter.get());
  const fs::path dir = out_ / "augment";
  write_tasks(tasks, dir / "tasks.json");
  write_manifest(out, tasks, dir / "records.jsonl");
  return {{dir / "tasks.json", dir / "records.jsonl"}, 0,
          std::to_string(out.size() - records.size()) + " augmented records"};
}

StageResult Runner::synth() {
  const auto records = load_corpus(out_ / "ingest");
  std::vector<ClipSource> clips;
  std::set<fs::path> seen;
  for (const auto& r : records) {
    if (seen.insert(r.audio.path).second) clips.push_back({r.id, r.audio});
  }
  const fs::path dir = out_ / "synth";
  std::error_code ec;
  fs::remove_all(dir / "audio", ec);
  const auto proxy = synth_proxy_corpus(clips, cfg_.synth_options, dir);
  TaskRegistry tasks;
  tasks.add(proxy_task(cfg_.synth_options.kind));
  write_tasks(tasks, dir / "tasks.json");
  write_manifest(proxy, tasks, dir / "records.jsonl");
  StageResult r{{dir / "tasks.json", dir / "records.jsonl"}, 0,
                std::to_string(proxy.size()) + " proxy records"};
  for (const auto& p : proxy) r.outputs.push_back(fs::absolute(p.audio.path).lexically_normal());
  return r;
}

StageResult Runner::render_stage() {
  std::vector<RenderedPrompt> prompts;
  for (const auto& r : eval_records()) prompts.push_back(render(r, cfg_.markers));
  if (prompts.empty()) throw ValidationError("no records to render for the configured split");
  const fs::path path = out_ / "render" / "prompts.jsonl";
  write_prompts(prompts, path);
  return {{path}, 0, std::to_string(prompts.size()) + " prompts"};
}

StageResult Runner::judge() {
  const auto prompts = read_prompts(out_ / "render" / "prompts.jsonl");
  std::unordered_map<std::string, double> labels;
  if (cfg_.backend->kind == BackendKind::kMock) labels = labels_from_prompts(prompts);
  auto backend = make_judge(*cfg_.backend, std::move(labels));
  const BatchResult batch =
      judge_batch(prompts, *backend, {cfg_.cache_dir, cfg_.backend->parallelism});
  for (const auto& w : batch.warnings) spdlog::warn("judge: {}", w);
  const fs::path dir = out_ / "judge";
  write_responses(batch, dir / "responses.jsonl");
  spdlog::info("judge: {} ok, {} failed, {} cache hits", batch.successes, batch.failures,
               batch.cache_hits);
  return {{dir / "responses.jsonl", dir / "responses.meta.jsonl", dir / "responses.failures.json"},
          batch.failures,
          std::to_string(batch.successes) + " scored, " + std::to_string(batch.failures) +
              " failed"};
}

StageResult Runner::score() {
  const auto responses = read_responses(out_ / "judge" / "responses.jsonl");
  const auto records = load_corpus(corpus_dir());
  const auto reports = build_report(responses, records, cfg_.report);
  const fs::path dir = out_ / "score";
  std::string identity = responses.empty() ? std::string() : responses.front().backend;
  write_file_atomic(dir / "report.csv", report_csv(reports));
  write_file_atomic(dir / "report.md", report_markdown(reports, identity));
  return {{dir / "report.csv", dir / "report.md"}, 0, std::to_string(reports.size()) + " groups"};
}

StageResult Runner::robustness() {
  const auto sets = load_variant_dir(cfg_.variants_dir);
  const auto records = eval_records();
  std::vector<StabilityReport> reports;
  std::size_t failures = 0;
  for (const auto& set : sets) {
    std::vector<EvalRecord> subset;
    for (const auto& r : records) {
      if (r.task.task_id == set.task_id) subset.push_back(r);
    }
    if (subset.size() < 2) {
      spdlog::warn("robustness: fewer than 2 records for task {}, skipped", set.task_id);
      continue;
    }
    const auto sweep = run_sweep(subset, set, variant_judge_factory(*cfg_.backend, subset),
                                 {cfg_.cache_dir, cfg_.backend->parallelism});
    reports.push_back(stability_report(sweep));
    failures += reports.back().failures;
  }
  const fs::path dir = out_ / "robustness";
  write_file_atomic(dir / "stability.csv", stability_csv(reports));
  write_file_atomic(dir / "stability.md", stability_markdown(reports));
  return {{dir / "stability.csv", dir / "stability.md"}, failures,
          std::to_string(reports.size()) + " variant sets"};
}

RunManifest Runner::run() {
  manifest_.started_at = utc_now();
  manifest_.seed = cfg_.seed;
  manifest_.config_digest = cfg_.digest;
  manifest_.run_id = manifest_.started_at + "-" + cfg_.digest.substr(0, 8);
  fs::create_directories(out_);

  std::vector<fs::path> corpus_inputs{cfg_.tasks, cfg_.records};
  for (const auto& p : corpus_inputs) {
    std::error_code ec;
    if (fs::is_regular_file(p, ec)) manifest_.input_digests[p.generic_string()] = sha256_file(p);
  }
  if (cfg_.backend) {
    try {
      manifest_.backend_identity = make_judge(*cfg_.backend)->identity();
    } catch (const std::exception&) {
    }
  }

  auto ingest_files = [&] {
    std::vector<fs::path> files{cfg_.tasks, cfg_.records};
    const auto records = parse_manifest(cfg_.records, load_tasks(cfg_.tasks));
    std::set<fs::path> audio;
    for (const auto& r : records) audio.insert(r.audio.path);
    json j = json::array();
    for (const auto& a : audio) j.push_back(audio_digest(AudioRef{a}));
    return std::pair{files, sha256_hex(j.dump())};
  };
  const fs::path ingest_out = out_ / "ingest" / "records.jsonl";
  const fs::path corpus_out = corpus_dir() / "records.jsonl";

  stage("ingest", true, {}, [&] {
    auto [files, audio] = ingest_files();
    return sha256_hex(input_digest("ingest", {"corpus"}, files) + audio);
  }, [&] { return ingest(); });
  stage("augment", cfg_.augment, {"ingest"},
        [&] { return input_digest("augment", {"augment"}, {ingest_out}); },
        [&] { return augment(); });
  stage("synth", cfg_.synth, {"ingest"}, [&] {
    // Audio content feeds the distortions, so hash it too.
    const auto records = load_corpus(out_ / "ingest");
    json j = json::array();
    for (const auto& r : records) j.push_back(audio_digest(r.audio));
    return sha256_hex(input_digest("synth", {"synth"}, {ingest_out}) + j.dump());
  }, [&] { return synth(); });
  const std::vector<std::string> corpus_deps =
      cfg_.augment ? std::vector<std::string>{"ingest", "augment"} : std::vector<std::string>{"ingest"};
  stage("render", cfg_.render, corpus_deps,
        [&] { return input_digest("render", {"render"}, {corpus_out}); },
        [&] { return render_stage(); });
  const fs::path prompts = out_ / "render" / "prompts.jsonl";
  stage("judge", cfg_.judge, {"render"},
        [&] { return input_digest("judge", {"backend", "judge"}, {prompts}); },
        [&] { return judge(); });
  stage("score", cfg_.score, {"judge"}, [&] {
    return input_digest("score", {"score"}, {out_ / "judge" / "responses.jsonl", corpus_out});
  }, [&] { return score(); });
  stage("robustness", cfg_.robustness, corpus_deps, [&] {
    std::vector<fs::path> files{corpus_out};
    if (fs::is_directory(cfg_.variants_dir)) {
      std::vector<fs::path> variants;
      for (const auto& e : fs::directory_iterator(cfg_.variants_dir)) {
        if (e.path().extension() == ".toml") variants.push_back(e.path());
      }
      std::sort(variants.begin(), variants.end());
      files.insert(files.end(), variants.begin(), variants.end());
    }
    return input_digest("robustness", {"robustness", "backend", "render"}, files);
  }, [&] { return robustness(); });

  for (const auto& s : manifest_.stages) {
    for (const auto& o : s.outputs) {
      std::error_code ec;
      if (fs::is_regular_file(out_ / o, ec)) manifest_.output_digests[o] = sha256_file(out_ / o);
    }
  }
  manifest_.finished_at = utc_now();
  write_file_atomic(out_ / "manifest.json", manifest_.to_json().dump(2) + "\n");
  return manifest_;
}

}  // namespace

RunManifest run_pipeline(const RunConfig& config) { return Runner(config).run(); }

}  // namespace aqeval
