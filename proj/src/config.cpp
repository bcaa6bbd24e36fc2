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

#include <algorithm>
#include <set>
#include <sstream>

#include "aqeval/digest.hpp"
#include "aqeval/error.hpp"
#include "aqeval/rng.hpp"
#include "toml.hpp"

namespace aqeval {

namespace {

toml::table parse_toml(std::string_view text, const std::string& source) {
  try {
    return toml::parse(text, source);
  } catch (const toml::parse_error& e) {
    throw ParseError(source + ": " + std::string(e.description()), e.source().begin.line);
  }
}

void check_keys(const toml::table& t, std::initializer_list<std::string_view> allowed,
                const std::string& where) {
  std::set<std::string_view> ok(allowed);
  for (const auto& [k, v] : t) {
    if (!ok.count(k.str())) throw SchemaError(where + ": unknown key '" + std::string(k.str()) + "'");
  }
}

std::string where_of(const std::string& source, const std::string& section) {
  return section.empty() ? source : source + " [" + section + "]";
}

template <class T>
std::optional<T> get(const toml::table& t, std::string_view key, const std::string& where) {
  const auto node = t[key];
  if (!node) return std::nullopt;
  if (auto v = node.value<T>()) return v;
  throw SchemaError(where + ": key '" + std::string(key) + "' has the wrong type");
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  const std::filesystem::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

std::optional<std::filesystem::path> get_path(const toml::table& t, std::string_view key,
                                              const std::filesystem::path& base,
                                              const std::string& where) {
  const auto s = get<std::string>(t, key, where);
  if (!s) return std::nullopt;
  return resolve(base, *s);
}

const toml::table* subtable(const toml::table& t, std::string_view key, const std::string& where) {
  const auto node = t[key];
  if (!node) return nullptr;
  if (const auto* tbl = node.as_table()) return tbl;
  throw SchemaError(where + ": '" + std::string(key) + "' must be a table");
}

std::vector<std::string> get_strings(const toml::table& t, std::string_view key,
                                     const std::string& where) {
  std::vector<std::string> out;
  const auto node = t[key];
  if (!node) return out;
  const auto* arr = node.as_array();
  if (arr == nullptr) throw SchemaError(where + ": '" + std::string(key) + "' must be an array");
  for (const auto& item : *arr) {
    const auto s = item.value<std::string>();
    if (!s) throw SchemaError(where + ": '" + std::string(key) + "' must hold strings");
    out.push_back(*s);
  }
  return out;
}

std::size_t to_size(std::int64_t v, std::string_view key, const std::string& where) {
  if (v < 0) throw SchemaError(where + ": '" + std::string(key) + "' must be non-negative");
  return static_cast<std::size_t>(v);
}

std::shared_ptr<RemoteEndpoint> parse_endpoint(const toml::table& t,
                                               const std::filesystem::path& base,
                                               const std::string& where) {
  auto ep = std::make_shared<RemoteEndpoint>();
  const auto url = get<std::string>(t, "endpoint_url", where);
  if (!url || url->empty()) throw SchemaError(where + ": remote backend needs endpoint_url");
  ep->url = *url;
  if (auto v = get<std::string>(t, "identity", where)) ep->identity = *v;
  if (auto v = get<std::string>(t, "auth_env_var", where)) ep->auth_env_var = *v;
  if (auto v = get<std::string>(t, "auth_header", where)) ep->auth_header = *v;
  if (auto v = get<std::string>(t, "auth_prefix", where)) ep->auth_prefix = *v;
  if (auto v = get<std::string>(t, "request_template", where)) ep->request_template = *v;
  if (auto p = get_path(t, "request_template_file", base, where)) {
    ep->request_template = read_file(*p);
  }
  if (ep->request_template.empty()) {
    throw SchemaError(where + ": remote backend needs request_template or request_template_file");
  }
  if (auto v = get<std::string>(t, "response_score_path", where)) ep->response_path = *v;
  const bool free_text = get<bool>(t, "free_text", where).value_or(ep->response_path.empty());
  if (free_text) {
    ep->response_path.clear();
  } else if (ep->response_path.empty()) {
    throw SchemaError(where + ": response_score_path is required unless free_text = true");
  }
  if (auto v = get<std::int64_t>(t, "timeout_ms", where)) ep->timeout_ms = static_cast<int>(*v);
  if (auto v = get<std::string>(t, "audio_transport", where)) {
    if (*v == "base64") {
      ep->audio_transport = AudioTransport::kBase64;
    } else if (*v == "url") {
      ep->audio_transport = AudioTransport::kUrl;
    } else {
      throw SchemaError(where + ": audio_transport must be base64 or url");
    }
  }
  if (auto v = get<std::string>(t, "audio_url_prefix", where)) ep->audio_url_prefix = *v;
  if (auto v = get<std::int64_t>(t, "max_audio_bytes", where)) {
    ep->max_audio_bytes = to_size(*v, "max_audio_bytes", where);
  }
  if (const auto* retry = subtable(t, "retry", where)) {
    const auto w = where + ".retry";
    check_keys(*retry, {"max", "base_delay_ms"}, w);
    if (auto v = get<std::int64_t>(*retry, "max", w)) ep->retry_max = static_cast<int>(*v);
    if (auto v = get<std::int64_t>(*retry, "base_delay_ms", w)) {
      ep->retry_base_delay_ms = static_cast<int>(*v);
    }
  }
  if (ep->retry_max < 1) throw SchemaError(where + ": retry.max must be >= 1");
  return ep;
}

BackendConfig backend_from_table(const toml::table& t, const std::filesystem::path& base,
                                 const std::string& where) {
  BackendConfig cfg;
  const auto kind = get<std::string>(t, "kind", where);
  if (!kind) throw SchemaError(where + ": backend needs a kind");
  if (auto v = get<std::int64_t>(t, "parallelism", where)) {
    cfg.parallelism = to_size(*v, "parallelism", where);
    if (cfg.parallelism < 1) throw SchemaError(where + ": parallelism must be >= 1");
  }
  if (*kind == "mock") {
    cfg.kind = BackendKind::kMock;
    check_keys(t, {"kind", "parallelism", "mode", "sigma", "seed"}, where);
    const auto mode = get<std::string>(t, "mode", where).value_or("echo");
    if (mode == "echo") {
      cfg.mock.mode = MockMode::kEcho;
    } else if (mode == "echo_inverted") {
      cfg.mock.mode = MockMode::kEchoInverted;
    } else if (mode == "noisy") {
      cfg.mock.mode = MockMode::kNoisy;
    } else {
      throw SchemaError(where + ": unknown mock mode '" + mode + "'");
    }
    cfg.mock.sigma = get<double>(t, "sigma", where).value_or(0.0);
    if (cfg.mock.sigma < 0.0) throw SchemaError(where + ": sigma must be non-negative");
    cfg.mock.seed = static_cast<std::uint64_t>(get<std::int64_t>(t, "seed", where).value_or(0));
  } else if (*kind == "baseline") {
    cfg.kind = BackendKind::kBaseline;
    check_keys(t, {"kind", "parallelism"}, where);
  } else if (*kind == "remote") {
    cfg.kind = BackendKind::kRemote;
    check_keys(t,
               {"kind", "parallelism", "identity", "endpoint_url", "auth_env_var", "auth_header",
                "auth_prefix", "request_template", "request_template_file",
                "response_score_path", "free_text", "timeout_ms", "audio_transport",
                "audio_url_prefix", "max_audio_bytes", "retry"},
               where);
    cfg.remote = parse_endpoint(t, base, where);
  } else {
    throw SchemaError(where + ": unknown backend kind '" + *kind + "'");
  }
  return cfg;
}

RewriterConfig rewriter_from_table(const toml::table& t, const std::filesystem::path& base,
                                   const std::string& where) {
  RewriterConfig cfg;
  cfg.kind = get<std::string>(t, "kind", where).value_or("rule-based");
  if (cfg.kind == "remote") {
    check_keys(t,
               {"kind", "identity", "endpoint_url", "auth_env_var", "auth_header", "auth_prefix",
                "request_template", "request_template_file", "response_score_path", "free_text",
                "timeout_ms", "retry"},
               where);
    cfg.remote = parse_endpoint(t, base, where);
  } else if (cfg.kind == "rule-based") {
    check_keys(t, {"kind"}, where);
  } else {
    throw SchemaError(where + ": unknown rewriter kind '" + cfg.kind + "'");
  }
  return cfg;
}

// Plan keys shared between plan files and the run file's [augment] table.
PlanConfig plan_from_table(const toml::table& t, const std::filesystem::path& base,
                           const std::string& where) {
  PlanConfig cfg;
  auto& plan = cfg.plan;
  if (auto v = get<std::int64_t>(t, "seed", where)) cfg.seed = static_cast<std::uint64_t>(*v);
  if (auto dir = get_path(t, "templates", base, where)) plan.templates = load_templates(*dir);
  for (const auto& c : get_strings(t, "calibrations", where)) {
    plan.calibrations.push_back(parse_calibration(c));
  }
  plan.include_inverted = get<bool>(t, "include_inverted", where).value_or(plan.include_inverted);
  if (auto v = get<std::string>(t, "rescale_mode", where)) plan.rescale_mode = parse_rescale_mode(*v);
  if (auto v = get<std::int64_t>(t, "templates_per_record", where)) {
    plan.templates_per_record = to_size(*v, "templates_per_record", where);
  }
  for (const auto& s : get_strings(t, "paraphrase_styles", where)) {
    plan.paraphrase_styles.push_back(parse_rewrite_style(s));
  }
  if (auto v = get<std::int64_t>(t, "paraphrases_per_record", where)) {
    plan.paraphrases_per_record = to_size(*v, "paraphrases_per_record", where);
  }
  if (auto v = get<std::int64_t>(t, "rewrite_concurrency", where)) {
    plan.rewrite_concurrency = std::max<std::size_t>(1, to_size(*v, "rewrite_concurrency", where));
  }
  if (const auto* rw = subtable(t, "rewriter", where)) {
    cfg.rewriter = rewriter_from_table(*rw, base, where + ".rewriter");
  }
  return cfg;
}

const std::initializer_list<std::string_view> kPlanKeys = {
    "seed",
    "templates",          "calibrations",           "include_inverted",
    "rescale_mode",       "templates_per_record",   "paraphrase_styles",
    "paraphrases_per_record", "rewrite_concurrency", "rewriter"};

bool section_enabled(const toml::table* t, const std::string& where) {
  return t != nullptr && get<bool>(*t, "enabled", where).value_or(true);
}

}  // namespace

CalibrationScale parse_calibration(std::string_view spec) {
  std::vector<std::string> parts;
  std::string cur;
  for (char c : spec) {
    if (c == ',') {
      parts.push_back(cur);
      cur.clear();
    } else if (c != ' ') {
      cur += c;
    }
  }
  parts.push_back(cur);
  if (parts.size() < 2 || parts.size() > 3) {
    throw SchemaError("calibration '" + std::string(spec) + "' is not min,max[,kind]");
  }
  double lo = 0.0;
  double hi = 0.0;
  try {
    lo = parse_param(parts[0]);
    hi = parse_param(parts[1]);
  } catch (const std::exception&) {
    throw SchemaError("calibration '" + std::string(spec) + "' has a non-numeric bound");
  }
  const ScaleKind kind = parts.size() == 3 ? parse_scale_kind(parts[2]) : ScaleKind::kContinuous;
  return CalibrationScale::make(lo, hi, kind);
}

BackendConfig parse_backend(std::string_view toml_text, const std::filesystem::path& base_dir,
                            const std::string& source) {
  const auto doc = parse_toml(toml_text, source);
  if (const auto* t = subtable(doc, "backend", source)) {
    return backend_from_table(*t, base_dir, where_of(source, "backend"));
  }
  return backend_from_table(doc, base_dir, source);
}

BackendConfig load_backend(const std::filesystem::path& path) {
  return parse_backend(read_file(path), path.parent_path(), path.string());
}

std::unique_ptr<Judge> make_judge(const BackendConfig& config,
                                  std::unordered_map<std::string, double> labels) {
  switch (config.kind) {
    case BackendKind::kMock:
      return std::make_unique<MockJudge>(std::move(labels), config.mock);
    case BackendKind::kBaseline:
      return std::make_unique<BaselineJudge>();
    case BackendKind::kRemote:
      return std::make_unique<RemoteJudge>(config.remote);
  }
  throw ValidationError("unknown backend kind");
}

std::unique_ptr<Rewriter> make_rewriter(const RewriterConfig& config) {
  if (config.kind == "remote") return std::make_unique<RemoteRewriter>(config.remote);
  return std::make_unique<RuleBasedRewriter>();
}

PlanConfig parse_plan(std::string_view toml_text, const std::filesystem::path& base_dir,
                      const std::string& source) {
  const auto doc = parse_toml(toml_text, source);
  check_keys(doc, kPlanKeys, source);
  return plan_from_table(doc, base_dir, source);
}

PlanConfig load_plan(const std::filesystem::path& path) {
  return parse_plan(read_file(path), path.parent_path(), path.string());
}

RunConfig parse_run_config(std::string_view toml_text, const std::filesystem::path& base_dir,
                           const std::string& source) {
  const auto doc = parse_toml(toml_text, source);
  check_keys(doc,
             {"seed", "out_dir", "corpus", "augment", "synth", "render", "judge", "backend",
              "score", "robustness"},
             source);
  RunConfig cfg;
  cfg.source = source;
  cfg.digest = sha256_hex(toml_text);
  if (auto v = get<std::int64_t>(doc, "seed", source)) cfg.seed = static_cast<std::uint64_t>(*v);
  cfg.out_dir = get_path(doc, "out_dir", base_dir, source).value_or(base_dir / "out");

  const auto* corpus = subtable(doc, "corpus", source);
  if (corpus == nullptr) throw SchemaError(source + ": missing [corpus] section");
  {
    const auto w = where_of(source, "corpus");
    check_keys(*corpus, {"tasks", "records", "check_audio"}, w);
    auto tasks = get_path(*corpus, "tasks", base_dir, w);
    auto records = get_path(*corpus, "records", base_dir, w);
    if (!tasks || !records) throw SchemaError(w + ": tasks and records are required");
    cfg.tasks = *tasks;
    cfg.records = *records;
    cfg.check_audio = get<bool>(*corpus, "check_audio", w).value_or(true);
  }

  if (const auto* t = subtable(doc, "augment", source)) {
    const auto w = where_of(source, "augment");
    std::vector<std::string_view> keys(kPlanKeys);
    keys.push_back("enabled");
    for (const auto& [k, v] : *t) {
      if (std::find(keys.begin(), keys.end(), k.str()) == keys.end()) {
        throw SchemaError(w + ": unknown key '" + std::string(k.str()) + "'");
      }
    }
    cfg.augment = section_enabled(t, w);
    if (cfg.augment) cfg.plan = plan_from_table(*t, base_dir, w);
  }

  if (const auto* t = subtable(doc, "synth", source)) {
    const auto w = where_of(source, "synth");
    check_keys(*t,
               {"enabled", "kind", "rate", "rt60_min", "rt60_max", "wet_min", "wet_max",
                "silence_duration", "burst_duration", "snr_min_db", "snr_max_db", "tone_min_hz",
                "tone_max_hz"},
               w);
    cfg.synth = section_enabled(t, w);
    auto& o = cfg.synth_options;
    if (auto v = get<std::string>(*t, "kind", w)) o.kind = parse_distortion_kind(*v);
    o.rate = get<double>(*t, "rate", w).value_or(o.rate);
    o.rt60_min = get<double>(*t, "rt60_min", w).value_or(o.rt60_min);
    o.rt60_max = get<double>(*t, "rt60_max", w).value_or(o.rt60_max);
    o.wet_min = get<double>(*t, "wet_min", w).value_or(o.wet_min);
    o.wet_max = get<double>(*t, "wet_max", w).value_or(o.wet_max);
    o.silence_duration = get<double>(*t, "silence_duration", w).value_or(o.silence_duration);
    o.burst_duration = get<double>(*t, "burst_duration", w).value_or(o.burst_duration);
    o.snr_min_db = get<double>(*t, "snr_min_db", w).value_or(o.snr_min_db);
    o.snr_max_db = get<double>(*t, "snr_max_db", w).value_or(o.snr_max_db);
    o.tone_min_hz = get<double>(*t, "tone_min_hz", w).value_or(o.tone_min_hz);
    o.tone_max_hz = get<double>(*t, "tone_max_hz", w).value_or(o.tone_max_hz);
    if (!(o.rate > 0.0 && o.rate < 1.0)) throw SchemaError(w + ": rate must lie in (0, 1)");
  }

  {
    const auto* t = subtable(doc, "render", source);
    const auto w = where_of(source, "render");
    cfg.render = t == nullptr || section_enabled(t, w);
    if (t != nullptr) {
      check_keys(*t, {"enabled", "split", "user_marker", "model_marker", "elicitation"}, w);
      if (auto v = get<std::string>(*t, "split", w)) {
        if (*v == "all") {
          cfg.render_split.reset();
        } else {
          cfg.render_split = parse_split(*v);
        }
      }
      if (auto v = get<std::string>(*t, "user_marker", w)) cfg.markers.user = *v;
      if (auto v = get<std::string>(*t, "model_marker", w)) cfg.markers.model = *v;
      if (auto v = get<std::string>(*t, "elicitation", w)) cfg.markers.elicitation = *v;
    }
  }

  {
    const auto* t = subtable(doc, "judge", source);
    const auto w = where_of(source, "judge");
    cfg.judge = t == nullptr || section_enabled(t, w);
    if (t != nullptr) {
      check_keys(*t, {"enabled", "cache"}, w);
      if (auto p = get_path(*t, "cache", base_dir, w)) cfg.cache_dir = *p;
    }
  }

  if (const auto* t = subtable(doc, "backend", source)) {
    cfg.backend = backend_from_table(*t, base_dir, where_of(source, "backend"));
  }

  {
    const auto* t = subtable(doc, "score", source);
    const auto w = where_of(source, "score");
    cfg.score = t == nullptr || section_enabled(t, w);
    if (t != nullptr) {
      check_keys(*t, {"enabled", "group_by", "bootstrap_resamples"}, w);
      const auto keys = get_strings(*t, "group_by", w);
      if (t->contains("group_by")) {
        cfg.report.group_by.clear();
        for (const auto& k : keys) {
          if (k == "dataset") {
            cfg.report.group_by.push_back(GroupKey::kDataset);
          } else if (k == "task") {
            cfg.report.group_by.push_back(GroupKey::kTask);
          } else {
            throw SchemaError(w + ": group_by accepts dataset and task");
          }
        }
      }
      if (auto v = get<std::int64_t>(*t, "bootstrap_resamples", w)) {
        cfg.report.bootstrap_resamples = to_size(*v, "bootstrap_resamples", w);
        if (cfg.report.bootstrap_resamples != 0 && cfg.report.bootstrap_resamples < 100) {
          throw SchemaError(w + ": bootstrap_resamples must be 0 or >= 100");
        }
      }
    }
  }

  if (const auto* t = subtable(doc, "robustness", source)) {
    const auto w = where_of(source, "robustness");
    check_keys(*t, {"enabled", "variants"}, w);
    cfg.robustness = section_enabled(t, w);
    if (cfg.robustness) {
      auto dir = get_path(*t, "variants", base_dir, w);
      if (!dir) throw SchemaError(w + ": variants directory is required");
      cfg.variants_dir = *dir;
    }
  }

  for (const auto& [key, node] : doc) {
    std::ostringstream text;
    if (const auto* t = node.as_table()) {
      text << toml::toml_formatter(*t);
    } else {
      text << toml::toml_formatter(toml::table{{key.str(), node}});
    }
    if (key.str() == "augment") {
      for (const auto& tmpl : cfg.plan.plan.templates) {
        text << "\n" << tmpl.id() << "\n" << tmpl.body() << "\n" << to_string(tmpl.direction())
             << "\n" << scale_to_json(tmpl.calibration()).dump() << "\n"
             << (tmpl.threshold() ? format_param(*tmpl.threshold()) : "-");
      }
    }
    if (key.str() == "backend" && cfg.backend && cfg.backend->remote) {
      text << "\n" << cfg.backend->remote->request_template;
    }
    cfg.section_digests[std::string(key.str())] = sha256_hex(text.str());
  }

  set_seed(cfg, cfg.seed);
  if ((cfg.judge || cfg.robustness) && !cfg.backend) {
    throw SchemaError(source + ": the judge and robustness stages need a [backend] section");
  }
  if (cfg.judge && !cfg.render) throw SchemaError(source + ": the judge stage needs render");
  if (cfg.score && !cfg.judge) throw SchemaError(source + ": the score stage needs judge");
  return cfg;
}

void set_seed(RunConfig& config, std::uint64_t seed) {
  config.seed = seed;
  config.synth_options.seed = derive_seed(seed, std::string_view("synth"));
  config.report.seed = derive_seed(seed, std::string_view("bootstrap"));
}

RunConfig load_run_config(const std::filesystem::path& path) {
  return parse_run_config(read_file(path), path.parent_path(), path.string());
}

}  // namespace aqeval
