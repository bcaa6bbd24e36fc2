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

#include "aqeval/augment.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <sstream>

#include "aqeval/digest.hpp"
#include "aqeval/error.hpp"
#include "aqeval/parallel.hpp"
#include "aqeval/rng.hpp"

namespace aqeval {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

void require_train(const EvalRecord& r, std::string_view op) {
  if (r.split != Split::kTrain) {
    throw IsolationError(std::string(op) + " refused on " + std::string(to_string(r.split)) +
                             " record '" + r.id + "': augmentation is train-only",
                         {r.id});
  }
}

std::size_t count_occurrences(std::string_view hay, std::string_view needle) {
  std::size_t n = 0;
  for (auto p = hay.find(needle); p != std::string_view::npos; p = hay.find(needle, p + 1)) ++n;
  return n;
}

void put_scale(AugmentationTag& tag, const std::string& prefix, const CalibrationScale& s) {
  tag.params[prefix + "min"] = format_param(s.min);
  tag.params[prefix + "max"] = format_param(s.max);
  tag.params[prefix + "kind"] = std::string(to_string(s.kind));
}

CalibrationScale get_scale(const AugmentationTag& tag, const std::string& prefix) {
  return CalibrationScale::make(parse_param(tag.param(prefix + "min")),
                                parse_param(tag.param(prefix + "max")),
                                parse_scale_kind(tag.param(prefix + "kind")));
}

// Integer scales keep whole-number scores after a rescale.
double snap_to_kind(double v, const CalibrationScale& s) {
  return s.kind == ScaleKind::kContinuous ? v : std::round(v);
}

}  // namespace

std::string_view to_string(RescaleMode m) {
  return m == RescaleMode::kProportional ? "proportional" : "affine";
}
std::string_view to_string(InvertMode m) {
  return m == InvertMode::kRangePreserving ? "range_preserving" : "literal";
}
std::string_view to_string(Direction d) {
  return d == Direction::kNormal ? "normal" : "inverted";
}

RescaleMode parse_rescale_mode(std::string_view s) {
  if (s == "proportional") return RescaleMode::kProportional;
  if (s == "affine") return RescaleMode::kAffine;
  throw ValidationError("unknown rescale mode '" + std::string(s) + "'");
}
InvertMode parse_invert_mode(std::string_view s) {
  if (s == "range_preserving") return InvertMode::kRangePreserving;
  if (s == "literal") return InvertMode::kLiteral;
  throw ValidationError("unknown invert mode '" + std::string(s) + "'");
}
Direction parse_direction(std::string_view s) {
  if (s == "normal") return Direction::kNormal;
  if (s == "inverted") return Direction::kInverted;
  throw ValidationError("unknown direction '" + std::string(s) + "'");
}

std::string format_param(double v) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

double parse_param(const std::string& s) {
  double v = 0.0;
  auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || end != s.data() + s.size()) {
    throw ValidationError("bad numeric parameter '" + s + "'");
  }
  return v;
}

Rescaled rescale_score(double score, const CalibrationScale& from, const CalibrationScale& to,
                       RescaleMode mode) {
  if (!from.contains(score)) {
    throw ValidationError("rescale: score " + format_param(score) + " outside source scale");
  }
  double v = mode == RescaleMode::kProportional
                 ? score * (to.max / from.max)
                 : to.min + (score - from.min) * (to.range() / from.range());
  Rescaled out{v, false};
  if (v < to.min || v > to.max) {
    out.value = std::clamp(v, to.min, to.max);
    out.clamped = true;
  }
  return out;
}

Inverted invert_score(double score, const CalibrationScale& scale, InvertMode mode) {
  if (!scale.contains(score)) {
    throw ValidationError("invert: score " + format_param(score) + " outside scale");
  }
  if (mode == InvertMode::kRangePreserving) return {scale.max + scale.min - score, false};
  return {scale.max - score, scale.min != 0.0};
}

int binarize_score(double score, const CalibrationScale& scale, double threshold) {
  if (!(threshold > scale.min && threshold < scale.max)) {
    throw ValidationError("binarize: threshold " + format_param(threshold) +
                          " not strictly inside the scale");
  }
  return score >= threshold ? 1 : 0;
}

EvalRecord rescale_record(const EvalRecord& record, const CalibrationScale& to,
                          RescaleMode mode) {
  require_train(record, "rescale");
  EvalRecord out = record;
  const auto r = rescale_score(record.score, record.scale(), to, mode);
  out.score = snap_to_kind(r.value, to);
  out.task.scale = to;
  AugmentationTag tag{TagKind::kRescale, {}};
  tag.params["mode"] = std::string(to_string(mode));
  put_scale(tag, "from_", record.scale());
  put_scale(tag, "to_", to);
  if (r.clamped) tag.params["clamped"] = "true";
  out.provenance.push_back(std::move(tag));
  return out;
}

EvalRecord invert_record(const EvalRecord& record, InvertMode mode) {
  require_train(record, "invert");
  EvalRecord out = record;
  const auto r = invert_score(record.score, record.scale(), mode);
  out.score = r.value;
  AugmentationTag tag{TagKind::kInvert, {}};
  tag.params["mode"] = std::string(to_string(mode));
  if (r.warning) {
    tag.params["warning"] = "literal inversion on a scale with min != 0 may leave the scale";
    // The result may be outside the old scale; widen so the record stays valid.
    if (!out.task.scale.contains(out.score)) {
      out.task.scale = CalibrationScale::make(std::min(out.score, out.task.scale.min),
                                              out.task.scale.max, ScaleKind::kContinuous);
    }
  }
  out.task.higher_is_better = !record.task.higher_is_better;
  out.provenance.push_back(std::move(tag));
  return out;
}

EvalRecord binarize_record(const EvalRecord& record, double threshold) {
  require_train(record, "binarize");
  EvalRecord out = record;
  out.score = binarize_score(record.score, record.scale(), threshold);
  out.task.scale = CalibrationScale::binary();
  AugmentationTag tag{TagKind::kBinarize, {}};
  tag.params["threshold"] = format_param(threshold);
  put_scale(tag, "from_", record.scale());
  out.provenance.push_back(std::move(tag));
  return out;
}

PromptTemplate::PromptTemplate(std::string template_id, std::string body, Direction direction,
                               CalibrationScale calibration, std::optional<double> threshold)
    : id_(std::move(template_id)),
      body_(std::move(body)),
      direction_(direction),
      calibration_(calibration),
      threshold_(threshold) {
  if (id_.empty()) throw TemplateError("template needs an id");
  const auto n = count_occurrences(body_, "{audio}");
  if (n != 1) {
    throw TemplateError("template '" + id_ + "' must contain {audio} exactly once (found " +
                            std::to_string(n) + ")",
                        {id_});
  }
  if (threshold_ && !(*threshold_ > 0.0 && *threshold_ < 1.0)) {
    throw TemplateError("template '" + id_ + "': threshold must be a fraction in (0, 1)", {id_});
  }
}

PromptTemplate PromptTemplate::parse(std::string_view text, std::string default_id) {
  std::string id = std::move(default_id);
  Direction direction = Direction::kNormal;
  CalibrationScale calibration{};
  std::optional<double> threshold;

  std::size_t pos = 0;
  std::size_t line_no = 0;
  bool found_separator = false;
  while (pos < text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    const std::string line = trim(text.substr(pos, nl - pos));
    pos = nl + 1;
    ++line_no;
    if (line == "---") {
      found_separator = true;
      break;
    }
    if (line.empty() || line[0] == '#') continue;
    const auto colon = line.find(':');
    if (colon == std::string::npos) throw ParseError("template front matter: expected key: value", line_no);
    const std::string key = trim(line.substr(0, colon));
    const std::string value = trim(line.substr(colon + 1));
    if (key == "id") {
      id = value;
    } else if (key == "direction") {
      direction = parse_direction(value);
    } else if (key == "calibration") {
      std::vector<std::string> parts;
      std::stringstream ss(value);
      for (std::string p; std::getline(ss, p, ',');) parts.push_back(trim(p));
      if (parts.size() < 2 || parts.size() > 3) {
        throw ParseError("calibration must be 'min,max[,kind]'", line_no);
      }
      calibration = CalibrationScale::make(
          parse_param(parts[0]), parse_param(parts[1]),
          parts.size() == 3 ? parse_scale_kind(parts[2]) : ScaleKind::kContinuous);
    } else if (key == "threshold") {
      threshold = parse_param(value);
    } else {
      throw ParseError("unknown template key '" + key + "'", line_no);
    }
  }
  if (!found_separator) throw ParseError("template is missing the '---' separator");
  return PromptTemplate(id, trim(text.substr(std::min(pos, text.size()))), direction,
                        calibration, threshold);
}

PromptTemplate PromptTemplate::load(const std::filesystem::path& path) {
  try {
    return parse(read_file(path), path.stem().string());
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

std::vector<PromptTemplate> load_templates(const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".txt") {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  std::vector<PromptTemplate> out;
  for (const auto& f : files) out.push_back(PromptTemplate::load(f));
  return out;
}

namespace {

std::string without_placeholder(const std::string& text) {
  std::string out;
  std::size_t pos = 0;
  while (true) {
    const auto p = text.find(kAudioPlaceholder, pos);
    if (p == std::string::npos) break;
    out.append(text, pos, p - pos);
    pos = p + kAudioPlaceholder.size();
    if (!out.empty() && out.back() == ' ' && pos < text.size() && text[pos] == ' ') ++pos;
  }
  out.append(text, pos);
  return out;
}

}  // namespace

std::string PromptTemplate::expand(const std::string& description,
                                   const CalibrationScale& target) const {
  std::string out;
  std::size_t pos = 0;
  while (pos < body_.size()) {
    const auto open = body_.find('{', pos);
    if (open == std::string::npos) {
      out.append(body_, pos);
      break;
    }
    out.append(body_, pos, open - pos);
    const auto close = body_.find('}', open);
    if (close == std::string::npos) {
      throw TemplateError("template '" + id_ + "': unterminated placeholder", {id_});
    }
    const std::string name = body_.substr(open + 1, close - open - 1);
    if (name == "description") {
      // The template fixes the audio position, so a placeholder already in
      // the description is dropped.
      out += without_placeholder(description);
    } else if (name == "min") {
      out += format_param(target.min);
    } else if (name == "max") {
      out += format_param(target.max);
    } else if (name == "audio") {
      out += kAudioPlaceholder;
    } else {
      throw TemplateError("template '" + id_ + "': unresolved placeholder {" + name + "}", {id_});
    }
    pos = close + 1;
  }
  return out;
}

namespace {

EvalRecord expand_description(const EvalRecord& record, const std::string& id,
                              const std::string& body, const CalibrationScale& target) {
  // Reconstructing through the checked constructor re-validates the body.
  const PromptTemplate tmpl(id, body, Direction::kNormal, target);
  EvalRecord out = record;
  out.task.description = tmpl.expand(record.task.description, target);
  AugmentationTag tag{TagKind::kTemplate, {}};
  tag.params["id"] = id;
  tag.params["body"] = body;
  put_scale(tag, "target_", target);
  out.provenance.push_back(std::move(tag));
  return out;
}

}  // namespace

EvalRecord apply_template(const EvalRecord& record, const PromptTemplate& tmpl,
                          const std::optional<CalibrationScale>& target, RescaleMode mode) {
  require_train(record, "apply_template");
  const CalibrationScale to = target.value_or(tmpl.calibration());
  EvalRecord out = expand_description(record, tmpl.id(), tmpl.body(), to);
  if (tmpl.direction() == Direction::kInverted) out = invert_record(out);
  if (to.kind == ScaleKind::kBinary) {
    const double frac = tmpl.threshold().value_or(0.5);
    out = binarize_record(out, out.scale().min + frac * out.scale().range());
  } else if (!(to == out.scale())) {
    out = rescale_record(out, to, mode);
  }
  return out;
}

EvalRecord paraphrase_description(const EvalRecord& record, Rewriter& rewriter,
                                  RewriteStyle style) {
  require_train(record, "paraphrase");
  AugmentationTag tag{TagKind::kParaphrase, {}};
  tag.params["style"] = std::string(to_string(style));
  tag.params["rewriter"] = rewriter.identity();

  std::string text;
  std::string failure;
  try {
    text = trim(rewriter.rewrite(record.task.description, style));
    if (text.empty()) {
      failure = "empty rewrite";
    } else if (count_occurrences(text, kAudioPlaceholder) !=
               count_occurrences(record.task.description, kAudioPlaceholder)) {
      failure = "rewrite dropped or duplicated the audio placeholder";
    }
  } catch (const std::exception& e) {
    failure = e.what();
  } catch (...) {
    failure = "unknown rewriter error";
  }

  EvalRecord out = record;
  if (failure.empty()) {
    tag.params["status"] = "applied";
    tag.params["text"] = text;
    out.task.description = std::move(text);
  } else {
    tag.params["status"] = "skipped";
    tag.params["reason"] = failure;
  }
  out.provenance.push_back(std::move(tag));
  return out;
}

EvalRecord replay_provenance(const EvalRecord& raw, std::span<const AugmentationTag> tags) {
  EvalRecord r = raw;
  for (const auto& tag : tags) {
    switch (tag.kind) {
      case TagKind::kTemplate:
        r = expand_description(r, tag.param("id"), tag.param("body"), get_scale(tag, "target_"));
        break;
      case TagKind::kInvert:
        r = invert_record(r, parse_invert_mode(tag.param("mode")));
        break;
      case TagKind::kRescale:
        r = rescale_record(r, get_scale(tag, "to_"), parse_rescale_mode(tag.param("mode")));
        break;
      case TagKind::kBinarize:
        r = binarize_record(r, parse_param(tag.param("threshold")));
        break;
      case TagKind::kParaphrase:
        require_train(r, "paraphrase");
        if (tag.param("status") == "applied") r.task.description = tag.param("text");
        r.provenance.push_back(tag);
        break;
    }
  }
  return r;
}

namespace {

// Picks k of n indices (all when k == 0 or k >= n), returned in ascending
// order so output order does not depend on the draw.
std::vector<std::size_t> choose(std::size_t n, std::size_t k, Rng& rng) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  if (k == 0 || k >= n) return idx;
  rng.shuffle(idx);
  idx.resize(k);
  std::sort(idx.begin(), idx.end());
  return idx;
}

struct RewriteJob {
  std::size_t slot;
  EvalRecord base;
  RewriteStyle style;
};

}  // namespace

std::vector<EvalRecord> augment_corpus(std::span<const EvalRecord> records,
                                       const AugmentationPlan& plan, std::uint64_t seed,
                                       Rewriter* rewriter) {
  RuleBasedRewriter fallback;
  Rewriter& rw = rewriter ? *rewriter : fallback;

  std::vector<const PromptTemplate*> usable;
  for (const auto& t : plan.templates) {
    if (plan.include_inverted || t.direction() == Direction::kNormal) usable.push_back(&t);
  }

  std::vector<EvalRecord> out;
  out.reserve(records.size());
  std::vector<RewriteJob> jobs;

  for (const auto& record : records) {
    out.push_back(record);
    if (record.split != Split::kTrain) continue;

    Rng rng(derive_seed(seed, record.id));
    std::size_t counter = 0;
    auto next_id = [&] { return record.id + "#a" + std::to_string(++counter); };

    std::vector<EvalRecord> templated;
    for (std::size_t ti : choose(usable.size(), plan.templates_per_record, rng)) {
      const auto& tmpl = *usable[ti];
      if (plan.calibrations.empty()) {
        templated.push_back(apply_template(record, tmpl, std::nullopt, plan.rescale_mode));
      } else {
        for (const auto& cal : plan.calibrations) {
          templated.push_back(apply_template(record, tmpl, cal, plan.rescale_mode));
        }
      }
    }
    for (auto& t : templated) {
      t.id = next_id();
      t.origin_id = record.origin_id;
      out.push_back(t);
    }

    if (plan.paraphrases_per_record == 0 || plan.paraphrase_styles.empty()) continue;
    std::vector<EvalRecord> bases = templated.empty() ? std::vector<EvalRecord>{record} : templated;
    for (const auto& base : bases) {
      for (std::size_t si : choose(plan.paraphrase_styles.size(), plan.paraphrases_per_record, rng)) {
        EvalRecord placeholder = base;
        placeholder.id = next_id();
        placeholder.origin_id = record.origin_id;
        jobs.push_back({out.size(), placeholder, plan.paraphrase_styles[si]});
        out.push_back(std::move(placeholder));
      }
    }
  }

  bounded_parallel_for(jobs.size(), plan.rewrite_concurrency, [&](std::size_t j) {
    auto& job = jobs[j];
    out[job.slot] = paraphrase_description(job.base, rw, job.style);
  });
  return out;
}

}  // namespace aqeval
