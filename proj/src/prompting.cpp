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

#include "aqeval/prompting.hpp"

#include <charconv>
#include <cmath>
#include <regex>
#include <stdexcept>

#include "aqeval/augment.hpp"
#include "aqeval/digest.hpp"
#include "aqeval/error.hpp"

namespace aqeval {

using nlohmann::json;

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

void append_sentence(std::string& out, std::string_view piece) {
  const std::string t = trim(piece);
  if (t.empty()) return;
  if (!out.empty()) out += ' ';
  out += t;
}

}  // namespace

const AudioRef& RenderedPrompt::audio() const {
  for (const auto& s : segments) {
    if (s.kind == SegmentKind::kAudio) return s.audio;
  }
  throw ValidationError("prompt '" + record_id + "' has no audio segment", {record_id});
}

std::string RenderedPrompt::context_text() const {
  std::string out;
  for (const auto& s : segments) out += s.kind == SegmentKind::kText ? s.text : markers.audio;
  out += markers.model;
  return out;
}

std::string RenderedPrompt::full_sequence() const { return context_text() + target_text; }

RenderedPrompt render(const EvalRecord& record, const Markers& markers) {
  const std::string& desc = record.task.description;
  std::string before = desc;
  std::string after;
  if (const auto p = desc.find(kAudioPlaceholder); p != std::string::npos) {
    before = desc.substr(0, p);
    after = desc.substr(p + kAudioPlaceholder.size());
  }

  std::string t2;
  append_sentence(t2, after);
  if (record.additional_instruction) append_sentence(t2, *record.additional_instruction);
  append_sentence(t2, markers.elicitation);

  RenderedPrompt out;
  out.record_id = record.id;
  out.scale = record.scale();
  out.markers = markers;
  out.elicitation_suffix = markers.elicitation;
  out.segments.push_back({SegmentKind::kText, markers.user + trim(before), {}});
  out.segments.push_back({SegmentKind::kAudio, {}, record.audio});
  out.segments.push_back({SegmentKind::kText, t2, {}});
  out.target_text = format_score(record.score);
  return out;
}

Span target_span(const RenderedPrompt& prompt) {
  const std::size_t start = prompt.context_text().size();
  return {start, start + prompt.target_text.size()};
}

std::string format_score(double score) {
  if (!std::isfinite(score)) throw std::domain_error("format_score: non-finite score");
  char buf[400];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, score, std::chars_format::fixed);
  if (ec != std::errc()) throw std::domain_error("format_score: conversion failed");
  std::string s(buf, end);

  bool negative = false;
  if (!s.empty() && s[0] == '-') {
    negative = true;
    s.erase(0, 1);
  }
  const auto dot = s.find('.');
  std::string int_part = dot == std::string::npos ? s : s.substr(0, dot);
  std::string frac = dot == std::string::npos ? std::string() : s.substr(dot + 1);

  std::string kept = frac.substr(0, std::min<std::size_t>(2, frac.size()));
  while (kept.size() < 2) kept += '0';
  bool round_up = false;
  if (frac.size() > 2) {
    const char first_dropped = frac[2];
    const bool tail_nonzero = frac.find_first_not_of('0', 3) != std::string::npos;
    if (first_dropped > '5' || (first_dropped == '5' && tail_nonzero)) {
      round_up = true;
    } else if (first_dropped == '5') {
      round_up = ((kept[1] - '0') % 2) == 1;
    }
  }

  std::string digits = int_part + kept;
  if (round_up) {
    int i = static_cast<int>(digits.size()) - 1;
    while (i >= 0) {
      if (digits[static_cast<std::size_t>(i)] == '9') {
        digits[static_cast<std::size_t>(i)] = '0';
        --i;
      } else {
        ++digits[static_cast<std::size_t>(i)];
        break;
      }
    }
    if (i < 0) digits.insert(digits.begin(), '1');
  }
  std::string out = digits.substr(0, digits.size() - 2) + "." + digits.substr(digits.size() - 2);
  if (negative && out.find_first_not_of("0.") != std::string::npos) out.insert(0, "-");
  return out;
}

namespace {

const std::regex& keyword_re() {
  static const std::regex re(
      R"((?:^|[^A-Za-z])(?:score|rating)s?(?![A-Za-z])[^0-9\n\-+.]{0,40}([-+]?\d+(?:\.\d+)?))",
      std::regex::ECMAScript | std::regex::icase);
  return re;
}

const std::regex& fraction_re() {
  static const std::regex re(R"(([-+]?\d+(?:\.\d+)?)\s*/\s*(\d+(?:\.\d+)?))");
  return re;
}

const std::regex& number_re() {
  // Numerators and denominators of a fraction are not standalone.
  static const std::regex re(R"((?:^|[^A-Za-z0-9./])([-+]?\d+(?:\.\d+)?)(?![A-Za-z0-9]|\s*/))");
  return re;
}

std::optional<double> to_number(const std::string& s) {
  double v = 0.0;
  const char* b = s.data();
  if (*b == '+') ++b;
  auto [end, ec] = std::from_chars(b, s.data() + s.size(), v);
  if (ec != std::errc() || end != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

std::optional<double> in_scale(std::optional<double> v, const CalibrationScale& scale) {
  if (v && scale.contains(*v)) return v;
  return std::nullopt;
}

}  // namespace

std::optional<double> extract_score(std::string_view text, const CalibrationScale& scale) {
  const std::string s(text);

  std::optional<double> keyword;
  for (auto it = std::sregex_iterator(s.begin(), s.end(), keyword_re());
       it != std::sregex_iterator(); ++it) {
    keyword = to_number((*it)[1].str());
  }
  if (keyword) return in_scale(keyword, scale);

  for (auto it = std::sregex_iterator(s.begin(), s.end(), fraction_re());
       it != std::sregex_iterator(); ++it) {
    const auto denom = to_number((*it)[2].str());
    if (denom && *denom == scale.max) return in_scale(to_number((*it)[1].str()), scale);
  }

  for (auto it = std::sregex_iterator(s.begin(), s.end(), number_re());
       it != std::sregex_iterator(); ++it) {
    if (auto v = in_scale(to_number((*it)[1].str()), scale)) return v;
  }
  return std::nullopt;
}

json prompt_to_json(const RenderedPrompt& p, const std::filesystem::path& base_dir) {
  json segs = json::array();
  for (const auto& s : p.segments) {
    if (s.kind == SegmentKind::kText) {
      segs.push_back(json{{"kind", "text"}, {"content", s.text}});
    } else {
      auto path = s.audio.path;
      if (!base_dir.empty()) {
        path = std::filesystem::absolute(path).lexically_normal().lexically_proximate(
            std::filesystem::absolute(base_dir).lexically_normal());
      }
      segs.push_back(json{{"kind", "audio"}, {"content", path.generic_string()}});
    }
  }
  const Span span = target_span(p);
  return json{{"id", p.record_id},
              {"segments", std::move(segs)},
              {"target_text", p.target_text},
              {"target_span", json{{"start", span.start}, {"end", span.end}}},
              {"scale", scale_to_json(p.scale)},
              {"elicitation_suffix", p.elicitation_suffix},
              {"markers", json{{"user", p.markers.user},
                               {"model", p.markers.model},
                               {"audio", p.markers.audio}}}};
}

RenderedPrompt prompt_from_json(const json& j, const std::filesystem::path& base_dir) {
  RenderedPrompt p;
  try {
    p.record_id = j.at("id").get<std::string>();
    p.scale = scale_from_json(j.at("scale"));
    p.target_text = j.value("target_text", "");
    p.elicitation_suffix = j.value("elicitation_suffix", std::string(kDefaultElicitation));
    p.markers.elicitation = p.elicitation_suffix;
    if (j.contains("markers")) {
      const auto& m = j.at("markers");
      p.markers.user = m.value("user", p.markers.user);
      p.markers.model = m.value("model", p.markers.model);
      p.markers.audio = m.value("audio", p.markers.audio);
    }
    for (const auto& s : j.at("segments")) {
      const auto kind = s.at("kind").get<std::string>();
      if (kind == "text") {
        p.segments.push_back({SegmentKind::kText, s.at("content").get<std::string>(), {}});
      } else if (kind == "audio") {
        std::filesystem::path path = s.at("content").get<std::string>();
        if (path.is_relative() && !base_dir.empty()) path = base_dir / path;
        AudioRef ref;
        ref.path = path.lexically_normal();
        p.segments.push_back({SegmentKind::kAudio, {}, ref});
      } else {
        throw ParseError("unknown segment kind '" + kind + "'");
      }
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("bad prompt: ") + e.what());
  }
  return p;
}

std::vector<RenderedPrompt> read_prompts(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  std::vector<RenderedPrompt> out;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string::npos) nl = text.size();
    const std::string line = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (trim(line).empty()) continue;
    try {
      out.push_back(prompt_from_json(json::parse(line), path.parent_path()));
    } catch (const json::parse_error& e) {
      throw ParseError(std::string("malformed prompt JSON: ") + e.what(), line_no);
    } catch (const ParseError& e) {
      throw ParseError(e.what(), line_no);
    }
  }
  return out;
}

void write_prompts(const std::vector<RenderedPrompt>& prompts, const std::filesystem::path& path) {
  std::string out;
  for (const auto& p : prompts) {
    out += prompt_to_json(p, path.parent_path()).dump();
    out += '\n';
  }
  write_file_atomic(path, out);
}

}  // namespace aqeval
