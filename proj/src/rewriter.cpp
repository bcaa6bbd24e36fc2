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

#include "aqeval/rewriter.hpp"

#include <algorithm>
#include <cctype>

#include "aqeval/error.hpp"
#include "aqeval/judges.hpp"

namespace aqeval {

std::string_view to_string(RewriteStyle s) {
  switch (s) {
    case RewriteStyle::kShorten: return "shorten";
    case RewriteStyle::kExpand: return "expand";
    case RewriteStyle::kRestructure: return "restructure";
    case RewriteStyle::kHeavy: return "heavy";
  }
  return "?";
}

RewriteStyle parse_rewrite_style(std::string_view s) {
  if (s == "shorten") return RewriteStyle::kShorten;
  if (s == "expand") return RewriteStyle::kExpand;
  if (s == "restructure") return RewriteStyle::kRestructure;
  if (s == "heavy") return RewriteStyle::kHeavy;
  throw ValidationError("unknown rewrite style '" + std::string(s) + "'");
}

std::vector<std::string> split_sentences(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (std::size_t i = 0; i < text.size(); ++i) {
    cur += text[i];
    const bool terminator = text[i] == '.' || text[i] == '!' || text[i] == '?';
    const bool boundary = i + 1 == text.size() || std::isspace(static_cast<unsigned char>(text[i + 1]));
    if (terminator && boundary) {
      out.push_back(cur);
      cur.clear();
    }
  }
  out.push_back(cur);
  std::vector<std::string> trimmed;
  for (auto& s : out) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) continue;
    const auto e = s.find_last_not_of(" \t\r\n");
    trimmed.push_back(s.substr(b, e - b + 1));
  }
  return trimmed;
}

namespace {

std::string join(const std::vector<std::string>& parts) {
  std::string out;
  for (const auto& p : parts) {
    if (!out.empty()) out += ' ';
    out += p;
  }
  return out;
}

bool is_word_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

// Whole-word, case-preserving-on-first-letter substitution.
std::string substitute(const std::string& text, const std::map<std::string, std::string>& table) {
  std::string out;
  std::size_t i = 0;
  while (i < text.size()) {
    if (!is_word_char(text[i])) {
      out += text[i++];
      continue;
    }
    std::size_t j = i;
    while (j < text.size() && is_word_char(text[j])) ++j;
    std::string word = text.substr(i, j - i);
    std::string lower = word;
    std::transform(lower.begin(), lower.end(), lower.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    auto it = table.find(lower);
    if (it != table.end()) {
      std::string repl = it->second;
      if (std::isupper(static_cast<unsigned char>(word[0]))) {
        repl[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(repl[0])));
      }
      out += repl;
    } else {
      out += word;
    }
    i = j;
  }
  return out;
}

}  // namespace

RuleBasedRewriter::RuleBasedRewriter()
    : synonyms_{{"evaluate", "assess"},   {"assess", "judge"},       {"rate", "score"},
                {"score", "rating"},      {"quality", "fidelity"},   {"audio", "recording"},
                {"recording", "clip"},    {"speech", "voice"},       {"noise", "interference"},
                {"clear", "clean"},       {"predict", "estimate"},   {"higher", "larger"},
                {"lower", "smaller"},     {"indicates", "means"},    {"severe", "strong"},
                {"listen", "attend"},     {"overall", "general"},    {"naturalness", "natural feel"},
                {"distortion", "artifacts"}, {"please", "kindly"}} {}

std::string RuleBasedRewriter::rewrite(const std::string& text, RewriteStyle style) {
  auto sentences = split_sentences(text);
  if (sentences.empty()) return {};
  switch (style) {
    case RewriteStyle::kShorten:
      if (sentences.size() == 2) return sentences.front();
      if (sentences.size() > 2) return sentences.front() + " " + sentences.back();
      return sentences.front();
    case RewriteStyle::kExpand:
      sentences.push_back("Listen to the entire recording before deciding on the score.");
      return join(sentences);
    case RewriteStyle::kRestructure:
      std::rotate(sentences.begin(), sentences.begin() + 1, sentences.end());
      return join(sentences);
    case RewriteStyle::kHeavy:
      std::rotate(sentences.begin(), sentences.begin() + 1, sentences.end());
      return substitute(join(sentences), synonyms_);
  }
  return {};
}

namespace {

std::string style_instruction(RewriteStyle s) {
  switch (s) {
    case RewriteStyle::kShorten:
      return "Shorten the following evaluation instruction while keeping its meaning and scale.";
    case RewriteStyle::kExpand:
      return "Expand the following evaluation instruction with more detail, keeping its meaning "
             "and scale.";
    case RewriteStyle::kRestructure:
      return "Restructure the following evaluation instruction with a different sentence order "
             "and grammar, keeping its meaning and scale.";
    case RewriteStyle::kHeavy:
      return "Heavily paraphrase the following evaluation instruction, keeping its meaning and "
             "scale.";
  }
  return {};
}

}  // namespace

RemoteRewriter::RemoteRewriter(std::shared_ptr<const RemoteEndpoint> endpoint)
    : endpoint_(std::move(endpoint)) {
  if (!endpoint_) throw ValidationError("remote rewriter needs an endpoint");
}

std::string RemoteRewriter::identity() const { return "remote/" + endpoint_->identity; }

std::string RemoteRewriter::rewrite(const std::string& text, RewriteStyle style) {
  const TemplateValues values{{"text", text},
                              {"style", std::string(to_string(style))},
                              {"instruction", style_instruction(style)}};
  const auto reply = post_json(*endpoint_, render_request(endpoint_->request_template, values));
  if (!reply.ok()) throw IoError("rewrite request failed: " + reply.error);
  return response_text(*endpoint_, reply.body);
}

}  // namespace aqeval
