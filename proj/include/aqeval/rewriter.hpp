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

#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace aqeval {

enum class RewriteStyle { kShorten, kExpand, kRestructure, kHeavy };

std::string_view to_string(RewriteStyle s);
RewriteStyle parse_rewrite_style(std::string_view s);

// Rewrites a task description in a given style. Implementations may throw;
// callers treat any exception or empty output as a skipped rewrite.
class Rewriter {
 public:
  virtual ~Rewriter() = default;
  virtual std::string rewrite(const std::string& text, RewriteStyle style) = 0;
  // Stamped into provenance.
  virtual std::string identity() const = 0;
};

// Offline fallback built from sentence reordering and a synonym table.
//   shorten:     first and last sentence (first only for two sentences)
//   expand:      original text plus one clarifying sentence
//   restructure: first sentence moved to the end
//   heavy:       synonym substitution applied to the restructured text
class RuleBasedRewriter final : public Rewriter {
 public:
  RuleBasedRewriter();
  std::string rewrite(const std::string& text, RewriteStyle style) override;
  std::string identity() const override { return "rule-based/1"; }

 private:
  std::map<std::string, std::string> synonyms_;
};

struct RemoteEndpoint;

// Asks a remote LLM for the rewrite through the judge HTTP client. The
// request template sees {{text}}, {{style}} and {{instruction}}.
class RemoteRewriter final : public Rewriter {
 public:
  explicit RemoteRewriter(std::shared_ptr<const RemoteEndpoint> endpoint);
  std::string rewrite(const std::string& text, RewriteStyle style) override;
  std::string identity() const override;

 private:
  std::shared_ptr<const RemoteEndpoint> endpoint_;
};

// Splits on '.', '!' or '?' followed by whitespace; terminators stay with
// their sentence and surrounding whitespace is trimmed.
std::vector<std::string> split_sentences(std::string_view text);

}  // namespace aqeval
