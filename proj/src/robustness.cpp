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

#include "aqeval/robustness.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "aqeval/augment.hpp"
#include "aqeval/digest.hpp"
#include "aqeval/error.hpp"
#include "aqeval/metrics.hpp"
#include "aqeval/prompting.hpp"
#include "toml.hpp"

namespace aqeval {

std::string_view to_string(VariantStyle s) {
  switch (s) {
    case VariantStyle::kOriginal: return "original";
    case VariantStyle::kShort: return "short";
    case VariantStyle::kLong: return "long";
    case VariantStyle::kRestructured: return "restructured";
    case VariantStyle::kDetailed: return "detailed";
    case VariantStyle::kInverted: return "inverted";
  }
  return "?";
}

VariantStyle parse_variant_style(std::string_view s) {
  for (auto v : {VariantStyle::kOriginal, VariantStyle::kShort, VariantStyle::kLong,
                 VariantStyle::kRestructured, VariantStyle::kDetailed, VariantStyle::kInverted}) {
    if (to_string(v) == s) return v;
  }
  throw ValidationError("unknown variant style '" + std::string(s) + "'");
}

const Variant& VariantSet::original() const {
  for (const auto& v : variants) {
    if (v.style == VariantStyle::kOriginal) return v;
  }
  throw ValidationError("variant set for " + task_id + " has no original");
}

VariantSet parse_variants(std::string_view toml_text, const std::string& source) {
  toml::table doc;
  try {
    doc = toml::parse(toml_text, source);
  } catch (const toml::parse_error& e) {
    throw ParseError(source + ": " + std::string(e.description()), e.source().begin.line);
  }
  VariantSet set;
  const auto task_id = doc["task_id"].value<std::string>();
  if (!task_id || task_id->empty()) throw SchemaError(source + ": missing task_id");
  set.task_id = *task_id;

  const auto* list = doc["variant"].as_array();
  if (list == nullptr) throw SchemaError(source + ": no [[variant]] entries");
  std::set<VariantStyle> seen;
  for (const auto& node : *list) {
    const auto* t = node.as_table();
    if (t == nullptr) throw SchemaError(source + ": [[variant]] entries must be tables");
    const auto style = (*t)["style"].value<std::string>();
    const auto text = (*t)["description"].value<std::string>();
    if (!style) throw SchemaError(source + ": variant without a style");
    if (!text || text->empty()) {
      throw SchemaError(source + ": variant '" + *style + "' has no description");
    }
    Variant v{parse_variant_style(*style), *text};
    if (!seen.insert(v.style).second) {
      throw ValidationError(source + ": duplicate variant style '" + *style + "'");
    }
    set.variants.push_back(std::move(v));
  }
  if (!seen.count(VariantStyle::kOriginal)) {
    throw ValidationError(source + ": variant set lacks an original");
  }
  return set;
}

VariantSet load_variants(const std::filesystem::path& path) {
  return parse_variants(read_file(path), path.string());
}

std::vector<VariantSet> load_variant_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  if (!std::filesystem::is_directory(dir, ec)) {
    throw IoError("variants directory " + dir.string() + " does not exist");
  }
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".toml") {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  std::vector<VariantSet> out;
  std::set<std::string> tasks;
  for (const auto& f : files) {
    out.push_back(load_variants(f));
    if (!tasks.insert(out.back().task_id).second) {
      throw ValidationError("two variant files for task " + out.back().task_id);
    }
  }
  return out;
}

SweepResult run_sweep(std::span<const EvalRecord> records, const VariantSet& variants,
                      const JudgeFactory& make_judge, const BatchOptions& options) {
  SweepResult sweep;
  sweep.task_id = variants.task_id;
  std::vector<std::string> foreign;
  for (const auto& r : records) {
    if (r.task.task_id != variants.task_id) foreign.push_back(r.id);
    sweep.record_ids.push_back(r.id);
    sweep.human.push_back(r.score);
  }
  if (!foreign.empty()) {
    throw ValidationError("records outside task " + variants.task_id + " in sweep", foreign);
  }

  for (std::size_t v = 0; v < variants.variants.size(); ++v) {
    const Variant& variant = variants.variants[v];
    std::vector<RenderedPrompt> prompts;
    prompts.reserve(records.size());
    for (const auto& r : records) {
      EvalRecord copy = r;
      copy.task.description = variant.description;
      prompts.push_back(render(copy));
    }
    auto judge = make_judge(variant, v);
    const BatchResult batch = judge_batch(prompts, *judge, options);

    VariantScores scores;
    scores.variant = variant;
    scores.backend = judge->identity();
    scores.failures = batch.failures;
    for (std::size_t i = 0; i < records.size(); ++i) {
      const auto& s = batch.responses[i].extracted_score;
      scores.raw.push_back(s);
      if (s && variant.inverted()) {
        scores.oriented.push_back(
            invert_score(*s, records[i].scale(), InvertMode::kRangePreserving).value);
      } else {
        scores.oriented.push_back(s);
      }
    }
    sweep.variants.push_back(std::move(scores));
  }
  return sweep;
}

namespace {

struct PairStat {
  std::optional<double> srcc;
  std::size_t n = 0;
};

PairStat paired_srcc(const std::vector<std::optional<double>>& a,
                     const std::vector<std::optional<double>>& b) {
  std::vector<double> x;
  std::vector<double> y;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] && b[i]) {
      x.push_back(*a[i]);
      y.push_back(*b[i]);
    }
  }
  PairStat out;
  out.n = x.size();
  if (out.n >= 2) out.srcc = spearman(x, y);
  return out;
}

}  // namespace

StabilityReport stability_report(const SweepResult& sweep) {
  const std::size_t k = sweep.variants.size();
  if (k < 2) throw ValidationError("stability report for " + sweep.task_id + " needs >= 2 variants");
  StabilityReport rep;
  rep.task_id = sweep.task_id;
  rep.matrix.assign(k, std::vector<std::optional<double>>(k));
  rep.pair_counts.assign(k, std::vector<std::size_t>(k, 0));

  std::vector<std::optional<double>> human(sweep.human.begin(), sweep.human.end());
  for (std::size_t i = 0; i < k; ++i) {
    const auto& vi = sweep.variants[i];
    rep.styles.push_back(vi.variant.style);
    rep.failures += vi.failures;
    rep.human_srcc.push_back(paired_srcc(human, vi.oriented).srcc);
    std::size_t scored = 0;
    for (const auto& s : vi.oriented) scored += s ? 1 : 0;
    rep.matrix[i][i] = 1.0;
    rep.pair_counts[i][i] = scored;
    for (std::size_t j = i + 1; j < k; ++j) {
      const auto p = paired_srcc(vi.oriented, sweep.variants[j].oriented);
      rep.matrix[i][j] = rep.matrix[j][i] = p.srcc;
      rep.pair_counts[i][j] = rep.pair_counts[j][i] = p.n;
    }
  }

  // Summed in sorted order so the index does not depend on variant order.
  std::vector<double> cells;
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = i + 1; j < k; ++j) {
      if (sweep.variants[i].variant.inverted() || sweep.variants[j].variant.inverted()) continue;
      if (rep.matrix[i][j]) cells.push_back(*rep.matrix[i][j]);
    }
  }
  if (!cells.empty()) {
    std::sort(cells.begin(), cells.end());
    double sum = 0.0;
    for (double c : cells) sum += c;
    rep.consistency_index = sum / static_cast<double>(cells.size());
  }

  const VariantScores* original = nullptr;
  const VariantScores* inverted = nullptr;
  for (const auto& v : sweep.variants) {
    if (v.variant.style == VariantStyle::kOriginal) original = &v;
    if (v.variant.inverted()) inverted = &v;
  }
  if (original && inverted) {
    rep.inverted_check_raw = paired_srcc(original->raw, inverted->raw).srcc;
    rep.inverted_check_oriented = paired_srcc(original->oriented, inverted->oriented).srcc;
  }
  return rep;
}

std::string stability_csv(std::span<const StabilityReport> reports) {
  std::ostringstream out;
  out << "task_id,kind,variant_a,variant_b,value,n\n";
  for (const auto& r : reports) {
    const std::size_t k = r.styles.size();
    for (std::size_t i = 0; i < k; ++i) {
      out << r.task_id << ",human_srcc," << to_string(r.styles[i]) << ",,"
          << format_metric(r.human_srcc[i]) << "," << r.pair_counts[i][i] << "\n";
    }
    for (std::size_t i = 0; i < k; ++i) {
      for (std::size_t j = 0; j < k; ++j) {
        out << r.task_id << ",matrix," << to_string(r.styles[i]) << "," << to_string(r.styles[j])
            << "," << format_metric(r.matrix[i][j]) << "," << r.pair_counts[i][j] << "\n";
      }
    }
    out << r.task_id << ",consistency_index,,," << format_metric(r.consistency_index) << ",\n";
    if (r.inverted_check_raw || r.inverted_check_oriented) {
      out << r.task_id << ",inverted_check_raw,original,inverted,"
          << format_metric(r.inverted_check_raw) << ",\n";
      out << r.task_id << ",inverted_check_oriented,original,inverted,"
          << format_metric(r.inverted_check_oriented) << ",\n";
    }
    out << r.task_id << ",failures,,," << r.failures << ",\n";
  }
  return out.str();
}

std::string stability_markdown(std::span<const StabilityReport> reports) {
  std::ostringstream out;
  out << "# Prompt robustness\n\n";
  out << "Pairwise Spearman correlation between variants; inverted variants are flipped "
         "back to the original orientation before comparison.\n";
  for (const auto& r : reports) {
    out << "\n## " << r.task_id << "\n\n|  |";
    for (auto s : r.styles) out << " " << to_string(s) << " |";
    out << "\n|---|";
    for (std::size_t i = 0; i < r.styles.size(); ++i) out << "---:|";
    out << "\n";
    for (std::size_t i = 0; i < r.styles.size(); ++i) {
      out << "| " << to_string(r.styles[i]) << " |";
      for (std::size_t j = 0; j < r.styles.size(); ++j) out << " " << format_metric(r.matrix[i][j]) << " |";
      out << "\n";
    }
    out << "\n- consistency index: " << format_metric(r.consistency_index) << "\n";
    if (r.inverted_check_raw || r.inverted_check_oriented) {
      out << "- inverted check: " << format_metric(r.inverted_check_raw) << " raw, "
          << format_metric(r.inverted_check_oriented) << " after flip\n";
    }
    out << "- SRCC vs human labels:";
    for (std::size_t i = 0; i < r.styles.size(); ++i) {
      out << (i ? ", " : " ") << to_string(r.styles[i]) << " " << format_metric(r.human_srcc[i]);
    }
    out << "\n- failed judgements: " << r.failures << "\n";
  }
  return out.str();
}

}  // namespace aqeval
