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

// Correlation between judge scores and human labels. Utterance-level only:
// no per-system averaging is performed.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "aqeval/corpus.hpp"
#include "aqeval/judges.hpp"

namespace aqeval {

// Pearson correlation with two-pass mean-centred sums accumulated left to
// right. Returns nullopt when either input has zero variance. Throws
// std::invalid_argument on length mismatch or fewer than two points.
std::optional<double> pearson(std::span<const double> x, std::span<const double> y);

// Pearson of average ranks (ties share the mean of the positions they span).
std::optional<double> spearman(std::span<const double> x, std::span<const double> y);

// 1-based fractional ranks.
std::vector<double> average_ranks(std::span<const double> v);

enum class Metric { kPcc, kSrcc };

struct PairedSample {
  std::string record_id;
  double human_score = 0.0;
  double judge_score = 0.0;
};

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  std::size_t skipped = 0;  // degenerate resamples that were redrawn
};

// Percentile 2.5 / 97.5 interval (linear interpolation between order
// statistics) over seeded resamples with replacement. Requires
// resamples >= 100 and at least 5 pairs. Returns nullopt when the input
// itself has no defined correlation.
std::optional<Interval> bootstrap_ci(std::span<const PairedSample> pairs, Metric metric,
                                     std::size_t resamples, std::uint64_t seed,
                                     bool parallel = true);

struct CorrelationReport {
  std::string task_id;
  std::string dataset;
  std::size_t n_pairs = 0;
  std::size_t n_failures = 0;
  std::optional<double> pcc;
  std::optional<double> srcc;
  std::optional<Interval> pcc_ci;
  std::optional<Interval> srcc_ci;
  std::string note;  // reason a correlation is undefined
};

enum class GroupKey { kDataset, kTask };

struct ReportOptions {
  std::vector<GroupKey> group_by{GroupKey::kDataset, GroupKey::kTask};
  std::size_t bootstrap_resamples = 0;  // 0 disables confidence intervals
  std::uint64_t seed = 0;
};

// Joins responses to records by id and emits one report per group, ordered
// by dataset then task_id. Throws ReferenceError listing orphan response ids.
std::vector<CorrelationReport> build_report(std::span<const JudgeResponse> responses,
                                            std::span<const EvalRecord> records,
                                            const ReportOptions& options = {});

std::string report_csv(std::span<const CorrelationReport> reports);
std::string report_markdown(std::span<const CorrelationReport> reports,
                            const std::string& backend_identity = {});

// Fixed four-decimal rendering used in reports; "undefined" for nullopt.
std::string format_metric(std::optional<double> v);

}  // namespace aqeval
