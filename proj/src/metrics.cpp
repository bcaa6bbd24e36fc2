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

#include "aqeval/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>

#include "aqeval/error.hpp"
#include "aqeval/kernels.hpp"

namespace aqeval {

namespace {

void check_inputs(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw std::invalid_argument("correlation: length mismatch");
  if (x.size() < 2) throw std::invalid_argument("correlation: need at least two points");
}

double mean_of(std::span<const double> v) {
  double s = 0.0;
  for (double a : v) s += a;
  return s / static_cast<double>(v.size());
}

}  // namespace

std::optional<double> pearson(std::span<const double> x, std::span<const double> y) {
  check_inputs(x, y);
  const double mx = mean_of(x);
  const double my = mean_of(y);
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) return std::nullopt;
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

std::vector<double> average_ranks(std::span<const double> v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    // Positions i..j (0-based) share rank mean(i+1 .. j+1).
    const double r = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

std::optional<double> spearman(std::span<const double> x, std::span<const double> y) {
  check_inputs(x, y);
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  return pearson(rx, ry);
}

namespace {

double percentile(const std::vector<double>& sorted, double p) {
  if (sorted.size() == 1) return sorted.front();
  const double h = p * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

}  // namespace

std::optional<Interval> bootstrap_ci(std::span<const PairedSample> pairs, Metric metric,
                                     std::size_t resamples, std::uint64_t seed, bool parallel) {
  if (resamples < 100) throw std::invalid_argument("bootstrap_ci: resamples must be >= 100");
  if (pairs.size() < 5) throw std::invalid_argument("bootstrap_ci: need at least 5 pairs");
  std::vector<double> human;
  std::vector<double> judged;
  for (const auto& p : pairs) {
    human.push_back(p.human_score);
    judged.push_back(p.judge_score);
  }
  const kernels::PairStatistic stat = metric == Metric::kPcc ? &pearson : &spearman;
  if (!stat(human, judged)) return std::nullopt;

  constexpr std::size_t kMaxAttempts = 16;
  const auto run = parallel ? &kernels::omp::bootstrap : &kernels::serial::bootstrap;
  const auto out = run(human, judged, stat, resamples, seed, kMaxAttempts);
  if (out.values.empty()) return std::nullopt;
  return Interval{percentile(out.values, 0.025), percentile(out.values, 0.975), out.skipped};
}

std::vector<CorrelationReport> build_report(std::span<const JudgeResponse> responses,
                                            std::span<const EvalRecord> records,
                                            const ReportOptions& options) {
  std::map<std::string, const EvalRecord*, std::less<>> by_id;
  for (const auto& r : records) by_id.emplace(r.id, &r);

  std::vector<std::string> orphans;
  for (const auto& resp : responses) {
    if (!by_id.count(resp.record_id)) orphans.push_back(resp.record_id);
  }
  if (!orphans.empty()) {
    std::string msg = "responses without a matching record:";
    for (const auto& id : orphans) msg += " " + id;
    throw ReferenceError(msg, orphans);
  }

  const bool by_dataset = std::find(options.group_by.begin(), options.group_by.end(),
                                    GroupKey::kDataset) != options.group_by.end();
  const bool by_task = std::find(options.group_by.begin(), options.group_by.end(),
                                 GroupKey::kTask) != options.group_by.end();

  struct Group {
    std::vector<PairedSample> pairs;
    std::size_t failures = 0;
  };
  std::map<std::pair<std::string, std::string>, Group> groups;
  for (const auto& resp : responses) {
    const EvalRecord& rec = *by_id.at(resp.record_id);
    auto& g = groups[{by_dataset ? rec.source : "*", by_task ? rec.task.task_id : "*"}];
    if (resp.extracted_score) {
      g.pairs.push_back({rec.id, rec.score, *resp.extracted_score});
    } else {
      ++g.failures;
    }
  }

  std::vector<CorrelationReport> out;
  for (const auto& [key, g] : groups) {
    CorrelationReport rep;
    rep.dataset = key.first;
    rep.task_id = key.second;
    rep.n_pairs = g.pairs.size();
    rep.n_failures = g.failures;
    if (rep.n_pairs < 2) {
      rep.note = "fewer than 2 scored pairs";
      out.push_back(std::move(rep));
      continue;
    }
    std::vector<double> human;
    std::vector<double> judged;
    for (const auto& p : g.pairs) {
      human.push_back(p.human_score);
      judged.push_back(p.judge_score);
    }
    rep.pcc = pearson(human, judged);
    rep.srcc = spearman(human, judged);
    if (!rep.pcc || !rep.srcc) rep.note = "constant scores; correlation undefined";
    if (options.bootstrap_resamples >= 100 && rep.n_pairs >= 5) {
      const auto seed = options.seed;
      if (rep.pcc) rep.pcc_ci = bootstrap_ci(g.pairs, Metric::kPcc, options.bootstrap_resamples, seed);
      if (rep.srcc) {
        rep.srcc_ci = bootstrap_ci(g.pairs, Metric::kSrcc, options.bootstrap_resamples, seed);
      }
    }
    out.push_back(std::move(rep));
  }
  return out;
}

std::string format_metric(std::optional<double> v) {
  if (!v) return "undefined";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", *v);
  std::string s(buf);
  if (s == "-0.0000") s = "0.0000";
  return s;
}

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::optional<double> lo(const std::optional<Interval>& i) {
  return i ? std::optional<double>(i->lo) : std::nullopt;
}
std::optional<double> hi(const std::optional<Interval>& i) {
  return i ? std::optional<double>(i->hi) : std::nullopt;
}

}  // namespace

std::string report_csv(std::span<const CorrelationReport> reports) {
  std::ostringstream out;
  out << "dataset,task_id,n_pairs,n_failures,pcc,srcc,pcc_lo,pcc_hi,srcc_lo,srcc_hi,note\n";
  for (const auto& r : reports) {
    out << csv_field(r.dataset) << ',' << csv_field(r.task_id) << ',' << r.n_pairs << ','
        << r.n_failures << ',' << format_metric(r.pcc) << ',' << format_metric(r.srcc) << ','
        << (r.pcc_ci ? format_metric(lo(r.pcc_ci)) : "") << ','
        << (r.pcc_ci ? format_metric(hi(r.pcc_ci)) : "") << ','
        << (r.srcc_ci ? format_metric(lo(r.srcc_ci)) : "") << ','
        << (r.srcc_ci ? format_metric(hi(r.srcc_ci)) : "") << ',' << csv_field(r.note) << '\n';
  }
  return out.str();
}

std::string report_markdown(std::span<const CorrelationReport> reports,
                            const std::string& backend_identity) {
  std::ostringstream out;
  out << "# Correlation with human labels\n\n";
  if (!backend_identity.empty()) out << "Judge: `" << backend_identity << "`\n\n";
  out << "Utterance-level correlations; no per-system averaging.\n\n";
  out << "| Dataset | Task | N | Failures | PCC | SRCC | PCC 95% CI | SRCC 95% CI |\n";
  out << "|---|---|---:|---:|---:|---:|---|---|\n";
  auto ci = [](const std::optional<Interval>& i) {
    return i ? "[" + format_metric(i->lo) + ", " + format_metric(i->hi) + "]" : std::string("-");
  };
  for (const auto& r : reports) {
    out << "| " << r.dataset << " | " << r.task_id << " | " << r.n_pairs << " | "
        << r.n_failures << " | " << format_metric(r.pcc) << " | " << format_metric(r.srcc)
        << " | " << ci(r.pcc_ci) << " | " << ci(r.srcc_ci) << " |\n";
  }
  bool any_note = false;
  for (const auto& r : reports) {
    if (r.note.empty()) continue;
    if (!any_note) out << "\nNotes:\n\n";
    any_note = true;
    out << "- " << r.dataset << " / " << r.task_id << ": " << r.note << "\n";
  }
  return out.str();
}

}  // namespace aqeval
