// Copyright 2026 The HDG Toolkit Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "hdg/metrics.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>
#include <unordered_set>

#include "json.hpp"

namespace hdg {

using json = nlohmann::ordered_json;

double AccuracyKnown(const PredictionSet& predictions, const std::vector<std::string>& known) {
  const std::unordered_set<std::string> known_set(known.begin(), known.end());
  std::size_t total = 0;
  std::size_t correct = 0;
  for (const auto& row : predictions.rows) {
    if (!known_set.contains(row.true_class)) continue;
    ++total;
    if (row.predicted && predictions.class_order.at(*row.predicted) == row.true_class) ++correct;
  }
  if (total == 0) throw Error(ErrorCode::kEmptyInput, "no known-class samples among the predictions");
  return static_cast<double>(correct) / static_cast<double>(total);
}

double AccuracyUnknown(const PredictionSet& predictions, const std::vector<std::string>& unknown) {
  const std::unordered_set<std::string> unknown_set(unknown.begin(), unknown.end());
  std::size_t total = 0;
  std::size_t rejected = 0;
  for (const auto& row : predictions.rows) {
    if (!unknown_set.contains(row.true_class)) continue;
    ++total;
    if (!row.predicted) ++rejected;
  }
  if (total == 0) throw Error(ErrorCode::kEmptyInput, "no unknown-class samples among the predictions");
  return static_cast<double>(rejected) / static_cast<double>(total);
}

double HScore(double acc_known, double acc_unknown) {
  if (acc_known <= 0.0 || acc_unknown <= 0.0) return 0.0;
  return 2.0 * acc_known * acc_unknown / (acc_known + acc_unknown);
}

double H2Cv(const std::vector<double>& values) {
  if (values.empty()) throw Error(ErrorCode::kEmptyInput, "H2-CV of an empty series");
  const auto n = static_cast<double>(values.size());
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= n;
  if (!(mean > 0.0)) throw Error(ErrorCode::kZeroMean, "H2-CV needs a positive mean");
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  var /= n;
  return std::sqrt(var) / mean * 100.0;
}

double H2Cv(const MetricSeries& series) { return H2Cv(series.values); }

EvalReport Aggregate(const std::vector<TaskResult>& results, const std::vector<std::string>& expected_domains) {
  if (results.empty()) throw Error(ErrorCode::kEmptyInput, "no task results to aggregate");
  std::set<std::string> domains(expected_domains.begin(), expected_domains.end());
  std::set<Rational> levels;
  std::map<std::pair<std::string, Rational>, CellMetrics> cells;
  for (const auto& r : results) {
    domains.insert(r.target_domain);
    levels.insert(r.level);
    if (!cells.emplace(std::make_pair(r.target_domain, r.level), r.metrics).second) {
      throw Error(ErrorCode::kInvalidArgument, "duplicate result", r.target_domain + " @ H=" + r.level.ToString());
    }
  }

  EvalReport report;
  report.domains.assign(domains.begin(), domains.end());
  report.levels.assign(levels.begin(), levels.end());
  for (const auto& d : report.domains) {
    std::vector<CellMetrics> row;
    for (const auto& l : report.levels) {
      auto it = cells.find({d, l});
      if (it == cells.end()) {
        throw Error(ErrorCode::kIncompleteGrid, "missing result for target domain '" + d + "' at hybridness " + l.ToString(),
                    d + " @ H=" + l.ToString());
      }
      row.push_back(it->second);
    }
    report.grid.push_back(std::move(row));
  }

  const auto num_domains = static_cast<double>(report.domains.size());
  std::vector<double> level_h;
  for (std::size_t l = 0; l < report.levels.size(); ++l) {
    CellMetrics avg;
    for (std::size_t d = 0; d < report.domains.size(); ++d) {
      avg.acc_known += report.grid[d][l].acc_known;
      avg.acc_unknown += report.grid[d][l].acc_unknown;
      avg.h_score += report.grid[d][l].h_score;
    }
    avg.acc_known /= num_domains;
    avg.acc_unknown /= num_domains;
    avg.h_score /= num_domains;
    report.averages.push_back(avg);
    level_h.push_back(avg.h_score);
  }
  const auto num_levels = static_cast<double>(report.levels.size());
  for (const auto& avg : report.averages) {
    report.mean_acc += avg.acc_known / num_levels;
    report.mean_h += avg.h_score / num_levels;
  }
  report.h2_cv = report.mean_h > 0.0 ? H2Cv(level_h) : 0.0;
  return report;
}

namespace {

std::string Pct(double fraction) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", fraction * 100.0);
  return buf;
}

std::string Pad(const std::string& s, std::size_t width) {
  return s.size() >= width ? s : std::string(width - s.size(), ' ') + s;
}

}  // namespace

std::string RenderReportTable(const EvalReport& report, const std::string& title) {
  std::size_t name_width = std::max<std::size_t>(7, title.size());
  for (const auto& d : report.domains) name_width = std::max(name_width, d.size());
  constexpr std::size_t kCol = 8;

  std::ostringstream os;
  os << std::string(name_width, ' ');
  for (const auto& l : report.levels) {
    const std::string head = "H=" + l.ToString();
    os << " | " << Pad(head, 2 * kCol + 1);
  }
  os << " | " << Pad("Average", 2 * kCol + 1) << " | " << Pad("H2-CV", kCol) << '\n';

  os << title << std::string(name_width - title.size(), ' ');
  for (std::size_t i = 0; i <= report.levels.size(); ++i) os << " | " << Pad("Acc", kCol) << ' ' << Pad("H-score", kCol);
  os << " | " << Pad("", kCol) << '\n';

  const std::size_t rule = name_width + (report.levels.size() + 1) * (2 * kCol + 4) + kCol + 3;
  os << std::string(rule, '-') << '\n';

  for (std::size_t d = 0; d < report.domains.size(); ++d) {
    os << report.domains[d] << std::string(name_width - report.domains[d].size(), ' ');
    double acc = 0.0;
    double h = 0.0;
    for (std::size_t l = 0; l < report.levels.size(); ++l) {
      const CellMetrics& c = report.grid[d][l];
      os << " | " << Pad(Pct(c.acc_known), kCol) << ' ' << Pad(Pct(c.h_score), kCol);
      acc += c.acc_known;
      h += c.h_score;
    }
    const auto n = static_cast<double>(report.levels.size());
    os << " | " << Pad(Pct(acc / n), kCol) << ' ' << Pad(Pct(h / n), kCol) << " | " << Pad("", kCol) << '\n';
  }
  os << std::string(rule, '-') << '\n';
  os << "Average" << std::string(name_width - 7, ' ');
  for (const auto& avg : report.averages) {
    os << " | " << Pad(Pct(avg.acc_known), kCol) << ' ' << Pad(Pct(avg.h_score), kCol);
  }
  char cv[32];
  std::snprintf(cv, sizeof cv, "%.2f", report.h2_cv);
  os << " | " << Pad(Pct(report.mean_acc), kCol) << ' ' << Pad(Pct(report.mean_h), kCol) << " | " << Pad(cv, kCol)
     << '\n';
  return os.str();
}

std::string ReportToJson(const EvalReport& report) {
  auto cell_json = [](const CellMetrics& c) {
    return json{{"acc_known", c.acc_known}, {"acc_unknown", c.acc_unknown}, {"h_score", c.h_score}};
  };
  json doc;
  json levels = json::array();
  for (const auto& l : report.levels) levels.push_back(l.ToString());
  doc["levels"] = levels;
  doc["domains"] = report.domains;
  json grid = json::object();
  for (std::size_t d = 0; d < report.domains.size(); ++d) {
    json row = json::object();
    for (std::size_t l = 0; l < report.levels.size(); ++l) row[report.levels[l].ToString()] = cell_json(report.grid[d][l]);
    grid[report.domains[d]] = std::move(row);
  }
  doc["grid"] = std::move(grid);
  json averages = json::object();
  for (std::size_t l = 0; l < report.levels.size(); ++l) averages[report.levels[l].ToString()] = cell_json(report.averages[l]);
  doc["averages"] = std::move(averages);
  doc["overall"] = {{"mean_acc", report.mean_acc}, {"mean_h", report.mean_h}, {"h2_cv", report.h2_cv}};
  return doc.dump(2) + "\n";
}

}  // namespace hdg
