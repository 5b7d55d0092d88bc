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

#ifndef HDG_METRICS_H_
#define HDG_METRICS_H_

#include <string>
#include <vector>

#include "hdg/common.h"
#include "hdg/trainer.h"

namespace hdg {

// All metrics are fractions in [0, 1] except H2-CV, which is a percentage.

/// Top-1 over rows whose true class is known; UNKNOWN counts as wrong.
double AccuracyKnown(const PredictionSet& predictions, const std::vector<std::string>& known);
/// Fraction of unknown-class rows rejected as UNKNOWN.
double AccuracyUnknown(const PredictionSet& predictions, const std::vector<std::string>& unknown);
/// Harmonic mean of the two accuracies, 0 when either is 0.
double HScore(double acc_known, double acc_unknown);

struct MetricSeries {
  std::vector<double> values;
  std::vector<Rational> level_labels;
};

/// Population standard deviation over mean, times 100.
double H2Cv(const MetricSeries& series);
double H2Cv(const std::vector<double>& values);

struct CellMetrics {
  double acc_known = 0.0;
  double acc_unknown = 0.0;
  double h_score = 0.0;
};

struct TaskResult {
  std::string target_domain;
  Rational level;
  CellMetrics metrics;
};

struct EvalReport {
  std::vector<std::string> domains;  // sorted
  std::vector<Rational> levels;      // ascending
  std::vector<std::vector<CellMetrics>> grid;  // [domain][level]
  std::vector<CellMetrics> averages;           // per level, mean over domains
  double mean_acc = 0.0;  // mean over levels of the per-level known accuracy
  double mean_h = 0.0;
  double h2_cv = 0.0;     // over the per-level average H-scores
};

/// Requires every domain x level cell, where the domains are those in
/// `results` plus `expected_domains`; throws kIncompleteGrid naming the first
/// missing cell and kInvalidArgument on duplicated cells.
EvalReport Aggregate(const std::vector<TaskResult>& results, const std::vector<std::string>& expected_domains = {});

/// Aligned text table: one row per domain and an "Average" row, columns
/// Acc / H-score per level, then overall Acc, H-score and H2-CV, in percent
/// with two decimals.
std::string RenderReportTable(const EvalReport& report, const std::string& title);
std::string ReportToJson(const EvalReport& report);

}  // namespace hdg

#endif  // HDG_METRICS_H_
