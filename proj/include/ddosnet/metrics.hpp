#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ddosnet/flow_schema.hpp"

namespace ddosnet::metrics {

/// Attack is the positive class.
struct ConfusionMatrix {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t tn = 0;
  std::size_t fn = 0;

  std::size_t total() const { return tp + fp + tn + fn; }
  /// Roles swapped: Benign treated as positive.
  ConfusionMatrix swapped() const { return {tn, fn, tp, fp}; }
  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

ConfusionMatrix confusion(std::span<const LabelClass> truth, std::span<const LabelClass> predicted);

// 0/0 evaluates to 0.
double precision(const ConfusionMatrix& cm);
double recall(const ConfusionMatrix& cm);
double f_score(const ConfusionMatrix& cm);
double accuracy(const ConfusionMatrix& cm);

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f_score = 0.0;
};

struct MetricReport {
  ClassMetrics attack;
  ClassMetrics benign;
  double accuracy = 0.0;
  ConfusionMatrix confusion;
  std::optional<double> auc;
  /// Names of metrics that hit a 0/0 and were reported as 0.
  std::vector<std::string> undefined;
};

MetricReport per_class_report(std::span<const LabelClass> truth,
                              std::span<const LabelClass> predicted,
                              std::optional<std::span<const double>> scores = std::nullopt);

struct RocPoint {
  double fpr;
  double tpr;
  friend bool operator==(const RocPoint&, const RocPoint&) = default;
};

struct RocCurve {
  std::vector<RocPoint> points;
  /// Threshold applied at each point (score >= threshold is Attack); the
  /// first entry is +inf for the (0,0) origin.
  std::vector<double> thresholds;
};

/// Sweeps the distinct scores in descending order; tied scores cross the
/// threshold together. Throws DataError unless both classes are present.
RocCurve roc_curve(std::span<const LabelClass> truth, std::span<const double> scores);

/// Trapezoidal area under the curve.
double auc(const RocCurve& curve);

/// Table-style CSV (kind, per-class P/R/F, accuracy), four decimals.
std::string benchmark_csv_header();
std::string benchmark_csv_row(const std::string& kind, const MetricReport& report);

/// Human-readable block with the confusion table and all metrics.
std::string format_report(const std::string& title, const MetricReport& report);

}  // namespace ddosnet::metrics
