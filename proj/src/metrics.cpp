#include "ddosnet/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <limits>
#include <numeric>
#include <sstream>

#include "ddosnet/errors.hpp"

namespace ddosnet::metrics {

namespace {

double safe_ratio(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

std::string fixed4(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

}  // namespace

ConfusionMatrix confusion(std::span<const LabelClass> truth, std::span<const LabelClass> predicted) {
  if (truth.size() != predicted.size()) throw DataError("confusion: length mismatch");
  if (truth.empty()) throw DataError("confusion: empty input");
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const bool actual = truth[i] == LabelClass::Attack;
    const bool flagged = predicted[i] == LabelClass::Attack;
    if (actual && flagged) {
      ++cm.tp;
    } else if (actual) {
      ++cm.fn;
    } else if (flagged) {
      ++cm.fp;
    } else {
      ++cm.tn;
    }
  }
  return cm;
}

double precision(const ConfusionMatrix& cm) { return safe_ratio(cm.tp, cm.tp + cm.fp); }
double recall(const ConfusionMatrix& cm) { return safe_ratio(cm.tp, cm.tp + cm.fn); }

double f_score(const ConfusionMatrix& cm) {
  const double p = precision(cm);
  const double r = recall(cm);
  return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r);
}

double accuracy(const ConfusionMatrix& cm) { return safe_ratio(cm.tp + cm.tn, cm.total()); }

namespace {

ClassMetrics class_metrics(const ConfusionMatrix& cm, const std::string& cls,
                           std::vector<std::string>& undefined) {
  ClassMetrics m{precision(cm), recall(cm), f_score(cm)};
  if (cm.tp + cm.fp == 0) undefined.push_back("precision_" + cls);
  if (cm.tp + cm.fn == 0) undefined.push_back("recall_" + cls);
  if (m.precision + m.recall == 0.0) undefined.push_back("f1_" + cls);
  return m;
}

}  // namespace

MetricReport per_class_report(std::span<const LabelClass> truth,
                              std::span<const LabelClass> predicted,
                              std::optional<std::span<const double>> scores) {
  MetricReport report;
  report.confusion = confusion(truth, predicted);
  report.attack = class_metrics(report.confusion, "attack", report.undefined);
  report.benign = class_metrics(report.confusion.swapped(), "benign", report.undefined);
  report.accuracy = accuracy(report.confusion);
  if (scores) {
    const bool both = report.confusion.tp + report.confusion.fn > 0 &&
                      report.confusion.tn + report.confusion.fp > 0;
    if (both) {
      report.auc = auc(roc_curve(truth, *scores));
    } else {
      report.undefined.push_back("auc");
    }
  }
  return report;
}

RocCurve roc_curve(std::span<const LabelClass> truth, std::span<const double> scores) {
  if (truth.size() != scores.size()) throw DataError("roc_curve: length mismatch");
  std::size_t positives = 0;
  for (auto l : truth) positives += l == LabelClass::Attack ? 1 : 0;
  const std::size_t negatives = truth.size() - positives;
  if (positives == 0 || negatives == 0) throw DataError("roc_curve: both classes required");

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  RocCurve curve;
  curve.points.push_back({0.0, 0.0});
  curve.thresholds.push_back(std::numeric_limits<double>::infinity());
  std::size_t tp = 0;
  std::size_t fp = 0;
  for (std::size_t k = 0; k < order.size();) {
    const double threshold = scores[order[k]];
    while (k < order.size() && scores[order[k]] == threshold) {
      if (truth[order[k]] == LabelClass::Attack) {
        ++tp;
      } else {
        ++fp;
      }
      ++k;
    }
    curve.points.push_back({safe_ratio(fp, negatives), safe_ratio(tp, positives)});
    curve.thresholds.push_back(threshold);
  }
  return curve;
}

double auc(const RocCurve& curve) {
  double area = 0.0;
  for (std::size_t i = 1; i < curve.points.size(); ++i) {
    const auto& a = curve.points[i - 1];
    const auto& b = curve.points[i];
    area += (b.fpr - a.fpr) * (a.tpr + b.tpr) * 0.5;
  }
  return area;
}

std::string benchmark_csv_header() {
  return "kind,precision_attack,precision_benign,recall_attack,recall_benign,f1_attack,f1_benign,"
         "accuracy";
}

std::string benchmark_csv_row(const std::string& kind, const MetricReport& r) {
  std::ostringstream out;
  out << kind << ',' << fixed4(r.attack.precision) << ',' << fixed4(r.benign.precision) << ','
      << fixed4(r.attack.recall) << ',' << fixed4(r.benign.recall) << ','
      << fixed4(r.attack.f_score) << ',' << fixed4(r.benign.f_score) << ','
      << fixed4(r.accuracy);
  return out.str();
}

std::string format_report(const std::string& title, const MetricReport& r) {
  const auto& cm = r.confusion;
  const double attacks = static_cast<double>(cm.tp + cm.fn);
  const double benigns = static_cast<double>(cm.tn + cm.fp);
  auto share = [](std::size_t n, double d) { return d == 0.0 ? 0.0 : static_cast<double>(n) / d; };
  std::ostringstream out;
  out << "== " << title << " ==\n";
  out << "confusion (rows: actual, cols: predicted)\n";
  out << "            Attack      Benign\n";
  out << "Attack  " << fixed4(share(cm.tp, attacks)) << " (" << cm.tp << ")  "
      << fixed4(share(cm.fn, attacks)) << " (" << cm.fn << ")\n";
  out << "Benign  " << fixed4(share(cm.fp, benigns)) << " (" << cm.fp << ")  "
      << fixed4(share(cm.tn, benigns)) << " (" << cm.tn << ")\n";
  out << "precision  attack " << fixed4(r.attack.precision) << "  benign "
      << fixed4(r.benign.precision) << '\n';
  out << "recall     attack " << fixed4(r.attack.recall) << "  benign " << fixed4(r.benign.recall)
      << '\n';
  out << "f-score    attack " << fixed4(r.attack.f_score) << "  benign "
      << fixed4(r.benign.f_score) << '\n';
  out << "accuracy   " << fixed4(r.accuracy) << '\n';
  if (r.auc) out << "auc        " << fixed4(*r.auc) << '\n';
  if (!r.undefined.empty()) {
    out << "undefined (0/0 reported as 0):";
    for (const auto& name : r.undefined) out << ' ' << name;
    out << '\n';
  }
  return out.str();
}

}  // namespace ddosnet::metrics
