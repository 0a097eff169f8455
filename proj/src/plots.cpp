#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <numbers>
#include <numeric>
#include <sstream>

#include "ddosnet/analysis.hpp"
#include "ddosnet/baselines.hpp"
#include "ddosnet/errors.hpp"
#include "ddosnet/rng.hpp"

namespace ddosnet::analysis {

namespace {

std::string fmt6(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

std::string fmt_tick(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&':
        out += "&amp;";
        break;
      case '<':
        out += "&lt;";
        break;
      case '>':
        out += "&gt;";
        break;
      case '"':
        out += "&quot;";
        break;
      default:
        out.push_back(c);
    }
  }
  return out;
}

struct Style {
  const char* color;
  const char* extra;
};

Style style_for(const std::string& tag) {
  static const std::map<std::string, Style> styles{
      {"attack", {"#d62728", " stroke-opacity=\"0.35\""}},
      {"benign", {"#1f77b4", " stroke-opacity=\"0.35\""}},
      {"train", {"#1f77b4", ""}},
      {"val", {"#ff7f0e", ""}},
      {"pretrain-train", {"#2ca02c", ""}},
      {"pretrain-val", {"#98df8a", ""}},
      {"finetune-train", {"#1f77b4", ""}},
      {"finetune-val", {"#ff7f0e", ""}},
      {"roc", {"#d62728", ""}},
      {"reference", {"#7f7f7f", " stroke-dasharray=\"6,4\""}},
  };
  const auto it = styles.find(tag);
  return it == styles.end() ? Style{"#000000", ""} : it->second;
}

std::pair<double, double> padded(std::pair<double, double> r) {
  if (!(r.second > r.first)) return {r.first - 0.5, r.first + 0.5};
  return r;
}

}  // namespace

std::string render_svg(const PlotSpec& spec) {
  if (spec.series.empty()) throw DataError("render_svg: plot has no series");
  double x_lo = std::numeric_limits<double>::infinity();
  double x_hi = -x_lo;
  double y_lo = x_lo;
  double y_hi = -x_lo;
  for (const auto& s : spec.series) {
    for (const auto& [x, y] : s.points) {
      x_lo = std::min(x_lo, x);
      x_hi = std::max(x_hi, x);
      y_lo = std::min(y_lo, y);
      y_hi = std::max(y_hi, y);
    }
  }
  if (!std::isfinite(x_lo)) x_lo = x_hi = y_lo = y_hi = 0.0;
  const auto xr = padded(spec.x_range.value_or(std::make_pair(x_lo, x_hi)));
  const auto yr = padded(spec.y_range.value_or(std::make_pair(y_lo, y_hi)));

  const double w = static_cast<double>(spec.width);
  const double h = static_cast<double>(spec.height);
  const double left = 70.0;
  const double right = w - 20.0;
  const double top = 40.0;
  const double bottom = h - 55.0;
  auto px = [&](double x) { return left + (x - xr.first) / (xr.second - xr.first) * (right - left); };
  auto py = [&](double y) { return bottom - (y - yr.first) / (yr.second - yr.first) * (bottom - top); };

  std::ostringstream out;
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << spec.width << "\" height=\""
      << spec.height << "\" viewBox=\"0 0 " << spec.width << ' ' << spec.height << "\">\n";
  out << "<rect x=\"0\" y=\"0\" width=\"" << spec.width << "\" height=\"" << spec.height
      << "\" fill=\"#ffffff\"/>\n";
  out << "<text x=\"" << fmt6(w / 2) << "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">"
      << xml_escape(spec.title) << "</text>\n";
  out << "<g stroke=\"#000000\" stroke-width=\"1\">\n";
  out << "<line x1=\"" << fmt6(left) << "\" y1=\"" << fmt6(bottom) << "\" x2=\"" << fmt6(right)
      << "\" y2=\"" << fmt6(bottom) << "\"/>\n";
  out << "<line x1=\"" << fmt6(left) << "\" y1=\"" << fmt6(top) << "\" x2=\"" << fmt6(left)
      << "\" y2=\"" << fmt6(bottom) << "\"/>\n";
  out << "</g>\n";
  constexpr int kTicks = 5;
  out << "<g font-size=\"11\">\n";
  for (int i = 0; i < kTicks; ++i) {
    const double fx = xr.first + (xr.second - xr.first) * i / (kTicks - 1);
    const double fy = yr.first + (yr.second - yr.first) * i / (kTicks - 1);
    out << "<text x=\"" << fmt6(px(fx)) << "\" y=\"" << fmt6(bottom + 16)
        << "\" text-anchor=\"middle\">" << fmt_tick(fx) << "</text>\n";
    out << "<text x=\"" << fmt6(left - 6) << "\" y=\"" << fmt6(py(fy) + 4)
        << "\" text-anchor=\"end\">" << fmt_tick(fy) << "</text>\n";
  }
  out << "</g>\n";
  out << "<text x=\"" << fmt6((left + right) / 2) << "\" y=\"" << fmt6(h - 14)
      << "\" text-anchor=\"middle\" font-size=\"13\">" << xml_escape(spec.x_label) << "</text>\n";
  out << "<text x=\"16\" y=\"" << fmt6((top + bottom) / 2)
      << "\" text-anchor=\"middle\" font-size=\"13\" transform=\"rotate(-90 16 "
      << fmt6((top + bottom) / 2) << ")\">" << xml_escape(spec.y_label) << "</text>\n";

  std::vector<std::string> legend;
  for (const auto& s : spec.series) {
    const Style style = style_for(s.class_tag);
    out << "<polyline fill=\"none\" stroke=\"" << style.color << "\" stroke-width=\"1.5\""
        << style.extra << " points=\"";
    for (std::size_t i = 0; i < s.points.size(); ++i) {
      if (i > 0) out << ' ';
      out << fmt6(px(s.points[i].first)) << ',' << fmt6(py(s.points[i].second));
    }
    out << "\"/>\n";
    if (std::find(legend.begin(), legend.end(), s.class_tag) == legend.end()) {
      legend.push_back(s.class_tag);
    }
  }
  for (std::size_t i = 0; i < legend.size(); ++i) {
    const double y = top + 14.0 * static_cast<double>(i) + 6.0;
    out << "<line x1=\"" << fmt6(right - 120) << "\" y1=\"" << fmt6(y) << "\" x2=\""
        << fmt6(right - 100) << "\" y2=\"" << fmt6(y) << "\" stroke=\"" << style_for(legend[i]).color
        << "\" stroke-width=\"2\"/>\n";
    out << "<text x=\"" << fmt6(right - 95) << "\" y=\"" << fmt6(y + 4) << "\" font-size=\"11\">"
        << xml_escape(legend[i]) << "</text>\n";
  }
  for (std::size_t i = 0; i < spec.annotations.size(); ++i) {
    out << "<text x=\"" << fmt6(left + 10) << "\" y=\"" << fmt6(top + 16.0 * static_cast<double>(i + 1))
        << "\" font-size=\"13\">" << xml_escape(spec.annotations[i]) << "</text>\n";
  }
  out << "</svg>\n";
  return out.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
  if (!out) throw DataError("write failed: " + path.string());
}

std::string andrews_svg(const Dataset& data, const AndrewsOptions& options) {
  if (!(options.sample_fraction > 0.0 && options.sample_fraction <= 1.0)) {
    throw ConfigError("andrews: sample fraction must be in (0, 1]");
  }
  if (options.samples_per_curve < 2) throw ConfigError("andrews: need >= 2 samples per curve");
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(options.seed);
  rng.shuffle(std::span<std::size_t>(order));
  const auto take = static_cast<std::size_t>(
      std::ceil(options.sample_fraction * static_cast<double>(data.size())));
  order.resize(std::min(take, order.size()));
  std::sort(order.begin(), order.end());
  if (order.size() < 2) throw DataError("andrews: sample has fewer than two records");

  Dataset sample = data.empty_like();
  for (std::size_t i : order) sample.records.push_back(data.records[i]);
  const std::size_t k = std::min(options.components, data.catalog.feature_count());
  const Matrix sample_x = baselines::feature_matrix(sample);
  const PcaModel pca = options.fit_on == PcaFitOn::Sample ? pca_fit(sample_x, k) : pca_fit(data, k);
  const Matrix reduced = pca_transform(pca, sample_x);

  PlotSpec spec;
  spec.title = "Andrews curves (" + std::to_string(order.size()) + " records, " +
               std::to_string(k) + " PCA components)";
  spec.x_label = "t";
  spec.y_label = "f(t)";
  spec.x_range = std::make_pair(-std::numbers::pi, std::numbers::pi);
  const std::size_t m = options.samples_per_curve;
  for (std::size_t r = 0; r < reduced.rows(); ++r) {
    Series s;
    const bool attack = sample.records[r].label == LabelClass::Attack;
    s.class_tag = attack ? "attack" : "benign";
    s.name = s.class_tag + "#" + std::to_string(sample.records[r].source_row);
    s.points.reserve(m);
    for (std::size_t i = 0; i < m; ++i) {
      const double t = -std::numbers::pi + 2.0 * std::numbers::pi * static_cast<double>(i) /
                                               static_cast<double>(m - 1);
      s.points.emplace_back(t, andrews_value(reduced.row(r), t));
    }
    spec.series.push_back(std::move(s));
  }
  return render_svg(spec);
}

void render_andrews(const Dataset& data, const AndrewsOptions& options,
                    const std::filesystem::path& out) {
  write_text_file(out, andrews_svg(data, options));
}

std::string loss_svg(std::span<const model::TrainHistory> histories) {
  PlotSpec spec;
  spec.title = "Training and validation loss";
  spec.x_label = "epoch";
  spec.y_label = "loss";
  for (const auto& h : histories) {
    if (h.epochs.empty()) continue;
    const std::string phase = model::phase_name(h.phase);
    Series train{phase + " train", {}, phase + "-train"};
    Series val{phase + " val", {}, phase + "-val"};
    for (const auto& e : h.epochs) {
      train.points.emplace_back(static_cast<double>(e.epoch), e.train_loss);
      val.points.emplace_back(static_cast<double>(e.epoch), e.val_loss);
    }
    spec.series.push_back(std::move(train));
    spec.series.push_back(std::move(val));
  }
  if (spec.series.empty()) throw DataError("render_loss: empty history");
  return render_svg(spec);
}

void render_loss(std::span<const model::TrainHistory> histories, const std::filesystem::path& out) {
  write_text_file(out, loss_svg(histories));
}

std::string roc_svg(const metrics::RocCurve& curve, double auc) {
  if (curve.points.empty()) throw DataError("render_roc: empty curve");
  PlotSpec spec;
  spec.title = "Receiver operating characteristic";
  spec.x_label = "false positive rate";
  spec.y_label = "true positive rate";
  spec.x_range = std::make_pair(0.0, 1.0);
  spec.y_range = std::make_pair(0.0, 1.0);
  Series roc{"roc", {}, "roc"};
  for (const auto& p : curve.points) roc.points.emplace_back(p.fpr, p.tpr);
  spec.series.push_back(std::move(roc));
  spec.series.push_back({"chance", {{0.0, 0.0}, {1.0, 1.0}}, "reference"});
  char buf[32];
  std::snprintf(buf, sizeof buf, "AUC = %.3f", auc);
  spec.annotations.emplace_back(buf);
  return render_svg(spec);
}

void render_roc(const metrics::RocCurve& curve, double auc, const std::filesystem::path& out) {
  write_text_file(out, roc_svg(curve, auc));
}

}  // namespace ddosnet::analysis
