// Acceptance checks. Prints one PASS/FAIL/SKIP line per criterion and exits
// non-zero if any criterion fails.

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "ddosnet/analysis.hpp"
#include "ddosnet/errors.hpp"
#include "ddosnet/metrics.hpp"
#include "ddosnet/model.hpp"
#include "ddosnet/persist.hpp"
#include "ddosnet/pipeline.hpp"
#include "../unit/test_support.hpp"

using namespace ddosnet;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  enum { Pass, Fail, Skip } status;
  std::string detail;
};

Outcome pass(std::string d) { return {Outcome::Pass, std::move(d)}; }
Outcome fail(std::string d) { return {Outcome::Fail, std::move(d)}; }

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(4);
  s << v;
  return s.str();
}

// 1. BPTT against central differences on a tiny tanh model.
Outcome gradient_check() {
  const auto t0 = Clock::now();
  const auto m = model::AutoencoderModel::create({3, 2, {3, 2}, nn::Activation::Tanh}, 11);
  Rng rng(12);
  SequenceBatch batch(3, 2);
  Vector flat(6);
  for (int i = 0; i < 4; ++i) {
    for (double& v : flat) v = rng.uniform(-1, 1);
    batch.push_back(flat, i % 2 ? LabelClass::Attack : LabelClass::Benign);
  }
  double worst = 0.0;
  for (auto objective : {model::Objective::ReconstructionMse, model::Objective::CrossEntropy}) {
    const auto g = model::bptt_grads(m, batch, objective);
    const auto blocks = m.blocks();
    const auto grads = g.grads.blocks();
    for (std::size_t k = 0; k < blocks.size(); ++k) {
      const Vector p0(blocks[k].values.begin(), blocks[k].values.end());
      const auto numeric = nn::finite_diff_grad(
          [&](std::span<const double> p) {
            auto probe = m;
            auto target = probe.blocks()[k].values;
            std::copy(p.begin(), p.end(), target.begin());
            return model::objective_loss(probe, batch, objective);
          },
          p0, 1e-5);
      for (std::size_t i = 0; i < p0.size(); ++i) {
        const double a = grads[k].values[i];
        const double n = numeric[i];
        worst = std::max(worst, std::abs(a - n) / std::max(std::abs(a) + std::abs(n), 1e-8));
      }
    }
  }
  const double secs = seconds_since(t0);
  const std::string d = "max relative error " + fmt(worst) + " in " + fmt(secs) + " s";
  return worst < 1e-4 && secs < 10.0 ? pass(d) : fail(d);
}

// 2. Trapezoidal AUC against Mann-Whitney pair counting.
Outcome auc_oracle() {
  const auto t0 = Clock::now();
  Rng rng(77);
  double worst = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + rng.below(80);
    const std::uint64_t levels = trial % 2 == 0 ? 1 + rng.below(5) : 0;
    std::vector<LabelClass> truth(n);
    std::vector<double> scores(n);
    for (std::size_t i = 0; i < n; ++i) {
      truth[i] = rng.uniform() < 0.5 ? LabelClass::Attack : LabelClass::Benign;
      scores[i] = levels ? static_cast<double>(rng.below(levels)) : rng.uniform();
    }
    truth[0] = LabelClass::Attack;
    truth[1] = LabelClass::Benign;
    double wins = 0.0, pairs = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (truth[i] != LabelClass::Attack) continue;
      for (std::size_t j = 0; j < n; ++j) {
        if (truth[j] != LabelClass::Benign) continue;
        pairs += 1.0;
        wins += scores[i] > scores[j] ? 1.0 : (scores[i] == scores[j] ? 0.5 : 0.0);
      }
    }
    worst = std::max(worst, std::abs(metrics::auc(metrics::roc_curve(truth, scores)) - wins / pairs));
  }
  const double secs = seconds_since(t0);
  const std::string d = "max |difference| " + fmt(worst) + " in " + fmt(secs) + " s";
  return worst < 1e-9 && secs < 5.0 ? pass(d) : fail(d);
}

// 3. Row-normalised confusion of 0.99 / 0.01 per class.
Outcome metric_arithmetic() {
  std::vector<LabelClass> truth, pred;
  for (int i = 0; i < 100; ++i) {
    truth.push_back(LabelClass::Attack);
    pred.push_back(i == 0 ? LabelClass::Benign : LabelClass::Attack);
  }
  for (int i = 0; i < 100; ++i) {
    truth.push_back(LabelClass::Benign);
    pred.push_back(i == 0 ? LabelClass::Attack : LabelClass::Benign);
  }
  const auto r = metrics::per_class_report(truth, pred);
  const auto cm = r.confusion;
  const double values[] = {metrics::precision(cm), metrics::recall(cm), metrics::f_score(cm),
                           metrics::accuracy(cm),  r.benign.precision,  r.benign.recall,
                           r.benign.f_score,       r.accuracy};
  double worst = 0.0;
  for (double v : values) worst = std::max(worst, std::abs(v - 0.99));
  const bool counts = cm == metrics::ConfusionMatrix{99, 1, 99, 1};
  const std::string d = "max |metric - 0.99| " + fmt(worst);
  return counts && worst <= 1e-12 ? pass(d) : fail(d);
}

struct EndToEnd {
  double accuracy = 0.0;
  double auc = 0.0;
  double seconds = 0.0;
  std::string model_text;
  std::string report_text;
};

EndToEnd run_end_to_end(const testing::TempDir& dir, const std::string& tag) {
  const auto t0 = Clock::now();
  const auto catalog = load_catalog(DDOSNET_DEFAULT_CATALOG);
  SynthSpec spec;
  spec.class_separation = 10.0;
  spec.noise_scale = 1.0;
  spec.n_benign = spec.n_attack = 2000;
  spec.seed = 1;
  // Both runs read the same input path; only the output directories differ.
  const fs::path raw = dir / "raw.csv";
  write_flow_csv(generate_synthetic(spec, catalog), raw);

  pipeline::RunConfig cfg;
  cfg.catalog = DDOSNET_DEFAULT_CATALOG;
  cfg.strict_determinism = true;
  cfg.split.seed = 1;
  cfg.train.seed = 1;
  cfg.data_paths = {raw};
  cfg.out_dir = dir / (tag + "-prep");
  pipeline::cmd_prepare(cfg);

  cfg.data_paths = {dir / (tag + "-prep")};
  cfg.out_dir = dir / (tag + "-model");
  cfg.pretrain_epochs = 5;
  cfg.train.epochs = 20;
  cfg.train.learning_rate = 1e-4;
  pipeline::cmd_train(cfg);

  cfg.out_dir = dir / (tag + "-eval");
  const auto ev = pipeline::cmd_evaluate(cfg, dir / (tag + "-model") / "model.json",
                                         dir / (tag + "-prep") / "test.csv");
  EndToEnd r;
  r.accuracy = ev.report.accuracy;
  r.auc = ev.report.auc.value_or(0.0);
  r.seconds = seconds_since(t0);
  r.model_text = persist::read_text_file(dir / (tag + "-model") / "model.json");
  r.report_text = persist::read_text_file(dir / (tag + "-eval") / "report.csv");
  return r;
}

// 6. Feed-forward oracle for seq_len 1 and no recurrence.
Outcome degenerate_equivalence() {
  const std::size_t d = 9;
  auto m = model::AutoencoderModel::create({1, d, {6, 4, 2}, nn::Activation::ReLU}, 21);
  for (auto* layers : {&m.encoder, &m.decoder}) {
    for (auto& l : *layers) std::fill(l.w_zz.values().begin(), l.w_zz.values().end(), 0.0);
  }
  // Non-zero biases so the ReLU kinks are exercised on both sides.
  Rng rng(22);
  for (auto* layers : {&m.encoder, &m.decoder}) {
    for (auto& l : *layers) {
      for (double& b : l.b_h) b = rng.uniform(-0.3, 0.3);
    }
  }

  auto dense_relu = [](const Matrix& w, const Vector& b, const std::vector<double>& x) {
    std::vector<double> y(w.cols());
    for (std::size_t j = 0; j < w.cols(); ++j) {
      double s = b[j];
      for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * w(i, j);
      y[j] = s > 0.0 ? s : 0.0;
    }
    return y;
  };
  auto affine = [](const Matrix& w, const Vector& b, const std::vector<double>& h) {
    std::vector<double> y(w.rows());
    for (std::size_t o = 0; o < w.rows(); ++o) {
      double s = b[o];
      for (std::size_t j = 0; j < h.size(); ++j) s += w(o, j) * h[j];
      y[o] = s;
    }
    return y;
  };

  SequenceBatch batch(1, d);
  std::vector<std::vector<double>> inputs;
  for (int i = 0; i < 100; ++i) {
    std::vector<double> x(d);
    for (double& v : x) v = rng.uniform(-1, 1);
    batch.push_back(x, LabelClass::Benign);
    inputs.push_back(std::move(x));
  }
  const auto out = model::forward(m, batch);
  double worst = 0.0;
  for (std::size_t r = 0; r < inputs.size(); ++r) {
    std::vector<double> h = inputs[r];
    for (const auto& l : m.encoder) h = dense_relu(l.w_xz, l.b_h, h);
    for (std::size_t j = 0; j < h.size(); ++j) worst = std::max(worst, std::abs(h[j] - out.bottleneck(r, j)));
    for (const auto& l : m.decoder) h = dense_relu(l.w_xz, l.b_h, h);
    const auto recon = affine(m.recon.w_zf, m.recon.b_f, h);
    for (std::size_t j = 0; j < d; ++j) {
      worst = std::max(worst, std::abs(recon[j] - out.reconstruction[r](0, j)));
    }
    const auto logits = affine(m.head.w_zf, m.head.b_f, h);
    const double mx = std::max(logits[0], logits[1]);
    const double e0 = std::exp(logits[0] - mx), e1 = std::exp(logits[1] - mx);
    worst = std::max(worst, std::abs(e0 / (e0 + e1) - out.class_probs(r, 0)));
    worst = std::max(worst, std::abs(e1 / (e0 + e1) - out.class_probs(r, 1)));
  }
  const std::string detail = "max |difference| " + fmt(worst) + " over 100 inputs";
  return worst <= 1e-10 ? pass(detail) : fail(detail);
}

// 7. Scaler range, exact partition, exact framing.
Outcome data_invariants() {
  std::vector<std::string> problems;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    Rng rng(seed);
    SynthSpec spec;
    spec.n_benign = 20 + rng.below(200);
    spec.n_attack = 20 + rng.below(200);
    spec.n_features = 12;
    spec.class_separation = rng.uniform(0, 5);
    spec.seed = seed;
    auto data = generate_synthetic(spec);
    for (auto& r : data.records) r.features[5] = 3.0;  // one degenerate column

    SplitSpec split;
    split.seed = seed;
    const auto s = stratified_split(data, split);
    std::multiset<std::size_t> seen;
    for (const Dataset* part : {&s.train, &s.val, &s.test}) {
      for (const auto& r : part->records) seen.insert(r.source_row);
    }
    std::multiset<std::size_t> all;
    for (const auto& r : data.records) all.insert(r.source_row);
    if (seen != all) problems.push_back("split is not a partition (seed " + std::to_string(seed) + ")");

    const auto scaler = fit_minmax(s.train);
    const auto scaled = apply_minmax(s.train, scaler);
    for (std::size_t j = 0; j < 12; ++j) {
      if (scaler.max[j] == scaler.min[j]) continue;
      double lo = 1.0, hi = 0.0;
      for (const auto& r : scaled.records) {
        lo = std::min(lo, r.features[j]);
        hi = std::max(hi, r.features[j]);
      }
      if (lo < 0.0 || hi > 1.0) problems.push_back("scaled feature outside [0,1]");
    }

    const std::size_t seq_len = seed % 2 ? 3 : 4;
    const auto framed = frame_sequences(scaled, seq_len);
    for (std::size_t i = 0; i < framed.size(); ++i) {
      const auto flat = framed.record(i);
      if (!std::equal(flat.begin(), flat.end(), scaled.records[i].features.begin(),
                      scaled.records[i].features.end()) ||
          framed.labels()[i] != scaled.records[i].label) {
        problems.push_back("frame round-trip differs");
        break;
      }
    }
  }
  if (!problems.empty()) return fail(problems.front());
  return pass("20 randomized datasets");
}

bool well_formed(const std::string& svg) {
  std::istringstream in(svg);
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::read_xml(in, tree);
  } catch (const boost::property_tree::xml_parser_error&) {
    return false;
  }
  return tree.count("svg") == 1;
}

// 9. SVG output is reproducible and parses as XML.
Outcome svg_determinism() {
  SynthSpec spec;
  spec.n_benign = spec.n_attack = 300;
  const auto data = generate_synthetic(spec);
  analysis::AndrewsOptions o;
  o.seed = 5;
  const auto andrews = analysis::andrews_svg(data, o);

  std::vector<model::TrainHistory> hs(2);
  hs[0].phase = model::Phase::Pretrain;
  hs[1].phase = model::Phase::Finetune;
  for (std::size_t e = 1; e <= 20; ++e) {
    hs[0].epochs.push_back({e, 1.0 / static_cast<double>(e), 1.1 / static_cast<double>(e), 0.0});
    hs[1].epochs.push_back({e, 0.5 / static_cast<double>(e), 0.6 / static_cast<double>(e), 0.0});
  }
  const auto loss = analysis::loss_svg(hs);

  Rng rng(6);
  std::vector<LabelClass> truth;
  std::vector<double> scores;
  for (int i = 0; i < 200; ++i) {
    truth.push_back(i % 2 ? LabelClass::Attack : LabelClass::Benign);
    scores.push_back(rng.uniform() + (i % 2 ? 0.4 : 0.0));
  }
  const auto curve = metrics::roc_curve(truth, scores);
  const auto roc = analysis::roc_svg(curve, metrics::auc(curve));

  const bool same = andrews == analysis::andrews_svg(data, o) && loss == analysis::loss_svg(hs) &&
                    roc == analysis::roc_svg(curve, metrics::auc(curve));
  const bool xml = well_formed(andrews) && well_formed(loss) && well_formed(roc);
  if (!same) return fail("repeated rendering differs");
  if (!xml) return fail("malformed XML");
  return pass("andrews, loss and roc identical across runs and well formed");
}

// 8. Real corpus, only when its location is provided.
Outcome real_corpus() {
  const char* root = std::getenv("DDOSNET_CICDDOS2019_DIR");
  if (!root) return {Outcome::Skip, "set DDOSNET_CICDDOS2019_DIR to run (hours-scale)"};
  std::vector<fs::path> inputs;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file() && e.path().extension() == ".csv") inputs.push_back(e.path());
  }
  std::sort(inputs.begin(), inputs.end());
  if (inputs.empty()) return fail(std::string("no CSV files under ") + root);

  testing::TempDir dir("corpus");
  pipeline::RunConfig cfg;
  cfg.catalog = DDOSNET_DEFAULT_CATALOG;
  cfg.data_paths = inputs;
  cfg.split_counts = std::array<std::size_t, 3>{161523, 46150, 23000};
  cfg.out_dir = dir / "prep";
  cfg.log = &std::cerr;
  pipeline::cmd_prepare(cfg);
  cfg.data_paths = {dir / "prep"};
  cfg.out_dir = dir / "model";
  pipeline::cmd_train(cfg);
  cfg.out_dir = dir / "eval";
  const auto ev = pipeline::cmd_evaluate(cfg, dir / "model" / "model.json", dir / "prep" / "test.csv");
  const double auc = ev.report.auc.value_or(0.0);
  const std::string d = "accuracy " + fmt(ev.report.accuracy) + ", AUC " + fmt(auc);
  return ev.report.accuracy >= 0.97 && auc >= 0.97 ? pass(d) : fail(d);
}

Outcome guarded(const std::function<Outcome()>& f) {
  try {
    return f();
  } catch (const std::exception& e) {
    return fail(std::string("exception: ") + e.what());
  }
}

}  // namespace

int main() {
  int failures = 0;
  auto report = [&](int id, const std::string& name, const Outcome& o) {
    const char* tag = o.status == Outcome::Pass ? "PASS" : (o.status == Outcome::Fail ? "FAIL" : "SKIP");
    if (o.status == Outcome::Fail) ++failures;
    std::cout << tag << " " << id << " " << name << ": " << o.detail << std::endl;
  };

  report(1, "gradient check", guarded(gradient_check));
  report(2, "auc oracle", guarded(auc_oracle));
  report(3, "metric arithmetic", guarded(metric_arithmetic));

  testing::TempDir dir("acceptance");
  EndToEnd first, second;
  Outcome e2e = guarded([&] {
    first = run_end_to_end(dir, "a");
    const std::string d = "accuracy " + fmt(first.accuracy) + ", AUC " + fmt(first.auc) + " in " +
                          fmt(first.seconds) + " s";
    return first.accuracy >= 0.99 && first.auc >= 0.99 && first.seconds < 300.0 ? pass(d) : fail(d);
  });
  report(4, "synthetic end to end", e2e);
  report(5, "determinism", guarded([&] {
           if (first.model_text.empty()) return fail("end-to-end run did not complete");
           second = run_end_to_end(dir, "b");
           const bool model_same = first.model_text == second.model_text;
           const bool report_same = first.report_text == second.report_text;
           if (model_same && report_same) return pass("model.json and report.csv byte-identical");
           return fail(std::string(model_same ? "" : "model.json differs ") +
                       (report_same ? "" : "report.csv differs"));
         }));
  report(6, "feed-forward equivalence", guarded(degenerate_equivalence));
  report(7, "scaler, split and frame invariants", guarded(data_invariants));
  report(8, "real corpus", guarded(real_corpus));
  report(9, "svg determinism", guarded(svg_determinism));
  return failures == 0 ? 0 : 1;
}
