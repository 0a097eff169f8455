#include "ddosnet/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <numeric>

#include "ddosnet/errors.hpp"

namespace ddosnet::baselines {

std::string kind_name(BaselineKind kind) {
  switch (kind) {
    case BaselineKind::NB:
      return "NB";
    case BaselineKind::DT:
      return "DT";
    case BaselineKind::Booster:
      return "Booster";
    case BaselineKind::RF:
      return "RF";
    case BaselineKind::SVM:
      return "SVM";
    case BaselineKind::LR:
      return "LR";
  }
  return "?";
}

BaselineKind parse_kind(const std::string& name) {
  for (auto kind : kAllKinds) {
    std::string canonical = kind_name(kind);
    if (std::equal(name.begin(), name.end(), canonical.begin(), canonical.end(),
                   [](char a, char b) { return std::tolower(a) == std::tolower(b); })) {
      return kind;
    }
  }
  throw ConfigError("unknown baseline kind '" + name + "'");
}

Hyper default_hyper(BaselineKind kind) {
  switch (kind) {
    case BaselineKind::NB:
      return {{"var_floor", 1e-9}};
    case BaselineKind::DT:
      return {{"max_depth", 12}, {"min_leaf", 5}};
    case BaselineKind::RF:
      return {{"trees", 100}, {"max_depth", 12}, {"min_leaf", 5}, {"max_features", 0}};
    case BaselineKind::Booster:
      return {{"stages", 100}, {"max_depth", 3}, {"min_leaf", 1}, {"learning_rate", 0.1}};
    case BaselineKind::SVM:
      return {{"epochs", 10}, {"l2", 1e-4}, {"eta0", 0.1}};
    case BaselineKind::LR:
      return {{"iterations", 200}, {"l2", 1e-4}, {"learning_rate", 0.5}};
  }
  return {};
}

namespace {

double sigmoid(double m) {
  if (m >= 0.0) return 1.0 / (1.0 + std::exp(-m));
  const double e = std::exp(m);
  return e / (1.0 + e);
}

LabelClass label_of(double score) {
  return score >= 0.5 ? LabelClass::Attack : LabelClass::Benign;
}

std::size_t as_count(const Hyper& h, const std::string& key) {
  const double v = h.at(key);
  if (!(v >= 0.0) || v != std::floor(v)) {
    throw ConfigError("hyper-parameter '" + key + "' must be a non-negative integer");
  }
  return static_cast<std::size_t>(v);
}

}  // namespace

// --- trees ---------------------------------------------------------------

double Tree::predict(std::span<const double> x) const { return nodes[leaf_index(x)].value; }

std::size_t Tree::leaf_index(std::span<const double> x) const {
  std::size_t n = 0;
  while (nodes[n].feature >= 0) {
    const auto& node = nodes[n];
    n = static_cast<std::size_t>(x[static_cast<std::size_t>(node.feature)] <= node.threshold
                                     ? node.left
                                     : node.right);
  }
  return n;
}

std::size_t Tree::depth() const {
  std::function<std::size_t(std::size_t)> walk = [&](std::size_t n) -> std::size_t {
    if (nodes[n].feature < 0) return 0;
    return 1 + std::max(walk(static_cast<std::size_t>(nodes[n].left)),
                        static_cast<std::size_t>(walk(static_cast<std::size_t>(nodes[n].right))));
  };
  return nodes.empty() ? 0 : walk(0);
}

namespace {

struct Split {
  int feature = -1;
  double threshold = 0.0;
  double gain = -std::numeric_limits<double>::infinity();
};

class TreeBuilder {
 public:
  TreeBuilder(const Matrix& x, std::span<const double> y, const TreeParams& params, Rng* rng)
      : x_(x), y_(y), params_(params), rng_(rng) {}

  Tree build(std::vector<std::size_t> rows) {
    grow(std::move(rows), 0);
    return std::move(tree_);
  }

 private:
  int grow(std::vector<std::size_t> rows, std::size_t depth) {
    const int id = static_cast<int>(tree_.nodes.size());
    tree_.nodes.emplace_back();
    double sum = 0.0;
    double sum_sq = 0.0;
    for (std::size_t r : rows) {
      sum += y_[r];
      sum_sq += y_[r] * y_[r];
    }
    const double n = static_cast<double>(rows.size());
    tree_.nodes[id].value = rows.empty() ? 0.0 : sum / n;
    tree_.nodes[id].count = rows.size();
    const double sse = sum_sq - sum * sum / n;
    const bool pure = std::all_of(rows.begin(), rows.end(),
                                  [&](std::size_t r) { return y_[r] == y_[rows.front()]; });
    if (depth >= params_.max_depth || rows.size() < 2 * std::max<std::size_t>(params_.min_leaf, 1) ||
        pure) {
      return id;
    }
    const Split best = find_split(rows, sse);
    if (best.feature < 0) return id;

    std::vector<std::size_t> left;
    std::vector<std::size_t> right;
    for (std::size_t r : rows) {
      (x_(r, static_cast<std::size_t>(best.feature)) <= best.threshold ? left : right).push_back(r);
    }
    rows.clear();
    rows.shrink_to_fit();
    tree_.nodes[id].feature = best.feature;
    tree_.nodes[id].threshold = best.threshold;
    const int l = grow(std::move(left), depth + 1);
    tree_.nodes[id].left = l;
    const int r = grow(std::move(right), depth + 1);
    tree_.nodes[id].right = r;
    return id;
  }

  std::vector<std::size_t> candidate_features() {
    const std::size_t d = x_.cols();
    std::vector<std::size_t> features(d);
    std::iota(features.begin(), features.end(), 0);
    if (params_.max_features == 0 || params_.max_features >= d) return features;
    rng_->shuffle(std::span<std::size_t>(features));
    features.resize(params_.max_features);
    std::sort(features.begin(), features.end());
    return features;
  }

  Split find_split(const std::vector<std::size_t>& rows, double parent_sse) {
    const std::size_t min_leaf = std::max<std::size_t>(params_.min_leaf, 1);
    const std::size_t n = rows.size();
    Split best;
    std::vector<std::pair<double, double>> column(n);
    for (std::size_t f : candidate_features()) {
      for (std::size_t i = 0; i < n; ++i) column[i] = {x_(rows[i], f), y_[rows[i]]};
      std::sort(column.begin(), column.end());
      double total = 0.0;
      double total_sq = 0.0;
      for (const auto& [v, t] : column) {
        total += t;
        total_sq += t * t;
      }
      double left = 0.0;
      double left_sq = 0.0;
      for (std::size_t i = 1; i < n; ++i) {
        left += column[i - 1].second;
        left_sq += column[i - 1].second * column[i - 1].second;
        if (i < min_leaf || n - i < min_leaf) continue;
        if (column[i - 1].first == column[i].first) continue;
        const double nl = static_cast<double>(i);
        const double nr = static_cast<double>(n - i);
        const double right = total - left;
        const double right_sq = total_sq - left_sq;
        const double sse_l = left_sq - left * left / nl;
        const double sse_r = right_sq - right * right / nr;
        const double gain = parent_sse - sse_l - sse_r;
        if (gain > best.gain) {
          double mid = 0.5 * (column[i - 1].first + column[i].first);
          if (mid >= column[i].first) mid = column[i - 1].first;
          best = {static_cast<int>(f), mid, gain};
        }
      }
    }
    return best;
  }

  const Matrix& x_;
  std::span<const double> y_;
  TreeParams params_;
  Rng* rng_;
  Tree tree_;
};

}  // namespace

Tree build_tree(const Matrix& x, std::span<const double> y, std::span<const std::size_t> rows,
                const TreeParams& params, Rng* rng) {
  if (rows.empty()) throw DataError("build_tree: no rows");
  if (params.max_features > 0 && params.max_features < x.cols() && rng == nullptr) {
    throw ConfigError("build_tree: feature bagging needs an rng");
  }
  TreeBuilder builder(x, y, params, rng);
  return builder.build(std::vector<std::size_t>(rows.begin(), rows.end()));
}

std::vector<std::size_t> bootstrap_sample(std::size_t n, std::uint64_t tree_seed) {
  Rng rng(tree_seed);
  std::vector<std::size_t> rows(n);
  for (auto& r : rows) r = static_cast<std::size_t>(rng.below(n));
  return rows;
}

Matrix feature_matrix(const Dataset& data) {
  const std::size_t d = data.catalog.feature_count();
  Matrix x(data.size(), d);
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto& f = data.records[i].features;
    if (f.size() != d) throw DataError("feature_matrix: record width mismatch");
    std::copy(f.begin(), f.end(), x.row(i).begin());
  }
  return x;
}

Vector attack_targets(const Dataset& data) {
  Vector y(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    y[i] = data.records[i].label == LabelClass::Attack ? 1.0 : 0.0;
  }
  return y;
}

// --- individual learners -------------------------------------------------

namespace {

NaiveBayesParams train_nb(const Matrix& x, const Vector& y, const Hyper& h) {
  const double floor = h.at("var_floor");
  const std::size_t d = x.cols();
  NaiveBayesParams nb;
  std::array<std::size_t, 2> counts{0, 0};
  for (int c = 0; c < 2; ++c) {
    nb.mean[c].assign(d, 0.0);
    nb.variance[c].assign(d, 0.0);
  }
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const int c = y[i] > 0.5 ? 1 : 0;
    ++counts[c];
    for (std::size_t f = 0; f < d; ++f) nb.mean[c][f] += x(i, f);
  }
  for (int c = 0; c < 2; ++c) {
    if (counts[c] == 0) continue;
    for (double& m : nb.mean[c]) m /= static_cast<double>(counts[c]);
  }
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const int c = y[i] > 0.5 ? 1 : 0;
    for (std::size_t f = 0; f < d; ++f) {
      const double dv = x(i, f) - nb.mean[c][f];
      nb.variance[c][f] += dv * dv;
    }
  }
  for (int c = 0; c < 2; ++c) {
    for (double& v : nb.variance[c]) {
      v = counts[c] == 0 ? 1.0 : v / static_cast<double>(counts[c]);
      v = std::max(v, floor);
    }
    nb.prior[c] = static_cast<double>(counts[c]) / static_cast<double>(x.rows());
  }
  return nb;
}

double nb_score(const NaiveBayesParams& nb, std::span<const double> x) {
  std::array<double, 2> log_post{};
  for (int c = 0; c < 2; ++c) {
    if (nb.prior[c] == 0.0) {
      log_post[c] = -std::numeric_limits<double>::infinity();
      continue;
    }
    double lp = std::log(nb.prior[c]);
    for (std::size_t f = 0; f < x.size(); ++f) {
      const double dv = x[f] - nb.mean[c][f];
      lp -= 0.5 * (std::log(2.0 * std::numbers::pi * nb.variance[c][f]) +
                   dv * dv / nb.variance[c][f]);
    }
    log_post[c] = lp;
  }
  if (std::isinf(log_post[1]) && log_post[1] < 0) return 0.0;
  if (std::isinf(log_post[0]) && log_post[0] < 0) return 1.0;
  return sigmoid(log_post[1] - log_post[0]);
}

ForestParams train_rf(const Matrix& x, const Vector& y, const Hyper& h, std::uint64_t seed) {
  const std::size_t trees = std::max<std::size_t>(as_count(h, "trees"), 1);
  TreeParams params{as_count(h, "max_depth"), as_count(h, "min_leaf"), as_count(h, "max_features")};
  if (params.max_features == 0) {
    params.max_features = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(x.cols())))));
  }
  ForestParams forest;
  for (std::size_t t = 0; t < trees; ++t) {
    const std::uint64_t tree_seed = Rng::derive(seed, t);
    const auto rows = bootstrap_sample(x.rows(), tree_seed);
    Rng bag_rng(Rng::derive(tree_seed, 1));
    forest.trees.push_back(build_tree(x, y, rows, params, &bag_rng));
    forest.tree_seeds.push_back(tree_seed);
  }
  return forest;
}

BoostedParams train_booster(const Matrix& x, const Vector& y, const Hyper& h) {
  BoostedParams boost;
  boost.learning_rate = h.at("learning_rate");
  const std::size_t stages = as_count(h, "stages");
  const TreeParams params{as_count(h, "max_depth"), as_count(h, "min_leaf"), 0};
  const std::size_t n = x.rows();
  const double base = std::clamp(std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n),
                                 1e-6, 1.0 - 1e-6);
  boost.initial_margin = std::log(base / (1.0 - base));
  Vector margin(n, boost.initial_margin);
  Vector residual(n);
  std::vector<std::size_t> rows(n);
  std::iota(rows.begin(), rows.end(), 0);
  for (std::size_t s = 0; s < stages; ++s) {
    for (std::size_t i = 0; i < n; ++i) residual[i] = y[i] - sigmoid(margin[i]);
    Tree tree = build_tree(x, residual, rows, params);
    // Newton step per leaf for the logistic loss.
    std::vector<double> num(tree.nodes.size(), 0.0);
    std::vector<double> den(tree.nodes.size(), 0.0);
    std::vector<std::size_t> leaf_of(n);
    for (std::size_t i = 0; i < n; ++i) {
      leaf_of[i] = tree.leaf_index(x.row(i));
      const double p = sigmoid(margin[i]);
      num[leaf_of[i]] += residual[i];
      den[leaf_of[i]] += p * (1.0 - p);
    }
    for (std::size_t k = 0; k < tree.nodes.size(); ++k) {
      if (tree.nodes[k].feature < 0) tree.nodes[k].value = num[k] / std::max(den[k], 1e-12);
    }
    for (std::size_t i = 0; i < n; ++i) {
      margin[i] += boost.learning_rate * tree.nodes[leaf_of[i]].value;
    }
    boost.stages.push_back(std::move(tree));
  }
  return boost;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// One-parameter Platt fit: slope a >= 0 minimising the logistic loss of
// sigmoid(a * margin) against the labels, by Newton iterations.
double fit_platt_slope(const Vector& margins, const Vector& y) {
  double a = 1.0;
  for (int it = 0; it < 100; ++it) {
    double g = 0.0;
    double hss = 0.0;
    for (std::size_t i = 0; i < margins.size(); ++i) {
      const double p = sigmoid(a * margins[i]);
      g += (p - y[i]) * margins[i];
      hss += p * (1.0 - p) * margins[i] * margins[i];
    }
    if (hss < 1e-12) break;
    const double next = std::clamp(a - g / hss, 0.0, 1e6);
    if (std::abs(next - a) < 1e-10 * std::max(1.0, a)) {
      a = next;
      break;
    }
    a = next;
  }
  return a;
}

LinearParams train_svm(const Matrix& x, const Vector& y, const Hyper& h, std::uint64_t seed) {
  const std::size_t epochs = as_count(h, "epochs");
  const double lambda = h.at("l2");
  const double eta0 = h.at("eta0");
  const std::size_t n = x.rows();
  const std::size_t d = x.cols();
  Vector w(d, 0.0);
  double b = 0.0;
  Vector avg_w(d, 0.0);
  double avg_b = 0.0;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  std::size_t step = 0;
  for (std::size_t e = 0; e < epochs; ++e) {
    rng.shuffle(std::span<std::size_t>(order));
    for (std::size_t i : order) {
      const double eta = eta0 / std::pow(1.0 + lambda * eta0 * static_cast<double>(step), 0.75);
      const double target = y[i] > 0.5 ? 1.0 : -1.0;
      const auto xi = x.row(i);
      const double margin = target * (dot(w, xi) + b);
      const double shrink = 1.0 - eta * lambda;
      for (double& wj : w) wj *= shrink;
      if (margin < 1.0) {
        for (std::size_t j = 0; j < d; ++j) w[j] += eta * target * xi[j];
        b += eta * target;
      }
      ++step;
      const double mu = 1.0 / static_cast<double>(step);
      for (std::size_t j = 0; j < d; ++j) avg_w[j] += mu * (w[j] - avg_w[j]);
      avg_b += mu * (b - avg_b);
    }
  }
  LinearParams lin{avg_w, avg_b, 1.0};
  Vector margins(n);
  for (std::size_t i = 0; i < n; ++i) margins[i] = dot(lin.weights, x.row(i)) + lin.bias;
  lin.platt_slope = fit_platt_slope(margins, y);
  return lin;
}

LinearParams train_lr(const Matrix& x, const Vector& y, const Hyper& h) {
  const std::size_t iterations = as_count(h, "iterations");
  const double lambda = h.at("l2");
  const double lr = h.at("learning_rate");
  const std::size_t n = x.rows();
  const std::size_t d = x.cols();
  LinearParams lin{Vector(d, 0.0), 0.0, 1.0};
  Vector grad(d);
  for (std::size_t it = 0; it < iterations; ++it) {
    std::fill(grad.begin(), grad.end(), 0.0);
    double grad_b = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const auto xi = x.row(i);
      const double err = sigmoid(dot(lin.weights, xi) + lin.bias) - y[i];
      for (std::size_t j = 0; j < d; ++j) grad[j] += err * xi[j];
      grad_b += err;
    }
    const double inv_n = 1.0 / static_cast<double>(n);
    for (std::size_t j = 0; j < d; ++j) {
      lin.weights[j] -= lr * (grad[j] * inv_n + lambda * lin.weights[j]);
    }
    lin.bias -= lr * grad_b * inv_n;
  }
  return lin;
}

Hyper merged_hyper(BaselineKind kind, const Hyper& overrides) {
  Hyper h = default_hyper(kind);
  for (const auto& [key, value] : overrides) {
    if (!h.contains(key)) {
      throw ConfigError("unknown hyper-parameter '" + key + "' for " + kind_name(kind));
    }
    h[key] = value;
  }
  return h;
}

}  // namespace

BaselineModel train_baseline(BaselineKind kind, const Dataset& train, const Hyper& hyper,
                             std::uint64_t seed) {
  const Hyper h = merged_hyper(kind, hyper);
  if (train.empty()) throw DataError("train_baseline: empty training data");
  const Matrix x = feature_matrix(train);
  const Vector y = attack_targets(train);
  BaselineModel model{kind, x.cols(), h, {}};
  switch (kind) {
    case BaselineKind::NB:
      model.params = train_nb(x, y, h);
      break;
    case BaselineKind::DT: {
      std::vector<std::size_t> rows(x.rows());
      std::iota(rows.begin(), rows.end(), 0);
      model.params = build_tree(x, y, rows, {as_count(h, "max_depth"), as_count(h, "min_leaf"), 0});
      break;
    }
    case BaselineKind::RF:
      model.params = train_rf(x, y, h, seed);
      break;
    case BaselineKind::Booster:
      model.params = train_booster(x, y, h);
      break;
    case BaselineKind::SVM:
      model.params = train_svm(x, y, h, seed);
      break;
    case BaselineKind::LR:
      model.params = train_lr(x, y, h);
      break;
  }
  return model;
}

namespace {

double score_one(const BaselineModel& model, std::span<const double> x) {
  struct Visitor {
    std::span<const double> x;
    double operator()(const NaiveBayesParams& nb) const { return nb_score(nb, x); }
    double operator()(const Tree& tree) const { return tree.predict(x); }
    double operator()(const ForestParams& forest) const {
      double s = 0.0;
      for (const auto& t : forest.trees) s += t.predict(x);
      return s / static_cast<double>(forest.trees.size());
    }
    double operator()(const BoostedParams& boost) const {
      double m = boost.initial_margin;
      for (const auto& t : boost.stages) m += boost.learning_rate * t.predict(x);
      return sigmoid(m);
    }
    double operator()(const LinearParams& lin) const {
      return sigmoid(lin.platt_slope * (dot(lin.weights, x) + lin.bias));
    }
  };
  return std::visit(Visitor{x}, model.params);
}

}  // namespace

Prediction predict_baseline(const BaselineModel& model, const Dataset& data) {
  if (data.catalog.feature_count() != model.n_features) {
    throw DataError("predict_baseline: feature count mismatch");
  }
  Prediction p;
  p.attack_score.reserve(data.size());
  p.labels.reserve(data.size());
  for (const auto& r : data.records) {
    if (r.features.size() != model.n_features) throw DataError("predict_baseline: width mismatch");
    const double s = std::clamp(score_one(model, r.features), 0.0, 1.0);
    p.attack_score.push_back(s);
    p.labels.push_back(label_of(s));
  }
  return p;
}

std::vector<BenchmarkRow> run_benchmark(const Dataset& train, const Dataset& test,
                                        std::span<const BaselineKind> kinds, std::uint64_t seed) {
  std::vector<LabelClass> truth;
  truth.reserve(test.size());
  for (const auto& r : test.records) truth.push_back(r.label);
  std::vector<BenchmarkRow> rows;
  for (auto kind : kinds) {
    const auto model = train_baseline(kind, train, {}, seed);
    const auto pred = predict_baseline(model, test);
    rows.emplace_back(kind_name(kind),
                      metrics::per_class_report(truth, pred.labels,
                                                std::span<const double>(pred.attack_score)));
  }
  return rows;
}

}  // namespace ddosnet::baselines
