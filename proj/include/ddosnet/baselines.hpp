#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "ddosnet/flow_schema.hpp"
#include "ddosnet/metrics.hpp"
#include "ddosnet/rng.hpp"

namespace ddosnet::baselines {

enum class BaselineKind { NB, DT, Booster, RF, SVM, LR };

inline constexpr std::array<BaselineKind, 6> kAllKinds{BaselineKind::NB,  BaselineKind::DT,
                                                       BaselineKind::Booster, BaselineKind::RF,
                                                       BaselineKind::SVM, BaselineKind::LR};

std::string kind_name(BaselineKind kind);
BaselineKind parse_kind(const std::string& name);

using Hyper = std::map<std::string, double>;

/// Default hyper-parameters of a kind; these are also the accepted keys.
Hyper default_hyper(BaselineKind kind);

struct TreeNode {
  int feature = -1;  // -1 for a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;  // leaf output (attack fraction, or boosting step)
  std::size_t count = 0;
};

/// Binary tree; x[feature] <= threshold goes left.
struct Tree {
  std::vector<TreeNode> nodes;

  double predict(std::span<const double> x) const;
  std::size_t leaf_index(std::span<const double> x) const;
  std::size_t depth() const;
};

struct TreeParams {
  std::size_t max_depth = 12;
  std::size_t min_leaf = 5;
  std::size_t max_features = 0;  // 0 = all features
};

/// CART on real targets minimising squared error. For 0/1 targets this is
/// Gini splitting (Gini = 2 * variance), and leaves hold the attack fraction.
/// Candidate thresholds are midpoints between consecutive distinct values;
/// ties in gain go to the lower feature index, then the lower threshold.
/// `rows` may repeat (bootstrap). `rng` is required when max_features > 0.
Tree build_tree(const Matrix& x, std::span<const double> y, std::span<const std::size_t> rows,
                const TreeParams& params, Rng* rng = nullptr);

/// Indices drawn with replacement for one forest member.
std::vector<std::size_t> bootstrap_sample(std::size_t n, std::uint64_t tree_seed);

struct NaiveBayesParams {
  std::array<Vector, 2> mean;  // indexed by LabelClass
  std::array<Vector, 2> variance;
  std::array<double, 2> prior{};
};

struct ForestParams {
  std::vector<Tree> trees;
  std::vector<std::uint64_t> tree_seeds;
};

struct BoostedParams {
  std::vector<Tree> stages;
  double initial_margin = 0.0;
  double learning_rate = 0.1;
};

struct LinearParams {
  Vector weights;
  double bias = 0.0;
  /// Score = sigmoid(slope * margin); 1 for LR, fitted for SVM.
  double platt_slope = 1.0;
};

struct BaselineModel {
  BaselineKind kind = BaselineKind::LR;
  std::size_t n_features = 0;
  Hyper hyper;
  std::variant<NaiveBayesParams, Tree, ForestParams, BoostedParams, LinearParams> params;
};

/// Throws ConfigError for an unknown hyper key, DataError for empty data.
BaselineModel train_baseline(BaselineKind kind, const Dataset& train, const Hyper& hyper,
                             std::uint64_t seed);

struct Prediction {
  Vector attack_score;
  std::vector<LabelClass> labels;
};

Prediction predict_baseline(const BaselineModel& model, const Dataset& data);

/// Flat feature matrix (records x features) and 0/1 attack targets.
Matrix feature_matrix(const Dataset& data);
Vector attack_targets(const Dataset& data);

using BenchmarkRow = std::pair<std::string, metrics::MetricReport>;

/// Trains each kind on `train` and scores it on `test`.
std::vector<BenchmarkRow> run_benchmark(const Dataset& train, const Dataset& test,
                                        std::span<const BaselineKind> kinds, std::uint64_t seed);

}  // namespace ddosnet::baselines
