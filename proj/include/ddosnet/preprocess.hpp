#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ddosnet/flow_schema.hpp"

namespace ddosnet {

struct ScalerParams {
  std::vector<std::string> feature_names;
  Vector min;
  Vector max;
  std::string fitted_on;

  std::size_t size() const { return min.size(); }
  friend bool operator==(const ScalerParams&, const ScalerParams&) = default;
};

/// Column-wise extrema. Throws DataError on an empty dataset.
ScalerParams fit_minmax(const Dataset& data);

/// (x - min) / (max - min) per feature; constant features map to 0 and
/// values outside the fitted range are not clamped.
Dataset apply_minmax(const Dataset& data, const ScalerParams& scaler);

struct SplitSpec {
  double train_fraction = 0.7;
  double val_fraction = 0.2;
  double test_fraction = 0.1;
  std::uint64_t seed = 42;
  bool stratify_by_label = true;

  void validate() const;
};

struct Splits {
  Dataset train;
  Dataset val;
  Dataset test;
};

/// Seeded three-way partition. With stratification, each class is allocated
/// separately by largest-remainder rounding, so per-class counts are within
/// one record of the requested fractions.
Splits stratified_split(const Dataset& data, const SplitSpec& spec);

/// Seeded stratified draw of `count` records (all records if count >= size).
/// Keeps input order among the chosen records.
Dataset stratified_subsample(const Dataset& data, std::size_t count, std::uint64_t seed);

enum class GroupKey { Label, Subtype };

/// Each group contributes min(per_group_count, group size) records drawn
/// without replacement. Chosen records keep their input order.
Dataset balance_sample(const Dataset& data, std::size_t per_group_count, GroupKey key,
                       std::uint64_t seed);

/// Records framed as [n_records x seq_len x step_dim], stored contiguously.
class SequenceBatch {
 public:
  SequenceBatch() = default;
  SequenceBatch(std::size_t seq_len, std::size_t step_dim)
      : seq_len_(seq_len), step_dim_(step_dim) {}

  std::size_t size() const { return labels_.size(); }
  bool empty() const { return labels_.empty(); }
  std::size_t seq_len() const { return seq_len_; }
  std::size_t step_dim() const { return step_dim_; }
  std::size_t record_width() const { return seq_len_ * step_dim_; }

  const std::vector<LabelClass>& labels() const { return labels_; }

  std::span<const double> record(std::size_t i) const {
    return {values_.data() + i * record_width(), record_width()};
  }
  std::span<const double> step(std::size_t i, std::size_t t) const {
    return {values_.data() + i * record_width() + t * step_dim_, step_dim_};
  }

  void push_back(std::span<const double> flat, LabelClass label);
  /// Records at the given positions, in that order.
  SequenceBatch select(std::span<const std::size_t> indices) const;

 private:
  std::size_t seq_len_ = 0;
  std::size_t step_dim_ = 0;
  std::vector<double> values_;
  std::vector<LabelClass> labels_;
};

/// Cuts each feature vector, in catalog order, into seq_len chunks of
/// feature_count / seq_len values. Throws ConfigError if seq_len does not
/// divide the feature count.
SequenceBatch frame_sequences(const Dataset& data, std::size_t seq_len);

}  // namespace ddosnet
