#include "ddosnet/preprocess.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <numeric>

#include "ddosnet/errors.hpp"
#include "ddosnet/rng.hpp"

namespace ddosnet {

ScalerParams fit_minmax(const Dataset& data) {
  if (data.empty()) throw DataError("fit_minmax: empty dataset");
  const std::size_t d = data.catalog.feature_count();
  ScalerParams scaler{data.catalog.feature_names(), Vector(d), Vector(d), data.provenance};
  scaler.min = data.records.front().features;
  scaler.max = data.records.front().features;
  for (const auto& record : data.records) {
    if (record.features.size() != d) throw DataError("fit_minmax: record width mismatch");
    for (std::size_t i = 0; i < d; ++i) {
      scaler.min[i] = std::min(scaler.min[i], record.features[i]);
      scaler.max[i] = std::max(scaler.max[i], record.features[i]);
    }
  }
  return scaler;
}

Dataset apply_minmax(const Dataset& data, const ScalerParams& scaler) {
  const std::size_t d = scaler.size();
  if (data.catalog.feature_count() != d || scaler.max.size() != d) {
    throw DataError("apply_minmax: feature count mismatch");
  }
  Dataset out = data;
  out.provenance += " | minmax(" + scaler.fitted_on + ")";
  for (auto& record : out.records) {
    if (record.features.size() != d) throw DataError("apply_minmax: record width mismatch");
    for (std::size_t i = 0; i < d; ++i) {
      const double range = scaler.max[i] - scaler.min[i];
      record.features[i] = range > 0.0 ? (record.features[i] - scaler.min[i]) / range : 0.0;
    }
  }
  return out;
}

void SplitSpec::validate() const {
  for (double f : {train_fraction, val_fraction, test_fraction}) {
    if (!(f > 0.0 && f < 1.0)) throw ConfigError("split fractions must lie in (0, 1)");
  }
  if (std::abs(train_fraction + val_fraction + test_fraction - 1.0) > 1e-9) {
    throw ConfigError("split fractions must sum to 1");
  }
}

namespace {

// Hamilton apportionment of n items over the given fractions; ties in the
// remainder go to the earlier share.
std::vector<std::size_t> apportion(std::size_t n, std::span<const double> fractions) {
  std::vector<std::size_t> counts(fractions.size());
  std::vector<double> remainders(fractions.size());
  std::size_t assigned = 0;
  for (std::size_t k = 0; k < fractions.size(); ++k) {
    const double quota = static_cast<double>(n) * fractions[k];
    counts[k] = static_cast<std::size_t>(std::floor(quota));
    remainders[k] = quota - static_cast<double>(counts[k]);
    assigned += counts[k];
  }
  std::vector<std::size_t> order(fractions.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return remainders[a] > remainders[b]; });
  for (std::size_t k = 0; assigned < n; k = (k + 1) % order.size(), ++assigned) {
    ++counts[order[k]];
  }
  return counts;
}

std::vector<std::vector<std::size_t>> class_groups(const Dataset& data, bool stratify) {
  if (!stratify) {
    std::vector<std::size_t> all(data.size());
    std::iota(all.begin(), all.end(), 0);
    return {all};
  }
  std::vector<std::vector<std::size_t>> groups(2);
  for (std::size_t i = 0; i < data.size(); ++i) {
    groups[static_cast<int>(data.records[i].label)].push_back(i);
  }
  return groups;
}

Dataset gather(const Dataset& data, std::span<const std::size_t> indices, const std::string& tag) {
  Dataset out = data.empty_like();
  out.provenance += " | " + tag;
  out.records.reserve(indices.size());
  for (std::size_t i : indices) out.records.push_back(data.records[i]);
  return out;
}

}  // namespace

Splits stratified_split(const Dataset& data, const SplitSpec& spec) {
  spec.validate();
  const std::array<double, 3> fractions{spec.train_fraction, spec.val_fraction,
                                        spec.test_fraction};
  std::array<std::vector<std::size_t>, 3> parts;
  Rng rng(spec.seed);
  for (auto& group : class_groups(data, spec.stratify_by_label)) {
    if (group.empty()) continue;
    if (spec.stratify_by_label && group.size() < 3) {
      throw DataError("stratified_split: a class has fewer than 3 records");
    }
    rng.shuffle(std::span<std::size_t>(group));
    const auto counts = apportion(group.size(), fractions);
    std::size_t offset = 0;
    for (std::size_t k = 0; k < 3; ++k) {
      parts[k].insert(parts[k].end(), group.begin() + static_cast<std::ptrdiff_t>(offset),
                      group.begin() + static_cast<std::ptrdiff_t>(offset + counts[k]));
      offset += counts[k];
    }
  }
  for (auto& part : parts) rng.shuffle(std::span<std::size_t>(part));
  const std::string seed_tag = "seed=" + std::to_string(spec.seed);
  return Splits{gather(data, parts[0], "split=train " + seed_tag),
                gather(data, parts[1], "split=val " + seed_tag),
                gather(data, parts[2], "split=test " + seed_tag)};
}

Dataset stratified_subsample(const Dataset& data, std::size_t count, std::uint64_t seed) {
  if (count >= data.size()) return data;
  auto groups = class_groups(data, true);
  const double total = static_cast<double>(data.size());
  const std::array<double, 2> fractions{static_cast<double>(groups[0].size()) / total,
                                        static_cast<double>(groups[1].size()) / total};
  const auto counts = apportion(count, fractions);
  Rng rng(seed);
  std::vector<std::size_t> chosen;
  for (std::size_t g = 0; g < 2; ++g) {
    rng.shuffle(std::span<std::size_t>(groups[g]));
    chosen.insert(chosen.end(), groups[g].begin(),
                  groups[g].begin() + static_cast<std::ptrdiff_t>(counts[g]));
  }
  std::sort(chosen.begin(), chosen.end());
  return gather(data, chosen, "subsample=" + std::to_string(count) + " seed=" + std::to_string(seed));
}

Dataset balance_sample(const Dataset& data, std::size_t per_group_count, GroupKey key,
                       std::uint64_t seed) {
  if (per_group_count == 0) throw ConfigError("balance_sample: per_group_count must be >= 1");
  std::map<std::string, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto& r = data.records[i];
    std::string name;
    if (key == GroupKey::Label || r.label == LabelClass::Benign) {
      name = r.label == LabelClass::Benign ? "BENIGN" : "ATTACK";
    } else {
      name = r.subtype.value_or("ATTACK");
    }
    groups[name].push_back(i);
  }
  Rng rng(seed);
  std::vector<std::size_t> chosen;
  for (auto& [name, members] : groups) {
    rng.shuffle(std::span<std::size_t>(members));
    const std::size_t take = std::min(per_group_count, members.size());
    chosen.insert(chosen.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(take));
  }
  std::sort(chosen.begin(), chosen.end());
  return gather(data, chosen,
                "balance=" + std::to_string(per_group_count) +
                    (key == GroupKey::Label ? "/label" : "/subtype") + " seed=" + std::to_string(seed));
}

void SequenceBatch::push_back(std::span<const double> flat, LabelClass label) {
  if (flat.size() != record_width()) throw DataError("SequenceBatch: record width mismatch");
  values_.insert(values_.end(), flat.begin(), flat.end());
  labels_.push_back(label);
}

SequenceBatch SequenceBatch::select(std::span<const std::size_t> indices) const {
  SequenceBatch out(seq_len_, step_dim_);
  out.values_.reserve(indices.size() * record_width());
  out.labels_.reserve(indices.size());
  for (std::size_t i : indices) out.push_back(record(i), labels_[i]);
  return out;
}

SequenceBatch frame_sequences(const Dataset& data, std::size_t seq_len) {
  const std::size_t d = data.catalog.feature_count();
  if (seq_len == 0 || d % seq_len != 0) {
    throw ConfigError("seq_len " + std::to_string(seq_len) + " does not divide feature count " +
                      std::to_string(d));
  }
  SequenceBatch batch(seq_len, d / seq_len);
  for (const auto& record : data.records) batch.push_back(record.features, record.label);
  return batch;
}

}  // namespace ddosnet
