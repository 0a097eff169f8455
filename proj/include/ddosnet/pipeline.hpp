#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "ddosnet/analysis.hpp"
#include "ddosnet/baselines.hpp"
#include "ddosnet/ingest.hpp"
#include "ddosnet/metrics.hpp"
#include "ddosnet/model.hpp"
#include "ddosnet/persist.hpp"
#include "ddosnet/preprocess.hpp"

namespace ddosnet::pipeline {

/// Resolves bare file names inside one directory. Names containing a path
/// separator or "..", and absolute names, are rejected with ConfigError, so
/// every command writes only below its output directory.
class OutputDir {
 public:
  explicit OutputDir(std::filesystem::path root);
  std::filesystem::path file(const std::string& name) const;
  const std::filesystem::path& root() const { return root_; }

 private:
  std::filesystem::path root_;
};

struct BalanceSettings {
  std::size_t per_group = 0;  // 0 disables balancing
  GroupKey key = GroupKey::Label;
};

struct RunConfig {
  std::filesystem::path catalog;
  /// prepare: raw flow CSVs. train / baseline / sweep-lr: the prepared
  /// directory written by prepare.
  std::vector<std::filesystem::path> data_paths;
  SplitSpec split;
  /// Absolute train/val/test record targets; overrides the fractions.
  std::optional<std::array<std::size_t, 3>> split_counts;
  std::vector<std::string> holdout_subtypes;
  BalanceSettings balance;
  model::TrainConfig train;
  std::size_t pretrain_epochs = 20;
  std::size_t seq_len = 7;
  std::vector<std::size_t> encoder_widths{64, 32, 16, 8};
  std::filesystem::path out_dir;
  bool strict_determinism = false;
  /// Per-epoch progress lines; null silences them.
  std::ostream* log = nullptr;

  /// Throws ConfigError for a missing input path or out-of-range setting.
  void validate() const;
};

struct PrepareResult {
  CleaningReport report;
  std::size_t train_size = 0;
  std::size_t val_size = 0;
  std::size_t test_size = 0;
  std::size_t feature_count = 0;
};

/// ingest -> drop -> clean -> encode -> split -> balance -> scale. Writes
/// train.csv, val.csv, test.csv, scaler.json and manifest.json.
PrepareResult cmd_prepare(const RunConfig& cfg);

struct PreparedData {
  Dataset train;
  Dataset val;
  Dataset test;
  ScalerParams scaler;
  std::string catalog_hash;
};

/// Loads a prepared directory after checking every split file against the
/// hashes in its manifest. A mismatch raises DataError.
PreparedData load_prepared(const std::filesystem::path& dir, const FeatureCatalog& catalog,
                           const std::string& catalog_hash);

struct TrainOutcome {
  model::AutoencoderModel model;
  std::vector<model::TrainHistory> histories;
};

/// Pretrain (skipped when pretrain_epochs is 0) then finetune.
TrainOutcome train_network(const Dataset& train, const Dataset& val, const RunConfig& cfg);

struct EvaluationResult {
  metrics::MetricReport report;
  metrics::RocCurve roc;
  model::Prediction prediction;
  std::vector<std::string> warnings;
};

EvaluationResult evaluate_network(const model::AutoencoderModel& model, const Dataset& test);

struct TrainResult {
  persist::ModelFile model_file;
  std::vector<model::TrainHistory> histories;
};

/// Writes model.json, history.csv and loss.svg.
TrainResult cmd_train(const RunConfig& cfg);

/// Writes report.csv, report.txt, confusion.csv, scores.csv and roc.svg.
EvaluationResult cmd_evaluate(const RunConfig& cfg, const std::filesystem::path& model_path,
                              const std::filesystem::path& test_path);

/// One row per kind (plus "DDoSNet" when a model is given); writes
/// baselines.csv.
std::vector<baselines::BenchmarkRow> cmd_baseline(const RunConfig& cfg,
                                                  const std::vector<baselines::BaselineKind>& kinds,
                                                  const std::optional<std::filesystem::path>& model_path);

struct SweepRow {
  double learning_rate;
  std::uint64_t seed;
  metrics::MetricReport report;
};

inline const std::vector<double> kDefaultSweepRates{0.1, 0.01, 0.001, 0.0001};

std::string sweep_csv_header();
std::string sweep_csv_row(const SweepRow& row);

/// Full train + evaluate per rate; rate i uses seed (base_seed XOR i).
/// `jobs` > 1 runs rates on worker threads. Writes sweep.csv.
std::vector<SweepRow> cmd_sweep_lr(const RunConfig& cfg, const std::vector<double>& rates,
                                   std::size_t jobs);

enum class PlotKind { Andrews, Loss, Roc };
PlotKind parse_plot_kind(const std::string& name);

/// andrews: input is a flow CSV; loss: a history.csv; roc: a scores.csv.
/// Writes andrews.svg, loss.svg or roc.svg.
std::filesystem::path cmd_plot(const RunConfig& cfg, PlotKind kind,
                               const std::filesystem::path& input,
                               const analysis::AndrewsOptions& andrews);

/// Writes synth.csv; when the feature count differs from the catalog's, the
/// generic f0..fN names are used and synth.catalog is written beside it.
std::filesystem::path cmd_synth(const RunConfig& cfg, const SynthSpec& spec);

}  // namespace ddosnet::pipeline
