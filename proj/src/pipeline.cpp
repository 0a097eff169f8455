#include "ddosnet/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <exception>
#include <ostream>
#include <sstream>
#include <thread>

#include "ddosnet/errors.hpp"
#include "ddosnet/rng.hpp"

namespace ddosnet::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;

OutputDir::OutputDir(fs::path root) : root_(std::move(root)) {
  if (root_.empty()) throw ConfigError("an output directory is required");
  std::error_code ec;
  fs::create_directories(root_, ec);
  if (ec || !fs::is_directory(root_)) {
    throw ConfigError("cannot create output directory " + root_.string());
  }
}

fs::path OutputDir::file(const std::string& name) const {
  const fs::path p(name);
  if (name.empty() || p.is_absolute() || p.has_parent_path() || name == "." || name == ".." ||
      name.find('/') != std::string::npos || name.find('\\') != std::string::npos) {
    throw ConfigError("refusing to write '" + name + "' outside the output directory");
  }
  return root_ / p;
}

void RunConfig::validate() const {
  if (!catalog.empty() && !fs::is_regular_file(catalog)) {
    throw ConfigError("catalog not found: " + catalog.string());
  }
  for (const auto& p : data_paths) {
    if (!fs::exists(p)) throw ConfigError("input not found: " + p.string());
  }
  if (split_counts) {
    for (std::size_t c : *split_counts) {
      if (c == 0) throw ConfigError("split counts must be positive");
    }
  } else {
    split.validate();
  }
  train.validate();
  if (seq_len == 0) throw ConfigError("seq_len must be >= 1");
  if (out_dir.empty()) throw ConfigError("an output directory is required");
}

namespace {

void write_file(const fs::path& path, const std::string& text) {
  analysis::write_text_file(path, text);
}

std::string utc_now() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

FeatureCatalog require_catalog(const RunConfig& cfg) {
  if (cfg.catalog.empty()) throw ConfigError("a catalog is required");
  return load_catalog(cfg.catalog);
}

const fs::path& single_data_path(const RunConfig& cfg) {
  if (cfg.data_paths.size() != 1) throw ConfigError("expected exactly one prepared data directory");
  return cfg.data_paths.front();
}

json report_json(const CleaningReport& r) {
  return {{"rows_read", r.rows_read},
          {"rows_kept", r.rows_kept},
          {"rows_dropped_nonfinite", r.rows_dropped_nonfinite},
          {"rows_dropped_malformed", r.rows_dropped_malformed}};
}

std::vector<LabelClass> truth_of(const Dataset& data) {
  std::vector<LabelClass> truth;
  truth.reserve(data.size());
  for (const auto& r : data.records) truth.push_back(r.label);
  return truth;
}

json train_config_json(const RunConfig& cfg) {
  return {{"epochs", cfg.train.epochs},
          {"batch_size", cfg.train.batch_size},
          {"learning_rate", cfg.train.learning_rate},
          {"seed", cfg.train.seed},
          {"activation", cfg.train.activation},
          {"fine_tune_scope", model::fine_tune_scope_name(cfg.train.fine_tune_scope)},
          {"clip_norm", cfg.train.clip_norm},
          {"pretrain_epochs", cfg.pretrain_epochs},
          {"seq_len", cfg.seq_len},
          {"encoder_widths", cfg.encoder_widths}};
}

const char* const kSplitFiles[] = {"train.csv", "val.csv", "test.csv"};

}  // namespace

PrepareResult cmd_prepare(const RunConfig& cfg) {
  cfg.validate();
  if (cfg.data_paths.empty()) throw ConfigError("prepare needs at least one input CSV");
  const FeatureCatalog catalog = require_catalog(cfg);
  const std::string catalog_hash = persist::sha256_file(cfg.catalog);
  const OutputDir out(cfg.out_dir);
  const std::uint64_t seed = cfg.split.seed;

  Dataset pool{{}, catalog, ""};
  PrepareResult result;
  json inputs = json::array();
  for (const auto& path : cfg.data_paths) {
    auto loaded = load_flow_csv(path, catalog);
    result.report += loaded.report;
    inputs.push_back({{"path", path.string()},
                      {"sha256", persist::sha256_file(path)},
                      {"cleaning", report_json(loaded.report)}});
    for (auto& r : loaded.dataset.records) pool.records.push_back(std::move(r));
    pool.provenance += (pool.provenance.empty() ? "" : "+") + path.filename().string();
  }
  if (pool.empty()) throw DataError("no usable records in the inputs");

  Dataset held = pool.empty_like();
  if (!cfg.holdout_subtypes.empty()) {
    Dataset kept = pool.empty_like();
    for (auto& r : pool.records) {
      const bool hold = r.subtype && std::find(cfg.holdout_subtypes.begin(), cfg.holdout_subtypes.end(),
                                               *r.subtype) != cfg.holdout_subtypes.end();
      (hold ? held : kept).records.push_back(std::move(r));
    }
    pool = std::move(kept);
  }

  SplitSpec spec = cfg.split;
  if (cfg.split_counts) {
    const auto& c = *cfg.split_counts;
    const std::size_t total = c[0] + c[1] + c[2];
    if (total > pool.size()) {
      throw ConfigError("split counts ask for " + std::to_string(total) + " records, only " +
                        std::to_string(pool.size()) + " available");
    }
    pool = stratified_subsample(pool, total, Rng::derive(seed, 3));
    spec.train_fraction = static_cast<double>(c[0]) / static_cast<double>(total);
    spec.val_fraction = static_cast<double>(c[1]) / static_cast<double>(total);
    spec.test_fraction = 1.0 - spec.train_fraction - spec.val_fraction;
  }
  Splits splits = stratified_split(pool, spec);
  for (auto& r : held.records) splits.test.records.push_back(std::move(r));

  if (cfg.balance.per_group > 0) {
    splits.train = balance_sample(splits.train, cfg.balance.per_group, cfg.balance.key,
                                  Rng::derive(seed, 4));
    splits.val = balance_sample(splits.val, cfg.balance.per_group, cfg.balance.key,
                                Rng::derive(seed, 5));
  }
  if (splits.train.empty() || splits.val.empty() || splits.test.empty()) {
    throw DataError("a split came out empty");
  }

  ScalerParams scaler = fit_minmax(splits.train);
  const Dataset* parts[] = {&splits.train, &splits.val, &splits.test};
  json outputs = json::object();
  for (std::size_t k = 0; k < 3; ++k) {
    const fs::path path = out.file(kSplitFiles[k]);
    write_flow_csv(apply_minmax(*parts[k], scaler), path);
    outputs[kSplitFiles[k]] = persist::sha256_file(path);
  }
  const fs::path scaler_path = out.file("scaler.json");
  persist::save_scaler(scaler, scaler_path);
  outputs["scaler.json"] = persist::sha256_file(scaler_path);

  result.train_size = splits.train.size();
  result.val_size = splits.val.size();
  result.test_size = splits.test.size();
  result.feature_count = catalog.feature_count();

  json manifest = {
      {"format_version", 1},
      {"catalog", {{"path", cfg.catalog.string()}, {"sha256", catalog_hash}, {"version", catalog.version_tag()}}},
      {"inputs", inputs},
      {"cleaning", report_json(result.report)},
      {"split",
       {{"train_fraction", spec.train_fraction},
        {"val_fraction", spec.val_fraction},
        {"test_fraction", spec.test_fraction},
        {"seed", seed},
        {"stratify_by_label", spec.stratify_by_label}}},
      {"holdout_subtypes", cfg.holdout_subtypes},
      {"balance",
       {{"per_group", cfg.balance.per_group},
        {"key", cfg.balance.key == GroupKey::Label ? "label" : "subtype"}}},
      {"sizes", {{"train", result.train_size}, {"val", result.val_size}, {"test", result.test_size}}},
      {"feature_count", result.feature_count},
      {"outputs", outputs}};
  if (cfg.split_counts) manifest["split"]["counts"] = *cfg.split_counts;
  if (!cfg.strict_determinism) manifest["created_utc"] = utc_now();
  write_file(out.file("manifest.json"), manifest.dump(1) + "\n");
  return result;
}

PreparedData load_prepared(const fs::path& dir, const FeatureCatalog& catalog,
                           const std::string& catalog_hash) {
  const fs::path manifest_path = dir / "manifest.json";
  json manifest;
  try {
    manifest = json::parse(persist::read_text_file(manifest_path));
  } catch (const json::exception& e) {
    throw DataError(manifest_path.string() + ": " + e.what());
  }
  try {
    if (manifest.at("catalog").at("sha256").get<std::string>() != catalog_hash) {
      throw DataError(dir.string() + " was prepared with a different catalog");
    }
    for (const std::string name : {"train.csv", "val.csv", "test.csv", "scaler.json"}) {
      const std::string expected = manifest.at("outputs").at(name).get<std::string>();
      if (persist::sha256_file(dir / name) != expected) {
        throw DataError(name + " in " + dir.string() + " no longer matches its manifest hash");
      }
    }
  } catch (const json::exception& e) {
    throw DataError(manifest_path.string() + ": " + e.what());
  }
  auto load = [&](const char* name) {
    auto r = load_flow_csv(dir / name, catalog);
    if (r.report.rows_kept != r.report.rows_read) {
      throw DataError(std::string(name) + " holds rows the loader rejects");
    }
    return std::move(r.dataset);
  };
  return PreparedData{load("train.csv"), load("val.csv"), load("test.csv"),
                      persist::load_scaler(dir / "scaler.json"), catalog_hash};
}

TrainOutcome train_network(const Dataset& train, const Dataset& val, const RunConfig& cfg) {
  cfg.train.validate();
  const SequenceBatch tr = frame_sequences(train, cfg.seq_len);
  const SequenceBatch va = frame_sequences(val, cfg.seq_len);
  const model::ModelShape shape{cfg.seq_len, tr.step_dim(), cfg.encoder_widths,
                                nn::parse_activation(cfg.train.activation)};
  TrainOutcome outcome{model::AutoencoderModel::create(shape, cfg.train.seed), {}};
  model::EpochCallback on_epoch;
  if (cfg.log != nullptr) {
    on_epoch = [&cfg](model::Phase phase, const model::EpochRecord& e) {
      char buf[160];
      std::snprintf(buf, sizeof buf, "%s %zu %.6g %.6g %.3f\n", model::phase_name(phase).c_str(),
                    e.epoch, e.train_loss, e.val_loss, e.seconds);
      *cfg.log << buf << std::flush;
    };
  }
  if (cfg.pretrain_epochs > 0) {
    model::TrainConfig pre = cfg.train;
    pre.epochs = cfg.pretrain_epochs;
    outcome.histories.push_back(model::pretrain(outcome.model, tr, va, pre, on_epoch));
  }
  outcome.histories.push_back(model::finetune(outcome.model, tr, va, cfg.train, on_epoch));
  return outcome;
}

EvaluationResult evaluate_network(const model::AutoencoderModel& model, const Dataset& test) {
  if (test.empty()) throw DataError("evaluation set is empty");
  EvaluationResult result;
  result.prediction = model::predict(model, frame_sequences(test, model.seq_len));
  const auto truth = truth_of(test);
  const std::span<const double> scores(result.prediction.attack_score);
  result.report = metrics::per_class_report(truth, result.prediction.labels, scores);
  if (result.report.auc) {
    result.roc = metrics::roc_curve(truth, scores);
  } else {
    result.warnings.push_back("evaluation set holds a single class; ROC and AUC are undefined");
  }
  return result;
}

TrainResult cmd_train(const RunConfig& cfg) {
  cfg.validate();
  const FeatureCatalog catalog = require_catalog(cfg);
  const std::string catalog_hash = persist::sha256_file(cfg.catalog);
  const fs::path& dir = single_data_path(cfg);
  const PreparedData data = load_prepared(dir, catalog, catalog_hash);
  const OutputDir out(cfg.out_dir);

  TrainOutcome outcome;
  try {
    outcome = train_network(data.train, data.val, cfg);
  } catch (const model::TrainingDiverged& e) {
    const model::TrainHistory partial[] = {e.partial()};
    write_file(out.file("history_partial.csv"), persist::history_csv(partial, cfg.strict_determinism));
    throw;
  }

  TrainResult result;
  result.histories = outcome.histories;
  result.model_file.catalog_hash = catalog_hash;
  result.model_file.model = std::move(outcome.model);
  result.model_file.provenance = {
      {"config", train_config_json(cfg)},
      {"data",
       {{"train_sha256", persist::sha256_file(dir / "train.csv")},
        {"val_sha256", persist::sha256_file(dir / "val.csv")},
        {"manifest_sha256", persist::sha256_file(dir / "manifest.json")},
        {"train_records", data.train.size()},
        {"val_records", data.val.size()}}},
      {"catalog_version", catalog.version_tag()},
      {"best_epoch", result.histories.back().best_epoch}};
  persist::save_model(result.model_file, out.file("model.json"));
  write_file(out.file("history.csv"), persist::history_csv(result.histories, cfg.strict_determinism));
  analysis::render_loss(result.histories, out.file("loss.svg"));
  return result;
}

EvaluationResult cmd_evaluate(const RunConfig& cfg, const fs::path& model_path,
                              const fs::path& test_path) {
  cfg.validate();
  for (const auto& p : {model_path, test_path}) {
    if (!fs::is_regular_file(p)) throw ConfigError("input not found: " + p.string());
  }
  const FeatureCatalog catalog = require_catalog(cfg);
  const std::string catalog_hash = persist::sha256_file(cfg.catalog);
  const auto file = persist::load_model(model_path);
  const auto loaded = load_flow_csv(test_path, catalog);
  const OutputDir out(cfg.out_dir);

  EvaluationResult result = evaluate_network(file.model, loaded.dataset);
  if (auto w = persist::catalog_mismatch(file, catalog_hash)) result.warnings.insert(result.warnings.begin(), *w);
  if (loaded.report.rows_kept != loaded.report.rows_read) {
    result.warnings.push_back(std::to_string(loaded.report.rows_read - loaded.report.rows_kept) +
                              " test rows were dropped while loading");
  }

  const auto& r = result.report;
  write_file(out.file("report.csv"),
             metrics::benchmark_csv_header() + "\n" + metrics::benchmark_csv_row("DDoSNet", r) + "\n");
  std::string text = metrics::format_report("DDoSNet on " + test_path.filename().string(), r);
  for (const auto& w : result.warnings) text += "warning: " + w + "\n";
  write_file(out.file("report.txt"), text);
  const auto& cm = r.confusion;
  write_file(out.file("confusion.csv"),
             "actual,predicted_attack,predicted_benign\nattack," + std::to_string(cm.tp) + "," +
                 std::to_string(cm.fn) + "\nbenign," + std::to_string(cm.fp) + "," +
                 std::to_string(cm.tn) + "\n");
  std::string scores = "index,truth,score,predicted\n";
  const auto& pred = result.prediction;
  for (std::size_t i = 0; i < pred.labels.size(); ++i) {
    scores += std::to_string(i) + "," +
              std::to_string(static_cast<int>(loaded.dataset.records[i].label)) + "," +
              format_real(pred.attack_score[i]) + "," + std::to_string(static_cast<int>(pred.labels[i])) +
              "\n";
  }
  write_file(out.file("scores.csv"), scores);
  if (r.auc) analysis::render_roc(result.roc, *r.auc, out.file("roc.svg"));
  return result;
}

std::vector<baselines::BenchmarkRow> cmd_baseline(const RunConfig& cfg,
                                                  const std::vector<baselines::BaselineKind>& kinds,
                                                  const std::optional<fs::path>& model_path) {
  cfg.validate();
  if (model_path && !fs::is_regular_file(*model_path)) {
    throw ConfigError("input not found: " + model_path->string());
  }
  const FeatureCatalog catalog = require_catalog(cfg);
  const std::string catalog_hash = persist::sha256_file(cfg.catalog);
  const PreparedData data = load_prepared(single_data_path(cfg), catalog, catalog_hash);
  const OutputDir out(cfg.out_dir);

  auto rows = baselines::run_benchmark(data.train, data.test, kinds, cfg.train.seed);
  if (model_path) {
    const auto file = persist::load_model(*model_path);
    rows.emplace_back("DDoSNet", evaluate_network(file.model, data.test).report);
  }
  std::string csv = metrics::benchmark_csv_header() + "\n";
  for (const auto& [kind, report] : rows) csv += metrics::benchmark_csv_row(kind, report) + "\n";
  write_file(out.file("baselines.csv"), csv);
  return rows;
}

std::string sweep_csv_header() {
  const std::string h = metrics::benchmark_csv_header();
  return "learning_rate,seed" + h.substr(h.find(','));
}

std::string sweep_csv_row(const SweepRow& row) {
  const std::string r = metrics::benchmark_csv_row("x", row.report);
  return format_real(row.learning_rate) + "," + std::to_string(row.seed) + r.substr(r.find(','));
}

std::vector<SweepRow> cmd_sweep_lr(const RunConfig& cfg, const std::vector<double>& rates,
                                   std::size_t jobs) {
  cfg.validate();
  if (rates.empty()) throw ConfigError("sweep needs at least one learning rate");
  for (double r : rates) {
    if (!(r > 0.0)) throw ConfigError("learning rates must be > 0");
  }
  const FeatureCatalog catalog = require_catalog(cfg);
  const std::string catalog_hash = persist::sha256_file(cfg.catalog);
  const PreparedData data = load_prepared(single_data_path(cfg), catalog, catalog_hash);
  const OutputDir out(cfg.out_dir);

  std::vector<std::optional<SweepRow>> rows(rates.size());
  std::vector<std::exception_ptr> errors(rates.size());
  auto run_one = [&](std::size_t i, std::ostream* log) {
    try {
      RunConfig c = cfg;
      c.train.learning_rate = rates[i];
      c.train.seed = cfg.train.seed ^ static_cast<std::uint64_t>(i);
      c.log = log;
      if (log != nullptr) *log << "# learning rate " << format_real(rates[i]) << "\n";
      const auto outcome = train_network(data.train, data.val, c);
      rows[i] = SweepRow{rates[i], c.train.seed, evaluate_network(outcome.model, data.test).report};
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };
  if (jobs <= 1) {
    for (std::size_t i = 0; i < rates.size(); ++i) run_one(i, cfg.log);
  } else {
    std::size_t next = 0;
    while (next < rates.size()) {
      std::vector<std::thread> workers;
      for (std::size_t j = 0; j < jobs && next < rates.size(); ++j, ++next) {
        workers.emplace_back(run_one, next, nullptr);
      }
      for (auto& w : workers) w.join();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  std::vector<SweepRow> result;
  std::string csv = sweep_csv_header() + "\n";
  for (auto& row : rows) {
    csv += sweep_csv_row(*row) + "\n";
    result.push_back(std::move(*row));
  }
  write_file(out.file("sweep.csv"), csv);
  return result;
}

PlotKind parse_plot_kind(const std::string& name) {
  if (name == "andrews") return PlotKind::Andrews;
  if (name == "loss") return PlotKind::Loss;
  if (name == "roc") return PlotKind::Roc;
  throw ConfigError("unknown plot kind '" + name + "' (expected andrews, loss or roc)");
}

namespace {

metrics::RocCurve read_scores(const fs::path& path, std::vector<LabelClass>& truth, Vector& scores) {
  std::istringstream in(persist::read_text_file(path));
  std::vector<std::string> fields;
  if (!read_csv_record(in, fields)) throw DataError(path.string() + ": empty scores file");
  const auto col = [&](const std::string& name) {
    const auto it = std::find(fields.begin(), fields.end(), name);
    if (it == fields.end()) throw DataError(path.string() + ": missing column '" + name + "'");
    return static_cast<std::size_t>(it - fields.begin());
  };
  const std::size_t t_col = col("truth");
  const std::size_t s_col = col("score");
  const std::size_t width = fields.size();
  while (read_csv_record(in, fields)) {
    if (fields.size() == 1 && fields[0].empty()) continue;
    if (fields.size() != width) throw DataError(path.string() + ": malformed row");
    truth.push_back(fields[t_col] == "1" ? LabelClass::Attack : LabelClass::Benign);
    try {
      scores.push_back(std::stod(fields[s_col]));
    } catch (const std::exception&) {
      throw DataError(path.string() + ": bad score '" + fields[s_col] + "'");
    }
  }
  return metrics::roc_curve(truth, scores);
}

}  // namespace

fs::path cmd_plot(const RunConfig& cfg, PlotKind kind, const fs::path& input,
                  const analysis::AndrewsOptions& andrews) {
  cfg.validate();
  if (!fs::is_regular_file(input)) throw ConfigError("input not found: " + input.string());
  const OutputDir out(cfg.out_dir);
  switch (kind) {
    case PlotKind::Andrews: {
      const auto loaded = load_flow_csv(input, require_catalog(cfg));
      const fs::path path = out.file("andrews.svg");
      analysis::render_andrews(loaded.dataset, andrews, path);
      return path;
    }
    case PlotKind::Loss: {
      const auto histories = persist::parse_history_csv(persist::read_text_file(input));
      const fs::path path = out.file("loss.svg");
      analysis::render_loss(histories, path);
      return path;
    }
    case PlotKind::Roc: {
      std::vector<LabelClass> truth;
      Vector scores;
      const auto curve = read_scores(input, truth, scores);
      const fs::path path = out.file("roc.svg");
      analysis::render_roc(curve, metrics::auc(curve), path);
      return path;
    }
  }
  throw ConfigError("unknown plot kind");
}

fs::path cmd_synth(const RunConfig& cfg, const SynthSpec& spec) {
  cfg.validate();
  const OutputDir out(cfg.out_dir);
  std::optional<FeatureCatalog> catalog;
  if (!cfg.catalog.empty()) catalog = load_catalog(cfg.catalog);
  const bool named = catalog && catalog->feature_count() == spec.n_features;
  const Dataset data = named ? generate_synthetic(spec, *catalog) : generate_synthetic(spec);
  if (!named) write_file(out.file("synth.catalog"), serialize_catalog(data.catalog));
  const fs::path path = out.file("synth.csv");
  write_flow_csv(data, path);
  return path;
}

}  // namespace ddosnet::pipeline
