// Command-line front end. Exit codes: 0 ok, 2 config error, 3 data error,
// 4 numeric failure.

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include "ddosnet/errors.hpp"
#include "ddosnet/pipeline.hpp"

#ifndef DDOSNET_DEFAULT_CATALOG
#define DDOSNET_DEFAULT_CATALOG "data/catalog/cicddos2019_v1.catalog"
#endif

namespace {

using namespace ddosnet;
namespace fs = std::filesystem;

struct TrainFlags {
  std::string scope = "whole_network";
  std::string widths = "64,32,16,8";
};

void add_shared(CLI::App& cmd, pipeline::RunConfig& cfg) {
  cmd.add_option("--catalog", cfg.catalog, "feature catalog file")->capture_default_str();
  cmd.add_option("--seed", cfg.train.seed, "base random seed")->capture_default_str();
  cmd.add_option("--out-dir", cfg.out_dir, "directory for every file this command writes")->required();
  cmd.add_flag("--strict-determinism", cfg.strict_determinism,
               "omit timestamps and timings so outputs are byte-identical across runs");
}

void add_training(CLI::App& cmd, pipeline::RunConfig& cfg, TrainFlags& flags) {
  cmd.add_option("--data-dir", cfg.data_paths, "directory written by `prepare`")->required()->expected(1);
  cmd.add_option("--seq-len", cfg.seq_len, "timesteps per record")->capture_default_str();
  cmd.add_option("--epochs", cfg.train.epochs, "fine-tuning epochs")->capture_default_str();
  cmd.add_option("--batch-size", cfg.train.batch_size)->capture_default_str();
  cmd.add_option("--lr", cfg.train.learning_rate, "Adam learning rate")->capture_default_str();
  cmd.add_option("--pretrain-epochs", cfg.pretrain_epochs, "reconstruction epochs (0 skips)")
      ->capture_default_str();
  cmd.add_option("--fine-tune-scope", flags.scope, "whole_network or head_only")->capture_default_str();
  cmd.add_option("--activation", cfg.train.activation, "relu, tanh or identity")->capture_default_str();
  cmd.add_option("--widths", flags.widths, "encoder widths, strictly decreasing")->capture_default_str();
  cmd.add_option("--clip-norm", cfg.train.clip_norm, "global gradient norm cap (0 disables)")
      ->capture_default_str();
}

void apply_training(pipeline::RunConfig& cfg, const TrainFlags& flags) {
  cfg.train.fine_tune_scope = model::parse_fine_tune_scope(flags.scope);
  cfg.encoder_widths.clear();
  std::string item;
  for (std::size_t i = 0; i <= flags.widths.size(); ++i) {
    if (i == flags.widths.size() || flags.widths[i] == ',') {
      try {
        cfg.encoder_widths.push_back(std::stoul(std::string(trim(item))));
      } catch (const std::exception&) {
        throw ConfigError("bad --widths value '" + flags.widths + "'");
      }
      item.clear();
    } else {
      item.push_back(flags.widths[i]);
    }
  }
}

void print_report(const std::string& title, const metrics::MetricReport& report) {
  std::cout << metrics::format_report(title, report);
}

int run(int argc, char** argv) {
  CLI::App app{"Recurrent autoencoder intrusion detector and baselines"};
  app.require_subcommand(1);
  pipeline::RunConfig cfg;
  cfg.catalog = DDOSNET_DEFAULT_CATALOG;
  cfg.log = &std::cout;
  TrainFlags flags;

  auto* prepare = app.add_subcommand("prepare", "clean, split, balance and scale flow CSVs");
  add_shared(*prepare, cfg);
  prepare->add_option("--input", cfg.data_paths, "raw flow CSV (repeatable)")->required();
  prepare->add_option("--train-frac", cfg.split.train_fraction)->capture_default_str();
  prepare->add_option("--val-frac", cfg.split.val_fraction)->capture_default_str();
  prepare->add_option("--test-frac", cfg.split.test_fraction)->capture_default_str();
  std::vector<std::size_t> counts;
  prepare->add_option("--counts", counts, "train,val,test record targets (overrides fractions)")
      ->expected(3)
      ->delimiter(',');
  bool no_stratify = false;
  prepare->add_flag("--no-stratify", no_stratify);
  prepare->add_option("--balance", cfg.balance.per_group, "max records per group in train and val (0 = off)");
  std::string balance_by = "label";
  prepare->add_option("--balance-by", balance_by, "label or subtype")->capture_default_str();
  prepare->add_option("--holdout-subtype", cfg.holdout_subtypes,
                      "attack subtype kept out of train/val and added to test (repeatable)");

  auto* train = app.add_subcommand("train", "pretrain and fine-tune the network");
  add_shared(*train, cfg);
  add_training(*train, cfg, flags);

  auto* evaluate = app.add_subcommand("evaluate", "score a saved model on a split");
  add_shared(*evaluate, cfg);
  fs::path model_path;
  fs::path test_path;
  evaluate->add_option("--model", model_path)->required();
  evaluate->add_option("--test", test_path, "flow CSV, usually test.csv from `prepare`")->required();

  auto* baseline = app.add_subcommand("baseline", "train and score the classical baselines");
  add_shared(*baseline, cfg);
  baseline->add_option("--data-dir", cfg.data_paths)->required()->expected(1);
  std::vector<std::string> kinds{"all"};
  baseline->add_option("--kinds", kinds, "NB, DT, Booster, RF, SVM, LR or all")->delimiter(',');
  std::string baseline_model;
  baseline->add_option("--model", baseline_model, "also score this saved model");

  auto* sweep = app.add_subcommand("sweep-lr", "train and evaluate once per learning rate");
  add_shared(*sweep, cfg);
  add_training(*sweep, cfg, flags);
  std::vector<double> rates = pipeline::kDefaultSweepRates;
  sweep->add_option("--rates", rates)->delimiter(',');
  std::size_t jobs = 1;
  sweep->add_option("--jobs", jobs, "worker threads")->capture_default_str();

  auto* plot = app.add_subcommand("plot", "render an SVG figure");
  add_shared(*plot, cfg);
  std::string plot_kind;
  fs::path plot_input;
  analysis::AndrewsOptions andrews;
  std::string fit_on = "sample";
  plot->add_option("kind", plot_kind, "andrews, loss or roc")->required();
  plot->add_option("--input", plot_input, "flow CSV, history.csv or scores.csv")->required();
  plot->add_option("--sample-fraction", andrews.sample_fraction)->capture_default_str();
  plot->add_option("--components", andrews.components)->capture_default_str();
  plot->add_option("--pca-fit-on", fit_on, "sample or full")->capture_default_str();

  auto* synth = app.add_subcommand("synth", "write a synthetic two-class flow CSV");
  add_shared(*synth, cfg);
  SynthSpec spec;
  synth->add_option("--n-benign", spec.n_benign)->capture_default_str();
  synth->add_option("--n-attack", spec.n_attack)->capture_default_str();
  synth->add_option("--features", spec.n_features)->capture_default_str();
  synth->add_option("--separation", spec.class_separation)->capture_default_str();
  synth->add_option("--noise", spec.noise_scale)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  if (prepare->parsed()) {
    cfg.split.seed = cfg.train.seed;
    cfg.split.stratify_by_label = !no_stratify;
    if (!counts.empty()) cfg.split_counts = std::array<std::size_t, 3>{counts[0], counts[1], counts[2]};
    if (balance_by == "label") {
      cfg.balance.key = GroupKey::Label;
    } else if (balance_by == "subtype") {
      cfg.balance.key = GroupKey::Subtype;
    } else {
      throw ConfigError("--balance-by must be label or subtype");
    }
    const auto r = pipeline::cmd_prepare(cfg);
    std::printf("rows read %zu, kept %zu, dropped non-finite %zu, dropped malformed %zu\n",
                r.report.rows_read, r.report.rows_kept, r.report.rows_dropped_nonfinite,
                r.report.rows_dropped_malformed);
    std::printf("features %zu, train %zu, val %zu, test %zu\n", r.feature_count, r.train_size,
                r.val_size, r.test_size);
  } else if (train->parsed()) {
    apply_training(cfg, flags);
    const auto r = pipeline::cmd_train(cfg);
    std::printf("best fine-tune epoch %zu, model written to %s\n", r.histories.back().best_epoch,
                (cfg.out_dir / "model.json").string().c_str());
  } else if (evaluate->parsed()) {
    const auto r = pipeline::cmd_evaluate(cfg, model_path, test_path);
    for (const auto& w : r.warnings) std::cerr << "warning: " << w << "\n";
    print_report("DDoSNet", r.report);
  } else if (baseline->parsed()) {
    std::vector<baselines::BaselineKind> chosen;
    for (const auto& k : kinds) {
      if (k == "all") {
        chosen.assign(baselines::kAllKinds.begin(), baselines::kAllKinds.end());
      } else {
        chosen.push_back(baselines::parse_kind(k));
      }
    }
    std::optional<fs::path> with_model;
    if (!baseline_model.empty()) with_model = baseline_model;
    const auto rows = pipeline::cmd_baseline(cfg, chosen, with_model);
    std::cout << metrics::benchmark_csv_header() << "\n";
    for (const auto& [kind, report] : rows) std::cout << metrics::benchmark_csv_row(kind, report) << "\n";
  } else if (sweep->parsed()) {
    apply_training(cfg, flags);
    const auto rows = pipeline::cmd_sweep_lr(cfg, rates, jobs);
    std::cout << pipeline::sweep_csv_header() << "\n";
    for (const auto& row : rows) std::cout << pipeline::sweep_csv_row(row) << "\n";
  } else if (plot->parsed()) {
    if (fit_on == "sample") {
      andrews.fit_on = analysis::PcaFitOn::Sample;
    } else if (fit_on == "full") {
      andrews.fit_on = analysis::PcaFitOn::Full;
    } else {
      throw ConfigError("--pca-fit-on must be sample or full");
    }
    andrews.seed = cfg.train.seed;
    const auto path = pipeline::cmd_plot(cfg, pipeline::parse_plot_kind(plot_kind), plot_input, andrews);
    std::cout << path.string() << "\n";
  } else if (synth->parsed()) {
    spec.seed = cfg.train.seed;
    std::cout << pipeline::cmd_synth(cfg, spec).string() << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const ddosnet::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const ddosnet::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const ddosnet::NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
