#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "ddosnet/errors.hpp"
#include "ddosnet/persist.hpp"
#include "ddosnet/pipeline.hpp"
#include "test_support.hpp"

using namespace ddosnet;
using namespace ddosnet::persist;
namespace fs = std::filesystem;
using testing::TempDir;

namespace {

ModelFile small_model(std::uint64_t seed) {
  ModelFile f;
  f.catalog_hash = sha256_hex("catalog");
  f.model = model::AutoencoderModel::create({7, 11, {16, 8}, nn::Activation::ReLU}, seed);
  f.provenance = {{"seed", seed}};
  return f;
}

// Raw CSV named by the shipped catalog, plus a socket column that prepare drops.
fs::path write_raw(const TempDir& dir, std::size_t per_class, std::size_t nonfinite_rows) {
  const auto catalog = load_catalog(DDOSNET_DEFAULT_CATALOG);
  SynthSpec spec;
  spec.n_benign = spec.n_attack = per_class;
  spec.seed = 1;
  auto data = generate_synthetic(spec, catalog);
  std::stringstream buf;
  write_flow_csv(data, buf);
  std::string line;
  std::getline(buf, line);
  std::string out = "Source IP," + line + "\n";
  std::size_t row = 0;
  while (std::getline(buf, line)) {
    if (row < nonfinite_rows) line = "Infinity" + line.substr(line.find(','));
    out += "10.0.0.1," + line + "\n";
    ++row;
  }
  const fs::path path = dir / "raw.csv";
  std::ofstream(path, std::ios::binary) << out;
  return path;
}

pipeline::RunConfig base_config(const fs::path& out) {
  pipeline::RunConfig cfg;
  cfg.catalog = DDOSNET_DEFAULT_CATALOG;
  cfg.out_dir = out;
  cfg.strict_determinism = true;
  cfg.train.epochs = 2;
  cfg.pretrain_epochs = 1;
  cfg.train.learning_rate = 1e-3;
  cfg.encoder_widths = {16, 8};
  return cfg;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(DDOSNET_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("sha256 known answer") {
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST_CASE("model save -> load -> save is byte-identical") {
  TempDir dir("model");
  const auto f = small_model(3);
  save_model(f, dir / "a.json");
  const auto back = load_model(dir / "a.json");
  CHECK(back.model == f.model);
  CHECK(back.catalog_hash == f.catalog_hash);
  save_model(back, dir / "b.json");
  CHECK(read_text_file(dir / "a.json") == read_text_file(dir / "b.json"));

  SequenceBatch batch(7, 11);
  Rng rng(1);
  Vector flat(77);
  for (int i = 0; i < 10; ++i) {
    for (double& v : flat) v = rng.uniform();
    batch.push_back(flat, LabelClass::Benign);
  }
  CHECK(model::predict(f.model, batch).attack_score == model::predict(back.model, batch).attack_score);
}

TEST_CASE("corrupted model files name the failing block") {
  auto doc = nlohmann::json::parse(serialize_model(small_model(1)));
  doc["layers"][1]["blocks"]["W_zz"][2].erase(0);
  try {
    parse_model(doc.dump());
    FAIL("expected an error");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("encoder[1].W_zz") != std::string::npos);
  }

  doc = nlohmann::json::parse(serialize_model(small_model(1)));
  doc["layers"][5]["blocks"]["b_f"].push_back(1.0);
  try {
    parse_model(doc.dump());
    FAIL("expected an error");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("head.b_f") != std::string::npos);
  }

  doc = nlohmann::json::parse(serialize_model(small_model(1)));
  doc["format_version"] = 99;
  CHECK_THROWS_AS(parse_model(doc.dump()), DataError);
  CHECK_THROWS_AS(parse_model("{not json"), DataError);
}

TEST_CASE("catalog mismatch is reported") {
  const auto f = small_model(1);
  CHECK_FALSE(catalog_mismatch(f, f.catalog_hash).has_value());
  CHECK(catalog_mismatch(f, sha256_hex("other")).has_value());
}

TEST_CASE("scaler round-trip") {
  ScalerParams s{{"a", "b c"}, {0.1, -3.0}, {1.0 / 3.0, 7.25}, "train"};
  CHECK(parse_scaler(serialize_scaler(s)) == s);
}

TEST_CASE("history csv round-trip") {
  std::vector<model::TrainHistory> hs(2);
  hs[0].phase = model::Phase::Pretrain;
  hs[0].epochs = {{1, 0.5, 0.6, 1.25}, {2, 0.25, 0.3, 1.5}};
  hs[1].phase = model::Phase::Finetune;
  hs[1].epochs = {{1, 0.7, 0.2, 2.0}, {2, 0.6, 0.4, 2.0}};
  const auto text = history_csv(hs, false);
  const auto back = parse_history_csv(text);
  REQUIRE(back.size() == 2);
  CHECK(back[1].epochs[0].val_loss == 0.2);
  CHECK(back[1].best_epoch == 1);
  CHECK(history_csv(back, false) == text);
  CHECK(history_csv(hs, true).find("1.25") == std::string::npos);
}

TEST_CASE("output directory confinement") {
  TempDir dir("confine");
  const pipeline::OutputDir out(dir.path());
  CHECK(out.file("model.json") == dir / "model.json");
  CHECK_THROWS_AS(out.file("../model.json"), ConfigError);
  CHECK_THROWS_AS(out.file("/tmp/x"), ConfigError);
  CHECK_THROWS_AS(out.file("sub/x"), ConfigError);
  CHECK_THROWS_AS(out.file(""), ConfigError);
}

TEST_CASE("prepare is reproducible and records cleaning") {
  TempDir dir("prepare");
  const auto raw = write_raw(dir, 100, 3);
  auto cfg = base_config(dir / "p1");
  cfg.data_paths = {raw};
  const auto r = pipeline::cmd_prepare(cfg);
  CHECK(r.feature_count == 77);
  CHECK(r.report.rows_dropped_nonfinite == 3);
  CHECK(r.train_size + r.val_size + r.test_size == 197);
  const auto manifest = nlohmann::json::parse(read_text_file(dir / "p1" / "manifest.json"));
  CHECK(manifest["cleaning"]["rows_dropped_nonfinite"] == 3);
  CHECK(manifest["inputs"][0]["sha256"] == sha256_file(raw));
  CHECK_FALSE(manifest.contains("created_utc"));

  cfg.out_dir = dir / "p2";
  pipeline::cmd_prepare(cfg);
  for (const char* name : {"train.csv", "val.csv", "test.csv", "scaler.json"}) {
    CHECK(sha256_file(dir / "p1" / name) == sha256_file(dir / "p2" / name));
  }
  CHECK(read_text_file(dir / "p1" / "manifest.json").find(raw.string()) != std::string::npos);

  // Editing a split after the fact is caught.
  std::ofstream(dir / "p2" / "val.csv", std::ios::app) << "\n";
  const auto catalog = load_catalog(DDOSNET_DEFAULT_CATALOG);
  CHECK_THROWS_AS(pipeline::load_prepared(dir / "p2", catalog, sha256_file(DDOSNET_DEFAULT_CATALOG)),
                  DataError);
  CHECK_NOTHROW(pipeline::load_prepared(dir / "p1", catalog, sha256_file(DDOSNET_DEFAULT_CATALOG)));
}

TEST_CASE("prepare with counts, holdout and balance") {
  TempDir dir("counts");
  const auto catalog = load_catalog(DDOSNET_DEFAULT_CATALOG);
  SynthSpec spec;
  spec.n_benign = spec.n_attack = 200;
  auto data = generate_synthetic(spec, catalog);
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (data.records[i].label == LabelClass::Attack) data.records[i].subtype = i % 4 ? "Syn" : "PortScan";
  }
  write_flow_csv(data, dir / "raw.csv");
  auto cfg = base_config(dir / "out");
  cfg.data_paths = {dir / "raw.csv"};
  cfg.split_counts = std::array<std::size_t, 3>{100, 40, 20};
  cfg.holdout_subtypes = {"PortScan"};
  auto r = pipeline::cmd_prepare(cfg);
  // Stratified rounding may move a record or two between splits.
  CHECK(r.train_size + r.val_size + r.test_size == 160 + 50);
  CHECK(r.train_size >= 98);
  CHECK(r.train_size <= 102);
  CHECK(r.val_size >= 38);
  CHECK(r.val_size <= 42);
  const auto prepared = pipeline::load_prepared(dir / "out", catalog, sha256_file(DDOSNET_DEFAULT_CATALOG));
  for (const auto& rec : prepared.train.records) CHECK(rec.subtype != "PortScan");

  cfg.split_counts = std::array<std::size_t, 3>{1000, 40, 20};
  CHECK_THROWS_AS(pipeline::cmd_prepare(cfg), ConfigError);

  cfg.split_counts.reset();
  cfg.holdout_subtypes.clear();
  cfg.balance.per_group = 30;
  r = pipeline::cmd_prepare(cfg);
  CHECK(r.train_size == 60);
  CHECK(r.val_size == 60);
}

TEST_CASE("train, evaluate, baseline and sweep commands") {
  TempDir dir("commands");
  const auto raw = write_raw(dir, 60, 0);
  auto prep = base_config(dir / "prep");
  prep.data_paths = {raw};
  pipeline::cmd_prepare(prep);

  auto cfg = base_config(dir / "m1");
  cfg.data_paths = {dir / "prep"};
  cfg.train.seed = 42;
  const auto t1 = pipeline::cmd_train(cfg);
  cfg.out_dir = dir / "m2";
  pipeline::cmd_train(cfg);
  CHECK(read_text_file(dir / "m1" / "model.json") == read_text_file(dir / "m2" / "model.json"));
  CHECK(read_text_file(dir / "m1" / "history.csv") == read_text_file(dir / "m2" / "history.csv"));
  CHECK(read_text_file(dir / "m1" / "loss.svg") == read_text_file(dir / "m2" / "loss.svg"));

  const auto hist = parse_history_csv(read_text_file(dir / "m1" / "history.csv"));
  REQUIRE(hist.size() == 2);
  CHECK(hist[0].phase == model::Phase::Pretrain);
  CHECK(hist[1].phase == model::Phase::Finetune);
  CHECK(hist[1].epochs.size() == 2);

  cfg.out_dir = dir / "eval";
  const auto ev = pipeline::cmd_evaluate(cfg, dir / "m1" / "model.json", dir / "prep" / "test.csv");
  CHECK(ev.warnings.empty());
  for (const char* name : {"report.csv", "report.txt", "confusion.csv", "scores.csv", "roc.svg"}) {
    CHECK(fs::exists(dir / "eval" / name));
  }
  const auto report = read_text_file(dir / "eval" / "report.csv");
  CHECK(report.substr(0, report.find('\n')) == metrics::benchmark_csv_header());

  cfg.out_dir = dir / "base";
  std::vector<baselines::BaselineKind> kinds(baselines::kAllKinds.begin(), baselines::kAllKinds.end());
  auto rows = pipeline::cmd_baseline(cfg, kinds, dir / "m1" / "model.json");
  CHECK(rows.size() == 7);
  CHECK(rows.back().first == "DDoSNet");
  rows = pipeline::cmd_baseline(cfg, {baselines::BaselineKind::LR}, std::nullopt);
  CHECK(rows.size() == 1);

  cfg.out_dir = dir / "sweep";
  cfg.pretrain_epochs = 0;
  cfg.train.epochs = 1;
  const auto sweep = pipeline::cmd_sweep_lr(cfg, {0.01, 0.001, 0.0001}, 2);
  REQUIRE(sweep.size() == 3);
  CHECK(sweep[1].learning_rate == 0.001);
  CHECK(sweep[1].seed == (42u ^ 1u));
  const auto csv = read_text_file(dir / "sweep" / "sweep.csv");
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);
  // Worker threads do not change per-rate results.
  cfg.out_dir = dir / "sweep1";
  pipeline::cmd_sweep_lr(cfg, {0.01, 0.001, 0.0001}, 1);
  CHECK(read_text_file(dir / "sweep1" / "sweep.csv") == csv);
}

TEST_CASE("evaluating a perfect model") {
  TempDir dir("perfect");
  const auto catalog = load_catalog(DDOSNET_DEFAULT_CATALOG);
  SynthSpec spec;
  spec.n_benign = spec.n_attack = 20;
  auto data = generate_synthetic(spec, catalog);
  // The first feature of the last step alone tells the classes apart.
  for (auto& r : data.records) r.features[66] = r.label == LabelClass::Attack ? 1.0 : 0.0;
  write_flow_csv(data, dir / "test.csv");
  ModelFile f;
  f.catalog_hash = sha256_file(DDOSNET_DEFAULT_CATALOG);
  f.model = model::AutoencoderModel::create({7, 11, {2, 1}, nn::Activation::ReLU}, 1).zeros_like();
  // Pass that value straight up through every layer at the last step.
  for (auto* layers : {&f.model.encoder, &f.model.decoder}) {
    for (auto& l : *layers) l.w_xz(0, 0) = 1.0;
  }
  f.model.head.w_zf(1, 0) = 50.0;
  f.model.head.b_f = {0.0, -25.0};
  save_model(f, dir / "model.json");
  auto cfg = base_config(dir / "eval");
  const auto ev = pipeline::cmd_evaluate(cfg, dir / "model.json", dir / "test.csv");
  CHECK(ev.report.accuracy == 1.0);
  CHECK(*ev.report.auc == 1.0);
}

TEST_CASE("cli exit codes") {
  TempDir dir("cli");
  CHECK(run_cli("--help") == 0);
  CHECK(run_cli("train") == 2);
  CHECK(run_cli("train --data-dir " + (dir / "nope").string() + " --out-dir " + (dir / "o").string()) == 2);
  CHECK(run_cli("synth --out-dir " + (dir / "s").string() + " --n-benign 30 --n-attack 30") == 0);
  CHECK(fs::exists(dir / "s" / "synth.csv"));
  CHECK(run_cli("prepare --input " + (dir / "s" / "synth.csv").string() + " --out-dir " +
                (dir / "p").string() + " --train-frac 0.8") == 2);
  std::ofstream(dir / "bad.csv") << "x,y\n1,2\n";
  CHECK(run_cli("prepare --input " + (dir / "bad.csv").string() + " --out-dir " + (dir / "p").string()) == 3);
  CHECK(run_cli("prepare --input " + (dir / "s" / "synth.csv").string() + " --out-dir " +
                (dir / "p").string()) == 0);
  CHECK(run_cli("train --data-dir " + (dir / "p").string() + " --out-dir " + (dir / "t").string() +
                " --seq-len 5") == 2);
  CHECK(run_cli("train --data-dir " + (dir / "p").string() + " --out-dir " + (dir / "t").string() +
                " --epochs 1 --pretrain-epochs 0 --widths 8,4") == 0);
}
