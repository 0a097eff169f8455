#include "ddosnet/persist.hpp"

#include <openssl/evp.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <sstream>

#include "ddosnet/errors.hpp"
#include "ddosnet/ingest.hpp"

namespace ddosnet::persist {

using nlohmann::json;

std::string sha256_hex(std::string_view bytes) {
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), bytes.data(), bytes.size()) != 1 ||
      EVP_DigestFinal_ex(ctx.get(), digest, &len) != 1) {
    throw std::runtime_error("sha256 failed");
  }
  std::string hex;
  char buf[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(buf, sizeof buf, "%02x", digest[i]);
    hex += buf;
  }
  return hex;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::string sha256_file(const std::filesystem::path& path) { return sha256_hex(read_text_file(path)); }

namespace {

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
  if (!out) throw DataError("write failed: " + path.string());
}

json matrix_json(const std::string& name, const Matrix& m) {
  json rows = json::array();
  for (std::size_t r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (double v : m.row(r)) {
      if (!std::isfinite(v)) throw NumericError("block " + name + " holds a non-finite value");
      row.push_back(v);
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

json vector_json(const std::string& name, const Vector& v) {
  for (double x : v) {
    if (!std::isfinite(x)) throw NumericError("block " + name + " holds a non-finite value");
  }
  return json(v);
}

const json& member(const json& obj, const std::string& key, const std::string& where) {
  if (!obj.is_object() || !obj.contains(key)) throw DataError(where + ": missing '" + key + "'");
  return obj.at(key);
}

std::size_t read_size(const json& obj, const std::string& key, const std::string& where) {
  const json& v = member(obj, key, where);
  if (!v.is_number_unsigned()) throw DataError(where + ": '" + key + "' must be a non-negative integer");
  return v.get<std::size_t>();
}

double read_real(const json& v, const std::string& block) {
  if (!v.is_number()) throw DataError("block " + block + ": non-numeric entry");
  return v.get<double>();
}

Matrix read_matrix(const json& v, const std::string& block, std::size_t rows, std::size_t cols) {
  if (!v.is_array() || v.size() != rows) {
    throw DataError("block " + block + ": expected " + std::to_string(rows) + " rows, found " +
                    (v.is_array() ? std::to_string(v.size()) : std::string("no array")));
  }
  Matrix m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    const json& row = v[r];
    if (!row.is_array() || row.size() != cols) {
      throw DataError("block " + block + ": row " + std::to_string(r) + " should hold " +
                      std::to_string(cols) + " values, found " +
                      (row.is_array() ? std::to_string(row.size()) : std::string("no array")));
    }
    for (std::size_t c = 0; c < cols; ++c) m(r, c) = read_real(row[c], block);
  }
  return m;
}

Vector read_vector(const json& v, const std::string& block, std::size_t size) {
  if (!v.is_array() || v.size() != size) {
    throw DataError("block " + block + ": expected " + std::to_string(size) + " values, found " +
                    (v.is_array() ? std::to_string(v.size()) : std::string("no array")));
  }
  Vector out(size);
  for (std::size_t i = 0; i < size; ++i) out[i] = read_real(v[i], block);
  return out;
}

json layer_json(const std::string& role, const std::string& prefix, const model::RnnLayer& layer) {
  return {{"role", role},
          {"input", layer.input_size()},
          {"width", layer.hidden_size()},
          {"activation", nn::activation_name(layer.activation)},
          {"blocks",
           {{"W_xz", matrix_json(prefix + ".W_xz", layer.w_xz)},
            {"W_zz", matrix_json(prefix + ".W_zz", layer.w_zz)},
            {"b_h", vector_json(prefix + ".b_h", layer.b_h)}}}};
}

json projection_json(const std::string& role, const model::OutputProjection& proj) {
  return {{"role", role},
          {"input", proj.input_size()},
          {"width", proj.output_size()},
          {"activation", "identity"},
          {"blocks",
           {{"W_zf", matrix_json(role + ".W_zf", proj.w_zf)},
            {"b_f", vector_json(role + ".b_f", proj.b_f)}}}};
}

model::RnnLayer read_layer(const json& j, const std::string& prefix) {
  const std::size_t in = read_size(j, "input", prefix);
  const std::size_t width = read_size(j, "width", prefix);
  const json& act = member(j, "activation", prefix);
  if (!act.is_string()) throw DataError(prefix + ": activation must be a string");
  model::RnnLayer layer;
  try {
    layer.activation = nn::parse_activation(act.get<std::string>());
  } catch (const ConfigError& e) {
    throw DataError(prefix + ": " + e.what());
  }
  const json& blocks = member(j, "blocks", prefix);
  layer.w_xz = read_matrix(member(blocks, "W_xz", prefix), prefix + ".W_xz", in, width);
  layer.w_zz = read_matrix(member(blocks, "W_zz", prefix), prefix + ".W_zz", width, width);
  layer.b_h = read_vector(member(blocks, "b_h", prefix), prefix + ".b_h", width);
  return layer;
}

model::OutputProjection read_projection(const json& j, const std::string& role) {
  const std::size_t in = read_size(j, "input", role);
  const std::size_t width = read_size(j, "width", role);
  const json& blocks = member(j, "blocks", role);
  return {read_matrix(member(blocks, "W_zf", role), role + ".W_zf", width, in),
          read_vector(member(blocks, "b_f", role), role + ".b_f", width)};
}

}  // namespace

std::string serialize_model(const ModelFile& file) {
  const auto& m = file.model;
  m.validate();
  json layers = json::array();
  for (std::size_t k = 0; k < m.encoder.size(); ++k) {
    layers.push_back(layer_json("encoder", "encoder[" + std::to_string(k) + "]", m.encoder[k]));
  }
  for (std::size_t k = 0; k < m.decoder.size(); ++k) {
    layers.push_back(layer_json("decoder", "decoder[" + std::to_string(k) + "]", m.decoder[k]));
  }
  layers.push_back(projection_json("recon", m.recon));
  layers.push_back(projection_json("head", m.head));
  json doc = {{"format_version", file.format_version},
              {"catalog_hash", file.catalog_hash},
              {"seq_len", m.seq_len},
              {"step_dim", m.step_dim},
              {"layers", std::move(layers)},
              {"provenance", file.provenance}};
  return doc.dump(1) + "\n";
}

ModelFile parse_model(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw DataError(std::string("model file is not valid JSON: ") + e.what());
  }
  ModelFile file;
  const json& version = member(doc, "format_version", "model file");
  if (!version.is_number_integer() || version.get<int>() != kModelFormatVersion) {
    throw DataError("model file: unsupported format_version " + version.dump() + " (expected " +
                    std::to_string(kModelFormatVersion) + ")");
  }
  file.format_version = kModelFormatVersion;
  const json& hash = member(doc, "catalog_hash", "model file");
  if (!hash.is_string()) throw DataError("model file: catalog_hash must be a string");
  file.catalog_hash = hash.get<std::string>();
  if (doc.contains("provenance")) file.provenance = doc.at("provenance");

  auto& m = file.model;
  m.seq_len = read_size(doc, "seq_len", "model file");
  m.step_dim = read_size(doc, "step_dim", "model file");
  const json& layers = member(doc, "layers", "model file");
  if (!layers.is_array()) throw DataError("model file: layers must be an array");
  bool have_recon = false;
  bool have_head = false;
  for (const json& layer : layers) {
    const json& role_json = member(layer, "role", "layer");
    const std::string role = role_json.is_string() ? role_json.get<std::string>() : "";
    if (role == "encoder") {
      if (!m.decoder.empty()) throw DataError("model file: encoder layer after decoder layers");
      m.encoder.push_back(read_layer(layer, "encoder[" + std::to_string(m.encoder.size()) + "]"));
    } else if (role == "decoder") {
      m.decoder.push_back(read_layer(layer, "decoder[" + std::to_string(m.decoder.size()) + "]"));
    } else if (role == "recon" && !have_recon) {
      m.recon = read_projection(layer, "recon");
      have_recon = true;
    } else if (role == "head" && !have_head) {
      m.head = read_projection(layer, "head");
      have_head = true;
    } else {
      throw DataError("model file: unexpected layer role '" + role + "'");
    }
  }
  if (!have_recon || !have_head) throw DataError("model file: missing recon or head layer");
  m.validate();
  return file;
}

void save_model(const ModelFile& file, const std::filesystem::path& path) {
  write_file(path, serialize_model(file));
}

ModelFile load_model(const std::filesystem::path& path) {
  try {
    return parse_model(read_text_file(path));
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

std::optional<std::string> catalog_mismatch(const ModelFile& file, const std::string& catalog_hash) {
  if (file.catalog_hash == catalog_hash) return std::nullopt;
  return "model was trained with catalog " + file.catalog_hash.substr(0, 12) +
         "..., current catalog is " + catalog_hash.substr(0, 12) + "...";
}

std::string serialize_scaler(const ScalerParams& scaler) {
  json doc = {{"format", "ddosnet-minmax"},
              {"format_version", kScalerFormatVersion},
              {"feature_names", scaler.feature_names},
              {"min", vector_json("min", scaler.min)},
              {"max", vector_json("max", scaler.max)},
              {"fitted_on", scaler.fitted_on}};
  return doc.dump(1) + "\n";
}

ScalerParams parse_scaler(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw DataError(std::string("scaler file is not valid JSON: ") + e.what());
  }
  const json& version = member(doc, "format_version", "scaler file");
  if (!version.is_number_integer() || version.get<int>() != kScalerFormatVersion) {
    throw DataError("scaler file: unsupported format_version " + version.dump());
  }
  ScalerParams scaler;
  const json& names = member(doc, "feature_names", "scaler file");
  if (!names.is_array()) throw DataError("scaler file: feature_names must be an array");
  for (const json& n : names) {
    if (!n.is_string()) throw DataError("scaler file: feature name is not a string");
    scaler.feature_names.push_back(n.get<std::string>());
  }
  scaler.min = read_vector(member(doc, "min", "scaler file"), "min", scaler.feature_names.size());
  scaler.max = read_vector(member(doc, "max", "scaler file"), "max", scaler.feature_names.size());
  const json& fitted = member(doc, "fitted_on", "scaler file");
  if (fitted.is_string()) scaler.fitted_on = fitted.get<std::string>();
  return scaler;
}

void save_scaler(const ScalerParams& scaler, const std::filesystem::path& path) {
  write_file(path, serialize_scaler(scaler));
}

ScalerParams load_scaler(const std::filesystem::path& path) {
  return parse_scaler(read_text_file(path));
}

std::string history_csv(std::span<const model::TrainHistory> histories, bool zero_seconds) {
  std::string out = "phase,epoch,train_loss,val_loss,seconds\n";
  for (const auto& h : histories) {
    for (const auto& e : h.epochs) {
      out += model::phase_name(h.phase) + ',' + std::to_string(e.epoch) + ',' +
             format_real(e.train_loss) + ',' + format_real(e.val_loss) + ',' +
             (zero_seconds ? std::string("0") : format_real(e.seconds)) + '\n';
    }
  }
  return out;
}

std::vector<model::TrainHistory> parse_history_csv(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::vector<std::string> fields;
  if (!read_csv_record(in, fields) || fields.size() != 5 || fields[0] != "phase") {
    throw DataError("history file: bad header");
  }
  std::vector<model::TrainHistory> out;
  std::size_t line = 1;
  while (read_csv_record(in, fields)) {
    ++line;
    if (fields.size() == 1 && fields[0].empty()) continue;
    if (fields.size() != 5) throw DataError("history file: line " + std::to_string(line) + " malformed");
    model::Phase phase;
    if (fields[0] == "pretrain") {
      phase = model::Phase::Pretrain;
    } else if (fields[0] == "finetune") {
      phase = model::Phase::Finetune;
    } else {
      throw DataError("history file: unknown phase '" + fields[0] + "'");
    }
    if (out.empty() || out.back().phase != phase) out.push_back({phase, {}, 0});
    try {
      out.back().epochs.push_back({std::stoul(fields[1]), std::stod(fields[2]), std::stod(fields[3]),
                                   std::stod(fields[4])});
    } catch (const std::exception&) {
      throw DataError("history file: line " + std::to_string(line) + " has a bad number");
    }
  }
  for (auto& h : out) {
    if (h.epochs.empty()) continue;
    std::size_t best = 0;
    for (std::size_t i = 1; i < h.epochs.size(); ++i) {
      if (h.epochs[i].val_loss < h.epochs[best].val_loss) best = i;
    }
    h.best_epoch = h.epochs[best].epoch;
  }
  return out;
}

}  // namespace ddosnet::persist
