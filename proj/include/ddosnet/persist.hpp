#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "ddosnet/model.hpp"
#include "ddosnet/preprocess.hpp"

namespace ddosnet::persist {

inline constexpr int kModelFormatVersion = 1;
inline constexpr int kScalerFormatVersion = 1;

std::string sha256_hex(std::string_view bytes);
std::string sha256_file(const std::filesystem::path& path);

std::string read_text_file(const std::filesystem::path& path);

struct ModelFile {
  int format_version = kModelFormatVersion;
  std::string catalog_hash;
  model::AutoencoderModel model;
  nlohmann::json provenance = nlohmann::json::object();
};

/// JSON text; reals use the shortest representation that parses back to the
/// same double, so save -> load -> save is byte-identical.
std::string serialize_model(const ModelFile& file);
/// Throws DataError naming the offending block on any shape or array-length
/// inconsistency, and for an unknown format_version.
ModelFile parse_model(std::string_view text);

void save_model(const ModelFile& file, const std::filesystem::path& path);
ModelFile load_model(const std::filesystem::path& path);

/// Non-empty warning text when the model was trained against another catalog.
std::optional<std::string> catalog_mismatch(const ModelFile& file, const std::string& catalog_hash);

std::string serialize_scaler(const ScalerParams& scaler);
ScalerParams parse_scaler(std::string_view text);
void save_scaler(const ScalerParams& scaler, const std::filesystem::path& path);
ScalerParams load_scaler(const std::filesystem::path& path);

/// phase,epoch,train_loss,val_loss,seconds. With `zero_seconds` the timing
/// column is written as 0 so the file depends on the inputs alone.
std::string history_csv(std::span<const model::TrainHistory> histories, bool zero_seconds);
std::vector<model::TrainHistory> parse_history_csv(std::string_view text);

}  // namespace ddosnet::persist
