#include "ddosnet/ingest.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <unordered_map>

#include "ddosnet/errors.hpp"
#include "ddosnet/rng.hpp"

namespace ddosnet {

CleaningReport& CleaningReport::operator+=(const CleaningReport& other) {
  rows_read += other.rows_read;
  rows_dropped_nonfinite += other.rows_dropped_nonfinite;
  rows_dropped_malformed += other.rows_dropped_malformed;
  rows_kept += other.rows_kept;
  return *this;
}

bool read_csv_record(std::istream& in, std::vector<std::string>& fields) {
  fields.clear();
  std::string line;
  if (!std::getline(in, line)) return false;
  std::string cell;
  bool quoted = false;
  for (;;) {
    for (std::size_t i = 0; i < line.size(); ++i) {
      const char c = line[i];
      if (quoted) {
        if (c == '"') {
          if (i + 1 < line.size() && line[i + 1] == '"') {
            cell.push_back('"');
            ++i;
          } else {
            quoted = false;
          }
        } else {
          cell.push_back(c);
        }
      } else if (c == '"') {
        quoted = true;
      } else if (c == ',') {
        fields.push_back(std::move(cell));
        cell.clear();
      } else if (c != '\r' || i + 1 != line.size()) {
        cell.push_back(c);
      }
    }
    if (!quoted) break;
    // Quoted cell spans a line break.
    cell.push_back('\n');
    if (!std::getline(in, line)) break;
  }
  fields.push_back(std::move(cell));
  return true;
}

namespace {

// NaN marks missing, non-finite or unparsable cells.
double parse_feature_cell(std::string_view cell) {
  cell = trim(cell);
  if (!cell.empty() && cell.front() == '+') cell.remove_prefix(1);
  if (cell.empty()) return std::numeric_limits<double>::quiet_NaN();
  double value = 0.0;
  const auto [end, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
  if (ec != std::errc() || end != cell.data() + cell.size() || !std::isfinite(value)) {
    return std::numeric_limits<double>::quiet_NaN();
  }
  return value;
}

std::vector<std::string> normalized_header(const std::vector<std::string>& raw) {
  std::vector<std::string> names;
  std::unordered_map<std::string, int> seen;
  names.reserve(raw.size());
  for (const auto& cell : raw) {
    std::string name(trim(cell));
    // Strip a UTF-8 byte-order mark on the first cell.
    if (names.empty() && name.starts_with("\xEF\xBB\xBF")) name = std::string(trim(name.substr(3)));
    const int n = seen[name]++;
    names.push_back(n == 0 ? name : name + "." + std::to_string(n));
  }
  return names;
}

}  // namespace

LoadResult load_flow_csv(std::istream& in, const FeatureCatalog& catalog,
                         const std::string& source_name) {
  std::vector<std::string> fields;
  if (!read_csv_record(in, fields) || (fields.size() == 1 && trim(fields[0]).empty())) {
    throw DataError(source_name + ": missing header row");
  }
  const auto header = normalized_header(fields);
  std::unordered_map<std::string, std::size_t> column_of;
  for (std::size_t c = 0; c < header.size(); ++c) column_of.emplace(header[c], c);

  std::vector<std::size_t> feature_columns;
  feature_columns.reserve(catalog.feature_count());
  for (const auto& name : catalog.feature_names()) {
    const auto it = column_of.find(name);
    if (it == column_of.end()) {
      throw DataError(source_name + ": header lacks feature column '" + name + "'");
    }
    feature_columns.push_back(it->second);
  }
  const auto label_it = column_of.find(catalog.label_name());
  if (label_it == column_of.end()) {
    throw DataError(source_name + ": header lacks label column '" + catalog.label_name() + "'");
  }
  const std::size_t label_column = label_it->second;

  LoadResult result{Dataset{{}, catalog, "file=" + source_name}, {}};
  std::size_t row = 0;
  while (read_csv_record(in, fields)) {
    if (fields.size() == 1 && trim(fields[0]).empty()) continue;  // blank line
    ++result.report.rows_read;
    const std::size_t this_row = row++;
    if (fields.size() != header.size() || trim(fields[label_column]).empty()) {
      ++result.report.rows_dropped_malformed;
      continue;
    }
    FlowRecord record;
    record.source_row = this_row;
    record.features.reserve(feature_columns.size());
    for (std::size_t col : feature_columns) {
      record.features.push_back(parse_feature_cell(fields[col]));
    }
    if (!validate_record(record, catalog).ok()) {
      ++result.report.rows_dropped_nonfinite;
      continue;
    }
    auto encoded = encode_labels(fields[label_column]);
    record.label = encoded.label;
    record.subtype = std::move(encoded.subtype);
    result.dataset.records.push_back(std::move(record));
    ++result.report.rows_kept;
  }
  return result;
}

LoadResult load_flow_csv(const std::filesystem::path& path, const FeatureCatalog& catalog) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  return load_flow_csv(in, catalog, path.string());
}

EncodedLabel encode_labels(std::string_view raw_label) {
  const auto label = trim(raw_label);
  if (label.empty()) throw DataError("empty label");
  constexpr std::string_view kBenign = "BENIGN";
  const bool benign =
      label.size() == kBenign.size() &&
      std::equal(label.begin(), label.end(), kBenign.begin(), [](char a, char b) {
        return std::toupper(static_cast<unsigned char>(a)) == b;
      });
  if (benign) return {LabelClass::Benign, std::nullopt};
  return {LabelClass::Attack, std::string(label)};
}

std::string label_text(const FlowRecord& record) {
  if (record.label == LabelClass::Benign) return "BENIGN";
  return record.subtype.value_or("ATTACK");
}

std::string format_real(double value) {
  std::array<char, 32> buffer{};
  const auto [end, ec] = std::to_chars(buffer.data(), buffer.data() + buffer.size(), value);
  return std::string(buffer.data(), end);
}

namespace {

std::string csv_escape(std::string_view cell) {
  if (cell.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(cell);
  std::string out = "\"";
  for (char c : cell) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

}  // namespace

void write_flow_csv(const Dataset& data, std::ostream& out) {
  for (const auto& name : data.catalog.feature_names()) out << csv_escape(name) << ',';
  out << csv_escape(data.catalog.label_name()) << '\n';
  for (const auto& record : data.records) {
    for (double v : record.features) out << format_real(v) << ',';
    out << csv_escape(label_text(record)) << '\n';
  }
}

void write_flow_csv(const Dataset& data, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  write_flow_csv(data, out);
  if (!out) throw DataError("write failed: " + path.string());
}

namespace {

FeatureCatalog synthetic_catalog(std::size_t n_features) {
  std::vector<std::string> names;
  names.reserve(n_features);
  for (std::size_t i = 0; i < n_features; ++i) names.push_back("f" + std::to_string(i));
  return FeatureCatalog(std::move(names), {}, "Label", "synthetic");
}

}  // namespace

Dataset generate_synthetic(const SynthSpec& spec, const FeatureCatalog& catalog) {
  if (spec.n_features == 0) throw ConfigError("synthetic data needs at least one feature");
  if (catalog.feature_count() != spec.n_features) {
    throw ConfigError("synthetic feature count does not match catalog");
  }
  if (!(spec.noise_scale > 0.0) || !(spec.class_separation >= 0.0)) {
    throw ConfigError("synthetic spec needs noise_scale > 0 and class_separation >= 0");
  }
  Rng rng(spec.seed);
  const double offset = spec.class_separation / std::sqrt(static_cast<double>(spec.n_features));
  Dataset data{{}, catalog,
               "synthetic seed=" + std::to_string(spec.seed) +
                   " separation=" + format_real(spec.class_separation) +
                   " noise=" + format_real(spec.noise_scale)};
  data.records.reserve(spec.n_benign + spec.n_attack);
  std::size_t row = 0;
  auto emit = [&](LabelClass label, double mean, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
      FlowRecord record;
      record.label = label;
      record.source_row = row++;
      record.features.resize(spec.n_features);
      for (double& v : record.features) v = mean + spec.noise_scale * rng.normal();
      data.records.push_back(std::move(record));
    }
  };
  emit(LabelClass::Benign, 0.0, spec.n_benign);
  emit(LabelClass::Attack, offset, spec.n_attack);
  return data;
}

Dataset generate_synthetic(const SynthSpec& spec) {
  if (spec.n_features == 0) throw ConfigError("synthetic data needs at least one feature");
  return generate_synthetic(spec, synthetic_catalog(spec.n_features));
}

}  // namespace ddosnet
