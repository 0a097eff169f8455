#include "ddosnet/flow_schema.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "ddosnet/errors.hpp"

namespace ddosnet {

std::string_view trim(std::string_view s) {
  constexpr std::string_view kSpace = " \t\r\n\v\f";
  const auto first = s.find_first_not_of(kSpace);
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(kSpace);
  return s.substr(first, last - first + 1);
}

FeatureCatalog::FeatureCatalog(std::vector<std::string> feature_names,
                               std::vector<std::string> dropped_names, std::string label_name,
                               std::string version_tag)
    : feature_names_(std::move(feature_names)),
      dropped_names_(std::move(dropped_names)),
      label_name_(std::move(label_name)),
      version_tag_(std::move(version_tag)) {
  if (feature_names_.empty()) throw DataError("catalog has no features");
  if (label_name_.empty()) throw DataError("catalog has no label column");
  std::unordered_set<std::string> seen;
  for (const auto& name : feature_names_) {
    if (!seen.insert(name).second) throw DataError("duplicate column in catalog: '" + name + "'");
  }
  for (const auto& name : dropped_names_) {
    if (!seen.insert(name).second) throw DataError("duplicate column in catalog: '" + name + "'");
  }
  if (seen.contains(label_name_)) {
    throw DataError("label column '" + label_name_ + "' also listed as feature or drop");
  }
}

std::optional<std::size_t> FeatureCatalog::feature_index(std::string_view name) const {
  const auto it = std::find(feature_names_.begin(), feature_names_.end(), name);
  if (it == feature_names_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - feature_names_.begin());
}

FeatureCatalog parse_catalog(std::string_view text) {
  std::vector<std::string> features;
  std::vector<std::string> dropped;
  std::string label;
  std::string version;
  std::size_t line_no = 0;
  std::istringstream in{std::string(text)};
  for (std::string raw; std::getline(in, raw);) {
    ++line_no;
    std::string_view line = raw;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    line = trim(line);
    if (line.empty()) continue;
    const auto space = line.find_first_of(" \t");
    if (space == std::string_view::npos) {
      throw DataError("catalog line " + std::to_string(line_no) + ": missing argument");
    }
    const auto directive = line.substr(0, space);
    const std::string argument(trim(line.substr(space)));
    if (directive == "feature") {
      features.push_back(argument);
    } else if (directive == "drop") {
      dropped.push_back(argument);
    } else if (directive == "label") {
      if (!label.empty()) {
        throw DataError("catalog line " + std::to_string(line_no) + ": second label directive");
      }
      label = argument;
    } else if (directive == "version") {
      version = argument;
    } else {
      throw DataError("catalog line " + std::to_string(line_no) + ": unknown directive '" +
                      std::string(directive) + "'");
    }
  }
  return FeatureCatalog(std::move(features), std::move(dropped), std::move(label),
                        std::move(version));
}

FeatureCatalog load_catalog(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open catalog " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_catalog(buffer.str());
}

std::string serialize_catalog(const FeatureCatalog& catalog) {
  std::ostringstream out;
  if (!catalog.version_tag().empty()) out << "version " << catalog.version_tag() << '\n';
  out << "label " << catalog.label_name() << '\n';
  for (const auto& name : catalog.dropped_names()) out << "drop " << name << '\n';
  for (const auto& name : catalog.feature_names()) out << "feature " << name << '\n';
  return out.str();
}

std::size_t Dataset::count(LabelClass label) const {
  return static_cast<std::size_t>(std::count_if(
      records.begin(), records.end(), [label](const FlowRecord& r) { return r.label == label; }));
}

ValidationResult validate_record(const FlowRecord& record, const FeatureCatalog& catalog) {
  ValidationResult result;
  if (record.features.size() != catalog.feature_count()) {
    result.violations.push_back({Violation::Kind::LengthMismatch, record.features.size()});
  }
  for (std::size_t i = 0; i < record.features.size(); ++i) {
    if (!std::isfinite(record.features[i])) {
      result.violations.push_back({Violation::Kind::NonFinite, i});
    }
  }
  return result;
}

}  // namespace ddosnet
