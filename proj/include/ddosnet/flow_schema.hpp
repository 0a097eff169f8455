#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ddosnet/matrix.hpp"

namespace ddosnet {

enum class LabelClass : int { Benign = 0, Attack = 1 };

/// Which CSV columns are model features, which are socket/identity columns to
/// discard, and which one carries the label. Feature order is significant.
class FeatureCatalog {
 public:
  FeatureCatalog(std::vector<std::string> feature_names, std::vector<std::string> dropped_names,
                 std::string label_name, std::string version_tag);

  const std::vector<std::string>& feature_names() const { return feature_names_; }
  const std::vector<std::string>& dropped_names() const { return dropped_names_; }
  const std::string& label_name() const { return label_name_; }
  const std::string& version_tag() const { return version_tag_; }
  std::size_t feature_count() const { return feature_names_.size(); }

  std::optional<std::size_t> feature_index(std::string_view name) const;

  friend bool operator==(const FeatureCatalog&, const FeatureCatalog&) = default;

 private:
  std::vector<std::string> feature_names_;
  std::vector<std::string> dropped_names_;
  std::string label_name_;
  std::string version_tag_;
};

/// Parses the line-oriented catalog format (`feature`, `drop`, `label`,
/// `version` directives, `#` comments). Throws DataError on bad input.
FeatureCatalog parse_catalog(std::string_view text);
FeatureCatalog load_catalog(const std::filesystem::path& path);
std::string serialize_catalog(const FeatureCatalog& catalog);

struct FlowRecord {
  Vector features;
  LabelClass label = LabelClass::Benign;
  std::optional<std::string> subtype;
  std::size_t source_row = 0;

  friend bool operator==(const FlowRecord&, const FlowRecord&) = default;
};

struct Dataset {
  std::vector<FlowRecord> records;
  FeatureCatalog catalog;
  std::string provenance;

  std::size_t size() const { return records.size(); }
  bool empty() const { return records.empty(); }
  std::size_t count(LabelClass label) const;

  /// Same catalog and provenance, no records.
  Dataset empty_like() const { return Dataset{{}, catalog, provenance}; }
};

struct Violation {
  enum class Kind { LengthMismatch, NonFinite };
  Kind kind;
  /// Feature index for NonFinite; actual length for LengthMismatch.
  std::size_t index;

  friend bool operator==(const Violation&, const Violation&) = default;
};

struct ValidationResult {
  std::vector<Violation> violations;
  bool ok() const { return violations.empty(); }
};

ValidationResult validate_record(const FlowRecord& record, const FeatureCatalog& catalog);

/// Trims ASCII whitespace (CICDDoS2019 headers carry leading spaces).
std::string_view trim(std::string_view s);

}  // namespace ddosnet
