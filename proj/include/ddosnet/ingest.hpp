#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ddosnet/flow_schema.hpp"

namespace ddosnet {

struct CleaningReport {
  std::size_t rows_read = 0;
  std::size_t rows_dropped_nonfinite = 0;
  std::size_t rows_dropped_malformed = 0;
  std::size_t rows_kept = 0;

  bool consistent() const {
    return rows_read == rows_kept + rows_dropped_nonfinite + rows_dropped_malformed;
  }
  CleaningReport& operator+=(const CleaningReport& other);
};

struct LoadResult {
  Dataset dataset;
  CleaningReport report;
};

/// Reads a CICFlowMeter-style CSV. Feature columns are reordered to catalog
/// order, dropped and unlisted columns are discarded, and rows with a
/// non-finite or unparsable feature (or a wrong cell count / empty label) are
/// removed and counted. Throws DataError for a missing header, a header
/// lacking a catalog feature or the label, or an unreadable file.
LoadResult load_flow_csv(const std::filesystem::path& path, const FeatureCatalog& catalog);
LoadResult load_flow_csv(std::istream& in, const FeatureCatalog& catalog,
                         const std::string& source_name);

struct EncodedLabel {
  LabelClass label;
  std::optional<std::string> subtype;
};

/// "BENIGN" (any case, trimmed) is benign; any other non-empty string is an
/// attack whose subtype is the trimmed raw label.
EncodedLabel encode_labels(std::string_view raw_label);

/// Label text written back to CSV: "BENIGN", the subtype, or "ATTACK".
std::string label_text(const FlowRecord& record);

/// Writes the same CSV dialect the loader reads: catalog feature names then
/// the label column. Reals use the shortest round-trip representation.
void write_flow_csv(const Dataset& data, const std::filesystem::path& path);
void write_flow_csv(const Dataset& data, std::ostream& out);

struct SynthSpec {
  std::size_t n_benign = 1000;
  std::size_t n_attack = 1000;
  std::size_t n_features = 77;
  double class_separation = 10.0;
  double noise_scale = 1.0;
  std::uint64_t seed = 1;
};

/// Benign records scatter around the origin, attack records around
/// (s/sqrt(d)) * ones so the class means are exactly `class_separation`
/// apart. Benign rows come first.
Dataset generate_synthetic(const SynthSpec& spec);
/// Same, but named by `catalog`, whose feature count must equal n_features.
Dataset generate_synthetic(const SynthSpec& spec, const FeatureCatalog& catalog);

/// Splits one CSV record (RFC 4180 quoting, embedded newlines allowed).
/// Returns false at end of input.
bool read_csv_record(std::istream& in, std::vector<std::string>& fields);

/// Shortest decimal text that parses back to exactly `value`.
std::string format_real(double value);

}  // namespace ddosnet
