#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "ddosnet/flow_schema.hpp"
#include "ddosnet/ingest.hpp"
#include "ddosnet/rng.hpp"

namespace testing {

// Fresh directory under the system temp dir, removed on scope exit.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    ddosnet::Rng rng(reinterpret_cast<std::uintptr_t>(this) ^ std::hash<std::string>{}(tag));
    path_ = std::filesystem::temp_directory_path() /
            ("ddosnet-" + tag + "-" + std::to_string(rng.next_u64() % 1000000007ULL));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline ddosnet::FeatureCatalog generic_catalog(std::size_t d) {
  std::vector<std::string> names;
  for (std::size_t i = 0; i < d; ++i) names.push_back("f" + std::to_string(i));
  return ddosnet::FeatureCatalog(names, {}, "Label", "test");
}

inline ddosnet::Dataset make_dataset(const std::vector<std::vector<double>>& rows,
                                     const std::vector<int>& labels) {
  ddosnet::Dataset data{{}, generic_catalog(rows.front().size()), "test"};
  for (std::size_t i = 0; i < rows.size(); ++i) {
    data.records.push_back({rows[i], labels[i] ? ddosnet::LabelClass::Attack : ddosnet::LabelClass::Benign,
                            std::nullopt, i});
  }
  return data;
}

}  // namespace testing
