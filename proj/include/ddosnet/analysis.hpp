#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ddosnet/flow_schema.hpp"
#include "ddosnet/matrix.hpp"
#include "ddosnet/metrics.hpp"
#include "ddosnet/model.hpp"

namespace ddosnet::analysis {

struct EigenResult {
  Vector values;   // descending
  Matrix vectors;  // column k is the eigenvector of values[k]
  std::size_t sweeps = 0;
};

/// Cyclic Jacobi rotations on a symmetric matrix until the off-diagonal
/// Frobenius norm is below `tolerance` or `max_sweeps` is reached.
EigenResult jacobi_eigen(Matrix a, double tolerance = 1e-12, std::size_t max_sweeps = 100);

struct PcaModel {
  Vector mean;
  Matrix components;  // k x d, rows orthonormal
  Vector explained_variance;
  double total_variance = 0.0;

  std::size_t k() const { return components.rows(); }
};

/// Sample covariance (n - 1 denominator). Each component's largest-magnitude
/// entry is made positive. Throws ConfigError if k exceeds the feature count
/// and DataError for fewer than two records.
PcaModel pca_fit(const Matrix& data, std::size_t k);
PcaModel pca_fit(const Dataset& data, std::size_t k);

Matrix pca_transform(const PcaModel& model, const Matrix& data);
/// Back-projection of reduced coordinates into feature space.
Matrix pca_inverse(const PcaModel& model, const Matrix& reduced);

/// x1/sqrt(2) + x2 sin t + x3 cos t + x4 sin 2t + x5 cos 2t + ...
double andrews_value(std::span<const double> x, double t);

struct Series {
  std::string name;
  std::vector<std::pair<double, double>> points;
  std::string class_tag;  // "attack", "benign", "train", "val", "reference", ...
};

struct PlotSpec {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<Series> series;
  std::size_t width = 640;
  std::size_t height = 480;
  std::vector<std::string> annotations;
  std::optional<std::pair<double, double>> x_range;
  std::optional<std::pair<double, double>> y_range;
};

/// Deterministic SVG text: fixed six-decimal coordinates, no timestamps.
std::string render_svg(const PlotSpec& spec);
void write_text_file(const std::filesystem::path& path, const std::string& text);

enum class PcaFitOn { Sample, Full };

struct AndrewsOptions {
  double sample_fraction = 0.10;
  std::size_t components = 20;
  std::uint64_t seed = 42;
  PcaFitOn fit_on = PcaFitOn::Sample;
  std::size_t samples_per_curve = 200;
};

std::string andrews_svg(const Dataset& data, const AndrewsOptions& options);
void render_andrews(const Dataset& data, const AndrewsOptions& options,
                    const std::filesystem::path& out);

std::string loss_svg(std::span<const model::TrainHistory> histories);
void render_loss(std::span<const model::TrainHistory> histories, const std::filesystem::path& out);

std::string roc_svg(const metrics::RocCurve& curve, double auc);
void render_roc(const metrics::RocCurve& curve, double auc, const std::filesystem::path& out);

}  // namespace ddosnet::analysis
