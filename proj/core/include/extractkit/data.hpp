#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

#include "extractkit/numkit.hpp"

namespace extractkit {

// n x d float32 features (row-major), binary true labels, optional integer
// timestamps (epoch days) for time-based splits.
struct DatasetMatrix {
  std::size_t n = 0;
  std::size_t d = 0;
  std::vector<float> features;
  std::vector<std::uint8_t> y_true;
  std::vector<std::int64_t> timestamps;  // empty, or one per row

  bool has_timestamps() const noexcept { return !timestamps.empty(); }
  std::span<const float> row(std::size_t i) const noexcept { return {features.data() + i * d, d}; }

  // Throws FormatError on any broken invariant.
  void validate() const;

  DatasetMatrix subset(std::span<const std::size_t> rows) const;
  Matrix to_matrix() const;
  Matrix to_matrix(std::span<const std::size_t> rows) const;
  Vector labels_as_vector() const;
};

struct SyntheticGenConfig {
  std::size_t n = 1000;
  std::size_t d = 64;
  double balance = 0.5;  // fraction of positives
  std::size_t clusters_per_class = 3;
  double spread = 1.0;
  double center_scale = 1.0;
  std::vector<std::size_t> monotone_features;  // generated non-negative
  bool timestamps = false;
  std::int64_t timestamp_days = 365;
  std::uint64_t seed = 0;

  void validate() const;
};

// Ground truth of the synthetic generator: label of the nearest class centroid.
class CentroidLabeler {
 public:
  CentroidLabeler() = default;
  CentroidLabeler(Matrix centroids, std::vector<std::uint8_t> classes)
      : centroids_(std::move(centroids)), classes_(std::move(classes)) {}

  std::uint8_t label(std::span<const float> x) const;
  std::size_t dims() const noexcept { return static_cast<std::size_t>(centroids_.cols()); }
  const Matrix& centroids() const noexcept { return centroids_; }

 private:
  Matrix centroids_;
  std::vector<std::uint8_t> classes_;
};

struct SyntheticDataset {
  DatasetMatrix data;
  CentroidLabeler ground_truth;
};

// Gaussian cluster mixture per class. Class counts are exact; every row's label
// equals ground_truth.label(row).
SyntheticDataset gen_synthetic(const SyntheticGenConfig& config);

struct SplitFraction {
  double thief_fraction;
  std::uint64_t seed;
};
struct SplitTimestamp {
  std::int64_t cutoff;  // rows with ts <= cutoff go to the thief set
};

struct DatasetSplit {
  DatasetMatrix thief;
  DatasetMatrix test;
  std::vector<std::size_t> thief_rows;
  std::vector<std::size_t> test_rows;
};

DatasetSplit split_dataset(const DatasetMatrix& data, const SplitFraction& mode);
DatasetSplit split_dataset(const DatasetMatrix& data, const SplitTimestamp& mode);

inline constexpr std::string_view kDatasetMagic = "XDSM1";

std::vector<std::uint8_t> serialize_dataset(const DatasetMatrix& data);
DatasetMatrix deserialize_dataset(std::span<const std::uint8_t> bytes);

void save_dataset_binary(const DatasetMatrix& data, const std::filesystem::path& path);
DatasetMatrix load_dataset_binary(const std::filesystem::path& path);
void save_dataset_csv(const DatasetMatrix& data, const std::filesystem::path& path);
DatasetMatrix load_dataset_csv(const std::filesystem::path& path);

// Chooses the format from the extension: ".csv" is CSV, anything else binary.
void save_dataset(const DatasetMatrix& data, const std::filesystem::path& path);
DatasetMatrix load_dataset(const std::filesystem::path& path);

}  // namespace extractkit
