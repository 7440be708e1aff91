// Synthetic datasets and small helpers shared by the test binaries.
#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "blight/featstore.hpp"

namespace fixtures {

using blight::features::FeatureMatrix;
using blight::features::Label;
using blight::features::LabeledDataset;

inline LabeledDataset make_dataset(std::size_t rows, std::size_t cols, std::vector<float> values,
                                   std::vector<Label> labels) {
  LabeledDataset ds;
  ds.features = FeatureMatrix(rows, cols, std::move(values));
  ds.labels = std::move(labels);
  for (std::size_t i = 0; i < rows; ++i) ds.sample_ids.push_back("s" + std::to_string(i));
  return ds;
}

// label = sign(x0 + x1); columns 2.. are standard-normal noise.
inline LabeledDataset planted_sum(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<float> normal(0.0f, 1.0f);
  std::vector<float> v(rows * cols);
  std::vector<Label> labels(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) v[r * cols + c] = normal(gen);
    const float s = v[r * cols] + v[r * cols + 1];
    labels[r] = s >= 0 ? Label::kLateBlight : Label::kHealthy;
  }
  return make_dataset(rows, cols, std::move(v), std::move(labels));
}

// First `positives` rows are positive. Columns [0, informative) carry
// y * shift + N(0, 1); the rest are N(0, 1).
inline LabeledDataset planted_shift(std::size_t positives, std::size_t negatives, std::size_t cols,
                                    std::size_t informative, float shift, std::uint64_t seed) {
  const std::size_t rows = positives + negatives;
  std::mt19937_64 gen(seed);
  std::normal_distribution<float> normal(0.0f, 1.0f);
  std::vector<float> v(rows * cols);
  std::vector<Label> labels(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    labels[r] = r < positives ? Label::kLateBlight : Label::kHealthy;
    const float y = r < positives ? 1.0f : -1.0f;
    for (std::size_t c = 0; c < cols; ++c) {
      v[r * cols + c] = normal(gen) + (c < informative ? y * shift : 0.0f);
    }
  }
  return make_dataset(rows, cols, std::move(v), std::move(labels));
}

inline LabeledDataset noise(std::size_t positives, std::size_t negatives, std::size_t cols, std::uint64_t seed) {
  return planted_shift(positives, negatives, cols, 0, 0.0f, seed);
}

class TempDir {
 public:
  explicit TempDir(const std::string& name) {
    path_ = std::filesystem::temp_directory_path() /
            ("blight-" + name + "-" + std::to_string(std::random_device{}()));
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
  std::filesystem::path operator/(const std::string& leaf) const { return path_ / leaf; }

 private:
  std::filesystem::path path_;
};

}  // namespace fixtures
