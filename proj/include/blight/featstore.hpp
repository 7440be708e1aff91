#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace blight::features {

/// Columns [begin, end) of a matrix came from the backbone named `tag`.
struct ProvenanceSpan {
  std::string tag;
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t width() const noexcept { return end - begin; }
  friend bool operator==(const ProvenanceSpan&, const ProvenanceSpan&) = default;
};

/// Dense row-major float32 matrix; rows are samples. Values are always finite.
class FeatureMatrix {
 public:
  FeatureMatrix() = default;
  /// A single provenance span named `tag` covers every column.
  FeatureMatrix(std::size_t rows, std::size_t cols, std::vector<float> values,
                std::string tag = "features");
  FeatureMatrix(std::size_t rows, std::size_t cols, std::vector<float> values,
                std::vector<ProvenanceSpan> provenance);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::span<const float> values() const noexcept { return values_; }
  std::span<const float> row(std::size_t r) const noexcept {
    return {values_.data() + r * cols_, cols_};
  }
  float at(std::size_t r, std::size_t c) const noexcept { return values_[r * cols_ + c]; }
  const std::vector<ProvenanceSpan>& provenance() const noexcept { return provenance_; }

  /// Tag string stored in the FEATMAT1 header: the bare tag for a single span,
  /// "tag:width;tag:width;..." for concatenated matrices.
  std::string source_tag() const;

  FeatureMatrix select_rows(std::span<const std::size_t> rows) const;
  /// Columns in the given order; provenance collapses to one "selected" span.
  FeatureMatrix select_columns(std::span<const std::size_t> cols) const;

  friend bool operator==(const FeatureMatrix&, const FeatureMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<float> values_;
  std::vector<ProvenanceSpan> provenance_;
};

// FEATMAT1 container, little-endian:
//   [0,8)   magic "FEATMAT1"
//   [8,12)  u32 rows
//   [12,16) u32 cols
//   [16,20) u32 tag length T
//   [20,20+T) UTF-8 source tag
//   rows*cols IEEE-754 binary32 values, row-major
inline constexpr char kFeatmatMagic[8] = {'F', 'E', 'A', 'T', 'M', 'A', 'T', '1'};
inline constexpr std::size_t kFeatmatFixedHeader = 20;

std::vector<std::uint8_t> encode_featmat(const FeatureMatrix& m);
/// Throws FormatError naming the offending byte offset.
FeatureMatrix decode_featmat(std::span<const std::uint8_t> bytes);
FeatureMatrix load_featmat(const std::filesystem::path& path);
void write_featmat(const std::filesystem::path& path, const FeatureMatrix& m);

/// Column-wise stacking in argument order. Throws kAlignment naming the first
/// part whose row count differs from part 0.
FeatureMatrix concat(std::span<const FeatureMatrix* const> parts);
FeatureMatrix concat(std::span<const FeatureMatrix> parts);

inline constexpr double kConstantColumnThreshold = 1e-12;

/// Per-column z-score statistics (population standard deviation).
struct ColumnStats {
  std::vector<double> mean;
  std::vector<double> stddev;
  std::vector<std::uint8_t> constant;

  std::size_t cols() const noexcept { return mean.size(); }
  /// Maps a raw value of column c; constant columns map to 0.
  double apply(std::size_t c, double value) const noexcept {
    return constant[c] ? 0.0 : (value - mean[c]) / stddev[c];
  }
  friend bool operator==(const ColumnStats&, const ColumnStats&) = default;
};

ColumnStats standardize_fit(const FeatureMatrix& train);
FeatureMatrix standardize_apply(const FeatureMatrix& m, const ColumnStats& stats);
/// Inverse of standardize_apply on non-constant columns (constant columns
/// come back as their mean).
FeatureMatrix standardize_invert(const FeatureMatrix& m, const ColumnStats& stats);

enum class Label : std::int8_t { kHealthy = -1, kLateBlight = 1 };

inline int sign_of(Label l) noexcept { return static_cast<int>(l); }
const char* label_name(Label l) noexcept;
/// Accepts "late_blight" / "healthy"; throws kFormat otherwise.
Label parse_label(const std::string& text);

struct LabeledDataset {
  FeatureMatrix features;
  std::vector<Label> labels;
  std::vector<std::string> sample_ids;

  std::size_t size() const noexcept { return labels.size(); }
  std::size_t count(Label l) const noexcept;
  /// Throws kAlignment when labels/ids do not match the row count.
  void validate() const;
  LabeledDataset subset(std::span<const std::size_t> rows) const;
  LabeledDataset with_columns(std::span<const std::size_t> cols) const;
};

struct LabelTable {
  std::vector<std::string> sample_ids;
  std::vector<Label> labels;
};

/// CSV with header `sample_id,label`.
LabelTable read_labels_csv(const std::filesystem::path& path);
void write_labels_csv(const std::filesystem::path& path, const LabelTable& table);

LabeledDataset load_dataset(const std::filesystem::path& featmat,
                            const std::filesystem::path& labels_csv);

struct FoldAssignment {
  std::vector<int> fold_of;
  int k = 0;

  std::vector<std::size_t> train_rows(int fold) const;
  std::vector<std::size_t> test_rows(int fold) const;
};

/// Stratified k-fold split. Each class is shuffled with its own counter-based
/// stream and dealt round-robin, so per-fold class counts differ from
/// n_class / k by less than one. Throws kStratification when a class has
/// fewer than k members.
FoldAssignment make_folds(std::span<const Label> labels, int k, std::uint64_t seed);

}  // namespace blight::features
