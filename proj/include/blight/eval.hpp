#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "blight/featstore.hpp"
#include "blight/selector.hpp"
#include "blight/svm.hpp"

namespace blight::eval {

/// Binary confusion counts; rows are the true class, positive = late blight.
struct ConfusionMatrix {
  std::uint64_t tp = 0;
  std::uint64_t fn = 0;
  std::uint64_t fp = 0;
  std::uint64_t tn = 0;

  std::uint64_t total() const noexcept { return tp + fn + fp + tn; }
  std::uint64_t actual_positives() const noexcept { return tp + fn; }
  std::uint64_t actual_negatives() const noexcept { return fp + tn; }
  void record(features::Label truth, features::Label predicted) noexcept;
  ConfusionMatrix& operator+=(const ConfusionMatrix& o) noexcept;
  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

/// All values in percent. The *_reported pair follows the published tables,
/// where "Sensitivity" is TP/(TP+FP) and "Specificity" is TN/(TN+FN);
/// precision/recall/f1 are the textbook quantities. Undefined ratios are 0
/// with the matching flag cleared.
struct MetricSet {
  double accuracy = 0.0;
  double sensitivity_reported = 0.0;
  double specificity_reported = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  bool sensitivity_defined = true;
  bool specificity_defined = true;
  bool precision_defined = true;
  bool recall_defined = true;
  bool f1_defined = true;
};

/// Throws kEmptyEvaluation for an all-zero matrix.
MetricSet metrics_from_confusion(const ConfusionMatrix& cm);

/// Half-away-from-zero rounding to `decimals` places (display only).
double round_half_away(double value, int decimals);

/// One of the six classifier presets. Gaussian scales are resolved against the
/// number of selected columns when the variant is trained.
struct Variant {
  std::string key;         // config token, e.g. "medium_gaussian"
  std::string name;        // table label, e.g. "Medium Gaussian SVM"
  std::string short_name;  // e.g. "MG-SVM"
  svm::KernelKind kind = svm::KernelKind::kLinear;
  int degree = 0;
  svm::ScaleVariant scale = svm::ScaleVariant::kUnit;
  double box_constraint = 1.0;

  svm::KernelSpec spec_for(std::size_t num_features) const;
};

/// Linear, Quadratic, Cubic, Fine/Medium/Coarse Gaussian, in that order, C = 1.
std::vector<Variant> standard_variants(double box_constraint = 1.0);
/// Looks up a variant by key; throws kConfiguration for unknown names.
Variant parse_variant(const std::string& key, double box_constraint = 1.0);

struct FoldResult {
  int fold = 0;
  std::size_t features = 0;
  ConfusionMatrix confusion;
  double train_seconds = 0.0;
  double predict_seconds = 0.0;
  std::size_t predictions = 0;
};

struct VariantReport {
  std::string key;
  std::string name;
  std::string short_name;
  std::size_t features = 0;
  ConfusionMatrix confusion;  // summed over folds
  MetricSet metrics;
  double training_time = 0.0;     // seconds, summed over folds
  double prediction_speed = 0.0;  // held-out observations per second
  std::vector<FoldResult> folds;
  bool failed = false;
  std::string error;
};

struct EvalReport {
  std::string title;
  std::size_t features = 0;
  std::size_t dataset_size = 0;
  int folds = 0;
  std::vector<VariantReport> variants;
  std::map<std::string, std::string> config;
  std::string config_hash;

  bool any_failed() const noexcept;
};

struct ExperimentOptions {
  svm::TrainOptions train;
  unsigned threads = 1;
};

/// Outer cross-validation: for every variant and fold, fit standardization and
/// the SVM on the fold's training rows restricted to masks[fold], then predict
/// the held-out rows. A failing variant is flagged without stopping the others.
EvalReport run_experiment(const features::LabeledDataset& ds,
                          std::span<const selection::FeatureMask> masks,
                          std::span<const Variant> variants, const features::FoldAssignment& folds,
                          const ExperimentOptions& options = {});

enum class ReportFormat { kText, kCsv, kJson };

std::string render_report(const EvalReport& report, ReportFormat format);
/// Inverse of render_report(..., kJson).
EvalReport parse_report_json(const std::string& text);

}  // namespace blight::eval
