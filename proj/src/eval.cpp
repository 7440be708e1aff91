#include "blight/eval.hpp"

#include <chrono>
#include <cmath>

#include "blight/error.hpp"
#include "blight/parallel.hpp"

namespace blight::eval {

using features::Label;

void ConfusionMatrix::record(Label truth, Label predicted) noexcept {
  if (truth == Label::kLateBlight) {
    (predicted == Label::kLateBlight ? tp : fn) += 1;
  } else {
    (predicted == Label::kLateBlight ? fp : tn) += 1;
  }
}

ConfusionMatrix& ConfusionMatrix::operator+=(const ConfusionMatrix& o) noexcept {
  tp += o.tp;
  fn += o.fn;
  fp += o.fp;
  tn += o.tn;
  return *this;
}

MetricSet metrics_from_confusion(const ConfusionMatrix& cm) {
  if (cm.total() == 0) throw Error(ErrorCode::kEmptyEvaluation, "confusion matrix is empty");
  auto ratio = [](std::uint64_t num, std::uint64_t den, bool& defined) {
    defined = den != 0;
    return defined ? 100.0 * static_cast<double>(num) / static_cast<double>(den) : 0.0;
  };
  MetricSet m;
  m.accuracy = 100.0 * static_cast<double>(cm.tp + cm.tn) / static_cast<double>(cm.total());
  m.sensitivity_reported = ratio(cm.tp, cm.tp + cm.fp, m.sensitivity_defined);
  m.specificity_reported = ratio(cm.tn, cm.tn + cm.fn, m.specificity_defined);
  m.precision = ratio(cm.tp, cm.tp + cm.fp, m.precision_defined);
  m.recall = ratio(cm.tp, cm.tp + cm.fn, m.recall_defined);
  m.f1_defined = m.precision_defined && m.recall_defined && m.precision + m.recall > 0.0;
  m.f1 = m.f1_defined ? 2.0 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
  return m;
}

double round_half_away(double value, int decimals) {
  const double scale = std::pow(10.0, decimals);
  return std::round(value * scale) / scale;
}

svm::KernelSpec Variant::spec_for(std::size_t num_features) const {
  svm::KernelSpec spec;
  spec.kind = kind;
  spec.degree = degree;
  spec.scale = svm::kernel_scale_for(scale, num_features);
  spec.box_constraint = box_constraint;
  return spec;
}

std::vector<Variant> standard_variants(double c) {
  using svm::KernelKind;
  using svm::ScaleVariant;
  return {
      {"linear", "Linear SVM", "L-SVM", KernelKind::kLinear, 0, ScaleVariant::kUnit, c},
      {"quadratic", "Quadratic SVM", "Q-SVM", KernelKind::kPolynomial, 2, ScaleVariant::kUnit, c},
      {"cubic", "Cubic SVM", "C-SVM", KernelKind::kPolynomial, 3, ScaleVariant::kUnit, c},
      {"fine_gaussian", "Fine Gaussian SVM", "FG-SVM", KernelKind::kGaussian, 0, ScaleVariant::kFine, c},
      {"medium_gaussian", "Medium Gaussian SVM", "MG-SVM", KernelKind::kGaussian, 0, ScaleVariant::kMedium, c},
      {"coarse_gaussian", "Coarse Gaussian SVM", "CG-SVM", KernelKind::kGaussian, 0, ScaleVariant::kCoarse, c},
  };
}

Variant parse_variant(const std::string& key, double c) {
  for (auto& v : standard_variants(c)) {
    if (v.key == key) return v;
  }
  throw Error(ErrorCode::kConfiguration, "unknown SVM variant '" + key + "'");
}

bool EvalReport::any_failed() const noexcept {
  for (const auto& v : variants) {
    if (v.failed) return true;
  }
  return false;
}

EvalReport run_experiment(const features::LabeledDataset& ds,
                          std::span<const selection::FeatureMask> masks,
                          std::span<const Variant> variants, const features::FoldAssignment& folds,
                          const ExperimentOptions& options) {
  ds.validate();
  if (folds.fold_of.size() != ds.size()) {
    throw Error(ErrorCode::kAlignment, "fold assignment does not cover the dataset");
  }
  if (masks.size() != static_cast<std::size_t>(folds.k)) {
    throw Error(ErrorCode::kAlignment, "expected one feature mask per fold (" +
                                           std::to_string(folds.k) + "), got " +
                                           std::to_string(masks.size()));
  }
  for (const auto& mask : masks) {
    if (mask.empty()) throw Error(ErrorCode::kArgument, "empty feature mask");
    if (mask.indices.back() >= ds.features.cols()) {
      throw Error(ErrorCode::kDimension, "feature mask index outside the dataset columns");
    }
  }

  const std::size_t k = static_cast<std::size_t>(folds.k);
  struct Cell {
    FoldResult result;
    std::string error;
  };
  std::vector<Cell> cells(variants.size() * k);

  parallel_for(cells.size(), options.threads, [&](std::size_t index) {
    const Variant& variant = variants[index / k];
    const int fold = static_cast<int>(index % k);
    Cell& cell = cells[index];
    cell.result.fold = fold;
    const auto& mask = masks[fold];
    cell.result.features = mask.size();
    try {
      const auto restricted = ds.with_columns(mask.indices);
      const auto train = restricted.subset(folds.train_rows(fold));
      const auto test_rows = folds.test_rows(fold);
      const auto spec = variant.spec_for(mask.size());

      using clock = std::chrono::steady_clock;
      const auto t0 = clock::now();
      const auto model = svm::train(train, spec, options.train);
      const auto t1 = clock::now();
      for (std::size_t r : test_rows) {
        cell.result.confusion.record(restricted.labels[r], model.predict(restricted.features.row(r)).label);
      }
      const auto t2 = clock::now();
      cell.result.train_seconds = std::chrono::duration<double>(t1 - t0).count();
      cell.result.predict_seconds = std::chrono::duration<double>(t2 - t1).count();
      cell.result.predictions = test_rows.size();
    } catch (const std::exception& e) {
      cell.error = e.what();
    }
  });

  EvalReport report;
  report.dataset_size = ds.size();
  report.folds = folds.k;
  report.features = masks.front().size();
  for (std::size_t v = 0; v < variants.size(); ++v) {
    VariantReport vr;
    vr.key = variants[v].key;
    vr.name = variants[v].name;
    vr.short_name = variants[v].short_name;
    double predict_seconds = 0.0;
    std::size_t predictions = 0;
    std::size_t feature_sum = 0;
    for (std::size_t f = 0; f < k; ++f) {
      const Cell& cell = cells[v * k + f];
      if (!cell.error.empty() && !vr.failed) {
        vr.failed = true;
        vr.error = "fold " + std::to_string(f) + ": " + cell.error;
      }
      vr.folds.push_back(cell.result);
      vr.confusion += cell.result.confusion;
      vr.training_time += cell.result.train_seconds;
      predict_seconds += cell.result.predict_seconds;
      predictions += cell.result.predictions;
      feature_sum += cell.result.features;
    }
    vr.features = static_cast<std::size_t>(std::lround(static_cast<double>(feature_sum) / k));
    if (predictions > 0) {
      vr.prediction_speed = predictions / std::max(predict_seconds, 1e-9);
    }
    if (!vr.failed) vr.metrics = metrics_from_confusion(vr.confusion);
    report.variants.push_back(std::move(vr));
  }
  return report;
}

}  // namespace blight::eval
