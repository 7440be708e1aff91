#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "blight/featstore.hpp"

namespace blight::svm {

enum class KernelKind : std::uint32_t { kLinear = 0, kPolynomial = 1, kGaussian = 2 };

/// Kernel family plus the two numbers every MATLAB-style preset needs: the
/// kernel scale sigma that divides the inputs and the box constraint C.
struct KernelSpec {
  KernelKind kind = KernelKind::kLinear;
  int degree = 0;  // polynomial only: 2 or 3
  double scale = 1.0;
  double box_constraint = 1.0;

  static KernelSpec linear(double scale = 1.0, double c = 1.0) {
    return {KernelKind::kLinear, 0, scale, c};
  }
  static KernelSpec polynomial(int degree, double scale = 1.0, double c = 1.0) {
    return {KernelKind::kPolynomial, degree, scale, c};
  }
  static KernelSpec gaussian(double scale, double c = 1.0) {
    return {KernelKind::kGaussian, 0, scale, c};
  }

  /// Throws kConfiguration when the spec violates its invariants.
  void validate() const;
  std::string describe() const;

  friend bool operator==(const KernelSpec&, const KernelSpec&) = default;
};

// linear:     <x/s, y/s>
// polynomial: (1 + <x/s, y/s>)^degree
// gaussian:   exp(-|x - y|^2 / s^2)
double kernel_eval(const KernelSpec& spec, std::span<const double> x, std::span<const double> y);
double kernel_eval(const KernelSpec& spec, std::span<const float> x, std::span<const float> y);

enum class ScaleVariant { kFine, kMedium, kCoarse, kUnit };

/// Kernel scale preset for `num_features` predictors: fine sqrt(P)/4,
/// medium sqrt(P), coarse 4 sqrt(P), unit 1.
double kernel_scale_for(ScaleVariant variant, std::size_t num_features);

struct TrainOptions {
  double tol = 1e-3;
  /// Iteration budget is max_passes * n pair updates.
  int max_passes = 200;
  bool standardize = true;
  /// Kernel rows kept in the LRU cache.
  std::size_t cache_rows = 2048;
};

struct TrainDiagnostics {
  std::size_t iterations = 0;
  double kkt_gap = 0.0;  // b_low - b_up at exit
  double b_up = 0.0;
  double b_low = 0.0;
  /// 0.5 a'Qa - sum(a), Q_ij = y_i y_j K_ij (the minimized dual).
  double dual_objective = 0.0;
  std::vector<double> alphas;
};

struct Prediction {
  features::Label label;
  double decision_value;
};

/// Trained binary classifier f(x) = sum_i coef_i k(sv_i, x') + bias, where x'
/// is x standardized with the training statistics (when enabled).
class SvmModel {
 public:
  SvmModel() = default;
  SvmModel(KernelSpec kernel, std::optional<features::ColumnStats> stats, std::size_t dim,
           std::vector<double> support_rows, std::vector<double> dual_coefs, double bias);

  const KernelSpec& kernel() const noexcept { return kernel_; }
  const std::optional<features::ColumnStats>& standardization() const noexcept { return stats_; }
  std::size_t dim() const noexcept { return dim_; }
  std::size_t support_count() const noexcept { return dual_coefs_.size(); }
  std::span<const double> support_row(std::size_t i) const noexcept {
    return {support_rows_.data() + i * dim_, dim_};
  }
  std::span<const double> support_rows() const noexcept { return support_rows_; }
  std::span<const double> dual_coefs() const noexcept { return dual_coefs_; }
  double bias() const noexcept { return bias_; }

  /// Ties (decision value exactly 0) go to the positive class.
  Prediction predict(std::span<const float> x) const;
  double decision_value(std::span<const float> x) const;

  friend bool operator==(const SvmModel&, const SvmModel&) = default;

 private:
  KernelSpec kernel_;
  std::optional<features::ColumnStats> stats_;
  std::size_t dim_ = 0;
  std::vector<double> support_rows_;
  std::vector<double> dual_coefs_;
  double bias_ = 0.0;
};

inline constexpr double kSupportThreshold = 1e-8;

/// SMO with the two-threshold (b_up / b_low) maximal-violating-pair rule.
/// Stops once b_low - b_up <= 2 * tol. Throws kTraining for single-class
/// input and ConvergenceError when the iteration budget runs out.
SvmModel train(const features::FeatureMatrix& x, std::span<const features::Label> labels,
               const KernelSpec& spec, const TrainOptions& options = {},
               TrainDiagnostics* diagnostics = nullptr);
SvmModel train(const features::LabeledDataset& ds, const KernelSpec& spec,
               const TrainOptions& options = {}, TrainDiagnostics* diagnostics = nullptr);

// Versioned little-endian container ("BSVMMDL1", u32 version); doubles are
// stored as raw bit patterns so the round trip is exact.
std::vector<std::uint8_t> encode_model(const SvmModel& model);
SvmModel decode_model(std::span<const std::uint8_t> bytes);
void save_model(const std::filesystem::path& path, const SvmModel& model);
SvmModel load_model(const std::filesystem::path& path);

}  // namespace blight::svm
