#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "blight/featstore.hpp"
#include "blight/svm.hpp"

namespace blight::selection {

/// Equilibrium Optimizer settings. With target_k set the search returns
/// exactly k columns (top-k binarization); without it a column is kept when
/// its position exceeds 0.5 and the fitness adds a size penalty.
struct EoConfig {
  int population = 10;
  int max_iter = 30;
  double a1 = 2.0;
  double a2 = 1.0;
  double generation_prob = 0.5;
  std::optional<std::size_t> target_k;
  double penalty_weight = 0.99;
  std::uint64_t seed = 1;
  int fitness_folds = 3;
  unsigned threads = 1;
  svm::TrainOptions train_options;

  /// Throws kConfiguration on an invalid setting for a `total_cols`-wide search.
  void validate(std::size_t total_cols) const;
};

struct FeatureMask {
  std::vector<std::size_t> indices;  // strictly increasing
  std::size_t total_cols = 0;

  std::size_t size() const noexcept { return indices.size(); }
  bool empty() const noexcept { return indices.empty(); }
  friend bool operator==(const FeatureMask&, const FeatureMask&) = default;
};

FeatureMask binarize(std::span<const double> position, std::optional<std::size_t> target_k);

/// Wrapper objective: mean held-out error of an SVM over the internal
/// stratified folds, restricted to the masked columns. Penalty mode blends in
/// the selected fraction: w * error + (1 - w) * |mask| / total_cols.
double fitness(const features::LabeledDataset& ds, const FeatureMask& mask,
               const svm::KernelSpec& spec, const EoConfig& cfg);

/// Fitness with the inner folds computed once and results memoized per mask.
/// Safe to call from several threads.
class FitnessEvaluator {
 public:
  FitnessEvaluator(const features::LabeledDataset& ds, svm::KernelSpec spec, const EoConfig& cfg);

  double operator()(const FeatureMask& mask) const;
  std::size_t evaluations() const;

 private:
  double compute(const FeatureMask& mask) const;

  const features::LabeledDataset& ds_;
  svm::KernelSpec spec_;
  EoConfig cfg_;
  features::FoldAssignment folds_;
  mutable std::mutex memo_mutex_;
  mutable std::map<std::vector<std::size_t>, double> memo_;
};

struct SelectionResult {
  FeatureMask mask;
  double best_fitness = 0.0;
  /// Best-so-far fitness after each iteration; non-increasing, length max_iter.
  std::vector<double> trace;
  std::size_t evaluations = 0;
};

SelectionResult eo_select(const features::LabeledDataset& ds, const svm::KernelSpec& spec,
                          const EoConfig& cfg);

void write_mask_csv(const std::filesystem::path& path, const FeatureMask& mask, std::uint64_t seed,
                    const std::string& config_hash);
FeatureMask read_mask_csv(const std::filesystem::path& path);
void write_trace_csv(const std::filesystem::path& path, std::span<const double> trace);

}  // namespace blight::selection
