#include "blight/selector.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include "blight/error.hpp"
#include "blight/parallel.hpp"
#include "blight/rng.hpp"

namespace blight::selection {

using features::LabeledDataset;

namespace {

constexpr std::size_t kPoolSize = 4;
// Inner folds draw from a stream distinct from the outer split of the same seed.
constexpr std::uint64_t kInnerFoldSalt = 0x5EEDF01DULL;

std::uint64_t stream_id(std::uint64_t iteration, std::uint64_t particle) {
  return (iteration << 32) | particle;
}

struct Candidate {
  std::vector<double> position;
  double fitness = std::numeric_limits<double>::infinity();
};

void offer(std::array<Candidate, kPoolSize>& pool, const std::vector<double>& position, double fit) {
  for (std::size_t slot = 0; slot < kPoolSize; ++slot) {
    if (fit < pool[slot].fitness) {
      for (std::size_t j = kPoolSize - 1; j > slot; --j) pool[j] = pool[j - 1];
      pool[slot] = Candidate{position, fit};
      return;
    }
    if (fit == pool[slot].fitness && position == pool[slot].position) return;
  }
}

}  // namespace

void EoConfig::validate(std::size_t total_cols) const {
  if (population < 4) {
    throw Error(ErrorCode::kConfiguration, "EO population must be at least 4 (equilibrium pool)");
  }
  if (max_iter < 0) throw Error(ErrorCode::kConfiguration, "EO max_iter must be non-negative");
  if (!(generation_prob > 0.0 && generation_prob < 1.0)) {
    throw Error(ErrorCode::kConfiguration, "generation probability must lie in (0, 1)");
  }
  if (!(penalty_weight > 0.0 && penalty_weight <= 1.0)) {
    throw Error(ErrorCode::kConfiguration, "penalty weight must lie in (0, 1]");
  }
  if (fitness_folds < 2) throw Error(ErrorCode::kConfiguration, "fitness_folds must be at least 2");
  if (total_cols == 0) throw Error(ErrorCode::kConfiguration, "dataset has no columns to select");
  if (target_k && (*target_k == 0 || *target_k > total_cols)) {
    throw Error(ErrorCode::kConfiguration, "target_k " + std::to_string(*target_k) +
                                               " outside [1, " + std::to_string(total_cols) + "]");
  }
}

FeatureMask binarize(std::span<const double> position, std::optional<std::size_t> target_k) {
  for (double v : position) {
    if (!std::isfinite(v)) throw Error(ErrorCode::kNumerical, "non-finite position coordinate");
  }
  FeatureMask mask;
  mask.total_cols = position.size();
  if (target_k) {
    if (*target_k > position.size()) {
      throw Error(ErrorCode::kConfiguration, "target_k " + std::to_string(*target_k) +
                                                 " exceeds dimension " + std::to_string(position.size()));
    }
    std::vector<std::size_t> order(position.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return position[a] > position[b]; });
    mask.indices.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(*target_k));
    std::sort(mask.indices.begin(), mask.indices.end());
    return mask;
  }
  for (std::size_t i = 0; i < position.size(); ++i) {
    if (position[i] > 0.5) mask.indices.push_back(i);
  }
  if (mask.indices.empty() && !position.empty()) {
    // max_element returns the first of equal maxima.
    const auto best = std::max_element(position.begin(), position.end());
    mask.indices.push_back(static_cast<std::size_t>(best - position.begin()));
  }
  return mask;
}

FitnessEvaluator::FitnessEvaluator(const LabeledDataset& ds, svm::KernelSpec spec, const EoConfig& cfg)
    : ds_(ds),
      spec_(spec),
      cfg_(cfg),
      folds_(features::make_folds(ds.labels, cfg.fitness_folds, cfg.seed ^ kInnerFoldSalt)) {
  ds_.validate();
  spec_.validate();
}

double FitnessEvaluator::operator()(const FeatureMask& mask) const {
  {
    std::lock_guard lock(memo_mutex_);
    if (auto it = memo_.find(mask.indices); it != memo_.end()) return it->second;
  }
  const double value = compute(mask);
  std::lock_guard lock(memo_mutex_);
  memo_.emplace(mask.indices, value);
  return value;
}

std::size_t FitnessEvaluator::evaluations() const {
  std::lock_guard lock(memo_mutex_);
  return memo_.size();
}

double FitnessEvaluator::compute(const FeatureMask& mask) const {
  if (mask.empty()) throw Error(ErrorCode::kArgument, "fitness of an empty mask is undefined");
  const LabeledDataset restricted = ds_.with_columns(mask.indices);
  double error_sum = 0.0;
  for (int fold = 0; fold < folds_.k; ++fold) {
    const auto train_rows = folds_.train_rows(fold);
    const auto test_rows = folds_.test_rows(fold);
    const LabeledDataset train = restricted.subset(train_rows);
    const svm::SvmModel model = svm::train(train, spec_, cfg_.train_options);
    std::size_t wrong = 0;
    for (std::size_t r : test_rows) {
      if (model.predict(restricted.features.row(r)).label != restricted.labels[r]) ++wrong;
    }
    error_sum += static_cast<double>(wrong) / static_cast<double>(test_rows.size());
  }
  const double error = error_sum / folds_.k;
  if (cfg_.target_k) return error;
  const double w = cfg_.penalty_weight;
  return w * error + (1.0 - w) * static_cast<double>(mask.size()) / static_cast<double>(mask.total_cols);
}

double fitness(const LabeledDataset& ds, const FeatureMask& mask, const svm::KernelSpec& spec,
               const EoConfig& cfg) {
  return FitnessEvaluator(ds, spec, cfg)(mask);
}

SelectionResult eo_select(const LabeledDataset& ds, const svm::KernelSpec& spec, const EoConfig& cfg) {
  ds.validate();
  const std::size_t dim = ds.features.cols();
  cfg.validate(dim);
  const FitnessEvaluator evaluate(ds, spec, cfg);
  const auto n = static_cast<std::size_t>(cfg.population);

  std::vector<std::vector<double>> positions(n, std::vector<double>(dim));
  std::vector<double> fit(n);
  for (std::size_t p = 0; p < n; ++p) {
    CounterRng rng(cfg.seed, stream_id(0, p));
    for (double& v : positions[p]) v = rng.uniform_open();
  }

  auto score_all = [&] {
    parallel_for(n, cfg.threads, [&](std::size_t p) {
      fit[p] = evaluate(binarize(positions[p], cfg.target_k));
    });
  };

  std::array<Candidate, kPoolSize> pool;
  score_all();
  for (std::size_t p = 0; p < n; ++p) offer(pool, positions[p], fit[p]);
  // Per-particle memory: a particle whose new position scores worse falls back.
  std::vector<std::vector<double>> memory = positions;
  std::vector<double> memory_fit = fit;

  SelectionResult result;
  result.trace.reserve(static_cast<std::size_t>(cfg.max_iter));
  const double horizon = cfg.max_iter;
  for (int iter = 0; iter < cfg.max_iter; ++iter) {
    const double progress = static_cast<double>(iter) / horizon;
    const double t = std::pow(1.0 - progress, cfg.a2 * progress);

    std::vector<double> average(dim, 0.0);
    for (const auto& c : pool) {
      for (std::size_t d = 0; d < dim; ++d) average[d] += c.position[d] / kPoolSize;
    }

    for (std::size_t p = 0; p < n; ++p) {
      CounterRng rng(cfg.seed, stream_id(static_cast<std::uint64_t>(iter) + 1, p));
      const std::uint64_t pick = rng.below(kPoolSize + 1);
      const std::vector<double>& eq = pick < kPoolSize ? pool[pick].position : average;
      const double r1 = rng.uniform_open();
      const double r2 = rng.uniform_open();
      const double gcp = r2 >= cfg.generation_prob ? 0.5 * r1 : 0.0;
      auto& c = positions[p];
      for (std::size_t d = 0; d < dim; ++d) {
        const double lambda = rng.uniform_open();
        const double r = rng.uniform_open();
        const double f = cfg.a1 * (r > 0.5 ? 1.0 : -1.0) * (std::exp(-lambda * t) - 1.0);
        const double g = gcp * (eq[d] - lambda * c[d]) * f;
        // Unit volume V = 1.
        const double next = eq[d] + (c[d] - eq[d]) * f + (g / lambda) * (1.0 - f);
        if (!std::isfinite(next)) {
          throw Error(ErrorCode::kNumerical, "EO produced a non-finite position");
        }
        c[d] = std::clamp(next, 0.0, 1.0);
      }
    }

    score_all();
    for (std::size_t p = 0; p < n; ++p) {
      if (memory_fit[p] < fit[p]) {
        positions[p] = memory[p];
        fit[p] = memory_fit[p];
      } else {
        memory[p] = positions[p];
        memory_fit[p] = fit[p];
      }
      offer(pool, positions[p], fit[p]);
    }
    result.trace.push_back(pool[0].fitness);
  }

  result.mask = binarize(pool[0].position, cfg.target_k);
  result.best_fitness = pool[0].fitness;
  result.evaluations = evaluate.evaluations();
  return result;
}

void write_mask_csv(const std::filesystem::path& path, const FeatureMask& mask, std::uint64_t seed,
                    const std::string& config_hash) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot open " + path.string() + " for writing");
  out << "# total_cols=" << mask.total_cols << " seed=" << seed << " config_hash=" << config_hash << '\n';
  out << "column_index\n";
  for (std::size_t i : mask.indices) out << i << '\n';
  if (!out) throw Error(ErrorCode::kIo, "short write to " + path.string());
}

FeatureMask read_mask_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  FeatureMask mask;
  bool header = false;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      if (const auto pos = line.find("total_cols="); pos != std::string::npos) {
        mask.total_cols = std::stoull(line.substr(pos + 11));
      }
      continue;
    }
    if (!header) {
      if (line != "column_index") throw Error(ErrorCode::kFormat, path.string() + ": missing header");
      header = true;
      continue;
    }
    try {
      mask.indices.push_back(std::stoull(line));
    } catch (const std::exception&) {
      throw Error(ErrorCode::kFormat, path.string() + ": bad column index '" + line + "'");
    }
  }
  if (!std::is_sorted(mask.indices.begin(), mask.indices.end()) ||
      std::adjacent_find(mask.indices.begin(), mask.indices.end()) != mask.indices.end()) {
    throw Error(ErrorCode::kFormat, path.string() + ": indices must be strictly increasing");
  }
  return mask;
}

void write_trace_csv(const std::filesystem::path& path, std::span<const double> trace) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot open " + path.string() + " for writing");
  out << "iteration,best_fitness\n";
  char buf[64];
  for (std::size_t i = 0; i < trace.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%zu,%.17g\n", i + 1, trace[i]);
    out << buf;
  }
}

}  // namespace blight::selection
