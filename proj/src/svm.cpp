#include "blight/svm.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <iterator>
#include <limits>
#include <list>
#include <sstream>
#include <unordered_map>

#include "blight/error.hpp"

namespace blight::svm {

using features::ColumnStats;
using features::FeatureMatrix;
using features::Label;

void KernelSpec::validate() const {
  if (!(box_constraint > 0.0) || !std::isfinite(box_constraint)) {
    throw Error(ErrorCode::kConfiguration, "box constraint must be positive");
  }
  if (!(scale > 0.0) || !std::isfinite(scale)) {
    throw Error(ErrorCode::kConfiguration, "kernel scale must be positive");
  }
  if (kind == KernelKind::kPolynomial && degree != 2 && degree != 3) {
    throw Error(ErrorCode::kConfiguration,
                "polynomial kernel degree must be 2 or 3, got " + std::to_string(degree));
  }
}

std::string KernelSpec::describe() const {
  std::ostringstream out;
  switch (kind) {
    case KernelKind::kLinear: out << "linear"; break;
    case KernelKind::kPolynomial: out << "polynomial(degree=" << degree << ")"; break;
    case KernelKind::kGaussian: out << "gaussian"; break;
  }
  out << " scale=" << scale << " C=" << box_constraint;
  return out.str();
}

namespace {

template <typename T>
double kernel_impl(const KernelSpec& spec, std::span<const T> x, std::span<const T> y) {
  if (x.size() != y.size()) {
    throw Error(ErrorCode::kDimension, "kernel arguments have lengths " + std::to_string(x.size()) +
                                           " and " + std::to_string(y.size()));
  }
  const double inv_s2 = 1.0 / (spec.scale * spec.scale);
  if (spec.kind == KernelKind::kGaussian) {
    double d2 = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double d = static_cast<double>(x[i]) - static_cast<double>(y[i]);
      d2 += d * d;
    }
    return std::exp(-d2 * inv_s2);
  }
  double dot = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) dot += static_cast<double>(x[i]) * static_cast<double>(y[i]);
  dot *= inv_s2;
  if (spec.kind == KernelKind::kLinear) return dot;
  const double base = 1.0 + dot;
  return spec.degree == 2 ? base * base : base * base * base;
}

// Kernel rows of the training set, least recently used row evicted first.
class KernelCache {
 public:
  KernelCache(const KernelSpec& spec, const std::vector<double>& x, std::size_t n, std::size_t dim,
              std::size_t capacity)
      : spec_(spec), x_(x), n_(n), dim_(dim), capacity_(std::max<std::size_t>(capacity, 2)) {}

  std::span<const double> row(std::size_t i) const { return {x_.data() + i * dim_, dim_}; }

  const std::vector<double>& kernel_row(std::size_t i) {
    if (auto it = index_.find(i); it != index_.end()) {
      order_.splice(order_.begin(), order_, it->second);
      return it->second->values;
    }
    std::vector<double> values;
    if (order_.size() >= capacity_) {
      Entry& victim = order_.back();
      index_.erase(victim.row);
      values = std::move(victim.values);
      order_.pop_back();
    }
    values.resize(n_);
    const auto xi = row(i);
    for (std::size_t k = 0; k < n_; ++k) values[k] = kernel_impl<double>(spec_, xi, row(k));
    order_.push_front(Entry{i, std::move(values)});
    index_[i] = order_.begin();
    return order_.front().values;
  }

 private:
  struct Entry {
    std::size_t row;
    std::vector<double> values;
  };
  const KernelSpec& spec_;
  const std::vector<double>& x_;
  std::size_t n_;
  std::size_t dim_;
  std::size_t capacity_;
  std::list<Entry> order_;
  std::unordered_map<std::size_t, std::list<Entry>::iterator> index_;
};

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}
void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}
void put_f64(std::vector<std::uint8_t>& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::uint64_t u(int width) {
    need(width);
    std::uint64_t v = 0;
    for (int i = 0; i < width; ++i) v |= static_cast<std::uint64_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += width;
    return v;
  }
  double f64() { return std::bit_cast<double>(u(8)); }
  std::size_t pos() const noexcept { return pos_; }
  bool done() const noexcept { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t width) const {
    if (bytes_.size() - pos_ < width) throw FormatError("truncated model file", bytes_.size());
  }
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

constexpr char kModelMagic[8] = {'B', 'S', 'V', 'M', 'M', 'D', 'L', '1'};
constexpr std::uint32_t kModelVersion = 1;

}  // namespace

double kernel_eval(const KernelSpec& spec, std::span<const double> x, std::span<const double> y) {
  return kernel_impl<double>(spec, x, y);
}

double kernel_eval(const KernelSpec& spec, std::span<const float> x, std::span<const float> y) {
  return kernel_impl<float>(spec, x, y);
}

double kernel_scale_for(ScaleVariant variant, std::size_t num_features) {
  if (num_features == 0) throw Error(ErrorCode::kArgument, "kernel scale needs at least one feature");
  const double root = std::sqrt(static_cast<double>(num_features));
  switch (variant) {
    case ScaleVariant::kFine: return root / 4.0;
    case ScaleVariant::kMedium: return root;
    case ScaleVariant::kCoarse: return 4.0 * root;
    case ScaleVariant::kUnit: return 1.0;
  }
  return 1.0;
}

SvmModel::SvmModel(KernelSpec kernel, std::optional<ColumnStats> stats, std::size_t dim,
                   std::vector<double> support_rows, std::vector<double> dual_coefs, double bias)
    : kernel_(kernel),
      stats_(std::move(stats)),
      dim_(dim),
      support_rows_(std::move(support_rows)),
      dual_coefs_(std::move(dual_coefs)),
      bias_(bias) {
  kernel_.validate();
  if (support_rows_.size() != dual_coefs_.size() * dim_) {
    throw Error(ErrorCode::kDimension, "support row buffer does not match coefficient count");
  }
  if (stats_ && stats_->cols() != dim_) {
    throw Error(ErrorCode::kDimension, "standardization statistics do not match model dimension");
  }
}

double SvmModel::decision_value(std::span<const float> x) const {
  if (x.size() != dim_) {
    throw Error(ErrorCode::kDimension, "model expects " + std::to_string(dim_) +
                                           " features, got " + std::to_string(x.size()));
  }
  std::vector<double> z(dim_);
  for (std::size_t c = 0; c < dim_; ++c) z[c] = stats_ ? stats_->apply(c, x[c]) : x[c];
  double f = bias_;
  for (std::size_t i = 0; i < dual_coefs_.size(); ++i) {
    f += dual_coefs_[i] * kernel_impl<double>(kernel_, support_row(i), z);
  }
  return f;
}

Prediction SvmModel::predict(std::span<const float> x) const {
  const double f = decision_value(x);
  return {f >= 0.0 ? Label::kLateBlight : Label::kHealthy, f};
}

SvmModel train(const FeatureMatrix& x, std::span<const Label> labels, const KernelSpec& spec,
               const TrainOptions& options, TrainDiagnostics* diagnostics) {
  spec.validate();
  if (!(options.tol > 0.0)) throw Error(ErrorCode::kConfiguration, "SMO tolerance must be positive");
  const std::size_t n = x.rows();
  const std::size_t dim = x.cols();
  if (labels.size() != n) {
    throw Error(ErrorCode::kAlignment, "label count does not match training rows");
  }
  const auto positives = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), Label::kLateBlight));
  if (positives == 0 || positives == n) {
    throw Error(ErrorCode::kTraining, "training data must contain both classes");
  }

  std::optional<ColumnStats> stats;
  if (options.standardize) stats = features::standardize_fit(x);
  std::vector<double> data(n * dim);
  for (std::size_t r = 0; r < n; ++r) {
    auto row = x.row(r);
    for (std::size_t c = 0; c < dim; ++c) data[r * dim + c] = stats ? stats->apply(c, row[c]) : row[c];
  }

  const double c_box = spec.box_constraint;
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) y[i] = features::sign_of(labels[i]);
  std::vector<double> alpha(n, 0.0);
  // F_i = sum_j alpha_j y_j K_ij - y_i
  std::vector<double> f(n);
  for (std::size_t i = 0; i < n; ++i) f[i] = -y[i];

  KernelCache cache(spec, data, n, dim, options.cache_rows);
  std::vector<double> diag(n);
  for (std::size_t i = 0; i < n; ++i) diag[i] = kernel_impl<double>(spec, cache.row(i), cache.row(i));

  auto in_up = [&](std::size_t i) { return y[i] > 0 ? alpha[i] < c_box : alpha[i] > 0.0; };
  auto in_low = [&](std::size_t i) { return y[i] > 0 ? alpha[i] > 0.0 : alpha[i] < c_box; };

  const std::size_t budget = static_cast<std::size_t>(std::max(options.max_passes, 1)) * std::max<std::size_t>(n, 1);
  std::size_t iter = 0;
  double b_up = 0.0;
  double b_low = 0.0;
  for (;; ++iter) {
    std::size_t i_up = n;
    std::size_t i_low = n;
    b_up = std::numeric_limits<double>::infinity();
    b_low = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < n; ++k) {
      if (in_up(k) && f[k] < b_up) {
        b_up = f[k];
        i_up = k;
      }
      if (in_low(k) && f[k] > b_low) {
        b_low = f[k];
        i_low = k;
      }
    }
    if (i_up == n || i_low == n || b_low - b_up <= 2.0 * options.tol) break;
    if (iter >= budget) {
      throw ConvergenceError("SMO did not converge within " + std::to_string(budget) +
                                 " iterations; KKT gap " + std::to_string(b_low - b_up),
                             b_low - b_up);
    }

    const auto& k_up = cache.kernel_row(i_up);
    const auto& k_low = cache.kernel_row(i_low);
    // The second lookup may evict the first only when capacity < 2, which the cache forbids.
    double eta = diag[i_up] + diag[i_low] - 2.0 * k_up[i_low];
    if (eta < 1e-12) eta = 1e-12;

    // Step t moves alpha_up by y_up*t and alpha_low by -y_low*t, keeping sum(y*alpha) fixed.
    const double room_up = y[i_up] > 0 ? c_box - alpha[i_up] : alpha[i_up];
    const double room_low = y[i_low] > 0 ? alpha[i_low] : c_box - alpha[i_low];
    const double t = std::min({(b_low - b_up) / eta, room_up, room_low});
    const bool clip_up = t == room_up;
    const bool clip_low = t == room_low;

    alpha[i_up] = clip_up ? (y[i_up] > 0 ? c_box : 0.0) : alpha[i_up] + y[i_up] * t;
    alpha[i_low] = clip_low ? (y[i_low] > 0 ? 0.0 : c_box) : alpha[i_low] - y[i_low] * t;
    for (std::size_t k = 0; k < n; ++k) f[k] += t * (k_up[k] - k_low[k]);
  }

  // Free multipliers pin the bias exactly; fall back to the threshold midpoint.
  double bias_sum = 0.0;
  std::size_t free_count = 0;
  const double edge = 1e-8 * c_box;
  for (std::size_t i = 0; i < n; ++i) {
    if (alpha[i] > edge && alpha[i] < c_box - edge) {
      bias_sum += -f[i];
      ++free_count;
    }
  }
  const double bias = free_count > 0 ? bias_sum / static_cast<double>(free_count) : -(b_up + b_low) / 2.0;

  std::vector<double> support;
  std::vector<double> coefs;
  for (std::size_t i = 0; i < n; ++i) {
    if (alpha[i] > kSupportThreshold) {
      auto row = cache.row(i);
      support.insert(support.end(), row.begin(), row.end());
      coefs.push_back(alpha[i] * y[i]);
    }
  }

  if (diagnostics) {
    diagnostics->iterations = iter;
    diagnostics->b_up = b_up;
    diagnostics->b_low = b_low;
    diagnostics->kkt_gap = b_low - b_up;
    // With F_i = (Q alpha)_i / y_i - y_i:  a'Qa = sum_i alpha_i y_i (F_i + y_i).
    double quad = 0.0;
    double linear = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      quad += alpha[i] * y[i] * (f[i] + y[i]);
      linear += alpha[i];
    }
    diagnostics->dual_objective = 0.5 * quad - linear;
    diagnostics->alphas = alpha;
  }
  return SvmModel(spec, std::move(stats), dim, std::move(support), std::move(coefs), bias);
}

SvmModel train(const features::LabeledDataset& ds, const KernelSpec& spec,
               const TrainOptions& options, TrainDiagnostics* diagnostics) {
  ds.validate();
  return train(ds.features, ds.labels, spec, options, diagnostics);
}

std::vector<std::uint8_t> encode_model(const SvmModel& model) {
  std::vector<std::uint8_t> out(std::begin(kModelMagic), std::end(kModelMagic));
  put_u32(out, kModelVersion);
  const KernelSpec& k = model.kernel();
  put_u32(out, static_cast<std::uint32_t>(k.kind));
  put_u32(out, static_cast<std::uint32_t>(k.degree));
  put_f64(out, k.scale);
  put_f64(out, k.box_constraint);
  put_f64(out, model.bias());
  put_u64(out, model.dim());
  put_u64(out, model.support_count());
  const auto& stats = model.standardization();
  out.push_back(stats ? 1 : 0);
  if (stats) {
    for (double v : stats->mean) put_f64(out, v);
    for (double v : stats->stddev) put_f64(out, v);
    out.insert(out.end(), stats->constant.begin(), stats->constant.end());
  }
  for (double v : model.dual_coefs()) put_f64(out, v);
  for (double v : model.support_rows()) put_f64(out, v);
  return out;
}

SvmModel decode_model(std::span<const std::uint8_t> bytes) {
  for (std::size_t i = 0; i < sizeof(kModelMagic); ++i) {
    if (i >= bytes.size()) throw FormatError("truncated model magic", bytes.size());
    if (bytes[i] != static_cast<std::uint8_t>(kModelMagic[i])) {
      throw FormatError("bad model magic", i);
    }
  }
  Reader in(bytes.subspan(sizeof(kModelMagic)));
  const auto version = static_cast<std::uint32_t>(in.u(4));
  if (version != kModelVersion) {
    throw FormatError("unsupported model version " + std::to_string(version), 8);
  }
  KernelSpec spec;
  spec.kind = static_cast<KernelKind>(in.u(4));
  if (spec.kind != KernelKind::kLinear && spec.kind != KernelKind::kPolynomial &&
      spec.kind != KernelKind::kGaussian) {
    throw FormatError("unknown kernel kind", 8 + in.pos() - 4);
  }
  spec.degree = static_cast<int>(in.u(4));
  spec.scale = in.f64();
  spec.box_constraint = in.f64();
  const double bias = in.f64();
  const std::uint64_t dim = in.u(8);
  const std::uint64_t count = in.u(8);
  if (dim > (1ULL << 32) || count > (1ULL << 32)) throw FormatError("implausible model size", 8 + in.pos());
  std::optional<ColumnStats> stats;
  if (in.u(1) != 0) {
    ColumnStats s;
    s.mean.resize(dim);
    s.stddev.resize(dim);
    s.constant.resize(dim);
    for (auto& v : s.mean) v = in.f64();
    for (auto& v : s.stddev) v = in.f64();
    for (auto& v : s.constant) v = static_cast<std::uint8_t>(in.u(1));
    stats = std::move(s);
  }
  std::vector<double> coefs(count);
  for (auto& v : coefs) v = in.f64();
  std::vector<double> rows(count * dim);
  for (auto& v : rows) v = in.f64();
  if (!in.done()) throw FormatError("trailing bytes after model", 8 + in.pos());
  return SvmModel(spec, std::move(stats), dim, std::move(rows), std::move(coefs), bias);
}

void save_model(const std::filesystem::path& path, const SvmModel& model) {
  const auto bytes = encode_model(model);
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::kIo, "short write to " + path.string());
}

SvmModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  return decode_model(bytes);
}

}  // namespace blight::svm
