#include "blight/blight.h"

#include <cstring>
#include <new>
#include <string>

#include "blight/error.hpp"
#include "blight/eval.hpp"
#include "blight/featstore.hpp"
#include "blight/image_io.hpp"
#include "blight/imaging.hpp"
#include "blight/pipeline.hpp"
#include "blight/published.hpp"
#include "blight/selector.hpp"
#include "blight/svm.hpp"

struct blight_featmat {
  blight::features::FeatureMatrix matrix;
  std::string tag;
};

struct blight_dataset {
  blight::features::LabeledDataset data;
};

struct blight_model {
  blight::svm::SvmModel model;
};

struct blight_config {
  blight::pipeline::PipelineConfig config;
  std::string hash;
};

namespace {

thread_local std::string g_last_error;

blight_status fail(blight_status status, const std::string& message) {
  g_last_error = message;
  return status;
}

// Runs `body`, translating exceptions into status codes.
template <typename Body>
blight_status guarded(Body&& body) {
  try {
    body();
    return BLIGHT_OK;
  } catch (const blight::Error& e) {
    return fail(static_cast<blight_status>(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return fail(BLIGHT_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(BLIGHT_ERR_INTERNAL, e.what());
  }
}

void require(bool condition, const char* what) {
  if (!condition) throw blight::Error(blight::ErrorCode::kArgument, what);
}

char* duplicate(const std::string& text) {
  char* out = static_cast<char*>(std::malloc(text.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, text.c_str(), text.size() + 1);
  return out;
}

blight::svm::KernelSpec to_spec(const blight_kernel_spec* spec) {
  require(spec != nullptr, "kernel spec is NULL");
  require(spec->kind >= 0 && spec->kind <= 2, "unknown kernel kind");
  blight::svm::KernelSpec out;
  out.kind = static_cast<blight::svm::KernelKind>(spec->kind);
  out.degree = spec->degree;
  out.scale = spec->scale;
  out.box_constraint = spec->box_constraint;
  out.validate();
  return out;
}

blight::svm::TrainOptions to_options(const blight_train_options* options) {
  blight::svm::TrainOptions out;
  if (options) {
    out.tol = options->tol;
    out.max_passes = options->max_passes;
    out.standardize = options->standardize != 0;
    out.cache_rows = options->cache_rows;
  }
  return out;
}

blight::pipeline::LogFn to_log(blight_log_fn log, void* user) {
  if (!log) return {};
  return [log, user](const std::string& message) { log(message.c_str(), user); };
}

}  // namespace

extern "C" {

const char* blight_version(void) { return "1.0.0"; }

const char* blight_status_string(blight_status status) {
  if (status == BLIGHT_OK) return "ok";
  if (status == BLIGHT_ERR_INTERNAL) return "internal error";
  return blight::to_string(static_cast<blight::ErrorCode>(status));
}

const char* blight_last_error(void) { return g_last_error.c_str(); }

void blight_string_free(char* text) { std::free(text); }

blight_status blight_resize(const uint8_t* src, int width, int height, int channels, uint8_t* dst,
                            int target_w, int target_h) {
  return guarded([&] {
    require(src && dst, "NULL buffer");
    require(width > 0 && height > 0, "image dimensions must be positive");
    const std::size_t n = static_cast<std::size_t>(width) * height * channels;
    blight::imaging::RasterImage img(width, height, channels, std::vector<std::uint8_t>(src, src + n));
    const auto out = blight::imaging::resize(img, target_w, target_h);
    std::memcpy(dst, out.data().data(), out.data().size());
  });
}

blight_status blight_equalize_plane(const uint8_t* src, size_t n, uint8_t* dst) {
  return guarded([&] {
    require(n == 0 || (src && dst), "NULL buffer");
    const auto out = blight::imaging::equalize_channel(std::span<const std::uint8_t>(src, n));
    std::memcpy(dst, out.data(), out.size());
  });
}

blight_status blight_equalize_rgb(const uint8_t* src, int width, int height, uint8_t* dst) {
  return guarded([&] {
    require(src && dst, "NULL buffer");
    require(width > 0 && height > 0, "image dimensions must be positive");
    const std::size_t n = static_cast<std::size_t>(width) * height * 3;
    blight::imaging::RasterImage img(width, height, 3, std::vector<std::uint8_t>(src, src + n));
    const auto out = blight::imaging::equalize_rgb(img);
    std::memcpy(dst, out.data().data(), out.data().size());
  });
}

blight_status blight_preprocess_image(const char* in_path, const char* out_path, int width, int height,
                                      int equalize) {
  return guarded([&] {
    require(in_path && out_path, "NULL path");
    auto img = blight::imaging::resize(blight::imaging::read_image(in_path), width, height);
    if (equalize) img = blight::imaging::equalize_rgb(img);
    blight::imaging::write_png(out_path, img);
  });
}

blight_status blight_featmat_create(size_t rows, size_t cols, const float* values, const char* tag,
                                    blight_featmat** out) {
  return guarded([&] {
    require(out != nullptr, "NULL out-parameter");
    require(values != nullptr || rows * cols == 0, "NULL values");
    std::vector<float> data(values, values + rows * cols);
    auto* handle = new blight_featmat{
        blight::features::FeatureMatrix(rows, cols, std::move(data), tag ? tag : "features"), {}};
    handle->tag = handle->matrix.source_tag();
    *out = handle;
  });
}

blight_status blight_featmat_load(const char* path, blight_featmat** out) {
  return guarded([&] {
    require(path && out, "NULL argument");
    auto* handle = new blight_featmat{blight::features::load_featmat(path), {}};
    handle->tag = handle->matrix.source_tag();
    *out = handle;
  });
}

blight_status blight_featmat_save(const blight_featmat* m, const char* path) {
  return guarded([&] {
    require(m && path, "NULL argument");
    blight::features::write_featmat(path, m->matrix);
  });
}

blight_status blight_featmat_concat(const blight_featmat* const* parts, size_t count, blight_featmat** out) {
  return guarded([&] {
    require(parts && out && count > 0, "concat needs at least one part");
    std::vector<const blight::features::FeatureMatrix*> ptrs;
    for (size_t i = 0; i < count; ++i) {
      require(parts[i] != nullptr, "NULL part");
      ptrs.push_back(&parts[i]->matrix);
    }
    auto* handle = new blight_featmat{
        blight::features::concat(std::span<const blight::features::FeatureMatrix* const>(ptrs)), {}};
    handle->tag = handle->matrix.source_tag();
    *out = handle;
  });
}

size_t blight_featmat_rows(const blight_featmat* m) { return m ? m->matrix.rows() : 0; }
size_t blight_featmat_cols(const blight_featmat* m) { return m ? m->matrix.cols() : 0; }
const float* blight_featmat_data(const blight_featmat* m) { return m ? m->matrix.values().data() : nullptr; }
const char* blight_featmat_tag(const blight_featmat* m) { return m ? m->tag.c_str() : ""; }
void blight_featmat_free(blight_featmat* m) { delete m; }

blight_status blight_dataset_create(const blight_featmat* features, const int8_t* labels, blight_dataset** out) {
  return guarded([&] {
    require(features && out, "NULL argument");
    const std::size_t n = features->matrix.rows();
    require(labels != nullptr || n == 0, "NULL labels");
    blight::features::LabeledDataset ds;
    ds.features = features->matrix;
    for (std::size_t i = 0; i < n; ++i) {
      require(labels[i] == 1 || labels[i] == -1, "labels must be +1 or -1");
      ds.labels.push_back(static_cast<blight::features::Label>(labels[i]));
    }
    *out = new blight_dataset{std::move(ds)};
  });
}

blight_status blight_dataset_load(const char* featmat_path, const char* labels_csv, blight_dataset** out) {
  return guarded([&] {
    require(featmat_path && labels_csv && out, "NULL argument");
    *out = new blight_dataset{blight::features::load_dataset(featmat_path, labels_csv)};
  });
}

size_t blight_dataset_rows(const blight_dataset* ds) { return ds ? ds->data.size() : 0; }
size_t blight_dataset_cols(const blight_dataset* ds) { return ds ? ds->data.features.cols() : 0; }
void blight_dataset_free(blight_dataset* ds) { delete ds; }

blight_status blight_make_folds(const blight_dataset* ds, int k, uint64_t seed, int* fold_of) {
  return guarded([&] {
    require(ds && fold_of, "NULL argument");
    const auto folds = blight::features::make_folds(ds->data.labels, k, seed);
    std::copy(folds.fold_of.begin(), folds.fold_of.end(), fold_of);
  });
}

void blight_train_options_default(blight_train_options* options) {
  if (!options) return;
  const blight::svm::TrainOptions defaults;
  options->tol = defaults.tol;
  options->max_passes = defaults.max_passes;
  options->standardize = defaults.standardize ? 1 : 0;
  options->cache_rows = defaults.cache_rows;
}

blight_status blight_kernel_scale(int variant, size_t num_features, double* out) {
  return guarded([&] {
    require(out != nullptr, "NULL out-parameter");
    require(variant >= 0 && variant <= 3, "unknown scale variant");
    *out = blight::svm::kernel_scale_for(static_cast<blight::svm::ScaleVariant>(variant), num_features);
  });
}

blight_status blight_kernel_eval(const blight_kernel_spec* spec, const double* x, const double* y, size_t n,
                                 double* out) {
  return guarded([&] {
    require(x && y && out, "NULL argument");
    *out = blight::svm::kernel_eval(to_spec(spec), std::span<const double>(x, n), std::span<const double>(y, n));
  });
}

blight_status blight_model_train(const blight_dataset* ds, const blight_kernel_spec* spec,
                                 const blight_train_options* options, blight_model** out, double* kkt_gap) {
  return guarded([&] {
    require(ds && out, "NULL argument");
    blight::svm::TrainDiagnostics diag;
    try {
      auto model = blight::svm::train(ds->data, to_spec(spec), to_options(options), &diag);
      *out = new blight_model{std::move(model)};
      if (kkt_gap) *kkt_gap = diag.kkt_gap;
    } catch (const blight::ConvergenceError& e) {
      if (kkt_gap) *kkt_gap = e.kkt_gap();
      throw;
    }
  });
}

blight_status blight_model_predict(const blight_model* model, const float* x, size_t n, int* label,
                                   double* decision_value) {
  return guarded([&] {
    require(model && x, "NULL argument");
    const auto p = model->model.predict(std::span<const float>(x, n));
    if (label) *label = blight::features::sign_of(p.label);
    if (decision_value) *decision_value = p.decision_value;
  });
}

size_t blight_model_dim(const blight_model* model) { return model ? model->model.dim() : 0; }
size_t blight_model_support_count(const blight_model* model) {
  return model ? model->model.support_count() : 0;
}
double blight_model_bias(const blight_model* model) { return model ? model->model.bias() : 0.0; }

blight_status blight_model_save(const blight_model* model, const char* path) {
  return guarded([&] {
    require(model && path, "NULL argument");
    blight::svm::save_model(path, model->model);
  });
}

blight_status blight_model_load(const char* path, blight_model** out) {
  return guarded([&] {
    require(path && out, "NULL argument");
    *out = new blight_model{blight::svm::load_model(path)};
  });
}

void blight_model_free(blight_model* model) { delete model; }

void blight_eo_config_default(blight_eo_config* cfg) {
  if (!cfg) return;
  const blight::selection::EoConfig d;
  cfg->population = d.population;
  cfg->max_iter = d.max_iter;
  cfg->a1 = d.a1;
  cfg->a2 = d.a2;
  cfg->generation_prob = d.generation_prob;
  cfg->target_k = 0;
  cfg->penalty_weight = d.penalty_weight;
  cfg->seed = d.seed;
  cfg->fitness_folds = d.fitness_folds;
  cfg->threads = d.threads;
}

blight_status blight_eo_select(const blight_dataset* ds, const blight_kernel_spec* fitness_kernel,
                               const blight_eo_config* cfg, size_t* indices, size_t capacity, size_t* count,
                               double* trace, double* best_fitness) {
  return guarded([&] {
    require(ds && cfg && count, "NULL argument");
    blight::selection::EoConfig eo;
    eo.population = cfg->population;
    eo.max_iter = cfg->max_iter;
    eo.a1 = cfg->a1;
    eo.a2 = cfg->a2;
    eo.generation_prob = cfg->generation_prob;
    if (cfg->target_k > 0) eo.target_k = cfg->target_k;
    eo.penalty_weight = cfg->penalty_weight;
    eo.seed = cfg->seed;
    eo.fitness_folds = cfg->fitness_folds;
    eo.threads = cfg->threads;
    const auto result = blight::selection::eo_select(ds->data, to_spec(fitness_kernel), eo);
    *count = result.mask.size();
    if (indices) {
      std::copy_n(result.mask.indices.begin(), std::min(capacity, result.mask.size()), indices);
    }
    if (trace) std::copy(result.trace.begin(), result.trace.end(), trace);
    if (best_fitness) *best_fitness = result.best_fitness;
  });
}

blight_status blight_metrics_from_confusion(const blight_confusion* cm, blight_metrics* out) {
  return guarded([&] {
    require(cm && out, "NULL argument");
    const auto m = blight::eval::metrics_from_confusion({cm->tp, cm->fn, cm->fp, cm->tn});
    *out = blight_metrics{m.accuracy,
                          m.sensitivity_reported,
                          m.specificity_reported,
                          m.precision,
                          m.recall,
                          m.f1,
                          m.sensitivity_defined ? 1 : 0,
                          m.specificity_defined ? 1 : 0,
                          m.f1_defined ? 1 : 0};
  });
}

blight_status blight_published_audit(double tolerance, char** text, int* mismatches) {
  return guarded([&] {
    const auto rows = blight::eval::audit_published(tolerance);
    int bad = 0;
    for (const auto& r : rows) {
      if (r.counts_consistent && !r.reproduces) ++bad;
    }
    if (mismatches) *mismatches = bad;
    if (text) *text = duplicate(blight::eval::render_audit(rows));
  });
}

blight_status blight_config_new(blight_config** out) {
  return guarded([&] {
    require(out != nullptr, "NULL out-parameter");
    *out = new blight_config{};
  });
}

blight_status blight_config_load(const char* path, blight_config** out) {
  return guarded([&] {
    require(path && out, "NULL argument");
    *out = new blight_config{blight::pipeline::PipelineConfig::load(path), {}};
  });
}

blight_status blight_config_set(blight_config* cfg, const char* key, const char* value) {
  return guarded([&] {
    require(cfg && key && value, "NULL argument");
    cfg->config.set(key, value);
  });
}

const char* blight_config_hash(blight_config* cfg) {
  if (!cfg) return "";
  cfg->hash = cfg->config.hash();
  return cfg->hash.c_str();
}

void blight_config_free(blight_config* cfg) { delete cfg; }

blight_status blight_cmd_preprocess(const blight_config* cfg, unsigned threads, blight_log_fn log, void* user) {
  return guarded([&] {
    require(cfg != nullptr, "NULL config");
    blight::pipeline::cmd_preprocess(cfg->config, threads, to_log(log, user));
  });
}

blight_status blight_cmd_concat(const blight_config* cfg, blight_log_fn log, void* user) {
  return guarded([&] {
    require(cfg != nullptr, "NULL config");
    blight::pipeline::cmd_concat(cfg->config, to_log(log, user));
  });
}

blight_status blight_cmd_select(const blight_config* cfg, unsigned threads, blight_log_fn log, void* user) {
  return guarded([&] {
    require(cfg != nullptr, "NULL config");
    blight::pipeline::cmd_select(cfg->config, threads, to_log(log, user));
  });
}

blight_status blight_cmd_run(const blight_config* cfg, unsigned threads, blight_log_fn log, void* user,
                             int* any_failed) {
  return guarded([&] {
    require(cfg != nullptr, "NULL config");
    const auto summary = blight::pipeline::cmd_run(cfg->config, threads, to_log(log, user));
    if (any_failed) *any_failed = summary.any_failed() ? 1 : 0;
  });
}

blight_status blight_cmd_report(const char* report_json, const char* format, char** text) {
  return guarded([&] {
    require(report_json && format && text, "NULL argument");
    const std::string f = format;
    blight::eval::ReportFormat fmt;
    if (f == "text") {
      fmt = blight::eval::ReportFormat::kText;
    } else if (f == "csv") {
      fmt = blight::eval::ReportFormat::kCsv;
    } else if (f == "json") {
      fmt = blight::eval::ReportFormat::kJson;
    } else {
      throw blight::Error(blight::ErrorCode::kArgument, "format must be text, csv or json");
    }
    *text = duplicate(blight::pipeline::cmd_report(report_json, fmt));
  });
}

}  // extern "C"
