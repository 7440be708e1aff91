/*
 * blight: potato late-blight classification pipeline, C interface.
 *
 * Conventions:
 *   - Every fallible call returns blight_status; BLIGHT_OK is 0.
 *   - On failure blight_last_error() returns a message for the calling
 *     thread, valid until that thread's next failing call.
 *   - Objects are opaque handles created by *_create / *_load / *_new and
 *     released with the matching *_free. Freeing NULL is a no-op.
 *   - Strings returned through char** out-parameters are heap allocated and
 *     must be released with blight_string_free.
 */
#ifndef BLIGHT_BLIGHT_H_
#define BLIGHT_BLIGHT_H_

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#if defined(BLIGHT_BUILDING_LIBRARY)
#define BLIGHT_API __declspec(dllexport)
#else
#define BLIGHT_API __declspec(dllimport)
#endif
#else
#define BLIGHT_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum blight_status {
  BLIGHT_OK = 0,
  BLIGHT_ERR_DIMENSION = 1,
  BLIGHT_ERR_CHANNEL = 2,
  BLIGHT_ERR_FORMAT = 3,
  BLIGHT_ERR_ALIGNMENT = 4,
  BLIGHT_ERR_STRATIFICATION = 5,
  BLIGHT_ERR_TRAINING = 6,
  BLIGHT_ERR_CONVERGENCE = 7,
  BLIGHT_ERR_CONFIGURATION = 8,
  BLIGHT_ERR_IO = 9,
  BLIGHT_ERR_EMPTY_EVALUATION = 10,
  BLIGHT_ERR_NUMERICAL = 11,
  BLIGHT_ERR_ARGUMENT = 12,
  BLIGHT_ERR_INTERNAL = 99
} blight_status;

typedef struct blight_featmat blight_featmat;
typedef struct blight_dataset blight_dataset;
typedef struct blight_model blight_model;
typedef struct blight_config blight_config;

typedef void (*blight_log_fn)(const char* message, void* user);

BLIGHT_API const char* blight_version(void);
BLIGHT_API const char* blight_status_string(blight_status status);
BLIGHT_API const char* blight_last_error(void);
BLIGHT_API void blight_string_free(char* text);

/* ---- imaging ---------------------------------------------------------- */

/* Bilinear resize of an interleaved 8-bit image; dst holds target_w*target_h*channels bytes. */
BLIGHT_API blight_status blight_resize(const uint8_t* src, int width, int height, int channels,
                                       uint8_t* dst, int target_w, int target_h);
/* Histogram equalization of one 8-bit plane of n pixels. */
BLIGHT_API blight_status blight_equalize_plane(const uint8_t* src, size_t n, uint8_t* dst);
/* Per-channel equalization of an interleaved RGB image. */
BLIGHT_API blight_status blight_equalize_rgb(const uint8_t* src, int width, int height, uint8_t* dst);
/* Decode PNG/JPEG, resize, optionally equalize, write PNG. */
BLIGHT_API blight_status blight_preprocess_image(const char* in_path, const char* out_path,
                                                 int width, int height, int equalize);

/* ---- feature matrices (FEATMAT1) --------------------------------------- */

BLIGHT_API blight_status blight_featmat_create(size_t rows, size_t cols, const float* values,
                                               const char* tag, blight_featmat** out);
BLIGHT_API blight_status blight_featmat_load(const char* path, blight_featmat** out);
BLIGHT_API blight_status blight_featmat_save(const blight_featmat* m, const char* path);
BLIGHT_API blight_status blight_featmat_concat(const blight_featmat* const* parts, size_t count,
                                               blight_featmat** out);
BLIGHT_API size_t blight_featmat_rows(const blight_featmat* m);
BLIGHT_API size_t blight_featmat_cols(const blight_featmat* m);
BLIGHT_API const float* blight_featmat_data(const blight_featmat* m);
/* Header tag; owned by the handle. */
BLIGHT_API const char* blight_featmat_tag(const blight_featmat* m);
BLIGHT_API void blight_featmat_free(blight_featmat* m);

/* ---- labeled datasets --------------------------------------------------- */

/* labels[i] is +1 (late_blight) or -1 (healthy). */
BLIGHT_API blight_status blight_dataset_create(const blight_featmat* features, const int8_t* labels,
                                               blight_dataset** out);
BLIGHT_API blight_status blight_dataset_load(const char* featmat_path, const char* labels_csv,
                                             blight_dataset** out);
BLIGHT_API size_t blight_dataset_rows(const blight_dataset* ds);
BLIGHT_API size_t blight_dataset_cols(const blight_dataset* ds);
BLIGHT_API void blight_dataset_free(blight_dataset* ds);
/* Stratified split; fold_of must hold blight_dataset_rows(ds) entries. */
BLIGHT_API blight_status blight_make_folds(const blight_dataset* ds, int k, uint64_t seed, int* fold_of);

/* ---- SVM ------------------------------------------------------------------ */

typedef enum blight_kernel_kind {
  BLIGHT_KERNEL_LINEAR = 0,
  BLIGHT_KERNEL_POLYNOMIAL = 1,
  BLIGHT_KERNEL_GAUSSIAN = 2
} blight_kernel_kind;

typedef enum blight_scale_variant {
  BLIGHT_SCALE_FINE = 0,
  BLIGHT_SCALE_MEDIUM = 1,
  BLIGHT_SCALE_COARSE = 2,
  BLIGHT_SCALE_UNIT = 3
} blight_scale_variant;

typedef struct blight_kernel_spec {
  int kind;   /* blight_kernel_kind */
  int degree; /* polynomial: 2 or 3 */
  double scale;
  double box_constraint;
} blight_kernel_spec;

typedef struct blight_train_options {
  double tol;
  int max_passes;
  int standardize;
  size_t cache_rows;
} blight_train_options;

BLIGHT_API void blight_train_options_default(blight_train_options* options);
BLIGHT_API blight_status blight_kernel_scale(int variant, size_t num_features, double* out);
BLIGHT_API blight_status blight_kernel_eval(const blight_kernel_spec* spec, const double* x,
                                            const double* y, size_t n, double* out);
/* options may be NULL for defaults. kkt_gap (optional) receives the final gap, also on
 * BLIGHT_ERR_CONVERGENCE. */
BLIGHT_API blight_status blight_model_train(const blight_dataset* ds, const blight_kernel_spec* spec,
                                            const blight_train_options* options, blight_model** out,
                                            double* kkt_gap);
/* label receives +1 or -1; either out-pointer may be NULL. */
BLIGHT_API blight_status blight_model_predict(const blight_model* model, const float* x, size_t n,
                                              int* label, double* decision_value);
BLIGHT_API size_t blight_model_dim(const blight_model* model);
BLIGHT_API size_t blight_model_support_count(const blight_model* model);
BLIGHT_API double blight_model_bias(const blight_model* model);
BLIGHT_API blight_status blight_model_save(const blight_model* model, const char* path);
BLIGHT_API blight_status blight_model_load(const char* path, blight_model** out);
BLIGHT_API void blight_model_free(blight_model* model);

/* ---- feature selection ---------------------------------------------------- */

typedef struct blight_eo_config {
  int population;
  int max_iter;
  double a1;
  double a2;
  double generation_prob;
  size_t target_k; /* 0 = penalty mode */
  double penalty_weight;
  uint64_t seed;
  int fitness_folds;
  unsigned threads;
} blight_eo_config;

BLIGHT_API void blight_eo_config_default(blight_eo_config* cfg);
/* Writes up to `capacity` selected column indices; *count receives the mask size.
 * trace (optional) must hold cfg->max_iter values. */
BLIGHT_API blight_status blight_eo_select(const blight_dataset* ds, const blight_kernel_spec* fitness_kernel,
                                          const blight_eo_config* cfg, size_t* indices, size_t capacity,
                                          size_t* count, double* trace, double* best_fitness);

/* ---- evaluation -------------------------------------------------------------- */

typedef struct blight_confusion {
  uint64_t tp;
  uint64_t fn;
  uint64_t fp;
  uint64_t tn;
} blight_confusion;

typedef struct blight_metrics {
  double accuracy;
  double sensitivity_reported; /* TP/(TP+FP), as tabulated in the published results */
  double specificity_reported; /* TN/(TN+FN), as tabulated in the published results */
  double precision;
  double recall;
  double f1;
  int sensitivity_defined;
  int specificity_defined;
  int f1_defined;
} blight_metrics;

BLIGHT_API blight_status blight_metrics_from_confusion(const blight_confusion* cm, blight_metrics* out);
/* Audit of the published result tables; *mismatches counts rows with consistent
 * counts whose printed metrics are not reproduced within `tolerance`. */
BLIGHT_API blight_status blight_published_audit(double tolerance, char** text, int* mismatches);

/* ---- pipeline ----------------------------------------------------------------- */

BLIGHT_API blight_status blight_config_new(blight_config** out);
BLIGHT_API blight_status blight_config_load(const char* path, blight_config** out);
BLIGHT_API blight_status blight_config_set(blight_config* cfg, const char* key, const char* value);
/* 16 hex digits; owned by the handle, valid until the next blight_config_set. */
BLIGHT_API const char* blight_config_hash(blight_config* cfg);
BLIGHT_API void blight_config_free(blight_config* cfg);

/* threads == 0 falls back to the config, then $BLIGHT_THREADS, then the hardware. */
BLIGHT_API blight_status blight_cmd_preprocess(const blight_config* cfg, unsigned threads,
                                               blight_log_fn log, void* user);
BLIGHT_API blight_status blight_cmd_concat(const blight_config* cfg, blight_log_fn log, void* user);
BLIGHT_API blight_status blight_cmd_select(const blight_config* cfg, unsigned threads,
                                           blight_log_fn log, void* user);
/* *any_failed is set when at least one variant failed in some report. */
BLIGHT_API blight_status blight_cmd_run(const blight_config* cfg, unsigned threads, blight_log_fn log,
                                        void* user, int* any_failed);
/* format: "text", "csv" or "json". */
BLIGHT_API blight_status blight_cmd_report(const char* report_json, const char* format, char** text);

#ifdef __cplusplus
}
#endif

#endif /* BLIGHT_BLIGHT_H_ */
