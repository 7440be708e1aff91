#include "blight/pipeline.hpp"

#include <fstream>
#include <mutex>
#include <sstream>

#include "blight/error.hpp"
#include "blight/featstore.hpp"
#include "blight/image_io.hpp"
#include "blight/imaging.hpp"
#include "blight/parallel.hpp"
#include "blight/rng.hpp"

namespace blight::pipeline {

namespace fs = std::filesystem;

namespace {

void emit(const LogFn& log, const std::string& message) {
  if (log) log(message);
}

unsigned resolve_threads(const PipelineConfig& cfg, unsigned requested) {
  if (requested > 0) return requested;
  const long long configured = cfg.get_int("threads");
  if (configured > 0) return static_cast<unsigned>(configured);
  return default_thread_count();
}

fs::path require_path(const PipelineConfig& cfg, const std::string& key) {
  const fs::path p = cfg.get_path(key);
  if (p.empty()) throw Error(ErrorCode::kConfiguration, "config key '" + key + "' is required");
  if (!fs::exists(p)) {
    throw Error(ErrorCode::kConfiguration, key + ": path does not exist: " + p.string());
  }
  return p;
}

std::string k_label(std::optional<std::size_t> k) {
  return k ? "k" + std::to_string(*k) : std::string("kauto");
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw Error(ErrorCode::kIo, "short write to " + path.string());
}

features::LabeledDataset load_run_dataset(const PipelineConfig& cfg) {
  return features::load_dataset(require_path(cfg, "features"), require_path(cfg, "labels"));
}

void check_k_against(const std::vector<std::optional<std::size_t>>& ks, std::size_t cols) {
  for (const auto& k : ks) {
    if (k && *k > cols) {
      throw Error(ErrorCode::kConfiguration, "k=" + std::to_string(*k) + " exceeds the " +
                                                 std::to_string(cols) + " available feature columns");
    }
  }
}

std::uint64_t fold_seed(std::uint64_t seed, int fold) {
  return CounterRng::mix64(seed + CounterRng::kGamma * static_cast<std::uint64_t>(fold + 1));
}

}  // namespace

bool RunSummary::any_failed() const noexcept {
  for (const auto& r : reports) {
    if (r.any_failed()) return true;
  }
  return false;
}

fs::path run_directory(const PipelineConfig& cfg) {
  return cfg.get_path("out") / ("run-" + cfg.hash());
}

std::vector<std::optional<std::size_t>> parse_k_list(const PipelineConfig& cfg) {
  std::vector<std::optional<std::size_t>> ks;
  for (const auto& item : cfg.get_list("k")) {
    if (item == "auto") {
      ks.emplace_back(std::nullopt);
      continue;
    }
    try {
      std::size_t used = 0;
      const long long v = std::stoll(item, &used);
      if (used != item.size() || v <= 0) throw std::invalid_argument(item);
      ks.emplace_back(static_cast<std::size_t>(v));
    } catch (const std::exception&) {
      throw Error(ErrorCode::kConfiguration, "k: expected positive integers or 'auto', got '" + item + "'");
    }
  }
  if (ks.empty()) throw Error(ErrorCode::kConfiguration, "k: at least one value is required");
  return ks;
}

svm::TrainOptions train_options(const PipelineConfig& cfg) {
  svm::TrainOptions opt;
  opt.tol = cfg.get_double("svm.tol");
  opt.max_passes = static_cast<int>(cfg.get_int("svm.max_passes"));
  opt.standardize = cfg.get_bool("standardize");
  opt.cache_rows = static_cast<std::size_t>(cfg.get_int("svm.cache_rows"));
  return opt;
}

selection::EoConfig eo_config(const PipelineConfig& cfg, std::optional<std::size_t> k, unsigned threads) {
  selection::EoConfig eo;
  eo.population = static_cast<int>(cfg.get_int("eo.population"));
  eo.max_iter = static_cast<int>(cfg.get_int("eo.max_iter"));
  eo.a1 = cfg.get_double("eo.a1");
  eo.a2 = cfg.get_double("eo.a2");
  eo.generation_prob = cfg.get_double("eo.gp");
  eo.penalty_weight = cfg.get_double("eo.penalty_weight");
  eo.fitness_folds = static_cast<int>(cfg.get_int("eo.fitness_folds"));
  eo.seed = static_cast<std::uint64_t>(cfg.get_int("seed"));
  eo.target_k = k;
  eo.threads = threads;
  eo.train_options = train_options(cfg);
  return eo;
}

std::vector<eval::Variant> variants(const PipelineConfig& cfg) {
  const double c = cfg.get_double("svm.box_constraint");
  std::vector<eval::Variant> out;
  for (const auto& key : cfg.get_list("variants")) out.push_back(eval::parse_variant(key, c));
  return out;
}

PreprocessSummary cmd_preprocess(const PipelineConfig& cfg, unsigned threads, const LogFn& log) {
  const fs::path root = require_path(cfg, "image_root");
  int width = 0;
  int height = 0;
  {
    std::istringstream in(cfg.get("size"));
    if (!(in >> width >> height) || width <= 0 || height <= 0) {
      throw Error(ErrorCode::kConfiguration, "size: expected two positive integers 'W H'");
    }
  }
  const bool equalize = cfg.get_bool("equalize");

  PreprocessSummary summary;
  summary.output_dir = cfg.get("preprocess_out").empty()
                           ? cfg.get_path("out") / ("preprocessed-" + cfg.hash())
                           : cfg.get_path("preprocess_out");
  const auto entries = imaging::scan_image_tree(root);
  if (entries.empty()) {
    throw Error(ErrorCode::kIo, "no PNG or JPEG images found under " + root.string());
  }
  emit(log, "preprocessing " + std::to_string(entries.size()) + " images into " +
                summary.output_dir.string());

  std::vector<std::string> status(entries.size());
  parallel_for(entries.size(), resolve_threads(cfg, threads), [&](std::size_t i) {
    const auto& entry = entries[i];
    try {
      imaging::RasterImage img = imaging::resize(imaging::read_image(entry.path), width, height);
      if (equalize) img = imaging::equalize_rgb(img);
      fs::path target = summary.output_dir / entry.relative;
      target.replace_extension(".png");
      imaging::write_png(target, img);
      status[i] = "ok";
    } catch (const std::exception& e) {
      status[i] = e.what();
    }
  });

  std::ostringstream manifest;
  manifest << "# config_hash=" << cfg.hash() << '\n' << "relative_path,label,status\n";
  for (std::size_t i = 0; i < entries.size(); ++i) {
    manifest << entries[i].relative.generic_string() << ',' << entries[i].label << ','
             << (status[i] == "ok" ? "ok" : "failed") << '\n';
    if (status[i] == "ok") {
      ++summary.written;
    } else {
      summary.warnings.push_back(entries[i].relative.generic_string() + ": " + status[i]);
      emit(log, "warning: " + summary.warnings.back());
    }
  }
  write_text(summary.output_dir / "manifest.csv", manifest.str());
  if (summary.written == 0) {
    throw Error(ErrorCode::kIo, "every image under " + root.string() + " failed to process");
  }
  return summary;
}

ConcatSummary cmd_concat(const PipelineConfig& cfg, const LogFn& log) {
  const auto names = cfg.get_list("featmats");
  if (names.empty()) throw Error(ErrorCode::kConfiguration, "featmats: at least one file is required");
  std::vector<features::FeatureMatrix> parts;
  for (const auto& name : names) {
    fs::path p = name;
    if (p.is_relative()) p = cfg.base_dir() / p;
    if (!fs::exists(p)) throw Error(ErrorCode::kConfiguration, "featmats: path does not exist: " + p.string());
    parts.push_back(features::load_featmat(p));
    emit(log, "loaded " + p.string() + " (" + std::to_string(parts.back().rows()) + "x" +
                  std::to_string(parts.back().cols()) + ")");
  }
  const auto merged = features::concat(std::span<const features::FeatureMatrix>(parts));
  ConcatSummary summary;
  summary.output = cfg.get("concat_out").empty()
                       ? cfg.get_path("out") / ("features-" + cfg.hash() + ".featmat")
                       : cfg.get_path("concat_out");
  summary.rows = merged.rows();
  summary.cols = merged.cols();
  features::write_featmat(summary.output, merged);
  emit(log, "wrote " + summary.output.string() + " (" + std::to_string(summary.rows) + "x" +
                std::to_string(summary.cols) + ")");
  return summary;
}

SelectSummary cmd_select(const PipelineConfig& cfg, unsigned threads, const LogFn& log) {
  const auto ks = parse_k_list(cfg);
  const auto ds = load_run_dataset(cfg);
  check_k_against(ks, ds.features.cols());
  const unsigned workers = resolve_threads(cfg, threads);
  const auto fitness_variant = eval::parse_variant(cfg.get("eo.fitness_kernel"), cfg.get_double("svm.box_constraint"));

  SelectSummary summary;
  summary.run_dir = run_directory(cfg);
  summary.ks = ks;
  for (const auto& k : ks) {
    const auto eo = eo_config(cfg, k, workers);
    const auto spec = fitness_variant.spec_for(k.value_or(ds.features.cols()));
    emit(log, "EO selection " + k_label(k) + " over " + std::to_string(ds.features.cols()) + " columns");
    auto result = selection::eo_select(ds, spec, eo);
    const fs::path dir = summary.run_dir / k_label(k);
    selection::write_mask_csv(dir / "mask.csv", result.mask, eo.seed, cfg.hash());
    selection::write_trace_csv(dir / "trace.csv", result.trace);
    emit(log, "  best fitness " + std::to_string(result.best_fitness) + " with " +
                  std::to_string(result.mask.size()) + " columns");
    summary.results.push_back(std::move(result));
  }
  return summary;
}

RunSummary cmd_run(const PipelineConfig& cfg, unsigned threads, const LogFn& log) {
  const auto ks = parse_k_list(cfg);
  const auto ds = load_run_dataset(cfg);
  check_k_against(ks, ds.features.cols());
  const auto vars = variants(cfg);
  const unsigned workers = resolve_threads(cfg, threads);
  const auto scope = cfg.get("selection_scope");
  if (scope != "per_fold" && scope != "global") {
    throw Error(ErrorCode::kConfiguration, "selection_scope must be per_fold or global");
  }
  const auto fitness_variant = eval::parse_variant(cfg.get("eo.fitness_kernel"), cfg.get_double("svm.box_constraint"));
  const auto seed = static_cast<std::uint64_t>(cfg.get_int("seed"));
  const auto folds = features::make_folds(ds.labels, static_cast<int>(cfg.get_int("folds")), seed);

  RunSummary summary;
  summary.run_dir = run_directory(cfg);
  for (const auto& k : ks) {
    const fs::path dir = summary.run_dir / k_label(k);
    const auto spec = fitness_variant.spec_for(k.value_or(ds.features.cols()));
    std::vector<selection::FeatureMask> masks;
    if (scope == "global") {
      const auto eo = eo_config(cfg, k, workers);
      emit(log, k_label(k) + ": EO selection on all rows");
      auto result = selection::eo_select(ds, spec, eo);
      selection::write_mask_csv(dir / "mask.csv", result.mask, eo.seed, cfg.hash());
      selection::write_trace_csv(dir / "trace.csv", result.trace);
      masks.assign(static_cast<std::size_t>(folds.k), result.mask);
    } else {
      for (int f = 0; f < folds.k; ++f) {
        auto eo = eo_config(cfg, k, workers);
        eo.seed = fold_seed(seed, f);
        emit(log, k_label(k) + ": EO selection on training rows of fold " + std::to_string(f));
        const auto train = ds.subset(folds.train_rows(f));
        auto result = selection::eo_select(train, spec, eo);
        const std::string suffix = "_fold" + std::to_string(f) + ".csv";
        selection::write_mask_csv(dir / ("mask" + suffix), result.mask, eo.seed, cfg.hash());
        selection::write_trace_csv(dir / ("trace" + suffix), result.trace);
        masks.push_back(std::move(result.mask));
      }
    }

    emit(log, k_label(k) + ": evaluating " + std::to_string(vars.size()) + " variants");
    eval::ExperimentOptions options;
    options.train = train_options(cfg);
    options.threads = workers;
    auto report = eval::run_experiment(ds, masks, vars, folds, options);
    report.title = "Experiment " + k_label(k) + " (" + std::to_string(report.features) + " features)";
    report.config = cfg.entries();
    report.config_hash = cfg.hash();
    write_text(dir / "report.txt", eval::render_report(report, eval::ReportFormat::kText));
    write_text(dir / "report.csv", eval::render_report(report, eval::ReportFormat::kCsv));
    write_text(dir / "report.json", eval::render_report(report, eval::ReportFormat::kJson));
    for (const auto& v : report.variants) {
      if (v.failed) emit(log, "  " + v.name + " FAILED: " + v.error);
    }
    summary.reports.push_back(std::move(report));
  }
  return summary;
}

std::string cmd_report(const fs::path& report_json, eval::ReportFormat format) {
  std::ifstream in(report_json);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + report_json.string());
  std::ostringstream text;
  text << in.rdbuf();
  return eval::render_report(eval::parse_report_json(text.str()), format);
}

}  // namespace blight::pipeline
