#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "blight/config.hpp"
#include "blight/eval.hpp"
#include "blight/selector.hpp"

namespace blight::pipeline {

using LogFn = std::function<void(const std::string&)>;

struct PreprocessSummary {
  std::filesystem::path output_dir;
  std::size_t written = 0;
  std::vector<std::string> warnings;  // one per file that could not be processed
};

struct ConcatSummary {
  std::filesystem::path output;
  std::size_t rows = 0;
  std::size_t cols = 0;
};

struct SelectSummary {
  std::filesystem::path run_dir;
  std::vector<std::optional<std::size_t>> ks;
  std::vector<selection::SelectionResult> results;
};

struct RunSummary {
  std::filesystem::path run_dir;
  std::vector<eval::EvalReport> reports;  // one per entry of `k`
  bool any_failed() const noexcept;
};

/// `<out>/run-<config hash>`; every artifact of a config lands below it.
std::filesystem::path run_directory(const PipelineConfig& cfg);

/// Parses the `k` list; "auto" selects penalty mode (no fixed cardinality).
std::vector<std::optional<std::size_t>> parse_k_list(const PipelineConfig& cfg);

selection::EoConfig eo_config(const PipelineConfig& cfg, std::optional<std::size_t> k, unsigned threads);
svm::TrainOptions train_options(const PipelineConfig& cfg);
std::vector<eval::Variant> variants(const PipelineConfig& cfg);

/// Resize + (optionally) equalize every PNG/JPEG under image_root into a
/// mirrored tree of PNGs. Throws when the tree is empty or nothing decodes.
PreprocessSummary cmd_preprocess(const PipelineConfig& cfg, unsigned threads, const LogFn& log = {});

/// Column-concatenates the FEATMAT1 files listed in `featmats`.
ConcatSummary cmd_concat(const PipelineConfig& cfg, const LogFn& log = {});

/// Runs the EO selection once on the full dataset for each k and writes the
/// mask and trace files.
SelectSummary cmd_select(const PipelineConfig& cfg, unsigned threads, const LogFn& log = {});

/// Outer cross-validation with EO selection (per fold or global) and the
/// configured variants, one report set per k.
RunSummary cmd_run(const PipelineConfig& cfg, unsigned threads, const LogFn& log = {});

/// Re-renders a report.json in the requested format.
std::string cmd_report(const std::filesystem::path& report_json, eval::ReportFormat format);

}  // namespace blight::pipeline
