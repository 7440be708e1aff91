#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <string>

#include "CLI11.hpp"
#include "blight/blight.h"

namespace {

void log_line(const char* message, void*) { std::fprintf(stderr, "%s\n", message); }

int report_failure(blight_status status) {
  std::fprintf(stderr, "error: %s: %s\n", blight_status_string(status), blight_last_error());
  return static_cast<int>(status);
}

struct Common {
  std::string config;
  unsigned threads = 0;
  long long seed = -1;
  std::string out;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "Pipeline config file (key = value)")->required()->check(CLI::ExistingFile);
  cmd->add_option("--threads", c.threads, "Worker threads (0 = config, $BLIGHT_THREADS, hardware)");
  cmd->add_option("--seed", c.seed, "Override the config seed")->check(CLI::NonNegativeNumber);
  cmd->add_option("--out", c.out, "Override the output root");
}

// Returns 0 with *cfg set, or the exit code.
int open_config(const Common& c, blight_config** cfg) {
  blight_status st = blight_config_load(c.config.c_str(), cfg);
  if (st != BLIGHT_OK) return report_failure(st);
  if (c.seed >= 0) {
    st = blight_config_set(*cfg, "seed", std::to_string(c.seed).c_str());
    if (st != BLIGHT_OK) return report_failure(st);
  }
  if (!c.out.empty()) {
    const std::string out = std::filesystem::absolute(c.out).string();
    st = blight_config_set(*cfg, "out", out.c_str());
    if (st != BLIGHT_OK) return report_failure(st);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Potato late-blight classification pipeline"};
  app.set_version_flag("--version", std::string(blight_version()));
  app.require_subcommand(1);

  Common common;
  auto* preprocess = app.add_subcommand("preprocess", "Resize and equalize an image tree");
  auto* concat = app.add_subcommand("concat", "Concatenate feature matrices column-wise");
  auto* select = app.add_subcommand("select", "Run feature selection on the full dataset");
  auto* run = app.add_subcommand("run", "Cross-validated selection and classification");
  for (auto* cmd : {preprocess, concat, select, run}) add_common(cmd, common);

  auto* report = app.add_subcommand("report", "Render a report.json or audit the published tables");
  std::string input;
  std::string format = "text";
  bool published = false;
  double tolerance = 0.05;
  report->add_option("--input", input, "report.json written by 'run'")->check(CLI::ExistingFile);
  report->add_option("--format", format, "text, csv or json")->check(CLI::IsMember({"text", "csv", "json"}));
  report->add_flag("--published", published, "Recompute the published tables from their confusion counts");
  report->add_option("--tolerance", tolerance, "Audit tolerance in percentage points");

  CLI11_PARSE(app, argc, argv);

  if (report->parsed()) {
    if (published == !input.empty()) {
      std::fprintf(stderr, "error: report needs exactly one of --input or --published\n");
      return static_cast<int>(BLIGHT_ERR_ARGUMENT);
    }
    char* text = nullptr;
    if (published) {
      int mismatches = 0;
      const blight_status st = blight_published_audit(tolerance, &text, &mismatches);
      if (st != BLIGHT_OK) return report_failure(st);
      std::fputs(text, stdout);
      blight_string_free(text);
      return mismatches == 0 ? 0 : 1;
    }
    const blight_status st = blight_cmd_report(input.c_str(), format.c_str(), &text);
    if (st != BLIGHT_OK) return report_failure(st);
    std::fputs(text, stdout);
    blight_string_free(text);
    return 0;
  }

  blight_config* cfg = nullptr;
  if (const int rc = open_config(common, &cfg); rc != 0) {
    blight_config_free(cfg);
    return rc;
  }
  std::fprintf(stderr, "config hash %s\n", blight_config_hash(cfg));

  blight_status st = BLIGHT_OK;
  int any_failed = 0;
  if (preprocess->parsed()) {
    st = blight_cmd_preprocess(cfg, common.threads, log_line, nullptr);
  } else if (concat->parsed()) {
    st = blight_cmd_concat(cfg, log_line, nullptr);
  } else if (select->parsed()) {
    st = blight_cmd_select(cfg, common.threads, log_line, nullptr);
  } else {
    st = blight_cmd_run(cfg, common.threads, log_line, nullptr, &any_failed);
  }
  blight_config_free(cfg);
  if (st != BLIGHT_OK) return report_failure(st);
  if (any_failed) {
    std::fprintf(stderr, "error: at least one classifier variant failed; see the report\n");
    return 1;
  }
  return 0;
}
