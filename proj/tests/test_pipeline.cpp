#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "blight/error.hpp"
#include "blight/featstore.hpp"
#include "blight/image_io.hpp"
#include "blight/pipeline.hpp"
#include "doctest.h"
#include "fixtures.hpp"

using namespace blight::pipeline;
using blight::Error;
using blight::ErrorCode;
namespace fs = std::filesystem;
namespace bf = blight::features;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

ErrorCode code_of(const std::function<void()>& body) {
  try {
    body();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::kArgument;
}

// Writes features + labels for `ds` and a config that points at them.
fs::path write_toy_config(const fixtures::TempDir& dir, const bf::LabeledDataset& ds, const std::string& extra) {
  bf::write_featmat(dir / "toy.featmat", ds.features);
  bf::LabelTable table{ds.sample_ids, ds.labels};
  bf::write_labels_csv(dir / "labels.csv", table);
  const fs::path cfg = dir / "toy.conf";
  std::ofstream(cfg) << "# toy run\n"
                        "features = toy.featmat\n"
                        "labels = labels.csv\n"
                        "out = out\n"
                     << extra;
  return cfg;
}

int run_cli(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string(BLIGHT_CLI_PATH) + " " + args + " > '" + log.string() + "' 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("config parsing") {
  const auto cfg = PipelineConfig::parse(
      "# comment\n\n  k = 3, auto  \nvariants=linear,cubic\nequalize = off\nsvm.tol = 1e-4\nfolds = 4\n");
  CHECK(cfg.get_list("k") == std::vector<std::string>{"3", "auto"});
  CHECK(cfg.get_list("variants") == std::vector<std::string>{"linear", "cubic"});
  CHECK_FALSE(cfg.get_bool("equalize"));
  CHECK(cfg.get_double("svm.tol") == 1e-4);
  CHECK(cfg.get_int("folds") == 4);
  CHECK(cfg.get("eo.population") == "10");
  CHECK(cfg.is_set("k"));

  const auto ks = parse_k_list(cfg);
  REQUIRE(ks.size() == 2);
  CHECK(ks[0] == std::optional<std::size_t>(3));
  CHECK_FALSE(ks[1].has_value());
  CHECK(variants(cfg).size() == 2);
  CHECK(train_options(cfg).tol == 1e-4);
  CHECK(eo_config(cfg, 3, 2).target_k == std::optional<std::size_t>(3));

  try {
    (void)PipelineConfig::parse("k = 3\nfoo = 1\n", "x.conf");
    FAIL("expected configuration error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kConfiguration);
    CHECK(std::string(e.what()).find("x.conf:2") != std::string::npos);
  }
  CHECK_THROWS_AS((void)PipelineConfig::parse("just words\n"), Error);
  CHECK_THROWS_AS((void)PipelineConfig::parse("folds = five\n").get_int("folds"), Error);
  CHECK_THROWS_AS((void)PipelineConfig::parse("equalize = maybe\n").get_bool("equalize"), Error);
  CHECK_THROWS_AS((void)parse_k_list(PipelineConfig::parse("k = 0\n")), Error);
  CHECK_THROWS_AS((void)parse_k_list(PipelineConfig::parse("k = 12x\n")), Error);
  CHECK_THROWS_AS((void)variants(PipelineConfig::parse("variants = rbf\n")), Error);
}

TEST_CASE("config hash") {
  PipelineConfig a;
  PipelineConfig b;
  CHECK(a.hash() == b.hash());
  CHECK(a.hash().size() == 16);
  b.set("threads", "8");
  b.set("out", "/elsewhere");
  CHECK(a.hash() == b.hash());
  b.set("seed", "2");
  CHECK(a.hash() != b.hash());
  CHECK(run_directory(a) != run_directory(b));
}

TEST_CASE("paths resolve against the config file") {
  fixtures::TempDir dir("cfgpath");
  fs::create_directories(dir / "sub");
  std::ofstream(dir / "sub/p.conf") << "labels = l.csv\nout = /abs/out\n";
  const auto cfg = PipelineConfig::load(dir / "sub/p.conf");
  CHECK(cfg.get_path("labels") == dir / "sub/l.csv");
  CHECK(cfg.get_path("out") == fs::path("/abs/out"));
  CHECK(code_of([&] { (void)PipelineConfig::load(dir / "missing.conf"); }) == ErrorCode::kIo);
}

TEST_CASE("cmd_concat") {
  fixtures::TempDir dir("concat");
  auto part = [&](const std::string& name, std::size_t rows, std::size_t cols, std::uint64_t seed) {
    const auto ds = fixtures::noise(rows / 2, rows - rows / 2, cols, seed);
    bf::write_featmat(dir / (name + ".featmat"),
                      bf::FeatureMatrix(rows, cols, {ds.features.values().begin(), ds.features.values().end()}, name));
  };
  part("darknet53-gap", 6, 4, 1);
  part("alexnet-fc7", 6, 8, 2);
  part("vgg19-fc7", 6, 8, 3);
  part("short", 5, 8, 4);

  auto cfg = PipelineConfig::parse("featmats = darknet53-gap.featmat, alexnet-fc7.featmat, vgg19-fc7.featmat\n");
  cfg.set("out", (dir / "out").string());
  cfg.set("featmats", (dir / "darknet53-gap.featmat").string() + "," + (dir / "alexnet-fc7.featmat").string() +
                          "," + (dir / "vgg19-fc7.featmat").string());
  const auto summary = cmd_concat(cfg);
  CHECK(summary.cols == 20);
  CHECK(summary.rows == 6);
  CHECK(summary.output.filename().string().find(cfg.hash()) != std::string::npos);
  const auto m = bf::load_featmat(summary.output);
  CHECK(m.source_tag() == "darknet53-gap:4;alexnet-fc7:8;vgg19-fc7:8");

  cfg.set("featmats", (dir / "vgg19-fc7.featmat").string());
  cfg.set("concat_out", (dir / "single.featmat").string());
  (void)cmd_concat(cfg);
  CHECK(slurp(dir / "single.featmat") == slurp(dir / "vgg19-fc7.featmat"));

  cfg.set("featmats", (dir / "alexnet-fc7.featmat").string() + "," + (dir / "short.featmat").string());
  try {
    (void)cmd_concat(cfg);
    FAIL("expected alignment error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kAlignment);
    CHECK(std::string(e.what()).find("short") != std::string::npos);
  }
}

TEST_CASE("cmd_preprocess") {
  fixtures::TempDir dir("preprocess");
  fs::create_directories(dir / "images/late_blight");
  fs::create_directories(dir / "images/healthy");
  blight::imaging::RasterImage img(20, 10, 3);
  for (std::size_t i = 0; i < img.data().size(); ++i) img.data()[i] = static_cast<std::uint8_t>((i * 37) % 200);
  blight::imaging::write_png(dir / "images/late_blight/a.png", img);
  blight::imaging::write_png(dir / "images/healthy/b.png", img);
  std::ofstream(dir / "images/healthy/broken.png") << "garbage";

  auto cfg = PipelineConfig::parse("size = 16 12\n");
  cfg.set("image_root", (dir / "images").string());
  cfg.set("out", (dir / "out").string());
  std::vector<std::string> messages;
  const auto first = cmd_preprocess(cfg, 2, [&](const std::string& m) { messages.push_back(m); });
  CHECK(first.written == 2);
  CHECK(first.warnings.size() == 1);
  CHECK(first.output_dir.filename() == "preprocessed-" + cfg.hash());
  const auto out_a = first.output_dir / "late_blight/a.png";
  const auto loaded = blight::imaging::read_image(out_a);
  CHECK(loaded.width() == 16);
  CHECK(loaded.height() == 12);
  CHECK(fs::exists(first.output_dir / "manifest.csv"));
  const auto bytes = slurp(out_a);
  (void)cmd_preprocess(cfg, 1);
  CHECK(slurp(out_a) == bytes);

  fs::create_directories(dir / "empty");
  cfg.set("image_root", (dir / "empty").string());
  CHECK(code_of([&] { (void)cmd_preprocess(cfg, 1); }) == ErrorCode::kIo);
  fs::create_directories(dir / "bad/x");
  std::ofstream(dir / "bad/x/c.jpg") << "garbage";
  cfg.set("image_root", (dir / "bad").string());
  CHECK(code_of([&] { (void)cmd_preprocess(cfg, 1); }) == ErrorCode::kIo);
  cfg.set("image_root", (dir / "nope").string());
  CHECK(code_of([&] { (void)cmd_preprocess(cfg, 1); }) == ErrorCode::kConfiguration);
}

TEST_CASE("cmd_select, cmd_run and cmd_report on a small toy set") {
  fixtures::TempDir dir("run");
  const auto ds = fixtures::planted_shift(34, 26, 12, 3, 1.5f, 5);
  const auto path = write_toy_config(dir, ds,
                                     "k = 3, 5\nfolds = 4\nvariants = linear, fine_gaussian, medium_gaussian\n"
                                     "eo.max_iter = 4\neo.population = 6\n");
  const auto cfg = PipelineConfig::load(path);

  const auto sel = cmd_select(cfg, 1);
  REQUIRE(sel.results.size() == 2);
  CHECK(sel.results[0].mask.size() == 3);
  CHECK(fs::exists(sel.run_dir / "k5/mask.csv"));
  CHECK(slurp(sel.run_dir / "k3/mask.csv").find(cfg.hash()) != std::string::npos);

  const auto run = cmd_run(cfg, 2);
  REQUIRE(run.reports.size() == 2);
  CHECK_FALSE(run.any_failed());
  for (const char* k : {"k3", "k5"}) {
    for (const char* f : {"report.txt", "report.csv", "report.json", "mask_fold0.csv", "trace_fold3.csv"}) {
      CHECK_MESSAGE(fs::exists(run.run_dir / k / f), k << "/" << f);
    }
    CHECK(slurp(run.run_dir / k / "report.txt").find(cfg.hash()) != std::string::npos);
  }
  const auto& r = run.reports[1];
  CHECK(r.features == 5);
  CHECK(r.variants.size() == 3);
  for (const auto& v : r.variants) CHECK(v.confusion.total() == 60);

  const auto again = cmd_run(cfg, 1);
  for (std::size_t i = 0; i < 3; ++i) CHECK(again.reports[1].variants[i].confusion == r.variants[i].confusion);

  const auto text = cmd_report(run.run_dir / "k5/report.json", blight::eval::ReportFormat::kText);
  CHECK(text == slurp(run.run_dir / "k5/report.txt"));
  CHECK(code_of([&] { (void)cmd_report(dir / "none.json", blight::eval::ReportFormat::kText); }) == ErrorCode::kIo);

  auto global = cfg;
  global.set("selection_scope", "global");
  global.set("k", "4");
  const auto g = cmd_run(global, 1);
  CHECK(fs::exists(g.run_dir / "k4/mask.csv"));
  CHECK(g.run_dir != run.run_dir);

  auto too_big = cfg;
  too_big.set("k", "150");
  CHECK(code_of([&] { (void)cmd_run(too_big, 1); }) == ErrorCode::kConfiguration);
  auto missing = cfg;
  missing.set("features", "");
  CHECK(code_of([&] { (void)cmd_run(missing, 1); }) == ErrorCode::kConfiguration);
}

TEST_CASE("command-line tool") {
  fixtures::TempDir dir("cli");
  const auto log = dir / "log.txt";
  CHECK(run_cli("--help", log) == 0);
  CHECK(slurp(log).find("preprocess") != std::string::npos);
  for (const char* sub : {"preprocess", "concat", "select", "run", "report"}) {
    CHECK_MESSAGE(run_cli(std::string(sub) + " --help", log) == 0, sub);
    CHECK(slurp(log).find("--") != std::string::npos);
  }
  CHECK(run_cli("", log) != 0);
  CHECK(run_cli("run", log) != 0);

  const auto ds = fixtures::planted_shift(20, 20, 10, 2, 2.0f, 3);
  const auto cfg = write_toy_config(dir, ds, "k = 150\nfolds = 4\nvariants = linear\neo.max_iter = 2\n");
  CHECK(run_cli("run --config '" + cfg.string() + "'", log) != 0);
  CHECK(slurp(log).find("exceeds") != std::string::npos);
  CHECK_FALSE(fs::exists(dir / "out"));

  std::ofstream(cfg, std::ios::app) << "k = 2\n";
  CHECK(run_cli("run --config '" + cfg.string() + "' --threads 2 --seed 7 --out '" + (dir / "o2").string() + "'",
                log) == 0);
  auto expected = PipelineConfig::load(cfg);
  expected.set("seed", "7");
  CHECK(fs::exists(dir / "o2" / ("run-" + expected.hash()) / "k2/report.json"));

  CHECK(run_cli("report --input '" + (dir / "o2" / ("run-" + expected.hash()) / "k2/report.json").string() +
                    "' --format csv",
                log) == 0);
  CHECK(slurp(log).rfind("# config_hash=" + expected.hash(), 0) == 0);

  // The published tables contain one row whose printed specificity its counts do not give.
  CHECK(run_cli("report --published", log) == 1);
  CHECK(slurp(log).find("MISMATCH") != std::string::npos);
}
