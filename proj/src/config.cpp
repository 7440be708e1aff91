#include "blight/config.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "blight/error.hpp"

namespace blight::pipeline {

namespace {

std::string trim(const std::string& s) {
  const auto first = std::find_if_not(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); });
  const auto last = std::find_if_not(s.rbegin(), s.rend(), [](unsigned char c) { return std::isspace(c); }).base();
  return first < last ? std::string(first, last) : std::string();
}

}  // namespace

const std::map<std::string, std::string>& default_settings() {
  static const std::map<std::string, std::string> defaults = {
      {"image_root", ""},
      {"preprocess_out", ""},
      {"size", "300 300"},
      {"equalize", "on"},
      {"featmats", ""},
      {"concat_out", ""},
      {"features", ""},
      {"labels", ""},
      {"out", "out"},
      {"k", "150, 250, 550"},
      {"variants", "linear, quadratic, cubic, fine_gaussian, medium_gaussian, coarse_gaussian"},
      {"folds", "5"},
      {"seed", "1"},
      {"standardize", "on"},
      {"selection_scope", "per_fold"},
      {"svm.box_constraint", "1"},
      {"svm.tol", "0.001"},
      {"svm.max_passes", "200"},
      {"svm.cache_rows", "2048"},
      {"eo.population", "10"},
      {"eo.max_iter", "30"},
      {"eo.a1", "2"},
      {"eo.a2", "1"},
      {"eo.gp", "0.5"},
      {"eo.penalty_weight", "0.99"},
      {"eo.fitness_folds", "3"},
      {"eo.fitness_kernel", "linear"},
      {"threads", "0"},
  };
  return defaults;
}

PipelineConfig::PipelineConfig() : values_(default_settings()), base_dir_(".") {}

PipelineConfig PipelineConfig::parse(const std::string& text, const std::string& origin) {
  PipelineConfig cfg;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string stripped = trim(line);
    if (stripped.empty() || stripped[0] == '#') continue;
    const auto eq = stripped.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::kConfiguration,
                  origin + ":" + std::to_string(line_no) + ": expected 'key = value'");
    }
    try {
      cfg.set(trim(stripped.substr(0, eq)), trim(stripped.substr(eq + 1)));
    } catch (const Error& e) {
      throw Error(ErrorCode::kConfiguration, origin + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return cfg;
}

PipelineConfig PipelineConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open config " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  PipelineConfig cfg = parse(text.str(), path.string());
  cfg.base_dir_ = path.has_parent_path() ? path.parent_path() : std::filesystem::path(".");
  return cfg;
}

void PipelineConfig::set(const std::string& key, const std::string& value) {
  auto it = values_.find(key);
  if (it == values_.end()) throw Error(ErrorCode::kConfiguration, "unknown config key '" + key + "'");
  it->second = value;
  explicit_[key] = true;
}

const std::string& PipelineConfig::get(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw Error(ErrorCode::kConfiguration, "unknown config key '" + key + "'");
  return it->second;
}

bool PipelineConfig::is_set(const std::string& key) const {
  return explicit_.contains(key) || !get(key).empty();
}

long long PipelineConfig::get_int(const std::string& key) const {
  const std::string& v = get(key);
  try {
    std::size_t used = 0;
    const long long out = std::stoll(v, &used);
    if (used == v.size()) return out;
  } catch (const std::exception&) {
  }
  throw Error(ErrorCode::kConfiguration, key + ": expected an integer, got '" + v + "'");
}

double PipelineConfig::get_double(const std::string& key) const {
  const std::string& v = get(key);
  try {
    std::size_t used = 0;
    const double out = std::stod(v, &used);
    if (used == v.size()) return out;
  } catch (const std::exception&) {
  }
  throw Error(ErrorCode::kConfiguration, key + ": expected a number, got '" + v + "'");
}

bool PipelineConfig::get_bool(const std::string& key) const {
  const std::string& v = get(key);
  if (v == "on" || v == "true" || v == "1" || v == "yes") return true;
  if (v == "off" || v == "false" || v == "0" || v == "no") return false;
  throw Error(ErrorCode::kConfiguration, key + ": expected on/off, got '" + v + "'");
}

std::vector<std::string> PipelineConfig::get_list(const std::string& key) const {
  std::vector<std::string> out;
  std::istringstream in(get(key));
  std::string item;
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::filesystem::path PipelineConfig::get_path(const std::string& key) const {
  std::filesystem::path p = get(key);
  if (p.empty() || p.is_absolute()) return p;
  return base_dir_ / p;
}

std::string PipelineConfig::hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& [key, value] : values_) {
    if (key == "threads" || key == "out") continue;
    const std::string line = key + "=" + value + "\n";
    for (unsigned char c : line) {
      h ^= c;
      h *= 0x100000001b3ULL;
    }
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace blight::pipeline
