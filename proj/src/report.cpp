#include <cstdio>
#include <sstream>

#include "blight/error.hpp"
#include "blight/eval.hpp"
#include "json.hpp"

namespace blight::eval {

namespace {

using json = nlohmann::ordered_json;

std::string fixed(double value, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, round_half_away(value, decimals));
  return buf;
}

std::string pad_left(const std::string& s, std::size_t width) {
  return s.size() >= width ? s : std::string(width - s.size(), ' ') + s;
}

std::string pad_right(const std::string& s, std::size_t width) {
  return s.size() >= width ? s : s + std::string(width - s.size(), ' ');
}

json confusion_json(const ConfusionMatrix& cm) {
  return json{{"tp", cm.tp}, {"fn", cm.fn}, {"fp", cm.fp}, {"tn", cm.tn}};
}

ConfusionMatrix confusion_from(const json& j) {
  return {j.at("tp").get<std::uint64_t>(), j.at("fn").get<std::uint64_t>(),
          j.at("fp").get<std::uint64_t>(), j.at("tn").get<std::uint64_t>()};
}

std::string render_text(const EvalReport& r) {
  std::ostringstream out;
  out << "# " << (r.title.empty() ? std::string("Evaluation report") : r.title) << '\n';
  out << "# config_hash=" << r.config_hash << " samples=" << r.dataset_size << " folds=" << r.folds
      << '\n';
  out << '\n';

  constexpr std::size_t kName = 22;
  out << pad_right("Classifier", kName) << pad_left("Features", 9) << pad_left("Accuracy", 10)
      << pad_left("Sensitivity", 13) << pad_left("Specificity", 13) << '\n';
  for (const auto& v : r.variants) {
    out << pad_right(v.name, kName) << pad_left(std::to_string(v.features), 9);
    if (v.failed) {
      out << pad_left("FAILED", 10) << "  " << v.error << '\n';
      continue;
    }
    out << pad_left(fixed(v.metrics.accuracy, 1), 10)
        << pad_left(fixed(v.metrics.sensitivity_reported, 2), 13)
        << pad_left(fixed(v.metrics.specificity_reported, 2), 13) << '\n';
  }
  if (r.variants.empty()) return out.str();

  out << '\n';
  out << pad_right("Classifier", kName) << pad_left("Precision", 11) << pad_left("Recall", 9)
      << pad_left("F1", 9) << pad_left("Train time (s)", 16) << pad_left("Pred speed (obs/s)", 20)
      << '\n';
  for (const auto& v : r.variants) {
    if (v.failed) continue;
    out << pad_right(v.name, kName) << pad_left(fixed(v.metrics.precision, 2), 11)
        << pad_left(fixed(v.metrics.recall, 2), 9) << pad_left(fixed(v.metrics.f1, 2), 9)
        << pad_left(fixed(v.training_time, 4), 16) << pad_left(fixed(v.prediction_speed, 0), 20)
        << '\n';
  }

  out << "\nConfusion matrices (rows: true class, columns: predicted class)\n";
  for (const auto& v : r.variants) {
    if (v.failed) continue;
    const auto& cm = v.confusion;
    out << '\n' << v.short_name << " (" << v.name << ")\n";
    out << pad_right("", kName) << pad_left("Potato Late Blight", 20) << pad_left("Potato Healthy", 16)
        << '\n';
    out << pad_right("Potato Late Blight", kName) << pad_left(std::to_string(cm.tp), 20)
        << pad_left(std::to_string(cm.fn), 16) << '\n';
    out << pad_right("Potato Healthy", kName) << pad_left(std::to_string(cm.fp), 20)
        << pad_left(std::to_string(cm.tn), 16) << '\n';
  }
  return out.str();
}

std::string render_csv(const EvalReport& r) {
  std::ostringstream out;
  out << "# config_hash=" << r.config_hash << '\n';
  out << "classifier,key,features,accuracy,sensitivity_reported,specificity_reported,precision,"
         "recall,f1,tp,fn,fp,tn,training_time_s,prediction_speed_obs_per_s,failed\n";
  for (const auto& v : r.variants) {
    const auto& m = v.metrics;
    const auto& cm = v.confusion;
    out << v.name << ',' << v.key << ',' << v.features << ',' << fixed(m.accuracy, 4) << ','
        << fixed(m.sensitivity_reported, 4) << ',' << fixed(m.specificity_reported, 4) << ','
        << fixed(m.precision, 4) << ',' << fixed(m.recall, 4) << ',' << fixed(m.f1, 4) << ','
        << cm.tp << ',' << cm.fn << ',' << cm.fp << ',' << cm.tn << ',' << fixed(v.training_time, 6)
        << ',' << fixed(v.prediction_speed, 2) << ',' << (v.failed ? 1 : 0) << '\n';
  }
  return out.str();
}

std::string render_json(const EvalReport& r) {
  json variants = json::array();
  for (const auto& v : r.variants) {
    json folds = json::array();
    for (const auto& f : v.folds) {
      folds.push_back({{"fold", f.fold},
                       {"features", f.features},
                       {"confusion", confusion_json(f.confusion)},
                       {"train_seconds", f.train_seconds},
                       {"predict_seconds", f.predict_seconds},
                       {"predictions", f.predictions}});
    }
    const auto& m = v.metrics;
    variants.push_back({{"key", v.key},
                        {"name", v.name},
                        {"short_name", v.short_name},
                        {"features", v.features},
                        {"failed", v.failed},
                        {"error", v.error},
                        {"confusion", confusion_json(v.confusion)},
                        {"metrics",
                         {{"accuracy", m.accuracy},
                          {"sensitivity_reported", m.sensitivity_reported},
                          {"specificity_reported", m.specificity_reported},
                          {"precision", m.precision},
                          {"recall", m.recall},
                          {"f1", m.f1},
                          {"sensitivity_defined", m.sensitivity_defined},
                          {"specificity_defined", m.specificity_defined},
                          {"precision_defined", m.precision_defined},
                          {"recall_defined", m.recall_defined},
                          {"f1_defined", m.f1_defined}}},
                        {"training_time_s", v.training_time},
                        {"prediction_speed_obs_per_s", v.prediction_speed},
                        {"folds", folds}});
  }
  json config = json::object();
  for (const auto& [key, value] : r.config) config[key] = value;
  json doc{{"title", r.title},
           {"config_hash", r.config_hash},
           {"features", r.features},
           {"dataset_size", r.dataset_size},
           {"folds", r.folds},
           {"config", config},
           {"variants", variants}};
  return doc.dump(2) + "\n";
}

}  // namespace

std::string render_report(const EvalReport& report, ReportFormat format) {
  switch (format) {
    case ReportFormat::kText: return render_text(report);
    case ReportFormat::kCsv: return render_csv(report);
    case ReportFormat::kJson: return render_json(report);
  }
  return {};
}

EvalReport parse_report_json(const std::string& text) {
  try {
    const json doc = json::parse(text);
    EvalReport r;
    r.title = doc.at("title").get<std::string>();
    r.config_hash = doc.at("config_hash").get<std::string>();
    r.features = doc.at("features").get<std::size_t>();
    r.dataset_size = doc.at("dataset_size").get<std::size_t>();
    r.folds = doc.at("folds").get<int>();
    for (const auto& [key, value] : doc.at("config").items()) r.config[key] = value.get<std::string>();
    for (const auto& jv : doc.at("variants")) {
      VariantReport v;
      v.key = jv.at("key").get<std::string>();
      v.name = jv.at("name").get<std::string>();
      v.short_name = jv.at("short_name").get<std::string>();
      v.features = jv.at("features").get<std::size_t>();
      v.failed = jv.at("failed").get<bool>();
      v.error = jv.at("error").get<std::string>();
      v.confusion = confusion_from(jv.at("confusion"));
      const auto& jm = jv.at("metrics");
      v.metrics.accuracy = jm.at("accuracy").get<double>();
      v.metrics.sensitivity_reported = jm.at("sensitivity_reported").get<double>();
      v.metrics.specificity_reported = jm.at("specificity_reported").get<double>();
      v.metrics.precision = jm.at("precision").get<double>();
      v.metrics.recall = jm.at("recall").get<double>();
      v.metrics.f1 = jm.at("f1").get<double>();
      v.metrics.sensitivity_defined = jm.at("sensitivity_defined").get<bool>();
      v.metrics.specificity_defined = jm.at("specificity_defined").get<bool>();
      v.metrics.precision_defined = jm.at("precision_defined").get<bool>();
      v.metrics.recall_defined = jm.at("recall_defined").get<bool>();
      v.metrics.f1_defined = jm.at("f1_defined").get<bool>();
      v.training_time = jv.at("training_time_s").get<double>();
      v.prediction_speed = jv.at("prediction_speed_obs_per_s").get<double>();
      for (const auto& jf : jv.at("folds")) {
        FoldResult f;
        f.fold = jf.at("fold").get<int>();
        f.features = jf.at("features").get<std::size_t>();
        f.confusion = confusion_from(jf.at("confusion"));
        f.train_seconds = jf.at("train_seconds").get<double>();
        f.predict_seconds = jf.at("predict_seconds").get<double>();
        f.predictions = jf.at("predictions").get<std::size_t>();
        v.folds.push_back(f);
      }
      r.variants.push_back(std::move(v));
    }
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kFormat, std::string("malformed report JSON: ") + e.what());
  }
}

}  // namespace blight::eval
