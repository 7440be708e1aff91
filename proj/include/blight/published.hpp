#pragma once

#include <span>
#include <string>
#include <vector>

#include "blight/eval.hpp"

namespace blight::eval {

/// One classifier row of the published late-blight experiments together with
/// the confusion matrix printed for it.
struct PublishedRow {
  int table = 0;  // 1, 2, 3 for the 150/250/550-feature setups
  int features = 0;
  const char* classifier = "";
  double accuracy = 0.0;
  double sensitivity = 0.0;
  double specificity = 0.0;
  ConfusionMatrix confusion;
};

/// All 18 published rows, table by table in classifier order.
std::span<const PublishedRow> published_rows();

struct AuditRow {
  PublishedRow row;
  /// Printed counts sum to the class totals (1000 late blight, 760 healthy).
  bool counts_consistent = false;
  MetricSet computed;
  double accuracy_delta = 0.0;
  double sensitivity_delta = 0.0;
  double specificity_delta = 0.0;
  /// All three deltas within the tolerance.
  bool reproduces = false;
};

std::vector<AuditRow> audit_published(double tolerance = 0.05, std::uint64_t positives = 1000,
                                      std::uint64_t negatives = 760);

std::string render_audit(std::span<const AuditRow> rows);

}  // namespace blight::eval
