#ifndef DRS_CLI_METRICS_HPP
#define DRS_CLI_METRICS_HPP

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "drs/reliability.hpp"

namespace drs::cli {

// Binary confusion summary with malignant (class 1) as the positive class.
struct ClassificationSummary {
  std::size_t samples = 0;
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::size_t tn = 0;
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double mdrs = 0.0;
  std::vector<std::string> warnings;
};

// Precision or recall with an empty denominator is 1 when the other error
// count is also zero (nothing to find, nothing falsely found) and 0
// otherwise; each such case adds a warning.
ClassificationSummary summarize_reports(std::span<const ReliabilityReport> reports, int positive_class = 1);

nlohmann::json to_json(const ClassificationSummary& summary);

}  // namespace drs::cli

#endif  // DRS_CLI_METRICS_HPP
