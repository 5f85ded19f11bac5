#include "drs/cli/metrics.hpp"

namespace drs::cli {

ClassificationSummary summarize_reports(std::span<const ReliabilityReport> reports, int positive_class) {
  ClassificationSummary s;
  s.samples = reports.size();
  if (reports.empty()) throw DataError("no reports to summarize");
  std::size_t correct = 0;
  for (const ReliabilityReport& r : reports) {
    const bool predicted_pos = r.predicted == positive_class;
    const bool actual_pos = r.label == positive_class;
    if (predicted_pos && actual_pos) ++s.tp;
    if (predicted_pos && !actual_pos) ++s.fp;
    if (!predicted_pos && actual_pos) ++s.fn;
    if (!predicted_pos && !actual_pos) ++s.tn;
    if (r.predicted == r.label) ++correct;
  }
  s.accuracy = static_cast<double>(correct) / static_cast<double>(s.samples);
  if (s.tp + s.fp == 0) {
    s.precision = s.fn == 0 ? 1.0 : 0.0;
    s.warnings.push_back("no positive predictions; precision set to " + std::to_string(static_cast<int>(s.precision)));
  } else {
    s.precision = static_cast<double>(s.tp) / static_cast<double>(s.tp + s.fp);
  }
  if (s.tp + s.fn == 0) {
    s.recall = s.fp == 0 ? 1.0 : 0.0;
    s.warnings.push_back("no positive labels; recall set to " + std::to_string(static_cast<int>(s.recall)));
  } else {
    s.recall = static_cast<double>(s.tp) / static_cast<double>(s.tp + s.fn);
  }
  s.f1 = s.precision + s.recall > 0.0 ? 2.0 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
  s.mdrs = mean_drs(reports);
  return s;
}

nlohmann::json to_json(const ClassificationSummary& s) {
  return {{"samples", s.samples},     {"tp", s.tp},       {"fp", s.fp},         {"fn", s.fn},
          {"tn", s.tn},               {"accuracy", s.accuracy}, {"precision", s.precision},
          {"recall", s.recall},       {"f1", s.f1},       {"mdrs", s.mdrs},     {"warnings", s.warnings}};
}

}  // namespace drs::cli
