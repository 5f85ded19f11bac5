#ifndef DRS_RELIABILITY_HPP
#define DRS_RELIABILITY_HPP

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "drs/attribution.hpp"
#include "drs/classifier.hpp"
#include "drs/rationale.hpp"
#include "drs/tta.hpp"

namespace drs {

struct FusionConfig {
  double mu = 0.5;

  void validate() const;
};

// DRS = mu * IRS + (1 - mu) * PRS.
double fuse(double irs, double prs, const FusionConfig& config);

// Everything a per-sample evaluation depends on.
struct ReliabilityConfig {
  SamplingConfig sampling;  // target_class is replaced by the predicted class
  ProtoRegionConfig proto;
  SaliencyConfig saliency;
  RationaleThresholds thresholds;
  AugmentationSpec augmentations = default_augmentations();
  bool prs_entropy_as_score = false;
  FusionConfig fusion;

  void validate() const;
};

nlohmann::json to_json(const ReliabilityConfig& config);
ReliabilityConfig reliability_config_from_json(const nlohmann::json& j);

// Scalar part of the IRS computation, as stored in reports.
struct IrsSummary {
  double irs = 0.0;
  IrsBranch branch = IrsBranch::no_overlap;
  std::int64_t intersection = 0;
  std::int64_t proto_intersection = 0;
  std::int64_t saliency_count = 0;
  std::int64_t proto_count = 0;
  double energy_ratio = 0.0;
  int shift_h = 0;

  friend bool operator==(const IrsSummary&, const IrsSummary&) = default;
};

IrsSummary summarize(const IrsBreakdown& breakdown);

struct ReliabilityReport {
  std::string id;
  int label = 0;
  int predicted = 0;
  bool correct = false;
  std::vector<double> scores;
  double confidence = 0.0;  // score of the predicted class
  IrsSummary irs;
  std::vector<int> votes;
  std::vector<double> vote_proportions;
  double entropy = 0.0;
  double prs = 0.0;
  double mu = 0.5;
  double drs = 0.0;
  RationaleMetrics rationale;
  RationaleCategory category = RationaleCategory::Distractor;
  bool doctor_trusted = false;
  std::uint64_t seed = 0;
  nlohmann::json config;  // fingerprint of every parameter

  friend bool operator==(const ReliabilityReport& a, const ReliabilityReport& b);
};

nlohmann::json to_json(const ReliabilityReport& report);
ReliabilityReport report_from_json(const nlohmann::json& j);

struct SampleEvaluation {
  ReliabilityReport report;
  AttributionResult attribution;
  AttributionMap normalized;
  IrsBreakdown irs;
};

// classify -> attribute -> normalize -> IRS, TTA -> PRS, then fuse.
// Failures are rethrown with the failing stage named.
SampleEvaluation evaluate_sample(const GrayImage& image, const BinaryMask& lesion, int label, Classifier& classifier,
                                 const ReliabilityConfig& config, const std::string& id = {}, std::uint64_t seed = 0);

// Arithmetic mean of drs; throws on an empty set.
double mean_drs(std::span<const ReliabilityReport> reports);

// Per-sample seed from the run seed and the sample's manifest position.
std::uint64_t derive_seed(std::uint64_t run_seed, std::uint64_t index);

}  // namespace drs

#endif  // DRS_RELIABILITY_HPP
