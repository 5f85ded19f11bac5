#ifndef DRS_CLI_COMMANDS_HPP
#define DRS_CLI_COMMANDS_HPP

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "drs/calibration.hpp"
#include "drs/classifier.hpp"
#include "drs/cli/manifest.hpp"
#include "drs/cli/metrics.hpp"
#include "drs/reliability.hpp"

namespace drs::cli {

// Either an external model server command or a builtin synthetic spec.
struct ClassifierEndpoint {
  std::string command;
  std::string synthetic;
  std::chrono::milliseconds timeout{30000};
  bool clamp_scores = false;
};

struct RunConfig {
  ReliabilityConfig reliability;
  ClassifierEndpoint classifier;
  std::filesystem::path output_dir = "run";
  std::uint64_t seed = 0;
  int workers = 1;
  double overlay_alpha = 0.5;
  bool dump_masks = false;        // S_m and M_pro PNGs per sample
  bool dump_superpixels = false;  // label maps and boundary overlays
  std::string config_echo;        // effective settings, written verbatim
};

std::shared_ptr<ValidatingClassifier> open_classifier(const ClassifierEndpoint& endpoint);

// Writes the manifest and returns what was ingested. Skips and warnings go to `log`.
IngestResult cmd_ingest(const std::filesystem::path& root, const std::filesystem::path& manifest_out, std::ostream& log);

// maps/<id>.attr, maps/<id>.png and overlays/<id>.png per entry.
void cmd_attribute(const RunConfig& config, const std::vector<ManifestEntry>& entries, std::ostream& log);

// reports.ndjson (manifest order) and summary.json.
ClassificationSummary cmd_score(const RunConfig& config, const std::vector<ManifestEntry>& entries, std::ostream& log);

// prs.ndjson: TTA votes and PRS only.
void cmd_prs(const RunConfig& config, const std::vector<ManifestEntry>& entries, std::ostream& log);

// irs.ndjson: attribution-based inference reliability only.
void cmd_irs(const RunConfig& config, const std::vector<ManifestEntry>& entries, std::ostream& log);

std::vector<ReliabilityReport> load_reports(const std::filesystem::path& path);

// Adaptive ECE per score channel (confidence, prs, drs) into calib.json, and
// optionally reliability_diagram.csv.
nlohmann::json cmd_calibrate(const std::filesystem::path& reports, const std::filesystem::path& output_dir,
                             bool write_diagram, std::ostream& log);

nlohmann::json to_json(const CalibrationResult& result);

void cmd_render(const std::filesystem::path& image, const std::filesystem::path& attribution,
                const std::filesystem::path& output, double alpha);

}  // namespace drs::cli

#endif  // DRS_CLI_COMMANDS_HPP
