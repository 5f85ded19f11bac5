#include "drs/cli/commands.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <fstream>
#include <mutex>
#include <ostream>
#include <thread>

#include "drs/cli/render.hpp"
#include "drs/image_io.hpp"
#include "drs/wire.hpp"

namespace drs::cli {
namespace fs = std::filesystem;

std::shared_ptr<ValidatingClassifier> open_classifier(const ClassifierEndpoint& endpoint) {
  const OutOfRangePolicy policy = endpoint.clamp_scores ? OutOfRangePolicy::clamp : OutOfRangePolicy::reject;
  if (!endpoint.command.empty() && !endpoint.synthetic.empty()) {
    throw ConfigError("give either a classifier command or a synthetic classifier, not both");
  }
  if (!endpoint.command.empty()) {
    return std::make_shared<ValidatingClassifier>(
        std::make_shared<SubprocessClassifier>(endpoint.command, endpoint.timeout), policy);
  }
  if (!endpoint.synthetic.empty()) {
    return std::make_shared<ValidatingClassifier>(make_synthetic_classifier(parse_synthetic_spec(endpoint.synthetic)),
                                                  policy);
  }
  throw ConfigError("no classifier configured (use --classifier-cmd or --synthetic)");
}

namespace {

// Runs fn(i) for i in [0, n) on up to `workers` threads. The exception of the
// lowest failing index is rethrown.
template <typename Fn>
void parallel_for(std::size_t n, int workers, Fn&& fn) {
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::mutex error_mutex;
  std::exception_ptr error;
  std::size_t error_index = n;
  auto work = [&] {
    for (std::size_t i = next++; i < n && !failed; i = next++) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (i < error_index) {
          error_index = i;
          error = std::current_exception();
        }
        failed = true;
      }
    }
  };
  const int threads = static_cast<int>(std::min<std::size_t>(std::max(workers, 1), std::max<std::size_t>(n, 1)));
  if (threads <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(work);
  }
  if (error) std::rethrow_exception(error);
}

struct Loaded {
  GrayImage image;
  BinaryMask lesion;
};

Loaded load_entry(const ManifestEntry& entry) {
  Loaded out{load_image(entry.image), load_lesion(entry)};
  if (!same_shape(out.image, out.lesion)) {
    throw DimensionError("entry " + entry.id + ": image and mask sizes differ");
  }
  return out;
}

void write_config_echo(const RunConfig& config) {
  std::string text = config.config_echo;
  text += "# effective pipeline configuration\n# " + to_json(config.reliability).dump() + "\n";
  write_text_atomically(config.output_dir / "config.echo", text);
}

std::string ndjson(const std::vector<nlohmann::json>& lines) {
  std::string text;
  for (const auto& j : lines) text += j.dump() + "\n";
  return text;
}

int split_workers(int workers, std::size_t samples, int* inner) {
  const int outer = static_cast<int>(std::clamp<std::size_t>(samples, 1, std::max(workers, 1)));
  *inner = std::max(1, workers / outer);
  return outer;
}

}  // namespace

IngestResult cmd_ingest(const fs::path& root, const fs::path& manifest_out, std::ostream& log) {
  IngestResult result = ingest_busi(root);
  for (const std::string& w : result.warnings) log << "warning: " << w << "\n";
  for (const std::string& s : result.skipped) log << "skipped: " << s << "\n";
  save_manifest(manifest_out, result.entries);
  log << "ingested " << result.entries.size() << " entries into " << manifest_out.string() << "\n";
  return result;
}

void cmd_attribute(const RunConfig& config, const std::vector<ManifestEntry>& entries, std::ostream& log) {
  config.reliability.validate();
  auto classifier = open_classifier(config.classifier);
  write_config_echo(config);
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const ManifestEntry& entry = entries[i];
    const Loaded in = load_entry(entry);
    SamplingConfig sampling = config.reliability.sampling;
    sampling.target_class = classifier->classify(in.image).argmax();
    sampling.seed = derive_seed(config.seed, i);
    sampling.workers = std::max(1, config.workers);
    const AttributionResult result = attribute(in.image, *classifier, sampling);
    const AttributionMap normalized = normalize_minmax(result.map);
    const std::string stem = file_stem_for(entry.id);
    save_attribution(config.output_dir / "maps" / (stem + ".attr"), result.map);
    save_attribution_png(config.output_dir / "maps" / (stem + ".png"), result.map);
    save_rgb(config.output_dir / "overlays" / (stem + ".png"), render_overlay(in.image, normalized, config.overlay_alpha));
    if (config.dump_superpixels) {
      std::vector<std::uint16_t> labels(static_cast<std::size_t>(result.units.labels().size()));
      for (std::size_t k = 0; k < labels.size(); ++k) {
        labels[k] = static_cast<std::uint16_t>(result.units.labels().data()[k]);
      }
      save_label_map16(config.output_dir / "superpixels" / (stem + "_labels.png"), result.units.width(),
                       result.units.height(), labels);
      save_rgb(config.output_dir / "superpixels" / (stem + "_boundaries.png"),
               boundary_overlay(in.image, result.units));
    }
    log << entry.id << ": class " << sampling.target_class << ", " << result.units.region_count() << " units, "
        << result.samples.size() << " samples\n";
  }
}

ClassificationSummary cmd_score(const RunConfig& config, const std::vector<ManifestEntry>& entries, std::ostream& log) {
  config.reliability.validate();
  if (entries.empty()) throw DataError("manifest is empty");
  auto classifier = open_classifier(config.classifier);
  write_config_echo(config);

  int inner = 1;
  const int outer = split_workers(config.workers, entries.size(), &inner);
  ReliabilityConfig reliability = config.reliability;
  reliability.sampling.workers = inner;

  std::vector<ReliabilityReport> reports(entries.size());
  parallel_for(entries.size(), outer, [&](std::size_t i) {
    const ManifestEntry& entry = entries[i];
    const Loaded in = load_entry(entry);
    if (entry.label >= classifier->handshake().class_count) {
      throw DataError("entry " + entry.id + ": label outside the classifier's class range");
    }
    SampleEvaluation eval =
        evaluate_sample(in.image, in.lesion, entry.label, *classifier, reliability, entry.id, derive_seed(config.seed, i));
    if (config.dump_masks) {
      const std::string stem = file_stem_for(entry.id);
      save_mask(config.output_dir / "masks" / (stem + "_saliency.png"), eval.irs.saliency);
      save_mask(config.output_dir / "masks" / (stem + "_proto.png"), eval.irs.proto);
    }
    reports[i] = std::move(eval.report);
  });

  std::vector<nlohmann::json> lines;
  for (const ReliabilityReport& r : reports) lines.push_back(to_json(r));
  write_text_atomically(config.output_dir / "reports.ndjson", ndjson(lines));

  ClassificationSummary summary = summarize_reports(reports);
  for (const std::string& w : summary.warnings) log << "warning: " << w << "\n";
  if (classifier->clamped_count() > 0) {
    log << "warning: clamped " << classifier->clamped_count() << " out-of-range classifier scores\n";
  }
  write_text_atomically(config.output_dir / "summary.json", to_json(summary).dump(2) + "\n");
  log << "scored " << reports.size() << " samples: accuracy " << summary.accuracy << ", recall " << summary.recall
      << ", F1 " << summary.f1 << ", mDRS " << summary.mdrs << "\n";
  return summary;
}

void cmd_prs(const RunConfig& config, const std::vector<ManifestEntry>& entries, std::ostream& log) {
  config.reliability.validate();
  auto classifier = open_classifier(config.classifier);
  write_config_echo(config);
  std::vector<nlohmann::json> lines(entries.size());
  parallel_for(entries.size(), config.workers, [&](std::size_t i) {
    const GrayImage image = load_image(entries[i].image);
    const PrsBreakdown prs = predictive_reliability(image, *classifier, config.reliability.augmentations,
                                                    config.reliability.prs_entropy_as_score);
    lines[i] = {{"id", entries[i].id},
                {"predicted", classifier->classify(image).argmax()},
                {"votes", prs.votes},
                {"proportions", prs.proportions},
                {"entropy", prs.entropy},
                {"prs", prs.prs}};
  });
  write_text_atomically(config.output_dir / "prs.ndjson", ndjson(lines));
  log << "wrote PRS for " << lines.size() << " samples\n";
}

void cmd_irs(const RunConfig& config, const std::vector<ManifestEntry>& entries, std::ostream& log) {
  config.reliability.validate();
  auto classifier = open_classifier(config.classifier);
  write_config_echo(config);
  int inner = 1;
  const int outer = split_workers(config.workers, entries.size(), &inner);
  std::vector<nlohmann::json> lines(entries.size());
  parallel_for(entries.size(), outer, [&](std::size_t i) {
    const Loaded in = load_entry(entries[i]);
    SamplingConfig sampling = config.reliability.sampling;
    sampling.target_class = classifier->classify(in.image).argmax();
    sampling.seed = derive_seed(config.seed, i);
    sampling.workers = inner;
    const AttributionResult attribution = attribute(in.image, *classifier, sampling);
    const IrsBreakdown irs = inference_reliability(normalize_minmax(attribution.map), in.lesion,
                                                   config.reliability.proto, config.reliability.saliency);
    const IrsSummary s = summarize(irs);
    const RationaleMetrics m = shared_interest(in.lesion, irs.saliency);
    lines[i] = {{"id", entries[i].id},
                {"predicted", sampling.target_class},
                {"irs", s.irs},
                {"branch", s.branch == IrsBranch::overlap ? "overlap" : "no_overlap"},
                {"I", s.intersection},
                {"I_pro", s.proto_intersection},
                {"energy_ratio", s.energy_ratio},
                {"category", std::string(to_string(classify_rationale(m, config.reliability.thresholds)))},
                {"doctor_trusted", doctor_trusted(irs.saliency, in.lesion, irs.proto)}};
  });
  write_text_atomically(config.output_dir / "irs.ndjson", ndjson(lines));
  log << "wrote IRS for " << lines.size() << " samples\n";
}

std::vector<ReliabilityReport> load_reports(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open reports file " + path.string());
  std::vector<ReliabilityReport> reports;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      reports.push_back(report_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw DataError(path.string() + ": " + e.what());
    }
  }
  return reports;
}

nlohmann::json to_json(const CalibrationResult& result) {
  nlohmann::json bins = nlohmann::json::array();
  for (const CalibrationBin& b : result.bins) {
    bins.push_back({{"begin", b.begin},
                    {"end", b.end},
                    {"count", b.count()},
                    {"mean_score", b.mean_score},
                    {"accuracy", b.accuracy}});
  }
  return {{"n", result.sample_count}, {"bin_count", result.bin_count()}, {"ece", result.ece}, {"bins", bins}};
}

nlohmann::json cmd_calibrate(const fs::path& reports_path, const fs::path& output_dir, bool write_diagram,
                             std::ostream& log) {
  const std::vector<ReliabilityReport> reports = load_reports(reports_path);
  if (reports.size() < 2) throw DataError("calibration needs at least two reports");
  const std::pair<const char*, double ReliabilityReport::*> channels[] = {
      {"confidence", &ReliabilityReport::confidence},
      {"prs", &ReliabilityReport::prs},
      {"drs", &ReliabilityReport::drs},
  };
  nlohmann::json out = nlohmann::json::object();
  std::string diagram = "channel,bin,count,mean_score,accuracy\n";
  for (const auto& [name, field] : channels) {
    std::vector<ScoredOutcome> outcomes;
    outcomes.reserve(reports.size());
    for (const ReliabilityReport& r : reports) outcomes.push_back({r.*field, r.correct});
    const CalibrationResult result = adaptive_ece(outcomes);
    out[name] = to_json(result);
    for (std::size_t b = 0; b < result.bins.size(); ++b) {
      const CalibrationBin& bin = result.bins[b];
      diagram += std::string(name) + "," + std::to_string(b) + "," + std::to_string(bin.count()) + "," +
                 nlohmann::json(bin.mean_score).dump() + "," + nlohmann::json(bin.accuracy).dump() + "\n";
    }
    log << name << ": ECE " << result.ece << " over " << result.bin_count() << " bins\n";
  }
  write_text_atomically(output_dir / "calib.json", out.dump(2) + "\n");
  if (write_diagram) write_text_atomically(output_dir / "reliability_diagram.csv", diagram);
  return out;
}

void cmd_render(const fs::path& image_path, const fs::path& attribution, const fs::path& output, double alpha) {
  const GrayImage image = load_image(image_path);
  const AttributionMap map = load_attribution(attribution);
  save_rgb(output, render_overlay(image, normalize_minmax(map), alpha));
}

}  // namespace drs::cli
