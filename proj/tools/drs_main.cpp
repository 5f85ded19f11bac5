// drs: command-line front end for attribution, reliability scoring and
// calibration of black-box ultrasound classifiers.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "drs/cli/commands.hpp"
#include "drs/error.hpp"

namespace fs = std::filesystem;
using namespace drs;

namespace {

enum ExitCode { kOk = 0, kConfigError = 1, kDataError = 2, kClassifierError = 3 };

struct Options {
  // sampling
  int samples = 4000;
  double inclusion_prob = 0.5;
  std::string mode = "superpixel";
  int cell_size = 0;
  double slic_area = 30.0;
  int slic_iterations = 10;
  double compactness = 10.0;  // on the 0-255 intensity scale
  int batch_size = 32;
  // rationale
  double k = 1.21;
  std::optional<int> h;
  std::string growth = "centroid";
  std::string saliency_mode = "proto";
  double saliency_fraction = 0.1;
  bool remap_irs = false;
  // tta / fusion
  std::string augment;
  bool strict_prs = false;
  double mu = 0.5;
  // run
  int workers = 1;
  std::uint64_t seed = 0;
  std::string classifier_cmd;
  std::string synthetic;
  int timeout_ms = 30000;
  bool clamp_scores = false;
  std::string out = "run";
  std::string manifest;
  double alpha = 0.5;
  bool dump_masks = false;
  bool dump_superpixels = false;
};

SamplingMode parse_mode(const std::string& s) {
  if (s == "grid") return SamplingMode::grid;
  if (s == "superpixel") return SamplingMode::superpixel;
  if (s == "exhaustive") return SamplingMode::exhaustive;
  throw ConfigError("unknown sampling mode '" + s + "'");
}

cli::RunConfig build_config(const Options& o, const std::string& echo) {
  cli::RunConfig c;
  SamplingConfig& s = c.reliability.sampling;
  s.sample_count = o.samples;
  s.inclusion_prob = o.inclusion_prob;
  s.mode = parse_mode(o.mode);
  s.cell_size = o.cell_size;
  s.slic.target_area = o.slic_area;
  s.slic.iterations = o.slic_iterations;
  s.slic.compactness = o.compactness / 255.0;
  s.slic.seed = o.seed;
  s.batch_size = o.batch_size;

  c.reliability.proto.k = o.k;
  c.reliability.proto.h = o.h;
  if (o.growth == "centroid") {
    c.reliability.proto.growth = RegionGrowth::centroid_scale;
  } else if (o.growth == "dilation") {
    c.reliability.proto.growth = RegionGrowth::dilation;
  } else {
    throw ConfigError("unknown growth '" + o.growth + "'");
  }
  if (o.saliency_mode == "proto") {
    c.reliability.saliency.mode = SaliencyMode::match_proto;
  } else if (o.saliency_mode == "fraction") {
    c.reliability.saliency.mode = SaliencyMode::fixed_fraction;
  } else {
    throw ConfigError("unknown saliency mode '" + o.saliency_mode + "'");
  }
  c.reliability.saliency.fraction = o.saliency_fraction;
  c.reliability.saliency.remap_overlap = o.remap_irs;
  if (!o.augment.empty()) c.reliability.augmentations = parse_augmentations(o.augment);
  c.reliability.prs_entropy_as_score = o.strict_prs;
  c.reliability.fusion.mu = o.mu;
  c.reliability.validate();

  if (o.workers < 1) throw ConfigError("--workers must be >= 1");
  if (o.timeout_ms < 1) throw ConfigError("--timeout must be positive");
  c.classifier = {o.classifier_cmd, o.synthetic, std::chrono::milliseconds(o.timeout_ms), o.clamp_scores};
  c.output_dir = o.out;
  c.seed = o.seed;
  c.workers = o.workers;
  c.overlay_alpha = o.alpha;
  c.dump_masks = o.dump_masks;
  c.dump_superpixels = o.dump_superpixels;
  c.config_echo = echo;
  return c;
}

std::vector<cli::ManifestEntry> require_manifest(const Options& o) {
  if (o.manifest.empty()) throw ConfigError("--manifest is required");
  auto entries = cli::load_manifest(o.manifest);
  if (entries.empty()) throw DataError("manifest " + o.manifest + " has no entries");
  return entries;
}

void add_pipeline_options(CLI::App& app, Options& o) {
  app.add_option("--samples", o.samples, "SP-RISA sample count T")->capture_default_str();
  app.add_option("--inclusion-prob", o.inclusion_prob, "probability that a unit stays visible")->capture_default_str();
  app.add_option("--mode", o.mode, "sampling units: grid, superpixel or exhaustive")->capture_default_str();
  app.add_option("--cell-size", o.cell_size, "grid cell size (0 = from --slic-area)")->capture_default_str();
  app.add_option("--slic-area", o.slic_area, "target pixels per superpixel")->capture_default_str();
  app.add_option("--slic-iterations", o.slic_iterations, "SLIC iterations")->capture_default_str();
  app.add_option("--compactness", o.compactness, "SLIC compactness (0-255 intensity scale)")->capture_default_str();
  app.add_option("--batch-size", o.batch_size, "classifier batch size")->capture_default_str();
  app.add_option("--k", o.k, "area growth factor of the prototype region")->capture_default_str();
  app.add_option("--h", o.h, "downward shift of the prototype region (default: quarter of lesion height)");
  app.add_option("--growth", o.growth, "prototype growth: centroid or dilation")->capture_default_str();
  app.add_option("--saliency-mode", o.saliency_mode, "saliency size: proto or fraction")->capture_default_str();
  app.add_option("--saliency-fraction", o.saliency_fraction, "image fraction for --saliency-mode fraction")
      ->capture_default_str();
  app.add_flag("--remap-irs", o.remap_irs, "report 0.5 + 0.5*IoU on the overlap branch");
  app.add_option("--augment", o.augment, "comma-separated transforms, e.g. identity,hflip,rotate:-5");
  app.add_flag("--strict-prs", o.strict_prs, "use H/log C instead of 1 - H/log C");
  app.add_option("--mu", o.mu, "IRS weight in DRS")->capture_default_str();
  app.add_option("--workers", o.workers, "worker threads")->envname("DRS_WORKERS")->capture_default_str();
  app.add_option("--seed", o.seed, "run seed")->capture_default_str();
  app.add_option("--classifier-cmd", o.classifier_cmd, "model server command (JSON-lines on stdio)")
      ->envname("DRS_CLASSIFIER_CMD");
  app.add_option("--synthetic", o.synthetic, "builtin classifier: constant:C, mean, brightness:T");
  app.add_option("--timeout", o.timeout_ms, "classifier reply timeout in ms")->capture_default_str();
  app.add_flag("--clamp-scores", o.clamp_scores, "clamp out-of-range scores instead of failing");
  app.add_option("--out", o.out, "run directory")->capture_default_str();
  app.add_option("--manifest", o.manifest, "manifest CSV (image,mask,label,id)");
  app.add_option("--alpha", o.alpha, "overlay blend weight")->capture_default_str();
  app.add_flag("--dump-masks", o.dump_masks, "write saliency and prototype masks");
  app.add_flag("--dump-superpixels", o.dump_superpixels, "write superpixel label maps and boundaries");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dual-channel reliability scoring for black-box image classifiers"};
  app.set_help_flag("--help", "print this help and exit");  // -h is taken by the shift option
  app.set_config("--config", "", "flat key = value config file; flags override it");
  app.require_subcommand(1);
  app.fallthrough();

  Options o;
  add_pipeline_options(app, o);

  auto* ingest = app.add_subcommand("ingest", "build a manifest from a BUSI-style directory");
  std::string ingest_root;
  std::string ingest_out = "manifest.csv";
  ingest->add_option("root", ingest_root, "dataset root with benign/ and malignant/")->required();
  ingest->add_option("-o,--output", ingest_out, "manifest to write")->capture_default_str();

  auto* attribute = app.add_subcommand("attribute", "attribution maps and overlays");
  auto* score = app.add_subcommand("score", "full reliability reports and summary");
  auto* prs = app.add_subcommand("prs", "test-time augmentation reliability only");
  auto* irs = app.add_subcommand("irs", "inference reliability only");

  auto* calibrate = app.add_subcommand("calibrate", "adaptive ECE per score channel");
  std::string reports_path;
  bool diagram = false;
  calibrate->add_option("--reports", reports_path, "reports file (default: <out>/reports.ndjson)");
  calibrate->add_flag("--diagram", diagram, "also write reliability_diagram.csv");

  auto* render = app.add_subcommand("render", "overlay a saved attribution map on an image");
  std::string render_image, render_attr, render_output;
  render->add_option("--image", render_image, "input image")->required();
  render->add_option("--attribution", render_attr, "attribution map (.attr)")->required();
  render->add_option("-o,--output", render_output, "overlay PNG")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    std::ostream& log = std::cerr;
    if (ingest->parsed()) {
      cli::cmd_ingest(ingest_root, ingest_out, log);
      return kOk;
    }
    if (calibrate->parsed()) {
      const fs::path reports = reports_path.empty() ? fs::path(o.out) / "reports.ndjson" : fs::path(reports_path);
      cli::cmd_calibrate(reports, o.out, diagram, log);
      return kOk;
    }
    if (render->parsed()) {
      cli::cmd_render(render_image, render_attr, render_output, o.alpha);
      return kOk;
    }
    const cli::RunConfig config = build_config(o, app.config_to_str(true, false));
    const auto entries = require_manifest(o);
    if (attribute->parsed()) cli::cmd_attribute(config, entries, log);
    if (score->parsed()) cli::cmd_score(config, entries, log);
    if (prs->parsed()) cli::cmd_prs(config, entries, log);
    if (irs->parsed()) cli::cmd_irs(config, entries, log);
    return kOk;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const ClassifierUnavailable& e) {
    std::cerr << "classifier error: " << e.what() << "\n";
    return kClassifierError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kDataError;
  }
}
