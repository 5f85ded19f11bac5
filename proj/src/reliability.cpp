#include "drs/reliability.hpp"

#include <functional>
#include <numeric>

namespace drs {

void FusionConfig::validate() const {
  if (!(mu >= 0.0 && mu <= 1.0)) throw ConfigError("fusion weight mu must lie in [0,1]");
}

double fuse(double irs, double prs, const FusionConfig& config) {
  config.validate();
  if (!(irs >= 0.0 && irs <= 1.0) || !(prs >= 0.0 && prs <= 1.0)) throw DataError("irs and prs must lie in [0,1]");
  return config.mu * irs + (1.0 - config.mu) * prs;
}

void ReliabilityConfig::validate() const {
  sampling.validate();
  proto.validate();
  saliency.validate();
  fusion.validate();
  if (augmentations.empty()) throw ConfigError("augmentation list is empty");
}

namespace {

std::string mode_name(SamplingMode mode) {
  switch (mode) {
    case SamplingMode::grid: return "grid";
    case SamplingMode::superpixel: return "superpixel";
    case SamplingMode::exhaustive: return "exhaustive";
  }
  return "superpixel";
}

SamplingMode parse_mode(const std::string& name) {
  if (name == "grid") return SamplingMode::grid;
  if (name == "superpixel") return SamplingMode::superpixel;
  if (name == "exhaustive") return SamplingMode::exhaustive;
  throw ConfigError("unknown sampling mode '" + name + "'");
}

std::string branch_name(IrsBranch b) { return b == IrsBranch::overlap ? "overlap" : "no_overlap"; }

IrsBranch parse_branch(const std::string& name) {
  if (name == "overlap") return IrsBranch::overlap;
  if (name == "no_overlap") return IrsBranch::no_overlap;
  throw DataError("unknown IRS branch '" + name + "'");
}

// Rethrows failures of one pipeline stage with the stage named, keeping the
// error category (and thus the CLI exit code).
template <typename Fn>
auto run_stage(const char* stage, Fn&& fn) -> decltype(fn()) {
  const std::string prefix = std::string("stage '") + stage + "': ";
  try {
    return fn();
  } catch (const ClassifierUnavailable& e) {
    throw ClassifierUnavailable(prefix + e.what(), e.request_id());
  } catch (const ConfigError& e) {
    throw ConfigError(prefix + e.what());
  } catch (const DimensionError& e) {
    throw DimensionError(prefix + e.what());
  } catch (const DataError& e) {
    throw DataError(prefix + e.what());
  }
}

}  // namespace

nlohmann::json to_json(const ReliabilityConfig& c) {
  nlohmann::json augment = nlohmann::json::array();
  for (const Transform& t : c.augmentations) augment.push_back(to_string(t));
  return {
      {"sampling",
       {{"mode", mode_name(c.sampling.mode)},
        {"sample_count", c.sampling.sample_count},
        {"inclusion_prob", c.sampling.inclusion_prob},
        {"seed", c.sampling.seed},
        {"cell_size", c.sampling.effective_cell_size()},
        {"batch_size", c.sampling.batch_size}}},
      {"slic",
       {{"target_area", c.sampling.slic.target_area},
        {"iterations", c.sampling.slic.iterations},
        {"compactness", c.sampling.slic.compactness},
        {"seed", c.sampling.slic.seed}}},
      {"proto",
       {{"k", c.proto.k},
        {"h", c.proto.h ? nlohmann::json(*c.proto.h) : nlohmann::json(nullptr)},
        {"growth", c.proto.growth == RegionGrowth::centroid_scale ? "centroid_scale" : "dilation"}}},
      {"saliency",
       {{"mode", c.saliency.mode == SaliencyMode::match_proto ? "match_proto" : "fixed_fraction"},
        {"fraction", c.saliency.fraction},
        {"remap_overlap", c.saliency.remap_overlap}}},
      {"rationale", {{"high_cutoff", c.thresholds.high_cutoff}, {"low_cutoff", c.thresholds.low_cutoff}}},
      {"augmentations", augment},
      {"prs_entropy_as_score", c.prs_entropy_as_score},
      {"mu", c.fusion.mu},
  };
}

ReliabilityConfig reliability_config_from_json(const nlohmann::json& j) {
  try {
    ReliabilityConfig c;
    const auto& s = j.at("sampling");
    c.sampling.mode = parse_mode(s.at("mode").get<std::string>());
    c.sampling.sample_count = s.at("sample_count").get<int>();
    c.sampling.inclusion_prob = s.at("inclusion_prob").get<double>();
    c.sampling.seed = s.at("seed").get<std::uint64_t>();
    c.sampling.cell_size = s.at("cell_size").get<int>();
    c.sampling.batch_size = s.at("batch_size").get<int>();
    const auto& sl = j.at("slic");
    c.sampling.slic.target_area = sl.at("target_area").get<double>();
    c.sampling.slic.iterations = sl.at("iterations").get<int>();
    c.sampling.slic.compactness = sl.at("compactness").get<double>();
    c.sampling.slic.seed = sl.at("seed").get<std::uint64_t>();
    const auto& p = j.at("proto");
    c.proto.k = p.at("k").get<double>();
    if (!p.at("h").is_null()) c.proto.h = p.at("h").get<int>();
    c.proto.growth = p.at("growth").get<std::string>() == "dilation" ? RegionGrowth::dilation : RegionGrowth::centroid_scale;
    const auto& sa = j.at("saliency");
    c.saliency.mode = sa.at("mode").get<std::string>() == "fixed_fraction" ? SaliencyMode::fixed_fraction
                                                                           : SaliencyMode::match_proto;
    c.saliency.fraction = sa.at("fraction").get<double>();
    c.saliency.remap_overlap = sa.at("remap_overlap").get<bool>();
    c.thresholds.high_cutoff = j.at("rationale").at("high_cutoff").get<double>();
    c.thresholds.low_cutoff = j.at("rationale").at("low_cutoff").get<double>();
    c.augmentations.clear();
    for (const auto& t : j.at("augmentations")) c.augmentations.push_back(parse_transform(t.get<std::string>()));
    c.prs_entropy_as_score = j.at("prs_entropy_as_score").get<bool>();
    c.fusion.mu = j.at("mu").get<double>();
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed configuration: ") + e.what());
  }
}

IrsSummary summarize(const IrsBreakdown& b) {
  return IrsSummary{b.irs,           b.branch,         b.intersection, b.proto_intersection, b.saliency_count,
                    b.proto_count,   b.energy_ratio,   b.shift_h};
}

bool operator==(const ReliabilityReport& a, const ReliabilityReport& b) {
  return a.id == b.id && a.label == b.label && a.predicted == b.predicted && a.correct == b.correct &&
         a.scores == b.scores && a.confidence == b.confidence && a.irs == b.irs && a.votes == b.votes &&
         a.vote_proportions == b.vote_proportions && a.entropy == b.entropy && a.prs == b.prs && a.mu == b.mu &&
         a.drs == b.drs && a.rationale == b.rationale && a.category == b.category &&
         a.doctor_trusted == b.doctor_trusted && a.seed == b.seed && a.config == b.config;
}

nlohmann::json to_json(const ReliabilityReport& r) {
  return {
      {"id", r.id},
      {"label", r.label},
      {"predicted", r.predicted},
      {"correct", r.correct},
      {"scores", r.scores},
      {"confidence", r.confidence},
      {"irs",
       {{"irs", r.irs.irs},
        {"branch", branch_name(r.irs.branch)},
        {"I", r.irs.intersection},
        {"I_pro", r.irs.proto_intersection},
        {"saliency_pixels", r.irs.saliency_count},
        {"proto_pixels", r.irs.proto_count},
        {"energy_ratio", r.irs.energy_ratio},
        {"shift_h", r.irs.shift_h}}},
      {"prs",
       {{"prs", r.prs}, {"entropy", r.entropy}, {"votes", r.votes}, {"proportions", r.vote_proportions}}},
      {"mu", r.mu},
      {"drs", r.drs},
      {"rationale",
       {{"category", std::string(to_string(r.category))},
        {"iou", r.rationale.iou},
        {"gtc", r.rationale.gtc},
        {"sc", r.rationale.sc}}},
      {"doctor_trusted", r.doctor_trusted},
      {"seed", r.seed},
      {"config", r.config},
  };
}

ReliabilityReport report_from_json(const nlohmann::json& j) {
  try {
    ReliabilityReport r;
    r.id = j.at("id").get<std::string>();
    r.label = j.at("label").get<int>();
    r.predicted = j.at("predicted").get<int>();
    r.correct = j.at("correct").get<bool>();
    r.scores = j.at("scores").get<std::vector<double>>();
    r.confidence = j.at("confidence").get<double>();
    const auto& irs = j.at("irs");
    r.irs.irs = irs.at("irs").get<double>();
    r.irs.branch = parse_branch(irs.at("branch").get<std::string>());
    r.irs.intersection = irs.at("I").get<std::int64_t>();
    r.irs.proto_intersection = irs.at("I_pro").get<std::int64_t>();
    r.irs.saliency_count = irs.at("saliency_pixels").get<std::int64_t>();
    r.irs.proto_count = irs.at("proto_pixels").get<std::int64_t>();
    r.irs.energy_ratio = irs.at("energy_ratio").get<double>();
    r.irs.shift_h = irs.at("shift_h").get<int>();
    const auto& prs = j.at("prs");
    r.prs = prs.at("prs").get<double>();
    r.entropy = prs.at("entropy").get<double>();
    r.votes = prs.at("votes").get<std::vector<int>>();
    r.vote_proportions = prs.at("proportions").get<std::vector<double>>();
    r.mu = j.at("mu").get<double>();
    r.drs = j.at("drs").get<double>();
    const auto& rat = j.at("rationale");
    r.category = rationale_category_from_string(rat.at("category").get<std::string>());
    r.rationale.iou = rat.at("iou").get<double>();
    r.rationale.gtc = rat.at("gtc").get<double>();
    r.rationale.sc = rat.at("sc").get<double>();
    r.doctor_trusted = j.at("doctor_trusted").get<bool>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.config = j.at("config");
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed report: ") + e.what());
  }
}

SampleEvaluation evaluate_sample(const GrayImage& image, const BinaryMask& lesion, int label, Classifier& classifier,
                                 const ReliabilityConfig& config, const std::string& id, std::uint64_t seed) {
  run_stage("config", [&] {
    config.validate();
    require_same_shape(image, lesion, "image and lesion mask");
    if (label < 0 || label >= classifier.handshake().class_count) throw DataError("label outside the class range");
    if (lesion.none()) throw DataError("lesion mask is empty");
    return 0;
  });

  SampleEvaluation out;
  ReliabilityReport& r = out.report;
  r.id = id;
  r.label = label;
  r.seed = seed;

  const ClassScores prediction = run_stage("classify", [&] {
    ClassScores s = classifier.classify(image);
    if (static_cast<int>(s.size()) != classifier.handshake().class_count) {
      throw ClassifierUnavailable("classifier returned the wrong number of scores");
    }
    return s;
  });
  r.scores = prediction.scores;
  r.predicted = prediction.argmax();
  r.correct = r.predicted == label;
  r.confidence = prediction[static_cast<std::size_t>(r.predicted)];

  SamplingConfig sampling = config.sampling;
  sampling.target_class = r.predicted;
  sampling.seed = seed;
  out.attribution = run_stage("attribute", [&] { return attribute(image, classifier, sampling); });
  out.normalized = normalize_minmax(out.attribution.map);

  out.irs = run_stage("irs", [&] {
    return inference_reliability(out.normalized, lesion, config.proto, config.saliency);
  });
  r.irs = summarize(out.irs);
  r.rationale = shared_interest(lesion, out.irs.saliency);
  r.category = classify_rationale(r.rationale, config.thresholds);
  r.doctor_trusted = doctor_trusted(out.irs.saliency, lesion, out.irs.proto);

  const PrsBreakdown prs = run_stage("prs", [&] {
    return predictive_reliability(image, classifier, config.augmentations, config.prs_entropy_as_score);
  });
  r.votes = prs.votes;
  r.vote_proportions = prs.proportions;
  r.entropy = prs.entropy;
  r.prs = prs.prs;

  r.mu = config.fusion.mu;
  r.drs = run_stage("fuse", [&] { return fuse(r.irs.irs, r.prs, config.fusion); });

  ReliabilityConfig effective = config;
  effective.sampling.seed = seed;
  r.config = to_json(effective);
  return out;
}

double mean_drs(std::span<const ReliabilityReport> reports) {
  if (reports.empty()) throw DataError("mean_drs of an empty report set");
  double sum = 0.0;
  for (const ReliabilityReport& r : reports) sum += r.drs;
  return sum / static_cast<double>(reports.size());
}

std::uint64_t derive_seed(std::uint64_t run_seed, std::uint64_t index) {
  // splitmix64 finalizer over the combined key
  std::uint64_t z = run_seed + 0x9e3779b97f4a7c15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace drs
