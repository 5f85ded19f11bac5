#include "drs/rationale.hpp"

#include <array>
#include <cmath>

namespace drs {

void ProtoRegionConfig::validate() const {
  if (!(k >= 1.0)) throw ConfigError("prototype enlarging factor k must be >= 1");
  if (h && *h < 0) throw ConfigError("prototype downward shift h must be >= 0");
}

void SaliencyConfig::validate() const {
  if (mode == SaliencyMode::fixed_fraction && !(fraction > 0.0 && fraction <= 1.0)) {
    throw ConfigError("saliency fraction must lie in (0,1]");
  }
}

namespace {

constexpr std::array<std::pair<RationaleCategory, std::string_view>, 8> kCategoryNames{{
    {RationaleCategory::HumanAligned, "HumanAligned"},
    {RationaleCategory::SufficientSubset, "SufficientSubset"},
    {RationaleCategory::SufficientContext, "SufficientContext"},
    {RationaleCategory::ContextDependent, "ContextDependent"},
    {RationaleCategory::Confuser, "Confuser"},
    {RationaleCategory::InsufficientSubset, "InsufficientSubset"},
    {RationaleCategory::Distractor, "Distractor"},
    {RationaleCategory::ContextConfusion, "ContextConfusion"},
}};

enum class Level { low, mid, high };

Level level_of(double v, const RationaleThresholds& t) {
  if (v >= t.high_cutoff) return Level::high;
  if (v < t.low_cutoff) return Level::low;
  return Level::mid;
}

}  // namespace

std::string_view to_string(RationaleCategory category) {
  for (const auto& [value, name] : kCategoryNames) {
    if (value == category) return name;
  }
  return "Unknown";
}

RationaleCategory rationale_category_from_string(std::string_view name) {
  for (const auto& [value, text] : kCategoryNames) {
    if (text == name) return value;
  }
  throw DataError("unknown rationale category '" + std::string(name) + "'");
}

int resolve_shift(const BinaryMask& lesion, const ProtoRegionConfig& config) {
  if (config.h) return *config.h;
  const auto box = bounding_box(lesion);
  if (!box) throw DataError("lesion mask is empty");
  return static_cast<int>(std::lround(0.25 * box->height()));
}

BinaryMask build_proto_mask(const BinaryMask& lesion, const ProtoRegionConfig& config) {
  config.validate();
  if (lesion.none()) throw DataError("build_proto_mask: lesion mask is empty");
  const BinaryMask grown = config.growth == RegionGrowth::centroid_scale ? scale_mask_about_centroid(lesion, config.k)
                                                                         : dilate_mask_to_area(lesion, config.k);
  return lesion | grown | shift_mask_down(lesion, resolve_shift(lesion, config));
}

Eigen::Index saliency_size(const SaliencyConfig& config, const BinaryMask& proto) {
  config.validate();
  const Eigen::Index n = proto.size();
  const Eigen::Index s = config.mode == SaliencyMode::match_proto
                             ? proto.count()
                             : static_cast<Eigen::Index>(std::llround(config.fraction * static_cast<double>(n)));
  return std::clamp<Eigen::Index>(s, 1, n);
}

RationaleMetrics shared_interest(const BinaryMask& ground_truth, const BinaryMask& saliency) {
  require_same_shape(ground_truth, saliency, "shared_interest");
  const auto g = static_cast<double>(ground_truth.count());
  const auto s = static_cast<double>(saliency.count());
  if (g == 0.0 || s == 0.0) throw DataError("shared_interest needs nonempty ground truth and saliency");
  const auto both = static_cast<double>(intersection_count(ground_truth, saliency));
  return RationaleMetrics{both / (g + s - both), both / g, both / s};
}

RationaleCategory classify_rationale(const RationaleMetrics& metrics, const RationaleThresholds& thresholds) {
  if (!(thresholds.low_cutoff > 0.0 && thresholds.low_cutoff <= thresholds.high_cutoff)) {
    throw ConfigError("rationale cutoffs must satisfy 0 < low <= high");
  }
  const Level gtc = level_of(metrics.gtc, thresholds);
  const Level sc = level_of(metrics.sc, thresholds);
  switch (gtc) {
    case Level::high:
      return sc == Level::high  ? RationaleCategory::HumanAligned
             : sc == Level::mid ? RationaleCategory::ContextDependent
                                : RationaleCategory::ContextConfusion;
    case Level::mid:
      return sc == Level::high  ? RationaleCategory::SufficientSubset
             : sc == Level::mid ? RationaleCategory::Confuser
                                : RationaleCategory::SufficientContext;
    case Level::low:
      return sc == Level::high  ? RationaleCategory::SufficientSubset
             : sc == Level::mid ? RationaleCategory::InsufficientSubset
                                : RationaleCategory::Distractor;
  }
  return RationaleCategory::Distractor;
}

bool doctor_trusted(const BinaryMask& saliency, const BinaryMask& lesion, const BinaryMask& proto) {
  const Eigen::Index in_proto = intersection_count(saliency, proto);
  const Eigen::Index in_lesion = intersection_count(saliency, lesion);
  return 2 * in_proto > saliency.count() && in_lesion > 0;
}

IrsBreakdown inference_reliability(const AttributionMap& normalized, const BinaryMask& lesion,
                                   const ProtoRegionConfig& proto, const SaliencyConfig& saliency) {
  require_same_shape(normalized, lesion, "inference_reliability");
  IrsBreakdown out;
  out.lesion = lesion;
  out.shift_h = resolve_shift(lesion, proto);
  ProtoRegionConfig resolved = proto;
  resolved.h = out.shift_h;
  out.proto = build_proto_mask(lesion, resolved);
  out.saliency = binarize_topk(normalized, saliency_size(saliency, out.proto));
  out.saliency_count = out.saliency.count();
  out.proto_count = out.proto.count();
  out.intersection = intersection_count(out.saliency, lesion);
  out.proto_intersection = intersection_count(out.saliency, out.proto);
  out.energy_ratio = energy_ratio(normalized, lesion);

  if (out.intersection > 0) {
    out.branch = IrsBranch::overlap;
    const double iou = static_cast<double>(out.proto_intersection) /
                       static_cast<double>(out.saliency_count + out.proto_count - out.proto_intersection);
    out.irs = saliency.remap_overlap ? 0.5 + 0.5 * iou : iou;
  } else {
    out.branch = IrsBranch::no_overlap;
    out.irs = std::min(out.energy_ratio, 0.5);
  }
  return out;
}

}  // namespace drs
