#ifndef DRS_RATIONALE_HPP
#define DRS_RATIONALE_HPP

#include <algorithm>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "drs/attribution.hpp"
#include "drs/image.hpp"

namespace drs {

enum class RegionGrowth { centroid_scale, dilation };

// Prototype region: lesion, lesion enlarged by area factor k, and the lesion
// shifted down by h pixels.
struct ProtoRegionConfig {
  double k = 1.21;
  std::optional<int> h;  // unset: round(0.25 * lesion bounding-box height)
  RegionGrowth growth = RegionGrowth::centroid_scale;

  void validate() const;
};

enum class SaliencyMode { match_proto, fixed_fraction };

struct SaliencyConfig {
  SaliencyMode mode = SaliencyMode::match_proto;
  double fraction = 0.1;  // fixed_fraction: s = round(fraction * W * H)
  // Optional remap of the overlap-branch score to 0.5 + 0.5 * IoU.
  bool remap_overlap = false;

  void validate() const;
};

struct RationaleMetrics {
  double iou = 0.0;
  double gtc = 0.0;  // ground-truth coverage
  double sc = 0.0;   // saliency coverage

  friend bool operator==(const RationaleMetrics&, const RationaleMetrics&) = default;
};

enum class RationaleCategory {
  HumanAligned,
  SufficientSubset,
  SufficientContext,
  ContextDependent,
  Confuser,
  InsufficientSubset,
  Distractor,
  ContextConfusion,
};

std::string_view to_string(RationaleCategory category);
RationaleCategory rationale_category_from_string(std::string_view name);

// Coverage levels: high >= high_cutoff, low < low_cutoff, mid otherwise.
struct RationaleThresholds {
  double high_cutoff = 0.5;
  double low_cutoff = 0.1;
};

enum class IrsBranch { overlap, no_overlap };

struct IrsBreakdown {
  BinaryMask saliency;  // S_m
  BinaryMask lesion;    // M
  BinaryMask proto;     // M_pro
  std::int64_t saliency_count = 0;
  std::int64_t proto_count = 0;
  std::int64_t intersection = 0;        // I = |S_m & M|
  std::int64_t proto_intersection = 0;  // I_pro = |S_m & M_pro|
  double energy_ratio = 0.0;            // E_M
  double irs = 0.0;
  IrsBranch branch = IrsBranch::no_overlap;
  int shift_h = 0;  // resolved downward shift
};

// Shift used for M_pro: explicit h, or round(0.25 * bbox height of M).
int resolve_shift(const BinaryMask& lesion, const ProtoRegionConfig& config);

BinaryMask build_proto_mask(const BinaryMask& lesion, const ProtoRegionConfig& config);

// Top-s pixels of the map; ties at the cut broken row-major (earlier wins).
template <typename Scalar>
BinaryMask binarize_topk(const BasicAttributionMap<Scalar>& map, Eigen::Index s);

// s for a saliency config; clamped into [1, W*H].
Eigen::Index saliency_size(const SaliencyConfig& config, const BinaryMask& proto);

RationaleMetrics shared_interest(const BinaryMask& ground_truth, const BinaryMask& saliency);

// Category lookup on (gtc, sc) levels:
//
//               sc low             sc mid               sc high
//   gtc high    ContextConfusion   ContextDependent     HumanAligned
//   gtc mid     SufficientContext  Confuser             SufficientSubset
//   gtc low     Distractor         InsufficientSubset   SufficientSubset
RationaleCategory classify_rationale(const RationaleMetrics& metrics, const RationaleThresholds& thresholds = {});

// |S & M_pro| > |S - S & M_pro| and |S & M| > 0.
bool doctor_trusted(const BinaryMask& saliency, const BinaryMask& lesion, const BinaryMask& proto);

// Share of the map's total energy that falls on the mask; 0 for an all-zero map.
template <typename Scalar>
double energy_ratio(const BasicAttributionMap<Scalar>& normalized, const BinaryMask& mask) {
  require_same_shape(normalized, mask, "energy_ratio");
  // One pass, same order for both sums, so a full mask gives exactly 1.
  double total = 0.0, inside = 0.0;
  const bool* bits = mask.bits().data();
  for (Eigen::Index i = 0; i < normalized.size(); ++i) {
    const double v = static_cast<double>(normalized.data()[i]);
    total += v;
    if (bits[i]) inside += v;
  }
  if (!(total > 0.0)) return 0.0;
  return inside / total;
}

// IRS: IoU(S_m, M_pro) when S_m touches the lesion, else min(E_M, 0.5).
IrsBreakdown inference_reliability(const AttributionMap& normalized, const BinaryMask& lesion,
                                   const ProtoRegionConfig& proto, const SaliencyConfig& saliency);

// ---------------------------------------------------------------------------

template <typename Scalar>
BinaryMask binarize_topk(const BasicAttributionMap<Scalar>& map, Eigen::Index s) {
  const Eigen::Index n = map.size();
  if (s < 1 || s > n) throw ConfigError("binarize_topk: s must lie in [1, W*H]");
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) order[i] = i;
  const Scalar* v = map.data();
  std::stable_sort(order.begin(), order.end(), [v](Eigen::Index a, Eigen::Index b) { return v[a] > v[b]; });
  Raster<bool> bits = Raster<bool>::Constant(map.height(), map.width(), false);
  for (Eigen::Index i = 0; i < s; ++i) bits.data()[order[i]] = true;
  return BinaryMask(std::move(bits));
}

}  // namespace drs

#endif  // DRS_RATIONALE_HPP
