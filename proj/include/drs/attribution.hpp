#ifndef DRS_ATTRIBUTION_HPP
#define DRS_ATTRIBUTION_HPP

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "drs/classifier.hpp"
#include "drs/image.hpp"
#include "drs/superpixel.hpp"

namespace drs {

// Per-pixel nonnegative importance for one target class.
template <typename Scalar>
class BasicAttributionMap {
 public:
  using scalar_type = Scalar;

  BasicAttributionMap() = default;
  explicit BasicAttributionMap(Raster<Scalar> values) : values_(std::move(values)) {
    if (values_.size() > 0 && !(values_ >= Scalar(0)).all()) {
      throw DataError("attribution values must be nonnegative");
    }
  }

  int width() const { return static_cast<int>(values_.cols()); }
  int height() const { return static_cast<int>(values_.rows()); }
  Eigen::Index size() const { return values_.size(); }
  Scalar operator()(int row, int col) const { return values_(row, col); }
  const Raster<Scalar>& values() const { return values_; }
  const Scalar* data() const { return values_.data(); }

  friend bool operator==(const BasicAttributionMap& a, const BasicAttributionMap& b) {
    return a.values_.rows() == b.values_.rows() && a.values_.cols() == b.values_.cols() &&
           (a.values_ == b.values_).all();
  }

 private:
  Raster<Scalar> values_;
};

using AttributionMap = BasicAttributionMap<double>;

// (A - min A) / (max A - min A). A constant map normalizes to all zeros.
template <typename Scalar>
BasicAttributionMap<Scalar> normalize_minmax(const BasicAttributionMap<Scalar>& map) {
  if (map.size() == 0) return map;
  const Scalar lo = map.values().minCoeff();
  const Scalar hi = map.values().maxCoeff();
  if (!(hi > lo)) return BasicAttributionMap<Scalar>(Raster<Scalar>::Zero(map.height(), map.width()));
  return BasicAttributionMap<Scalar>(((map.values() - lo) / (hi - lo)).min(Scalar(1)));
}

enum class SamplingMode { grid, superpixel, exhaustive };

struct SamplingConfig {
  int sample_count = 4000;     // T; ignored in exhaustive mode (T = 2^K)
  double inclusion_prob = 0.5;
  std::uint64_t seed = 0;
  int target_class = 1;
  SamplingMode mode = SamplingMode::superpixel;
  int cell_size = 0;           // grid mode; 0 = ceil(sqrt(slic.target_area))
  SlicParams slic;             // superpixel and exhaustive modes
  int batch_size = 32;
  int workers = 1;

  int effective_cell_size() const;
  void validate() const;
};

inline constexpr int kMaxExhaustiveUnits = 20;

// One sampled occlusion: which units survived (m_t) and the target score p_t.
struct MaskSample {
  std::vector<std::uint8_t> kept;  // one flag per unit
  double score = 0.0;

  BinaryMask mask(const SuperpixelLabeling& units) const;
};

struct AttributionResult {
  AttributionMap map;
  SuperpixelLabeling units;
  std::vector<MaskSample> samples;
};

// A = (1/T) * sum_t p_t * m_t, with p_t the target-class score of the image
// occluded (zero fill) outside m_t. Units come from the sampling mode.
AttributionResult attribute(const GrayImage& image, Classifier& classifier, const SamplingConfig& config);

// Same, over caller-supplied sampling units.
AttributionResult attribute_units(const GrayImage& image, Classifier& classifier, const SuperpixelLabeling& units,
                                  const SamplingConfig& config);

// Standard error of the mean of p_t * m_t(pixel) across samples.
double monte_carlo_stderr(std::span<const MaskSample> samples, const SuperpixelLabeling& units, int row, int col);

// Little-endian binary: "ATTR", u32 width, u32 height, u32 reserved (0),
// then width*height float32 values row-major.
void save_attribution(const std::filesystem::path& path, const AttributionMap& map);
AttributionMap load_attribution(const std::filesystem::path& path);

// 8-bit PNG of the min-max normalized map.
void save_attribution_png(const std::filesystem::path& path, const AttributionMap& map);

}  // namespace drs

#endif  // DRS_ATTRIBUTION_HPP
