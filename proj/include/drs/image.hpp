#ifndef DRS_IMAGE_HPP
#define DRS_IMAGE_HPP

#include <Eigen/Core>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "drs/error.hpp"

namespace drs {

// Row-major 2-D field: rows = height, cols = width.
template <typename Scalar>
using Raster = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Single-channel image with intensities in [0,1].
template <typename Scalar>
class BasicImage {
 public:
  using scalar_type = Scalar;

  BasicImage() = default;
  BasicImage(int width, int height, Scalar fill = Scalar(0))
      : BasicImage(Raster<Scalar>::Constant(height, width, fill)) {}

  explicit BasicImage(Raster<Scalar> pixels) : pixels_(std::move(pixels)) {
    if (pixels_.size() > 0 && !((pixels_ >= Scalar(0)) && (pixels_ <= Scalar(1))).all()) {
      throw DataError("image intensities must lie in [0,1]");
    }
  }

  int width() const { return static_cast<int>(pixels_.cols()); }
  int height() const { return static_cast<int>(pixels_.rows()); }
  Eigen::Index size() const { return pixels_.size(); }
  bool empty() const { return pixels_.size() == 0; }

  Scalar operator()(int row, int col) const { return pixels_(row, col); }
  const Raster<Scalar>& pixels() const { return pixels_; }
  const Scalar* data() const { return pixels_.data(); }

  friend bool operator==(const BasicImage& a, const BasicImage& b) {
    return a.pixels_.rows() == b.pixels_.rows() && a.pixels_.cols() == b.pixels_.cols() &&
           (a.pixels_ == b.pixels_).all();
  }

 private:
  Raster<Scalar> pixels_;
};

using GrayImage = BasicImage<double>;

// Foreground/background raster: lesion masks, prototype masks, saliency
// masks and sampling masks all share this type.
class BinaryMask {
 public:
  BinaryMask() = default;
  BinaryMask(int width, int height, bool fill = false)
      : bits_(Raster<bool>::Constant(height, width, fill)) {}
  explicit BinaryMask(Raster<bool> bits) : bits_(std::move(bits)) {}

  int width() const { return static_cast<int>(bits_.cols()); }
  int height() const { return static_cast<int>(bits_.rows()); }
  Eigen::Index size() const { return bits_.size(); }

  bool operator()(int row, int col) const { return bits_(row, col); }
  const Raster<bool>& bits() const { return bits_; }

  // Number of foreground pixels.
  Eigen::Index count() const { return bits_.count(); }
  bool none() const { return count() == 0; }

  friend bool operator==(const BinaryMask& a, const BinaryMask& b) {
    return a.bits_.rows() == b.bits_.rows() && a.bits_.cols() == b.bits_.cols() &&
           (a.bits_ == b.bits_).all();
  }

 private:
  Raster<bool> bits_;
};

// Half-open pixel rectangle [x0,x1) x [y0,y1).
struct Rect {
  int x0 = 0;
  int y0 = 0;
  int x1 = 0;
  int y1 = 0;

  int width() const { return x1 - x0; }
  int height() const { return y1 - y0; }
  friend bool operator==(const Rect&, const Rect&) = default;
};

// Interleaved 8-bit RGB raster used for overlays.
struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;  // 3 * width * height

  RgbImage() = default;
  RgbImage(int w, int h) : width(w), height(h), data(static_cast<std::size_t>(3) * w * h, 0) {}

  std::uint8_t* pixel(int row, int col) { return &data[3 * (static_cast<std::size_t>(row) * width + col)]; }
  const std::uint8_t* pixel(int row, int col) const {
    return &data[3 * (static_cast<std::size_t>(row) * width + col)];
  }
  friend bool operator==(const RgbImage&, const RgbImage&) = default;
};

template <typename A, typename B>
bool same_shape(const A& a, const B& b) {
  return a.width() == b.width() && a.height() == b.height();
}

template <typename A, typename B>
void require_same_shape(const A& a, const B& b, const char* what) {
  if (!same_shape(a, b)) {
    throw DimensionError(std::string(what) + ": dimension mismatch (" + std::to_string(a.width()) + "x" +
                         std::to_string(a.height()) + " vs " + std::to_string(b.width()) + "x" +
                         std::to_string(b.height()) + ")");
  }
}

// Keeps pixels where the mask is set and replaces the rest with `fill`.
template <typename Scalar>
BasicImage<Scalar> apply_mask(const BasicImage<Scalar>& image, const BinaryMask& mask, Scalar fill = Scalar(0)) {
  require_same_shape(image, mask, "apply_mask");
  return BasicImage<Scalar>(mask.bits().select(image.pixels(), fill));
}

inline BinaryMask operator|(const BinaryMask& a, const BinaryMask& b) {
  require_same_shape(a, b, "mask union");
  return BinaryMask(a.bits() || b.bits());
}

inline BinaryMask operator&(const BinaryMask& a, const BinaryMask& b) {
  require_same_shape(a, b, "mask intersection");
  return BinaryMask(a.bits() && b.bits());
}

inline Eigen::Index intersection_count(const BinaryMask& a, const BinaryMask& b) {
  require_same_shape(a, b, "mask intersection");
  return (a.bits() && b.bits()).count();
}

BinaryMask rect_mask(int width, int height, const Rect& rect);

// Tight bounding box of the foreground; empty optional for an empty mask.
std::optional<Rect> bounding_box(const BinaryMask& mask);

// Mean (x, y) of the foreground pixel centers.
Eigen::Vector2d centroid(const BinaryMask& mask);

// Scales the foreground about its centroid so that the area grows by
// `area_factor` (linear factor sqrt(area_factor)). Each output pixel whose
// center falls inside the scaled footprint of a foreground pixel is set,
// which keeps a connected input connected. Out-of-frame pixels are clipped.
BinaryMask scale_mask_about_centroid(const BinaryMask& mask, double area_factor);

// Alternative enlargement: repeated 3x3 dilation until the area reaches
// area_factor times the input area (or the frame is full).
BinaryMask dilate_mask_to_area(const BinaryMask& mask, double area_factor);

BinaryMask dilate3x3(const BinaryMask& mask);
BinaryMask erode3x3(const BinaryMask& mask);

// Moves every set bit down by h rows, dropping bits that leave the frame.
BinaryMask shift_mask_down(const BinaryMask& mask, int h);

}  // namespace drs

#endif  // DRS_IMAGE_HPP
