#include "drs/image.hpp"

#include <cmath>

namespace drs {

BinaryMask rect_mask(int width, int height, const Rect& rect) {
  if (rect.x0 < 0 || rect.y0 < 0 || rect.x0 >= rect.x1 || rect.y0 >= rect.y1 || rect.x1 > width ||
      rect.y1 > height) {
    throw DimensionError("rect_mask: rectangle outside the frame");
  }
  Raster<bool> bits = Raster<bool>::Constant(height, width, false);
  bits.block(rect.y0, rect.x0, rect.height(), rect.width()).setConstant(true);
  return BinaryMask(std::move(bits));
}

std::optional<Rect> bounding_box(const BinaryMask& mask) {
  if (mask.none()) return std::nullopt;
  Rect box{mask.width(), mask.height(), 0, 0};
  for (int r = 0; r < mask.height(); ++r) {
    for (int c = 0; c < mask.width(); ++c) {
      if (!mask(r, c)) continue;
      box.x0 = std::min(box.x0, c);
      box.y0 = std::min(box.y0, r);
      box.x1 = std::max(box.x1, c + 1);
      box.y1 = std::max(box.y1, r + 1);
    }
  }
  return box;
}

Eigen::Vector2d centroid(const BinaryMask& mask) {
  if (mask.none()) throw DataError("centroid of an empty mask");
  Eigen::Vector2d sum = Eigen::Vector2d::Zero();
  for (int r = 0; r < mask.height(); ++r) {
    for (int c = 0; c < mask.width(); ++c) {
      if (mask(r, c)) sum += Eigen::Vector2d(c, r);
    }
  }
  return sum / static_cast<double>(mask.count());
}

BinaryMask scale_mask_about_centroid(const BinaryMask& mask, double area_factor) {
  if (mask.none()) throw DataError("scale_mask_about_centroid: empty mask");
  if (!(area_factor >= 1.0)) throw ConfigError("scale_mask_about_centroid: area factor must be >= 1");
  if (area_factor == 1.0) return mask;

  const double linear = std::sqrt(area_factor);
  const Eigen::Vector2d center = centroid(mask);
  Raster<bool> out = Raster<bool>::Constant(mask.height(), mask.width(), false);
  for (int r = 0; r < mask.height(); ++r) {
    const long src_r = std::lround(std::floor(center.y() + (r - center.y()) / linear + 0.5));
    if (src_r < 0 || src_r >= mask.height()) continue;
    for (int c = 0; c < mask.width(); ++c) {
      const long src_c = std::lround(std::floor(center.x() + (c - center.x()) / linear + 0.5));
      if (src_c < 0 || src_c >= mask.width()) continue;
      out(r, c) = mask(static_cast<int>(src_r), static_cast<int>(src_c));
    }
  }
  return BinaryMask(std::move(out));
}

BinaryMask dilate3x3(const BinaryMask& mask) {
  const int h = mask.height();
  const int w = mask.width();
  Raster<bool> out = mask.bits();
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      if (!mask(r, c)) continue;
      for (int dr = -1; dr <= 1; ++dr) {
        for (int dc = -1; dc <= 1; ++dc) {
          const int rr = r + dr;
          const int cc = c + dc;
          if (rr >= 0 && rr < h && cc >= 0 && cc < w) out(rr, cc) = true;
        }
      }
    }
  }
  return BinaryMask(std::move(out));
}

BinaryMask erode3x3(const BinaryMask& mask) {
  const int h = mask.height();
  const int w = mask.width();
  Raster<bool> out = mask.bits();
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      if (!mask(r, c)) continue;
      // Frame border counts as foreground so masks touching the edge keep it.
      for (int dr = -1; dr <= 1 && out(r, c); ++dr) {
        for (int dc = -1; dc <= 1; ++dc) {
          const int rr = r + dr;
          const int cc = c + dc;
          if (rr >= 0 && rr < h && cc >= 0 && cc < w && !mask(rr, cc)) {
            out(r, c) = false;
            break;
          }
        }
      }
    }
  }
  return BinaryMask(std::move(out));
}

BinaryMask dilate_mask_to_area(const BinaryMask& mask, double area_factor) {
  if (mask.none()) throw DataError("dilate_mask_to_area: empty mask");
  if (!(area_factor >= 1.0)) throw ConfigError("dilate_mask_to_area: area factor must be >= 1");
  const double target = area_factor * static_cast<double>(mask.count());
  BinaryMask grown = mask;
  while (static_cast<double>(grown.count()) < target && grown.count() < grown.size()) {
    grown = dilate3x3(grown);
  }
  return grown;
}

BinaryMask shift_mask_down(const BinaryMask& mask, int h) {
  if (h < 0) throw ConfigError("shift_mask_down: negative shift");
  if (h == 0) return mask;
  Raster<bool> out = Raster<bool>::Constant(mask.height(), mask.width(), false);
  const int kept = mask.height() - h;
  if (kept > 0) out.bottomRows(kept) = mask.bits().topRows(kept);
  return BinaryMask(std::move(out));
}

}  // namespace drs
