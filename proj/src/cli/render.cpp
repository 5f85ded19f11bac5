#include "drs/cli/render.hpp"

#include <algorithm>
#include <cmath>

namespace drs::cli {

std::array<std::uint8_t, 3> heat_color(double v) {
  v = std::clamp(v, 0.0, 1.0);
  constexpr std::array<double, 3> low{0, 0, 128};
  constexpr std::array<double, 3> mid{0, 255, 0};
  constexpr std::array<double, 3> high{255, 0, 0};
  const bool upper = v > 0.5;
  const double t = upper ? (v - 0.5) * 2.0 : v * 2.0;
  const auto& a = upper ? mid : low;
  const auto& b = upper ? high : mid;
  std::array<std::uint8_t, 3> out{};
  for (int k = 0; k < 3; ++k) out[k] = static_cast<std::uint8_t>(std::lround(a[k] + (b[k] - a[k]) * t));
  return out;
}

RgbImage render_overlay(const GrayImage& image, const AttributionMap& normalized, double alpha) {
  require_same_shape(image, normalized, "render_overlay");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ConfigError("overlay alpha must lie in [0,1]");
  RgbImage out(image.width(), image.height());
  for (int r = 0; r < image.height(); ++r) {
    for (int c = 0; c < image.width(); ++c) {
      const double gray = image(r, c) * 255.0;
      const auto heat = heat_color(normalized(r, c));
      std::uint8_t* px = out.pixel(r, c);
      for (int k = 0; k < 3; ++k) {
        const double v = (1.0 - alpha) * gray + alpha * heat[k];
        px[k] = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
      }
    }
  }
  return out;
}

}  // namespace drs::cli
