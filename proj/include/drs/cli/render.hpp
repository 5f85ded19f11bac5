#ifndef DRS_CLI_RENDER_HPP
#define DRS_CLI_RENDER_HPP

#include <array>
#include <cstdint>

#include "drs/attribution.hpp"
#include "drs/image.hpp"

namespace drs::cli {

// Piecewise-linear heat colormap: 0 -> (0,0,128), 0.5 -> (0,255,0),
// 1 -> (255,0,0); channels rounded to the nearest integer.
std::array<std::uint8_t, 3> heat_color(double v);

// color = (1 - alpha) * gray + alpha * heat_color(A_n), per channel, where
// gray is the intensity on the 0-255 scale before quantization.
RgbImage render_overlay(const GrayImage& image, const AttributionMap& normalized, double alpha = 0.5);

}  // namespace drs::cli

#endif  // DRS_CLI_RENDER_HPP
