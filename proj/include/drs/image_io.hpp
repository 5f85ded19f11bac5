#ifndef DRS_IMAGE_IO_HPP
#define DRS_IMAGE_IO_HPP

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string_view>

#include "drs/image.hpp"

namespace drs {

// Reads an 8-bit PNG (gray, gray+alpha, RGB, RGBA or palette) and converts it
// to one channel with luma = 0.299 R + 0.587 G + 0.114 B, scaled to [0,1].
GrayImage load_image(const std::filesystem::path& path);

// Any nonzero pixel is foreground.
BinaryMask load_mask(const std::filesystem::path& path);

RgbImage load_rgb(const std::filesystem::path& path);

// 8-bit grayscale; values are quantized as round(v * 255).
void save_image(const std::filesystem::path& path, const GrayImage& image);
void save_mask(const std::filesystem::path& path, const BinaryMask& mask);
void save_rgb(const std::filesystem::path& path, const RgbImage& image);

// 16-bit grayscale label map (debug output for superpixels).
void save_label_map16(const std::filesystem::path& path, int width, int height,
                      const std::vector<std::uint16_t>& labels);

// Quantizes an intensity to the 8-bit scale: round(v * 255) clamped to [0,255].
std::uint8_t quantize8(double v);

// Writes through a sibling temporary file and renames it into place.
void write_atomically(const std::filesystem::path& path,
                      const std::function<void(const std::filesystem::path&)>& writer);
void write_text_atomically(const std::filesystem::path& path, std::string_view text);

}  // namespace drs

#endif  // DRS_IMAGE_IO_HPP
