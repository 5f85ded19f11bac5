#include "drs/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstring>
#include <fstream>
#include <string>
#include <thread>

namespace drs {
namespace {

struct DecodedRgb {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> rgb;
};

DecodedRgb decode_rgb(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw DataError("missing image file: " + path.string());
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  if (png_image_begin_read_from_file(&image, path.c_str()) == 0) {
    throw DataError("cannot decode " + path.string() + ": " + image.message);
  }
  image.format = PNG_FORMAT_RGB;
  DecodedRgb out;
  out.width = static_cast<int>(image.width);
  out.height = static_cast<int>(image.height);
  out.rgb.resize(PNG_IMAGE_SIZE(image));
  if (png_image_finish_read(&image, nullptr, out.rgb.data(), 0, nullptr) == 0) {
    std::string message = image.message;
    png_image_free(&image);
    throw DataError("cannot decode " + path.string() + ": " + message);
  }
  if (out.width <= 0 || out.height <= 0) throw DataError("empty image: " + path.string());
  return out;
}

void encode(const std::filesystem::path& path, int width, int height, png_uint_32 format, const void* data) {
  write_atomically(path, [&](const std::filesystem::path& tmp) {
    png_image image;
    std::memset(&image, 0, sizeof image);
    image.version = PNG_IMAGE_VERSION;
    image.width = static_cast<png_uint_32>(width);
    image.height = static_cast<png_uint_32>(height);
    image.format = format;
    if (png_image_write_to_file(&image, tmp.c_str(), 0, data, 0, nullptr) == 0) {
      throw DataError("cannot write " + path.string() + ": " + image.message);
    }
  });
}

}  // namespace

std::uint8_t quantize8(double v) {
  const double scaled = std::round(v * 255.0);
  return static_cast<std::uint8_t>(std::clamp(scaled, 0.0, 255.0));
}

GrayImage load_image(const std::filesystem::path& path) {
  const DecodedRgb src = decode_rgb(path);
  Raster<double> px(src.height, src.width);
  for (int r = 0; r < src.height; ++r) {
    for (int c = 0; c < src.width; ++c) {
      const std::uint8_t* p = &src.rgb[3 * (static_cast<std::size_t>(r) * src.width + c)];
      const double luma = 0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2];
      px(r, c) = std::clamp(luma / 255.0, 0.0, 1.0);
    }
  }
  return GrayImage(std::move(px));
}

BinaryMask load_mask(const std::filesystem::path& path) {
  const DecodedRgb src = decode_rgb(path);
  Raster<bool> bits(src.height, src.width);
  for (int r = 0; r < src.height; ++r) {
    for (int c = 0; c < src.width; ++c) {
      const std::uint8_t* p = &src.rgb[3 * (static_cast<std::size_t>(r) * src.width + c)];
      bits(r, c) = (p[0] | p[1] | p[2]) != 0;
    }
  }
  return BinaryMask(std::move(bits));
}

RgbImage load_rgb(const std::filesystem::path& path) {
  DecodedRgb src = decode_rgb(path);
  RgbImage out;
  out.width = src.width;
  out.height = src.height;
  out.data = std::move(src.rgb);
  return out;
}

void save_image(const std::filesystem::path& path, const GrayImage& image) {
  std::vector<std::uint8_t> bytes(static_cast<std::size_t>(image.size()));
  for (Eigen::Index i = 0; i < image.size(); ++i) bytes[i] = quantize8(image.data()[i]);
  encode(path, image.width(), image.height(), PNG_FORMAT_GRAY, bytes.data());
}

void save_mask(const std::filesystem::path& path, const BinaryMask& mask) {
  std::vector<std::uint8_t> bytes(static_cast<std::size_t>(mask.size()));
  for (Eigen::Index i = 0; i < mask.size(); ++i) bytes[i] = mask.bits().data()[i] ? 255 : 0;
  encode(path, mask.width(), mask.height(), PNG_FORMAT_GRAY, bytes.data());
}

void save_rgb(const std::filesystem::path& path, const RgbImage& image) {
  encode(path, image.width, image.height, PNG_FORMAT_RGB, image.data.data());
}

void save_label_map16(const std::filesystem::path& path, int width, int height,
                      const std::vector<std::uint16_t>& labels) {
  if (labels.size() != static_cast<std::size_t>(width) * height) {
    throw DimensionError("label map size does not match dimensions");
  }
  encode(path, width, height, PNG_FORMAT_LINEAR_Y, labels.data());
}

void write_atomically(const std::filesystem::path& path,
                      const std::function<void(const std::filesystem::path&)>& writer) {
  static std::atomic<unsigned> counter{0};
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp" + std::to_string(std::hash<std::thread::id>{}(std::this_thread::get_id()) % 100000) + "_" +
         std::to_string(counter++);
  try {
    writer(tmp);
    std::filesystem::rename(tmp, path);
  } catch (...) {
    std::error_code ignored;
    std::filesystem::remove(tmp, ignored);
    throw;
  }
}

void write_text_atomically(const std::filesystem::path& path, std::string_view text) {
  write_atomically(path, [&](const std::filesystem::path& tmp) {
    std::ofstream out(tmp, std::ios::binary);
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) throw DataError("cannot write " + path.string());
  });
}

}  // namespace drs
