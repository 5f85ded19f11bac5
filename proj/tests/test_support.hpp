#ifndef DRS_TESTS_SUPPORT_HPP
#define DRS_TESTS_SUPPORT_HPP

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <random>
#include <string>
#include <vector>

#include "drs/cli/manifest.hpp"
#include "drs/image.hpp"
#include "drs/image_io.hpp"

namespace drs::fixtures {

inline double uniform01(std::mt19937_64& rng) {
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

inline GrayImage random_image(int w, int h, std::mt19937_64& rng) {
  Raster<double> px(h, w);
  for (Eigen::Index i = 0; i < px.size(); ++i) px.data()[i] = uniform01(rng);
  return GrayImage(std::move(px));
}

inline BinaryMask random_mask(int w, int h, double density, std::mt19937_64& rng) {
  Raster<bool> bits(h, w);
  for (Eigen::Index i = 0; i < bits.size(); ++i) bits.data()[i] = uniform01(rng) < density;
  return BinaryMask(std::move(bits));
}

inline BinaryMask random_nonempty_mask(int w, int h, double density, std::mt19937_64& rng) {
  BinaryMask m = random_mask(w, h, density, rng);
  if (m.none()) {
    Raster<bool> bits = m.bits();
    bits(std::uniform_int_distribution<int>(0, h - 1)(rng), std::uniform_int_distribution<int>(0, w - 1)(rng)) = true;
    m = BinaryMask(std::move(bits));
  }
  return m;
}

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / (tag + "-" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

// n noisy images, each with a bright rectangular lesion given as its mask.
// Labels alternate benign/malignant. Writes <dir>/manifest.csv.
inline std::vector<cli::ManifestEntry> write_synthetic_dataset(const std::filesystem::path& dir, int n, int size,
                                                              std::mt19937_64& rng) {
  std::filesystem::create_directories(dir);
  std::vector<cli::ManifestEntry> entries;
  for (int i = 0; i < n; ++i) {
    Raster<double> px(size, size);
    for (Eigen::Index k = 0; k < px.size(); ++k) px.data()[k] = 0.1 + 0.3 * uniform01(rng);
    const int side = size / 4 + static_cast<int>(rng() % static_cast<std::uint64_t>(size / 4));
    const int x0 = static_cast<int>(rng() % static_cast<std::uint64_t>(size - side));
    const int y0 = static_cast<int>(rng() % static_cast<std::uint64_t>(size - side));
    px.block(y0, x0, side, side).array() += 0.5;
    const std::string stem = "case" + std::to_string(i);
    save_image(dir / (stem + ".png"), GrayImage(px));
    save_mask(dir / (stem + "_mask.png"), rect_mask(size, size, {x0, y0, x0 + side, y0 + side}));
    entries.push_back({dir / (stem + ".png"), {dir / (stem + "_mask.png")}, i % 2, stem});
  }
  cli::save_manifest(dir / "manifest.csv", entries);
  return entries;
}

// Runs a shell command, returning its exit status (-1 if it did not exit normally).
inline int run_command(const std::string& command) {
  const int status = std::system(command.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace drs::fixtures

#endif  // DRS_TESTS_SUPPORT_HPP
