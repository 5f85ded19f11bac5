#include "drs/attribution.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <cstring>
#include <exception>
#include <fstream>
#include <mutex>
#include <random>
#include <thread>

#include "drs/image_io.hpp"

namespace drs {

int SamplingConfig::effective_cell_size() const {
  return cell_size > 0 ? cell_size : static_cast<int>(std::ceil(std::sqrt(slic.target_area)));
}

void SamplingConfig::validate() const {
  if (sample_count < 1) throw ConfigError("sample count must be >= 1");
  if (!(inclusion_prob > 0.0 && inclusion_prob < 1.0)) throw ConfigError("inclusion probability must lie in (0,1)");
  if (target_class < 0) throw ConfigError("target class must be >= 0");
  if (batch_size < 1) throw ConfigError("batch size must be >= 1");
  if (workers < 1) throw ConfigError("worker count must be >= 1");
  if (cell_size < 0) throw ConfigError("grid cell size must be >= 0");
  slic.validate();
}

BinaryMask MaskSample::mask(const SuperpixelLabeling& units) const {
  Raster<bool> bits(units.height(), units.width());
  for (Eigen::Index i = 0; i < bits.size(); ++i) bits.data()[i] = kept[units.labels().data()[i]] != 0;
  return BinaryMask(std::move(bits));
}

namespace {

double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

std::vector<MaskSample> draw_samples(int unit_count, const SamplingConfig& config) {
  std::vector<MaskSample> samples;
  if (config.mode == SamplingMode::exhaustive) {
    const std::uint64_t total = std::uint64_t{1} << unit_count;
    samples.resize(total);
    for (std::uint64_t t = 0; t < total; ++t) {
      samples[t].kept.resize(unit_count);
      for (int j = 0; j < unit_count; ++j) samples[t].kept[j] = static_cast<std::uint8_t>((t >> j) & 1U);
    }
    return samples;
  }
  std::mt19937_64 rng(config.seed);
  samples.resize(config.sample_count);
  for (MaskSample& s : samples) {
    s.kept.resize(unit_count);
    for (int j = 0; j < unit_count; ++j) s.kept[j] = uniform01(rng) < config.inclusion_prob ? 1 : 0;
  }
  return samples;
}

GrayImage occlude(const GrayImage& image, const SuperpixelLabeling& units, const MaskSample& sample) {
  Raster<double> px(image.height(), image.width());
  const int* labels = units.labels().data();
  const double* src = image.data();
  for (Eigen::Index i = 0; i < px.size(); ++i) px.data()[i] = sample.kept[labels[i]] ? src[i] : 0.0;
  return GrayImage(std::move(px));
}

}  // namespace

AttributionResult attribute_units(const GrayImage& image, Classifier& classifier, const SuperpixelLabeling& units,
                                  const SamplingConfig& config) {
  config.validate();
  require_same_shape(image, units, "attribute");
  const int class_count = classifier.handshake().class_count;
  if (config.target_class >= class_count) {
    throw ConfigError("target class " + std::to_string(config.target_class) + " >= class count " +
                      std::to_string(class_count));
  }
  const int unit_count = units.region_count();
  if (config.mode == SamplingMode::exhaustive && unit_count > kMaxExhaustiveUnits) {
    throw ConfigError("exhaustive sampling supports at most " + std::to_string(kMaxExhaustiveUnits) + " units, got " +
                      std::to_string(unit_count));
  }

  AttributionResult result;
  result.units = units;
  result.samples = draw_samples(unit_count, config);
  std::vector<MaskSample>& samples = result.samples;
  const std::size_t total = samples.size();
  const std::size_t batch = static_cast<std::size_t>(config.batch_size);
  const std::size_t batch_count = (total + batch - 1) / batch;

  // Scores land in per-sample slots, so the order of evaluation is free.
  std::atomic<std::size_t> next_batch{0};
  std::atomic<bool> failed{false};
  std::mutex serial;  // for single-flight classifiers
  std::mutex error_mutex;
  std::exception_ptr first_error;
  std::size_t first_error_batch = batch_count;

  auto work = [&] {
    std::vector<GrayImage> pending;
    for (std::size_t b = next_batch++; b < batch_count && !failed; b = next_batch++) {
      const std::size_t begin = b * batch;
      const std::size_t end = std::min(total, begin + batch);
      try {
        pending.clear();
        for (std::size_t t = begin; t < end; ++t) pending.push_back(occlude(image, units, samples[t]));
        std::vector<ClassScores> scores;
        if (classifier.concurrent_safe()) {
          scores = classifier.classify_batch(pending);
        } else {
          std::lock_guard lock(serial);
          scores = classifier.classify_batch(pending);
        }
        if (scores.size() != pending.size()) throw ClassifierUnavailable("classifier returned a short batch");
        for (std::size_t t = begin; t < end; ++t) {
          const ClassScores& s = scores[t - begin];
          if (static_cast<int>(s.size()) <= config.target_class) {
            throw ClassifierUnavailable("classifier returned too few scores");
          }
          samples[t].score = s[config.target_class];
        }
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (b < first_error_batch) {
          first_error_batch = b;
          first_error = std::current_exception();
        }
        failed = true;
      }
    }
  };

  const int workers = static_cast<int>(std::min<std::size_t>(config.workers, std::max<std::size_t>(batch_count, 1)));
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (int i = 0; i < workers; ++i) pool.emplace_back(work);
  }

  if (first_error) {
    const auto at = static_cast<std::int64_t>(first_error_batch * batch);
    try {
      std::rethrow_exception(first_error);
    } catch (const ClassifierUnavailable& e) {
      throw ClassifierUnavailable(std::string("attribution sample ") + std::to_string(at) + ": " + e.what(), at);
    }
  }

  // Ordered accumulation keeps the result independent of the worker count.
  std::vector<double> unit_sum(unit_count, 0.0);
  for (const MaskSample& s : samples) {
    for (int j = 0; j < unit_count; ++j) unit_sum[j] += s.score * static_cast<double>(s.kept[j]);
  }
  const double sample_total = static_cast<double>(total);
  Raster<double> values(units.height(), units.width());
  for (Eigen::Index i = 0; i < values.size(); ++i) values.data()[i] = unit_sum[units.labels().data()[i]] / sample_total;
  result.map = AttributionMap(std::move(values));
  return result;
}

AttributionResult attribute(const GrayImage& image, Classifier& classifier, const SamplingConfig& config) {
  config.validate();
  switch (config.mode) {
    case SamplingMode::grid:
      return attribute_units(image, classifier, grid_segment(image.width(), image.height(), config.effective_cell_size()),
                             config);
    case SamplingMode::superpixel:
    case SamplingMode::exhaustive:
      return attribute_units(image, classifier, slic_segment(image, config.slic), config);
  }
  throw ConfigError("unknown sampling mode");
}

double monte_carlo_stderr(std::span<const MaskSample> samples, const SuperpixelLabeling& units, int row, int col) {
  if (samples.size() < 2) throw DataError("standard error needs at least two samples");
  const int unit = units(row, col);
  const double n = static_cast<double>(samples.size());
  double mean = 0.0;
  for (const MaskSample& s : samples) mean += s.score * s.kept[unit];
  mean /= n;
  double ss = 0.0;
  for (const MaskSample& s : samples) {
    const double d = s.score * s.kept[unit] - mean;
    ss += d * d;
  }
  return std::sqrt(ss / (n - 1.0) / n);
}

namespace {

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out += static_cast<char>((v >> (8 * i)) & 0xff);
}

std::uint32_t get_u32(const unsigned char* p) {
  return p[0] | (p[1] << 8) | (p[2] << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

}  // namespace

void save_attribution(const std::filesystem::path& path, const AttributionMap& map) {
  std::string bytes = "ATTR";
  put_u32(bytes, static_cast<std::uint32_t>(map.width()));
  put_u32(bytes, static_cast<std::uint32_t>(map.height()));
  put_u32(bytes, 0);
  bytes.reserve(16 + 4 * static_cast<std::size_t>(map.size()));
  for (Eigen::Index i = 0; i < map.size(); ++i) put_u32(bytes, std::bit_cast<std::uint32_t>(static_cast<float>(map.data()[i])));
  write_text_atomically(path, bytes);
}

AttributionMap load_attribution(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("missing attribution file: " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  if (bytes.size() < 16 || bytes.compare(0, 4, "ATTR") != 0) throw DataError("not an attribution file: " + path.string());
  const std::uint32_t w = get_u32(p + 4);
  const std::uint32_t h = get_u32(p + 8);
  if (bytes.size() != 16 + 4 * static_cast<std::size_t>(w) * h) throw DataError("truncated attribution file");
  Raster<double> values(h, w);
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    values.data()[i] = std::bit_cast<float>(get_u32(p + 16 + 4 * i));
  }
  return AttributionMap(std::move(values));
}

void save_attribution_png(const std::filesystem::path& path, const AttributionMap& map) {
  save_image(path, GrayImage(normalize_minmax(map).values()));
}

}  // namespace drs
