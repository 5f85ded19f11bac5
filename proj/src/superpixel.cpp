#include "drs/superpixel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

#include "drs/image_io.hpp"

namespace drs {

SuperpixelLabeling::SuperpixelLabeling(Raster<int> labels, int region_count)
    : labels_(std::move(labels)), region_count_(region_count) {
  if (region_count_ < 1 || labels_.size() == 0) throw DataError("labeling must have at least one region");
  if (labels_.minCoeff() < 0 || labels_.maxCoeff() >= region_count_) throw DataError("label out of range");
  std::vector<bool> used(region_count_, false);
  for (Eigen::Index i = 0; i < labels_.size(); ++i) used[labels_.data()[i]] = true;
  if (std::find(used.begin(), used.end(), false) != used.end()) throw DataError("labeling has an unused region id");
}

std::vector<std::int64_t> SuperpixelLabeling::areas() const {
  std::vector<std::int64_t> out(region_count_, 0);
  for (Eigen::Index i = 0; i < labels_.size(); ++i) ++out[labels_.data()[i]];
  return out;
}

void SlicParams::validate() const {
  if (!(target_area >= 1.0)) throw ConfigError("SLIC target area must be >= 1");
  if (iterations < 1) throw ConfigError("SLIC iterations must be >= 1");
  if (!(compactness > 0.0)) throw ConfigError("SLIC compactness must be > 0");
}

namespace {

struct Center {
  double x;
  double y;
  double intensity;
};

double gradient_at(const Raster<double>& px, int r, int c) {
  const int h = static_cast<int>(px.rows());
  const int w = static_cast<int>(px.cols());
  const double dx = px(r, std::min(c + 1, w - 1)) - px(r, std::max(c - 1, 0));
  const double dy = px(std::min(r + 1, h - 1), c) - px(std::max(r - 1, 0), c);
  return dx * dx + dy * dy;
}

std::vector<Center> seed_centers(const Raster<double>& px, double target_area) {
  const int h = static_cast<int>(px.rows());
  const int w = static_cast<int>(px.cols());
  const double area = static_cast<double>(w) * h;
  const long k = std::max(1L, std::lround(area / target_area));
  const int nx = static_cast<int>(std::clamp(std::lround(std::sqrt(k * static_cast<double>(w) / h)), 1L, static_cast<long>(w)));
  const int ny = static_cast<int>(std::clamp(std::lround(static_cast<double>(k) / nx), 1L, static_cast<long>(h)));

  std::vector<Center> centers;
  centers.reserve(static_cast<std::size_t>(nx) * ny);
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      const int c0 = std::min(w - 1, static_cast<int>((i + 0.5) * w / nx));
      const int r0 = std::min(h - 1, static_cast<int>((j + 0.5) * h / ny));
      int best_r = r0;
      int best_c = c0;
      double best = std::numeric_limits<double>::infinity();
      for (int r = std::max(0, r0 - 1); r <= std::min(h - 1, r0 + 1); ++r) {
        for (int c = std::max(0, c0 - 1); c <= std::min(w - 1, c0 + 1); ++c) {
          const double g = gradient_at(px, r, c);
          if (g < best) {
            best = g;
            best_r = r;
            best_c = c;
          }
        }
      }
      centers.push_back({static_cast<double>(best_c), static_cast<double>(best_r), px(best_r, best_c)});
    }
  }
  return centers;
}

// Splits labels into 4-connected components and merges small components
// into their largest neighbour. Returns compact labels in first-seen order.
SuperpixelLabeling enforce_connectivity(const Raster<int>& raw, double min_size) {
  const int h = static_cast<int>(raw.rows());
  const int w = static_cast<int>(raw.cols());
  Raster<int> comp = Raster<int>::Constant(h, w, -1);
  std::vector<std::int64_t> size;
  std::vector<int> stack;
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      if (comp(r, c) >= 0) continue;
      const int id = static_cast<int>(size.size());
      const int label = raw(r, c);
      std::int64_t count = 0;
      comp(r, c) = id;
      stack.assign(1, r * w + c);
      while (!stack.empty()) {
        const int p = stack.back();
        stack.pop_back();
        ++count;
        const int pr = p / w;
        const int pc = p % w;
        const int nbr[4][2] = {{pr - 1, pc}, {pr + 1, pc}, {pr, pc - 1}, {pr, pc + 1}};
        for (const auto& n : nbr) {
          if (n[0] < 0 || n[0] >= h || n[1] < 0 || n[1] >= w) continue;
          if (comp(n[0], n[1]) >= 0 || raw(n[0], n[1]) != label) continue;
          comp(n[0], n[1]) = id;
          stack.push_back(n[0] * w + n[1]);
        }
      }
      size.push_back(count);
    }
  }

  const int n = static_cast<int>(size.size());
  std::vector<std::set<int>> adjacent(n);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      const int a = comp(r, c);
      if (c + 1 < w && comp(r, c + 1) != a) {
        adjacent[a].insert(comp(r, c + 1));
        adjacent[comp(r, c + 1)].insert(a);
      }
      if (r + 1 < h && comp(r + 1, c) != a) {
        adjacent[a].insert(comp(r + 1, c));
        adjacent[comp(r + 1, c)].insert(a);
      }
    }
  }

  std::vector<int> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };

  for (int c = 0; c < n; ++c) {
    if (find(c) != c || static_cast<double>(size[c]) >= min_size) continue;
    int target = -1;
    for (int nb : adjacent[c]) {
      const int root = find(nb);
      if (root == c) continue;
      if (target < 0 || size[root] > size[target] || (size[root] == size[target] && root < target)) target = root;
    }
    if (target < 0) continue;  // the only region in the frame
    parent[c] = target;
    size[target] += size[c];
    adjacent[target].insert(adjacent[c].begin(), adjacent[c].end());
    adjacent[c].clear();
  }

  std::vector<int> compact(n, -1);
  int next = 0;
  Raster<int> labels(h, w);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      const int root = find(comp(r, c));
      if (compact[root] < 0) compact[root] = next++;
      labels(r, c) = compact[root];
    }
  }
  return SuperpixelLabeling(std::move(labels), next);
}

}  // namespace

SuperpixelLabeling slic_segment(const GrayImage& image, const SlicParams& params) {
  params.validate();
  if (image.empty() || static_cast<double>(image.size()) < params.target_area) {
    throw DataError("slic_segment: image is smaller than one superpixel");
  }
  const Raster<double>& px = image.pixels();
  const int h = image.height();
  const int w = image.width();
  const double step = std::sqrt(params.target_area);
  const double spatial_weight = params.compactness / step;

  std::vector<Center> centers = seed_centers(px, params.target_area);
  const int k = static_cast<int>(centers.size());
  Raster<int> labels(h, w);
  Raster<double> dist(h, w);

  for (int iter = 0; iter < params.iterations; ++iter) {
    labels.setConstant(-1);
    dist.setConstant(std::numeric_limits<double>::infinity());
    for (int id = 0; id < k; ++id) {
      const Center& ctr = centers[id];
      const int r0 = std::max(0, static_cast<int>(std::ceil(ctr.y - step)));
      const int r1 = std::min(h - 1, static_cast<int>(std::floor(ctr.y + step)));
      const int c0 = std::max(0, static_cast<int>(std::ceil(ctr.x - step)));
      const int c1 = std::min(w - 1, static_cast<int>(std::floor(ctr.x + step)));
      for (int r = r0; r <= r1; ++r) {
        for (int c = c0; c <= c1; ++c) {
          const double d = std::abs(px(r, c) - ctr.intensity) + spatial_weight * std::hypot(c - ctr.x, r - ctr.y);
          if (d < dist(r, c)) {
            dist(r, c) = d;
            labels(r, c) = id;
          }
        }
      }
    }

    // Pixels outside every window go to the globally nearest center.
    for (int r = 0; r < h; ++r) {
      for (int c = 0; c < w; ++c) {
        if (labels(r, c) >= 0) continue;
        for (int id = 0; id < k; ++id) {
          const Center& ctr = centers[id];
          const double d = std::abs(px(r, c) - ctr.intensity) + spatial_weight * std::hypot(c - ctr.x, r - ctr.y);
          if (d < dist(r, c)) {
            dist(r, c) = d;
            labels(r, c) = id;
          }
        }
      }
    }

    std::vector<Center> sums(k, Center{0.0, 0.0, 0.0});
    std::vector<std::int64_t> counts(k, 0);
    for (int r = 0; r < h; ++r) {
      for (int c = 0; c < w; ++c) {
        const int id = labels(r, c);
        sums[id].x += c;
        sums[id].y += r;
        sums[id].intensity += px(r, c);
        ++counts[id];
      }
    }
    for (int id = 0; id < k; ++id) {
      if (counts[id] == 0) continue;
      const double inv = 1.0 / static_cast<double>(counts[id]);
      centers[id] = {sums[id].x * inv, sums[id].y * inv, sums[id].intensity * inv};
    }
  }

  return enforce_connectivity(labels, params.target_area / 4.0);
}

SuperpixelLabeling grid_segment(int width, int height, int cell_size) {
  if (width <= 0 || height <= 0) throw DataError("grid_segment: empty frame");
  if (cell_size < 1) throw ConfigError("grid cell size must be >= 1");
  const int cols = (width + cell_size - 1) / cell_size;
  const int rows = (height + cell_size - 1) / cell_size;
  Raster<int> labels(height, width);
  for (int r = 0; r < height; ++r) {
    for (int c = 0; c < width; ++c) labels(r, c) = (r / cell_size) * cols + c / cell_size;
  }
  return SuperpixelLabeling(std::move(labels), rows * cols);
}

BinaryMask region_mask(const SuperpixelLabeling& labeling, std::span<const int> region_ids) {
  std::vector<bool> keep(labeling.region_count(), false);
  for (int id : region_ids) {
    if (id < 0 || id >= labeling.region_count()) throw DataError("region id out of range");
    keep[id] = true;
  }
  Raster<bool> bits(labeling.height(), labeling.width());
  for (Eigen::Index i = 0; i < bits.size(); ++i) bits.data()[i] = keep[labeling.labels().data()[i]];
  return BinaryMask(std::move(bits));
}

RgbImage boundary_overlay(const GrayImage& image, const SuperpixelLabeling& labeling) {
  require_same_shape(image, labeling, "boundary_overlay");
  RgbImage out(image.width(), image.height());
  for (int r = 0; r < image.height(); ++r) {
    for (int c = 0; c < image.width(); ++c) {
      const int l = labeling(r, c);
      const bool edge = (c + 1 < image.width() && labeling(r, c + 1) != l) ||
                        (r + 1 < image.height() && labeling(r + 1, c) != l);
      std::uint8_t* p = out.pixel(r, c);
      if (edge) {
        p[0] = 255;
        p[1] = 0;
        p[2] = 0;
      } else {
        p[0] = p[1] = p[2] = quantize8(image(r, c));
      }
    }
  }
  return out;
}

bool regions_are_connected(const SuperpixelLabeling& labeling) {
  const int h = labeling.height();
  const int w = labeling.width();
  Raster<bool> seen = Raster<bool>::Constant(h, w, false);
  std::vector<bool> region_seen(labeling.region_count(), false);
  std::vector<int> stack;
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      if (seen(r, c)) continue;
      const int label = labeling(r, c);
      if (region_seen[label]) return false;  // second component of this label
      region_seen[label] = true;
      seen(r, c) = true;
      stack.assign(1, r * w + c);
      while (!stack.empty()) {
        const int p = stack.back();
        stack.pop_back();
        const int pr = p / w;
        const int pc = p % w;
        const int nbr[4][2] = {{pr - 1, pc}, {pr + 1, pc}, {pr, pc - 1}, {pr, pc + 1}};
        for (const auto& n : nbr) {
          if (n[0] < 0 || n[0] >= h || n[1] < 0 || n[1] >= w) continue;
          if (seen(n[0], n[1]) || labeling(n[0], n[1]) != label) continue;
          seen(n[0], n[1]) = true;
          stack.push_back(n[0] * w + n[1]);
        }
      }
    }
  }
  return true;
}

}  // namespace drs
