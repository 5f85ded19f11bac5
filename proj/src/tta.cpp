#include "drs/tta.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <numbers>
#include <sstream>

namespace drs {

AugmentationSpec default_augmentations() {
  return {{TransformKind::identity, 0.0},   {TransformKind::hflip, 0.0},      {TransformKind::rotate, -5.0},
          {TransformKind::rotate, 5.0},     {TransformKind::brightness, 0.9}, {TransformKind::brightness, 1.1},
          {TransformKind::gamma, 0.9},      {TransformKind::scale, 1.05}};
}

Transform parse_transform(const std::string& text) {
  const auto colon = text.find(':');
  const std::string name = text.substr(0, colon);
  const bool has_value = colon != std::string::npos;
  double value = 0.0;
  if (has_value) {
    const std::string arg = text.substr(colon + 1);
    char* end = nullptr;
    value = std::strtod(arg.c_str(), &end);
    if (arg.empty() || end != arg.c_str() + arg.size()) throw ConfigError("bad transform value in '" + text + "'");
  }
  auto need_value = [&](TransformKind kind) {
    if (!has_value) throw ConfigError("transform '" + name + "' needs a value");
    return Transform{kind, value};
  };
  if (name == "identity") return {TransformKind::identity, 0.0};
  if (name == "hflip") return {TransformKind::hflip, 0.0};
  if (name == "rotate") return need_value(TransformKind::rotate);
  if (name == "brightness") return need_value(TransformKind::brightness);
  if (name == "gamma") {
    const Transform t = need_value(TransformKind::gamma);
    if (!(t.value > 0.0)) throw ConfigError("gamma must be > 0");
    return t;
  }
  if (name == "scale") {
    const Transform t = need_value(TransformKind::scale);
    if (!(t.value > 0.0)) throw ConfigError("scale factor must be > 0");
    return t;
  }
  throw ConfigError("unknown transform '" + name + "'");
}

std::string to_string(const Transform& transform) {
  std::ostringstream out;
  switch (transform.kind) {
    case TransformKind::identity: return "identity";
    case TransformKind::hflip: return "hflip";
    case TransformKind::rotate: out << "rotate:"; break;
    case TransformKind::brightness: out << "brightness:"; break;
    case TransformKind::gamma: out << "gamma:"; break;
    case TransformKind::scale: out << "scale:"; break;
  }
  out << transform.value;
  return out.str();
}

AugmentationSpec parse_augmentations(const std::string& text) {
  AugmentationSpec spec;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    item.erase(0, item.find_first_not_of(" \t"));
    item.erase(item.find_last_not_of(" \t") + 1);
    if (!item.empty()) spec.push_back(parse_transform(item));
  }
  if (spec.empty()) throw ConfigError("augmentation list is empty");
  return spec;
}

namespace {

// Bilinear sample; 0 outside [0,W-1] x [0,H-1].
double sample(const Raster<double>& px, double x, double y) {
  const double w = static_cast<double>(px.cols());
  const double h = static_cast<double>(px.rows());
  constexpr double eps = 1e-9;
  if (x < -eps || y < -eps || x > w - 1 + eps || y > h - 1 + eps) return 0.0;
  x = std::clamp(x, 0.0, w - 1);
  y = std::clamp(y, 0.0, h - 1);
  const int x0 = static_cast<int>(std::floor(x));
  const int y0 = static_cast<int>(std::floor(y));
  const int x1 = std::min(x0 + 1, static_cast<int>(w) - 1);
  const int y1 = std::min(y0 + 1, static_cast<int>(h) - 1);
  const double fx = x - x0;
  const double fy = y - y0;
  const double top = px(y0, x0) * (1 - fx) + px(y0, x1) * fx;
  const double bottom = px(y1, x0) * (1 - fx) + px(y1, x1) * fx;
  return top * (1 - fy) + bottom * fy;
}

template <typename SourceOf>
GrayImage resample(const GrayImage& image, SourceOf source_of) {
  const Raster<double>& px = image.pixels();
  Raster<double> out(image.height(), image.width());
  for (int r = 0; r < image.height(); ++r) {
    for (int c = 0; c < image.width(); ++c) {
      const Eigen::Vector2d src = source_of(Eigen::Vector2d(c, r));
      out(r, c) = std::clamp(sample(px, src.x(), src.y()), 0.0, 1.0);
    }
  }
  return GrayImage(std::move(out));
}

}  // namespace

GrayImage augment(const GrayImage& image, const Transform& transform) {
  const Eigen::Vector2d center((image.width() - 1) / 2.0, (image.height() - 1) / 2.0);
  switch (transform.kind) {
    case TransformKind::identity:
      return image;
    case TransformKind::hflip:
      return GrayImage(Raster<double>(image.pixels().rowwise().reverse()));
    case TransformKind::rotate: {
      const double theta = transform.value * std::numbers::pi / 180.0;
      const Eigen::Rotation2Dd inverse(-theta);
      return resample(image, [&](const Eigen::Vector2d& p) -> Eigen::Vector2d { return center + inverse * (p - center); });
    }
    case TransformKind::scale: {
      const double f = transform.value;
      return resample(image, [&](const Eigen::Vector2d& p) -> Eigen::Vector2d { return center + (p - center) / f; });
    }
    case TransformKind::brightness:
      return GrayImage((image.pixels() * transform.value).min(1.0).max(0.0));
    case TransformKind::gamma:
      return GrayImage(image.pixels().pow(transform.value).min(1.0).max(0.0));
  }
  throw ConfigError("unknown transform");
}

PrsBreakdown prs_from_votes(const std::vector<int>& votes, int class_count, bool entropy_as_score) {
  if (votes.empty()) throw DataError("no votes");
  if (class_count < 2) throw ConfigError("need at least 2 classes");
  std::vector<int> counts(class_count, 0);
  for (int v : votes) {
    if (v < 0 || v >= class_count) throw DataError("vote outside the class range");
    ++counts[v];
  }
  PrsBreakdown out;
  out.votes = votes;
  const double j = static_cast<double>(votes.size());
  out.proportions.resize(class_count);
  for (int i = 0; i < class_count; ++i) out.proportions[i] = counts[i] / j;

  const double log_c = std::log(static_cast<double>(class_count));
  const bool uniform = std::all_of(counts.begin(), counts.end(), [&](int c) { return c == counts.front(); });
  if (uniform) {
    out.entropy = log_c;
  } else {
    double h = 0.0;
    for (double p : out.proportions) {
      if (p > 0.0) h -= p * std::log(p);
    }
    out.entropy = h;
  }
  const double normalized = std::clamp(out.entropy / log_c, 0.0, 1.0);
  out.prs = entropy_as_score ? normalized : 1.0 - normalized;
  return out;
}

PrsBreakdown predictive_reliability(const GrayImage& image, Classifier& classifier, const AugmentationSpec& spec,
                                    bool entropy_as_score) {
  if (spec.empty()) throw ConfigError("augmentation list is empty");
  std::vector<GrayImage> variants;
  variants.reserve(spec.size());
  for (const Transform& t : spec) variants.push_back(augment(image, t));
  std::vector<ClassScores> scores;
  try {
    scores = classifier.classify_batch(variants);
  } catch (const ClassifierUnavailable& e) {
    const std::int64_t at = e.request_id() >= 0 && e.request_id() < static_cast<std::int64_t>(spec.size())
                                ? e.request_id()
                                : 0;
    throw ClassifierUnavailable("augmentation variant " + std::to_string(at) + " (" + to_string(spec[at]) +
                                    "): " + e.what(),
                                at);
  }
  std::vector<int> votes;
  votes.reserve(scores.size());
  for (const ClassScores& s : scores) votes.push_back(s.argmax());
  return prs_from_votes(votes, classifier.handshake().class_count, entropy_as_score);
}

}  // namespace drs
