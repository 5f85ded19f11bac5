#include "drs/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <string>

namespace drs {

int ClassScores::argmax() const {
  if (scores.empty()) throw DataError("argmax of empty scores");
  return static_cast<int>(std::max_element(scores.begin(), scores.end()) - scores.begin());
}

std::vector<ClassScores> Classifier::classify_batch(std::span<const GrayImage> images) {
  std::vector<ClassScores> out;
  out.reserve(images.size());
  for (const GrayImage& image : images) {
    try {
      out.push_back(classify(image));
    } catch (const ClassifierUnavailable& e) {
      if (e.request_id() >= 0) throw;
      throw ClassifierUnavailable(e.what(), static_cast<std::int64_t>(out.size()));
    }
  }
  return out;
}

ValidatingClassifier::ValidatingClassifier(std::shared_ptr<Classifier> inner, OutOfRangePolicy policy)
    : inner_(std::move(inner)), policy_(policy) {
  if (!inner_) throw ConfigError("null classifier");
  if (inner_->handshake().class_count < 2) throw ConfigError("classifier must declare at least 2 classes");
}

ClassScores ValidatingClassifier::check(ClassScores scores, std::size_t index) {
  const auto expected = static_cast<std::size_t>(inner_->handshake().class_count);
  if (scores.size() != expected) {
    throw ClassifierUnavailable("classifier returned " + std::to_string(scores.size()) + " scores, expected " +
                                    std::to_string(expected),
                                static_cast<std::int64_t>(index));
  }
  for (double& s : scores.scores) {
    if (!std::isfinite(s)) throw ClassifierUnavailable("non-finite score", static_cast<std::int64_t>(index));
    if (s < 0.0 || s > 1.0) {
      if (policy_ == OutOfRangePolicy::reject) {
        throw ClassifierUnavailable("score " + std::to_string(s) + " outside [0,1]", static_cast<std::int64_t>(index));
      }
      s = std::clamp(s, 0.0, 1.0);
      ++clamped_;
    }
  }
  return scores;
}

ClassScores ValidatingClassifier::classify(const GrayImage& image) { return check(inner_->classify(image), 0); }

std::vector<ClassScores> ValidatingClassifier::classify_batch(std::span<const GrayImage> images) {
  std::vector<ClassScores> out = inner_->classify_batch(images);
  if (out.size() != images.size()) throw ClassifierUnavailable("batch size mismatch");
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = check(std::move(out[i]), i);
  return out;
}

namespace {

const ClassifierInfo kBinaryInfo{2, {"class0", "class1"}, 1};

ClassScores binary(double s) { return ClassScores{{1.0 - s, s}}; }

class ConstantClassifier final : public Classifier {
 public:
  explicit ConstantClassifier(double c) : c_(c) {
    if (!(c >= 0.0 && c <= 1.0)) throw ConfigError("constant classifier score must lie in [0,1]");
  }
  const ClassifierInfo& handshake() const override { return kBinaryInfo; }
  ClassScores classify(const GrayImage&) override { return binary(c_); }

 private:
  double c_;
};

class LinearClassifier final : public Classifier {
 public:
  explicit LinearClassifier(Raster<double> weights) : weights_(std::move(weights)) {
    if (weights_.size() > 0) {
      if ((weights_ < 0.0).any()) throw ConfigError("linear classifier weights must be nonnegative");
      if (weights_.sum() > 1.0 + 1e-12) throw ConfigError("linear classifier weights must sum to at most 1");
    }
  }
  const ClassifierInfo& handshake() const override { return kBinaryInfo; }
  ClassScores classify(const GrayImage& image) override {
    if (weights_.size() == 0) return binary(image.empty() ? 0.0 : image.pixels().mean());
    if (weights_.rows() != image.height() || weights_.cols() != image.width()) {
      throw DimensionError("linear classifier: image size does not match weight raster");
    }
    return binary(std::clamp((weights_ * image.pixels()).sum(), 0.0, 1.0));
  }

 private:
  Raster<double> weights_;
};

class SuperpixelOracleClassifier final : public Classifier {
 public:
  SuperpixelOracleClassifier(BinaryMask region, GrayImage reference)
      : region_(std::move(region)), reference_(std::move(reference)) {
    require_same_shape(region_, reference_, "superpixel oracle");
    if (region_.none()) throw ConfigError("superpixel oracle needs a nonempty target region");
    if ((region_.bits() && (reference_.pixels() == 0.0)).any()) {
      throw ConfigError("superpixel oracle reference must be nonzero on the target region");
    }
  }
  const ClassifierInfo& handshake() const override { return kBinaryInfo; }
  ClassScores classify(const GrayImage& image) override {
    require_same_shape(image, region_, "superpixel oracle");
    const bool intact = (!region_.bits() || (image.pixels() == reference_.pixels())).all();
    return binary(intact ? 1.0 : 0.0);
  }

 private:
  BinaryMask region_;
  GrayImage reference_;
};

class BrightnessThresholdClassifier final : public Classifier {
 public:
  explicit BrightnessThresholdClassifier(double threshold) : threshold_(threshold) {}
  const ClassifierInfo& handshake() const override { return kBinaryInfo; }
  ClassScores classify(const GrayImage& image) override {
    const double mean = image.empty() ? 0.0 : image.pixels().mean();
    return binary(mean >= threshold_ ? 1.0 : 0.0);
  }

 private:
  double threshold_;
};

double parse_number(const std::string& text, const std::string& context) {
  char* end = nullptr;
  const double v = std::strtod(text.c_str(), &end);
  if (text.empty() || end != text.c_str() + text.size()) {
    throw ConfigError("bad number '" + text + "' in synthetic classifier spec '" + context + "'");
  }
  return v;
}

}  // namespace

std::shared_ptr<Classifier> make_synthetic_classifier(const SyntheticClassifierSpec& spec) {
  switch (spec.kind) {
    case SyntheticKind::constant:
      return std::make_shared<ConstantClassifier>(spec.constant);
    case SyntheticKind::linear:
      return std::make_shared<LinearClassifier>(spec.weights);
    case SyntheticKind::superpixel_oracle:
      return std::make_shared<SuperpixelOracleClassifier>(spec.target_region, spec.reference);
    case SyntheticKind::brightness_threshold:
      return std::make_shared<BrightnessThresholdClassifier>(spec.threshold);
  }
  throw ConfigError("unknown synthetic classifier kind");
}

SyntheticClassifierSpec parse_synthetic_spec(const std::string& text) {
  const auto colon = text.find(':');
  const std::string kind = text.substr(0, colon);
  const std::string arg = colon == std::string::npos ? std::string() : text.substr(colon + 1);
  SyntheticClassifierSpec spec;
  if (kind == "constant") {
    spec.kind = SyntheticKind::constant;
    spec.constant = parse_number(arg, text);
  } else if (kind == "mean") {
    spec.kind = SyntheticKind::linear;
  } else if (kind == "brightness") {
    spec.kind = SyntheticKind::brightness_threshold;
    spec.threshold = parse_number(arg, text);
  } else {
    throw ConfigError("unknown synthetic classifier '" + text + "' (expected constant:C, mean, brightness:T)");
  }
  return spec;
}

}  // namespace drs
