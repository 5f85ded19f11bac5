#ifndef DRS_CLASSIFIER_HPP
#define DRS_CLASSIFIER_HPP

#include <atomic>
#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "drs/image.hpp"

namespace drs {

struct ClassScores {
  std::vector<double> scores;

  std::size_t size() const { return scores.size(); }
  double operator[](std::size_t i) const { return scores[i]; }
  // Index of the highest score; ties go to the lower index.
  int argmax() const;
  friend bool operator==(const ClassScores&, const ClassScores&) = default;
};

struct ClassifierInfo {
  int class_count = 2;
  std::vector<std::string> class_names;
  int input_channels = 1;  // 1, or 3 for channel-replicated gray
};

// Black-box classifier G. Only pixels go in and only per-class scores come
// out; implementations must be deterministic for identical rasters.
class Classifier {
 public:
  virtual ~Classifier() = default;

  // Capabilities exchanged once when the classifier comes up.
  virtual const ClassifierInfo& handshake() const = 0;

  virtual ClassScores classify(const GrayImage& image) = 0;

  // Order-preserving; equivalent to mapping classify().
  virtual std::vector<ClassScores> classify_batch(std::span<const GrayImage> images);

  // False means callers must not overlap calls (single-flight).
  virtual bool concurrent_safe() const { return true; }
};

enum class OutOfRangePolicy { reject, clamp };

// Checks every response against the handshake: one finite score per class,
// each in [0,1]. With OutOfRangePolicy::clamp, out-of-range values are
// clamped and counted instead of rejected.
class ValidatingClassifier final : public Classifier {
 public:
  ValidatingClassifier(std::shared_ptr<Classifier> inner, OutOfRangePolicy policy = OutOfRangePolicy::reject);

  const ClassifierInfo& handshake() const override { return inner_->handshake(); }
  ClassScores classify(const GrayImage& image) override;
  std::vector<ClassScores> classify_batch(std::span<const GrayImage> images) override;
  bool concurrent_safe() const override { return inner_->concurrent_safe(); }

  std::size_t clamped_count() const { return clamped_.load(); }

 private:
  ClassScores check(ClassScores scores, std::size_t index);

  std::shared_ptr<Classifier> inner_;
  OutOfRangePolicy policy_;
  std::atomic<std::size_t> clamped_{0};
};

// ---------------------------------------------------------------------------
// Synthetic two-class classifiers. Class 1 carries the score s, class 0 gets
// 1 - s. They exist to give the attribution math closed-form answers.

enum class SyntheticKind { constant, linear, superpixel_oracle, brightness_threshold };

struct SyntheticClassifierSpec {
  SyntheticKind kind = SyntheticKind::constant;
  double constant = 0.5;      // constant
  Raster<double> weights;     // linear; empty = uniform 1/(W*H) at any size
  BinaryMask target_region;   // superpixel_oracle
  GrayImage reference;        // superpixel_oracle: unmasked pixels of the region
  double threshold = 0.5;     // brightness_threshold, on mean intensity
};

std::shared_ptr<Classifier> make_synthetic_classifier(const SyntheticClassifierSpec& spec);

// CLI form: "constant:C", "mean", "brightness:T".
SyntheticClassifierSpec parse_synthetic_spec(const std::string& text);

}  // namespace drs

#endif  // DRS_CLASSIFIER_HPP
