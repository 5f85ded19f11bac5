#ifndef DRS_TTA_HPP
#define DRS_TTA_HPP

#include <string>
#include <vector>

#include "drs/classifier.hpp"
#include "drs/image.hpp"

namespace drs {

enum class TransformKind { identity, hflip, rotate, brightness, gamma, scale };

// One deterministic test-time augmentation. `value` is the angle in degrees
// (rotate), the multiplier (brightness, scale) or the exponent (gamma).
struct Transform {
  TransformKind kind = TransformKind::identity;
  double value = 0.0;

  friend bool operator==(const Transform&, const Transform&) = default;
};

using AugmentationSpec = std::vector<Transform>;

// identity, hflip, rotate(-5), rotate(+5), brightness(0.9), brightness(1.1),
// gamma(0.9), scale(1.05).
AugmentationSpec default_augmentations();

// "name" or "name:value", e.g. "rotate:-5".
Transform parse_transform(const std::string& text);
std::string to_string(const Transform& transform);
// Comma-separated list of transforms.
AugmentationSpec parse_augmentations(const std::string& text);

// Same dimensions out. Geometric transforms resample bilinearly about the
// image center with 0 outside the frame; photometric ones clamp to [0,1].
GrayImage augment(const GrayImage& image, const Transform& transform);

struct PrsBreakdown {
  std::vector<int> votes;           // argmax class per augmentation
  std::vector<double> proportions;  // per class
  double entropy = 0.0;             // nats
  double prs = 0.0;
};

// Vote entropy over the augmented copies. prs = 1 - H / log C, or
// H / log C when `entropy_as_score` is set.
PrsBreakdown predictive_reliability(const GrayImage& image, Classifier& classifier, const AugmentationSpec& spec,
                                    bool entropy_as_score = false);

// Entropy and score from a vote list alone.
PrsBreakdown prs_from_votes(const std::vector<int>& votes, int class_count, bool entropy_as_score = false);

}  // namespace drs

#endif  // DRS_TTA_HPP
