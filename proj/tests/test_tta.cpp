#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "drs/tta.hpp"
#include "test_support.hpp"

using namespace drs;

namespace {

// Votes for class (index of the variant) % C; lets a test choose any vote pattern.
class ScriptedVotes final : public Classifier {
 public:
  ScriptedVotes(int classes, std::vector<int> votes) : votes_(std::move(votes)) { info_.class_count = classes; }
  const ClassifierInfo& handshake() const override { return info_; }
  ClassScores classify(const GrayImage&) override {
    std::vector<double> s(static_cast<std::size_t>(info_.class_count), 0.0);
    s[static_cast<std::size_t>(votes_.at(calls_++ % votes_.size()))] = 1.0;
    return {s};
  }

 private:
  ClassifierInfo info_;
  std::vector<int> votes_;
  std::size_t calls_ = 0;
};

}  // namespace

TEST(Augment, IdentityAndInvolution) {
  std::mt19937_64 rng(1);
  const GrayImage x = fixtures::random_image(9, 6, rng);
  EXPECT_EQ(augment(x, {TransformKind::identity, 0}), x);
  const Transform flip{TransformKind::hflip, 0};
  EXPECT_EQ(augment(augment(x, flip), flip), x);
  EXPECT_EQ(augment(x, flip)(2, 0), x(2, 8));
}

TEST(Augment, Photometric) {
  const GrayImage half(4, 4, 0.5);
  const GrayImage bright = augment(half, {TransformKind::brightness, 1.1});
  EXPECT_TRUE(((bright.pixels() - 0.55).abs() < 1e-15).all());
  EXPECT_TRUE((augment(GrayImage(2, 2, 0.95), {TransformKind::brightness, 1.1}).pixels() == 1.0).all());
  const GrayImage g = augment(half, {TransformKind::gamma, 0.9});
  EXPECT_NEAR(g(0, 0), std::pow(0.5, 0.9), 1e-15);
}

TEST(Augment, GeometricKeepsShapeAndRange) {
  std::mt19937_64 rng(2);
  const GrayImage x = fixtures::random_image(21, 15, rng);
  for (const Transform& t : default_augmentations()) {
    const GrayImage y = augment(x, t);
    EXPECT_EQ(y.width(), 21);
    EXPECT_EQ(y.height(), 15);
    EXPECT_GE(y.pixels().minCoeff(), 0.0);
    EXPECT_LE(y.pixels().maxCoeff(), 1.0);
  }
}

TEST(Augment, RotationAboutCenter) {
  // The center pixel of an odd frame is a fixed point of rotation and scaling.
  std::mt19937_64 rng(3);
  const GrayImage x = fixtures::random_image(11, 11, rng);
  EXPECT_NEAR(augment(x, {TransformKind::rotate, 5})(5, 5), x(5, 5), 1e-12);
  EXPECT_NEAR(augment(x, {TransformKind::scale, 1.05})(5, 5), x(5, 5), 1e-12);
  EXPECT_TRUE(augment(x, {TransformKind::rotate, 0}).pixels().isApprox(x.pixels(), 1e-12));
  // 90 degrees on a square frame is an exact permutation with no fill.
  const GrayImage q = augment(x, {TransformKind::rotate, 90});
  std::vector<double> a(x.data(), x.data() + x.size()), b(q.data(), q.data() + q.size());
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], 1e-9);
}

TEST(Augment, ParsingAndNames) {
  EXPECT_EQ(parse_transform("rotate:-5"), (Transform{TransformKind::rotate, -5}));
  EXPECT_EQ(parse_transform("hflip"), (Transform{TransformKind::hflip, 0}));
  for (const Transform& t : default_augmentations()) EXPECT_EQ(parse_transform(to_string(t)), t);
  EXPECT_EQ(parse_augmentations("identity,hflip,gamma:0.9").size(), 3u);
  EXPECT_THROW(parse_transform("vflip"), ConfigError);
  EXPECT_THROW(parse_transform("rotate"), ConfigError);
  EXPECT_THROW(parse_transform("gamma:0"), ConfigError);
  EXPECT_THROW(parse_transform("scale:x"), ConfigError);
  EXPECT_EQ(default_augmentations().size(), 8u);
  EXPECT_EQ(default_augmentations().front().kind, TransformKind::identity);
}

TEST(Prs, Unanimous) {
  const PrsBreakdown p = prs_from_votes({1, 1, 1, 1, 1, 1, 1, 1}, 2);
  EXPECT_EQ(p.entropy, 0.0);
  EXPECT_EQ(p.prs, 1.0);
  EXPECT_EQ(p.proportions, (std::vector<double>{0.0, 1.0}));
}

TEST(Prs, EvenSplitIsZero) {
  const PrsBreakdown p = prs_from_votes({0, 1, 0, 1, 0, 1, 0, 1}, 2);
  EXPECT_EQ(p.entropy, std::log(2.0));
  EXPECT_EQ(p.prs, 0.0);
  EXPECT_EQ(prs_from_votes({0, 1, 2, 2, 1, 0}, 3).prs, 0.0);
}

TEST(Prs, SixTwoSplit) {
  const PrsBreakdown p = prs_from_votes({0, 0, 0, 0, 0, 0, 1, 1}, 2);
  EXPECT_NEAR(p.entropy, 0.5623, 1e-4);
  EXPECT_NEAR(p.prs, 0.1887, 1e-4);
  // Hand oracle: H = -(0.75 ln 0.75 + 0.25 ln 0.25).
  const double h = -(0.75 * std::log(0.75) + 0.25 * std::log(0.25));
  EXPECT_NEAR(p.prs, 1.0 - h / std::log(2.0), 1e-15);
  EXPECT_NEAR(prs_from_votes({0, 0, 0, 0, 0, 0, 1, 1}, 2, true).prs, h / std::log(2.0), 1e-15);
}

TEST(Prs, BoundsAndPermutationInvariance) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 200; ++trial) {
    const int classes = 2 + static_cast<int>(rng() % 4);
    std::vector<int> votes(1 + rng() % 12);
    for (int& v : votes) v = static_cast<int>(rng() % classes);
    const PrsBreakdown p = prs_from_votes(votes, classes);
    EXPECT_GE(p.prs, 0.0);
    EXPECT_LE(p.prs, 1.0);
    EXPECT_GE(p.entropy, 0.0);
    EXPECT_LE(p.entropy, std::log(static_cast<double>(classes)) + 1e-15);
    double sum = 0.0;
    for (double q : p.proportions) sum += q;
    EXPECT_NEAR(sum, 1.0, 1e-15);
    const bool unanimous = std::all_of(votes.begin(), votes.end(), [&](int v) { return v == votes[0]; });
    EXPECT_EQ(p.prs == 1.0, unanimous);
    std::shuffle(votes.begin(), votes.end(), rng);
    EXPECT_EQ(prs_from_votes(votes, classes).prs, p.prs);
  }
}

TEST(Prs, Errors) {
  EXPECT_THROW(prs_from_votes({}, 2), DataError);
  EXPECT_THROW(prs_from_votes({0, 2}, 2), DataError);
  EXPECT_THROW(prs_from_votes({0}, 1), ConfigError);
}

TEST(PredictiveReliability, VotesComeFromClassifier) {
  ScriptedVotes g(2, {0, 0, 0, 0, 0, 0, 1, 1});
  const PrsBreakdown p = predictive_reliability(GrayImage(8, 8, 0.5), g, default_augmentations());
  EXPECT_EQ(p.votes, (std::vector<int>{0, 0, 0, 0, 0, 0, 1, 1}));
  EXPECT_NEAR(p.prs, 0.1887, 1e-4);
}

TEST(PredictiveReliability, SyntheticMeanIsUnanimousOnBrightImage) {
  auto g = make_synthetic_classifier(parse_synthetic_spec("mean"));
  const PrsBreakdown p = predictive_reliability(GrayImage(16, 16, 0.9), *g, default_augmentations());
  EXPECT_EQ(p.prs, 1.0);
  EXPECT_EQ(p.votes.size(), 8u);
}

TEST(PredictiveReliability, FailureNamesVariant) {
  class FailsOnThird final : public Classifier {
   public:
    const ClassifierInfo& handshake() const override { return info_; }
    ClassScores classify(const GrayImage&) override {
      if (++calls_ == 3) throw ClassifierUnavailable("model crashed");
      return {{0.5, 0.5}};
    }

   private:
    ClassifierInfo info_;
    int calls_ = 0;
  };
  FailsOnThird g;
  try {
    predictive_reliability(GrayImage(8, 8, 0.5), g, default_augmentations());
    FAIL() << "expected a classifier error";
  } catch (const ClassifierUnavailable& e) {
    EXPECT_NE(std::string(e.what()).find("variant 2"), std::string::npos) << e.what();
  }
}
