#include <gtest/gtest.h>

#include <cmath>

#include "drs/reliability.hpp"
#include "test_support.hpp"

using namespace drs;

namespace {

struct Fixture {
  GrayImage image;
  BinaryMask lesion;
};

Fixture bright_lesion(int size = 32) {
  Raster<double> px = Raster<double>::Constant(size, size, 0.2);
  px.block(10, 10, 10, 10).setConstant(0.9);
  return {GrayImage(px), rect_mask(size, size, {10, 10, 20, 20})};
}

ReliabilityConfig small_config() {
  ReliabilityConfig c;
  c.sampling.sample_count = 256;
  c.sampling.mode = SamplingMode::grid;
  c.sampling.cell_size = 4;
  return c;
}

// Succeeds for the first `ok` calls, then fails.
class FailsAfter final : public Classifier {
 public:
  explicit FailsAfter(int ok) : ok_(ok) {}
  const ClassifierInfo& handshake() const override { return info_; }
  ClassScores classify(const GrayImage& x) override {
    if (calls_++ >= ok_) throw ClassifierUnavailable("model crashed");
    const double s = x.pixels().mean();
    return {{1.0 - s, s}};
  }

 private:
  ClassifierInfo info_;
  int ok_;
  int calls_ = 0;
};

std::string message_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const std::exception& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST(Fuse, Examples) {
  EXPECT_EQ(fuse(0.3, 0.9, {1.0}), 0.3);
  EXPECT_EQ(fuse(0.3, 0.9, {0.0}), 0.9);
  EXPECT_NEAR(fuse(0.8, 0.6, {0.5}), 0.7, 1e-15);
}

TEST(Fuse, BoundsAndMonotonicity) {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 500; ++trial) {
    const double irs = fixtures::uniform01(rng), prs = fixtures::uniform01(rng), mu = fixtures::uniform01(rng);
    const double d = fuse(irs, prs, {mu});
    EXPECT_GE(d, std::min(irs, prs) - 1e-15);
    EXPECT_LE(d, std::max(irs, prs) + 1e-15);
    const double bump = 0.5 * fixtures::uniform01(rng) * (1.0 - irs);
    EXPECT_GE(fuse(irs + bump, prs, {mu}), d);
    EXPECT_GE(fuse(irs, std::min(1.0, prs + bump), {mu}), d);
  }
}

TEST(Fuse, Errors) {
  EXPECT_THROW(fuse(1.1, 0.5, {0.5}), DataError);
  EXPECT_THROW(fuse(0.5, -0.1, {0.5}), DataError);
  EXPECT_THROW(FusionConfig{1.5}.validate(), ConfigError);
  EXPECT_THROW(FusionConfig{-0.1}.validate(), ConfigError);
}

TEST(MeanDrs, Examples) {
  std::vector<ReliabilityReport> reports(3);
  reports[0].drs = 0.2;
  reports[1].drs = 0.4;
  reports[2].drs = 0.9;
  EXPECT_NEAR(mean_drs(reports), 0.5, 1e-15);
  EXPECT_EQ(mean_drs(std::span(reports).first(1)), 0.2);
  EXPECT_THROW(mean_drs(std::span<const ReliabilityReport>{}), DataError);
}

TEST(DeriveSeed, DistinctPerIndexAndStable) {
  EXPECT_EQ(derive_seed(7, 3), derive_seed(7, 3));
  EXPECT_NE(derive_seed(7, 3), derive_seed(7, 4));
  EXPECT_NE(derive_seed(7, 3), derive_seed(8, 3));
}

TEST(EvaluateSample, FusesItsOwnParts) {
  const Fixture f = bright_lesion();
  auto g = make_synthetic_classifier(parse_synthetic_spec("mean"));
  ReliabilityConfig config = small_config();
  config.fusion.mu = 0.3;
  const SampleEvaluation e = evaluate_sample(f.image, f.lesion, 0, *g, config, "case", 42);
  const ReliabilityReport& r = e.report;
  EXPECT_EQ(r.id, "case");
  EXPECT_EQ(r.seed, 42u);
  EXPECT_EQ(r.predicted, 0);  // mean intensity below one half
  EXPECT_TRUE(r.correct);
  EXPECT_EQ(r.confidence, r.scores[0]);
  EXPECT_EQ(r.drs, 0.3 * r.irs.irs + 0.7 * r.prs);
  EXPECT_EQ(r.irs, summarize(e.irs));
  EXPECT_EQ(r.votes.size(), config.augmentations.size());
  EXPECT_GE(r.irs.irs, 0.0);
  EXPECT_LE(r.irs.irs, 1.0);
  EXPECT_EQ(e.attribution.samples.size(), 256u);
  EXPECT_EQ(r.category, classify_rationale(r.rationale, config.thresholds));
}

TEST(EvaluateSample, DeterministicForFixedSeed) {
  const Fixture f = bright_lesion();
  auto g = make_synthetic_classifier(parse_synthetic_spec("mean"));
  ReliabilityConfig config = small_config();
  const ReliabilityReport a = evaluate_sample(f.image, f.lesion, 1, *g, config, "x", 5).report;
  config.sampling.workers = 3;
  config.sampling.batch_size = 7;
  const ReliabilityReport b = evaluate_sample(f.image, f.lesion, 1, *g, config, "x", 5).report;
  EXPECT_EQ(a.drs, b.drs);
  EXPECT_EQ(a.irs, b.irs);
  EXPECT_EQ(to_json(a)["drs"], to_json(b)["drs"]);
}

TEST(EvaluateSample, ErrorsNameTheStage) {
  const Fixture f = bright_lesion();
  auto g = make_synthetic_classifier(parse_synthetic_spec("mean"));
  const ReliabilityConfig config = small_config();
  EXPECT_THROW(evaluate_sample(f.image, f.lesion, 2, *g, config), DataError);
  EXPECT_NE(message_of([&] { evaluate_sample(f.image, f.lesion, 2, *g, config); }).find("stage 'config'"),
            std::string::npos);
  EXPECT_THROW(evaluate_sample(f.image, BinaryMask(32, 32), 0, *g, config), DataError);
  EXPECT_THROW(evaluate_sample(f.image, BinaryMask(16, 16, true), 0, *g, config), DimensionError);

  FailsAfter early(0);
  EXPECT_NE(message_of([&] { evaluate_sample(f.image, f.lesion, 0, early, config); }).find("stage 'classify'"),
            std::string::npos);
  FailsAfter mid(10);
  const std::string m = message_of([&] { evaluate_sample(f.image, f.lesion, 0, mid, config); });
  EXPECT_NE(m.find("stage 'attribute'"), std::string::npos) << m;
  EXPECT_THROW(evaluate_sample(f.image, f.lesion, 0, mid, config), ClassifierUnavailable);
  FailsAfter late(1 + 256);
  EXPECT_NE(message_of([&] { evaluate_sample(f.image, f.lesion, 0, late, config); }).find("stage 'prs'"),
            std::string::npos);
}

TEST(ReportJson, RoundTrip) {
  const Fixture f = bright_lesion();
  auto g = make_synthetic_classifier(parse_synthetic_spec("mean"));
  const ReliabilityReport r = evaluate_sample(f.image, f.lesion, 1, *g, small_config(), "dir/a", 9).report;
  const nlohmann::json j = to_json(r);
  for (const char* key : {"id", "label", "predicted", "correct", "scores", "confidence", "irs", "prs", "mu", "drs",
                          "rationale", "doctor_trusted", "seed", "config"}) {
    EXPECT_TRUE(j.contains(key)) << key;
  }
  EXPECT_EQ(j["irs"]["irs"], r.irs.irs);
  EXPECT_EQ(j["prs"]["votes"].size(), r.votes.size());
  EXPECT_EQ(report_from_json(j), r);
  EXPECT_EQ(report_from_json(nlohmann::json::parse(j.dump())), r);
  EXPECT_THROW(report_from_json(nlohmann::json{{"id", "x"}}), DataError);
}

TEST(ConfigJson, RoundTrip) {
  ReliabilityConfig c = small_config();
  c.proto.h = 4;
  c.proto.growth = RegionGrowth::dilation;
  c.saliency.mode = SaliencyMode::fixed_fraction;
  c.saliency.fraction = 0.2;
  c.augmentations = parse_augmentations("identity,hflip");
  c.prs_entropy_as_score = true;
  c.fusion.mu = 0.25;
  const ReliabilityConfig back = reliability_config_from_json(to_json(c));
  EXPECT_EQ(to_json(back), to_json(c));
  EXPECT_EQ(back.augmentations, c.augmentations);
  EXPECT_EQ(back.proto.h, std::optional<int>(4));
  EXPECT_THROW(reliability_config_from_json(nlohmann::json::array()), ConfigError);
}

TEST(ReliabilityConfig, Validation) {
  ReliabilityConfig c;
  EXPECT_NO_THROW(c.validate());
  c.augmentations.clear();
  EXPECT_THROW(c.validate(), ConfigError);
  c = {};
  c.fusion.mu = 2.0;
  EXPECT_THROW(c.validate(), ConfigError);
}
