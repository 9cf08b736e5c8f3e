// Copyright 2026 The Purifuse Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include <gtest/gtest.h>

#include <cmath>

#include "oracles/eval_reference.hpp"
#include "purifuse/error.hpp"
#include "purifuse/evaluator.hpp"
#include "test_util.hpp"

using namespace purifuse;

namespace {

BBox nb(double x0, double y0, double x1, double y1) {
  return BBox{x0, y0, x1, y1, CoordSpace::Normalized()};
}

struct Instance {
  std::vector<GroundTruthSet> gts;
  std::vector<DetectionSet> dets;
  int classes = 1;
};

// Same-class ground truth laid out on a grid so boxes never overlap.
Instance random_instance(testutil::Rng& rng, bool crowd, bool disjoint) {
  Instance in;
  in.classes = testutil::pick(rng, 1, 3);
  const int n_img = testutil::pick(rng, 1, 4);
  for (int i = 0; i < n_img; ++i) {
    GroundTruthSet g{100 + i, {}};
    const int n = testutil::pick(rng, 0, 5);
    for (int k = 0; k < n; ++k) {
      BBox b = testutil::random_box(rng, 0.05, 0.4);
      if (disjoint) {
        const double cx = 0.2 * (k % 5), cy = 0.2 * testutil::pick(rng, 0, 4);
        b = nb(cx + 0.01, cy + 0.01, cx + testutil::unif(rng, 0.08, 0.19),
               cy + testutil::unif(rng, 0.08, 0.19));
      }
      g.boxes.push_back({b, testutil::pick(rng, 0, in.classes - 1),
                         crowd && testutil::unif(rng) < 0.15});
    }
    in.gts.push_back(g);
    DetectionSet d{g.image_id, {}, 1.0};
    for (const auto& gb : g.boxes) {
      if (testutil::unif(rng) < 0.8) {
        d.detections.push_back({testutil::near_box(rng, gb.box, 0.15), gb.class_id,
                                testutil::unif(rng), 0});
      }
    }
    const int fp = testutil::pick(rng, 0, 3);
    for (int k = 0; k < fp; ++k) {
      d.detections.push_back({testutil::random_box(rng), testutil::pick(rng, 0, in.classes - 1),
                              testutil::unif(rng), 0});
    }
    in.dets.push_back(d);
  }
  return in;
}

EvalResult eval_of(const Instance& in, std::size_t max_dets = 100) {
  EvalConfig cfg;
  cfg.num_classes = in.classes;
  cfg.max_detections = max_dets;
  return evaluate(in.dets, in.gts, cfg);
}

std::vector<ScoredLabel> labels(std::initializer_list<std::pair<double, MatchLabel>> l) {
  std::vector<ScoredLabel> out;
  for (auto [c, m] : l) out.push_back({c, m});
  return out;
}

constexpr MatchLabel TP = MatchLabel::kTruePositive;
constexpr MatchLabel FP = MatchLabel::kFalsePositive;

}  // namespace

TEST(Match, GreedyByConfidence) {
  GroundTruthSet gt{1, {{nb(0, 0, 0.4, 0.4), 0, false}, {nb(0.5, 0.5, 0.9, 0.9), 0, false}}};
  const std::vector<Detection> dets{{nb(0, 0, 0.4, 0.4), 0, 0.9, 0},
                                    {nb(0.01, 0, 0.41, 0.4), 0, 0.8, 0},
                                    {nb(0.5, 0.5, 0.9, 0.9), 1, 0.7, 0},
                                    {nb(0.52, 0.5, 0.9, 0.9), 0, 0.6, 0}};
  const auto m = match_detections(dets, gt, 0.5);
  EXPECT_EQ(m, (std::vector<MatchLabel>{TP, FP, FP, TP}));
}

TEST(Match, TakesHighestIou) {
  GroundTruthSet gt{1, {{nb(0, 0, 0.5, 0.5), 0, false}, {nb(0.05, 0, 0.55, 0.5), 0, false}}};
  const std::vector<Detection> dets{{nb(0.05, 0, 0.55, 0.5), 0, 0.9, 0},
                                    {nb(0, 0, 0.5, 0.5), 0, 0.8, 0}};
  EXPECT_EQ(match_detections(dets, gt, 0.5), (std::vector<MatchLabel>{TP, TP}));
}

TEST(Match, CrowdIgnoresDetections) {
  GroundTruthSet gt{1, {{nb(0, 0, 1, 1), 0, true}}};
  const std::vector<Detection> dets{{nb(0.1, 0.1, 0.2, 0.2), 0, 0.9, 0},
                                    {nb(0.1, 0.1, 0.2, 0.2), 0, 0.8, 0}};
  const auto m = match_detections(dets, gt, 0.5);
  EXPECT_EQ(m, (std::vector<MatchLabel>(2, MatchLabel::kIgnored)));
  const EvalResult r = evaluate({{1, {dets.begin(), dets.end()}, 1.0}}, {gt});
  EXPECT_DOUBLE_EQ(r.map50, 0.0);
  EXPECT_TRUE(r.per_class.empty() || r.per_class.begin()->second.gt_count == 0);
}

TEST(AveragePrecision, HandExamples) {
  EXPECT_DOUBLE_EQ(*average_precision(labels({{0.9, TP}, {0.8, TP}}), 2), 1.0);
  // P/R: (1, .5), (.5, .5), (2/3, 1); envelope 1 up to r=.5, 2/3 afterwards.
  const double want = (51 * 1.0 + 50 * (2.0 / 3.0)) / 101.0;
  EXPECT_NEAR(*average_precision(labels({{0.9, TP}, {0.8, FP}, {0.7, TP}}), 2), want, 1e-12);
  // Half the ground truth found at full precision.
  EXPECT_NEAR(*average_precision(labels({{0.9, TP}}), 2), 51.0 / 101.0, 1e-12);
  EXPECT_DOUBLE_EQ(*average_precision(labels({{0.9, FP}}), 0), 0.0);
  EXPECT_FALSE(average_precision({}, 0).has_value());
  EXPECT_DOUBLE_EQ(*average_precision({}, 3), 0.0);
}

TEST(PrCurve, CumulativeCounts) {
  const PRCurve c = pr_curve(labels({{0.9, TP}, {0.8, FP}, {0.7, TP}, {0.6, FP}}), 4);
  ASSERT_EQ(c.precision.size(), 4u);
  EXPECT_DOUBLE_EQ(c.precision[1], 0.5);
  EXPECT_DOUBLE_EQ(c.recall[2], 0.5);
  EXPECT_DOUBLE_EQ(c.interpolated[0], 1.0);
  EXPECT_DOUBLE_EQ(c.interpolated[50], 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(c.interpolated[51], 0.0);
}

TEST(Evaluate, PerfectDetectorScoresOne) {
  GroundTruthSet gt{5, {{nb(0.1, 0.1, 0.3, 0.3), 0, false}, {nb(0.5, 0.5, 0.8, 0.9), 1, false}}};
  DetectionSet d{5, {{gt.boxes[0].box, 0, 1.0, 0}, {gt.boxes[1].box, 1, 1.0, 0}}, 1.0};
  const EvalResult r = evaluate({d}, {gt});
  EXPECT_DOUBLE_EQ(r.map50, 1.0);
  EXPECT_DOUBLE_EQ(r.map5095, 1.0);
  EXPECT_DOUBLE_EQ(r.precision, 1.0);
  EXPECT_DOUBLE_EQ(r.recall, 1.0);
}

TEST(Evaluate, LocalizationSplitsThresholds) {
  // IoU exactly 0.6: counts at 0.50 and 0.55 and 0.60 only.
  GroundTruthSet gt{1, {{nb(0, 0, 0.5, 1.0), 0, false}}};
  DetectionSet d{1, {{nb(0, 0, 0.3, 1.0), 0, 0.9, 0}}, 1.0};
  const EvalResult r = evaluate({d}, {gt});
  EXPECT_DOUBLE_EQ(r.map50, 1.0);
  EXPECT_NEAR(r.map5095, 3.0 / 10.0, 1e-12);
}

TEST(Evaluate, EmptyDetections) {
  GroundTruthSet gt{1, {{nb(0, 0, 0.5, 0.5), 0, false}}};
  const EvalResult r = evaluate({}, {gt});
  EXPECT_DOUBLE_EQ(r.map50, 0.0);
  EXPECT_DOUBLE_EQ(r.recall, 0.0);
  EXPECT_DOUBLE_EQ(r.operating_confidence, 0.0);
}

TEST(Evaluate, MaxDetectionsPerImageAndClass) {
  GroundTruthSet gt{1, {{nb(0, 0, 0.2, 0.2), 0, false}}};
  DetectionSet d{1, {}, 1.0};
  for (int k = 0; k < 5; ++k) d.detections.push_back({nb(0.5, 0.5, 0.6, 0.6), 0, 0.9 - 0.01 * k, 0});
  d.detections.push_back({gt.boxes[0].box, 0, 0.1, 0});
  EvalConfig cfg;
  cfg.max_detections = 5;
  EXPECT_DOUBLE_EQ(evaluate({d}, {gt}, cfg).map50, 0.0);
  cfg.max_detections = 6;
  EXPECT_GT(evaluate({d}, {gt}, cfg).map50, 0.0);
}

TEST(Evaluate, Errors) {
  GroundTruthSet gt{1, {}};
  EXPECT_THROW(evaluate({{2, {}, 1.0}}, {gt}), DataError);
  EvalConfig cfg;
  cfg.num_classes = 2;
  EXPECT_THROW(evaluate({{1, {{nb(0, 0, 0.1, 0.1), 5, 0.5, 0}}, 1.0}}, {gt}, cfg), DataError);
}

TEST(Psnr, Examples) {
  const ImageBuffer a(4, 4, 1, 0.5);
  EXPECT_DOUBLE_EQ(psnr(a, a), kPsnrCap);
  EXPECT_NEAR(psnr(a, ImageBuffer(4, 4, 1, 0.6)), 20.0, 1e-9);
  EXPECT_NEAR(psnr(ImageBuffer(2, 2, 1, 0.0), ImageBuffer(2, 2, 1, 1.0)), 0.0, 1e-12);
  EXPECT_THROW(psnr(a, ImageBuffer(4, 3, 1, 0.5)), std::invalid_argument);
}

TEST(EvaluateProperty, MatchesReferenceImplementation) {
  testutil::Rng rng(60);
  const auto thr = coco_iou_thresholds();
  for (int i = 0; i < 500; ++i) {
    const Instance in = random_instance(rng, true, false);
    const std::size_t md = testutil::pick(rng, 0, 3) == 0 ? 2 : 100;
    const EvalResult got = eval_of(in, md);
    const oracle::RefEval want = oracle::reference_evaluate(in.dets, in.gts, thr, md, in.classes);
    ASSERT_NEAR(got.map50, want.map50, 1e-12) << "case " << i;
    ASSERT_NEAR(got.map5095, want.map5095, 1e-12) << "case " << i;
    ASSERT_NEAR(got.precision, want.precision, 1e-12) << "case " << i;
    ASSERT_NEAR(got.recall, want.recall, 1e-12) << "case " << i;
    for (const auto& [c, ap] : want.ap50) {
      ASSERT_TRUE(got.per_class.count(c)) << "case " << i;
      ASSERT_EQ(got.per_class.at(c).ap50.has_value(), ap.has_value());
      if (ap) ASSERT_NEAR(*got.per_class.at(c).ap50, *ap, 1e-12);
    }
  }
}

TEST(EvaluateProperty, MonotoneConfidenceMapInvariant) {
  testutil::Rng rng(61);
  for (int i = 0; i < testutil::kPropertyCases; ++i) {
    Instance in = random_instance(rng, true, false);
    const EvalResult before = eval_of(in);
    const double a = testutil::unif(rng, 0.2, 3.0);
    for (auto& s : in.dets) {
      for (auto& d : s.detections) d.confidence = std::pow(d.confidence, a) * 0.9;
    }
    const EvalResult after = eval_of(in);
    ASSERT_NEAR(after.map50, before.map50, 1e-12);
    ASSERT_NEAR(after.map5095, before.map5095, 1e-12);
    ASSERT_NEAR(after.precision, before.precision, 1e-12);
    ASSERT_NEAR(after.recall, before.recall, 1e-12);
  }
}

TEST(EvaluateProperty, LowConfidenceFalsePositiveNeverHelps) {
  testutil::Rng rng(62);
  for (int i = 0; i < testutil::kPropertyCases; ++i) {
    Instance in = random_instance(rng, false, false);
    const EvalResult before = eval_of(in);
    // Far corner box below every existing confidence.
    double lo = 1.0;
    for (const auto& s : in.dets) {
      for (const auto& d : s.detections) lo = std::min(lo, d.confidence);
    }
    const int cls = testutil::pick(rng, 0, in.classes - 1);
    in.dets[0].detections.push_back({nb(0.999, 0.999, 1.0, 1.0), cls, lo * 0.5, 0});
    const EvalResult after = eval_of(in);
    ASSERT_LE(after.map50, before.map50 + 1e-12);
    ASSERT_LE(after.map5095, before.map5095 + 1e-12);
  }
}

TEST(EvaluateProperty, LowerDuplicatesKeepRecall) {
  testutil::Rng rng(63);
  for (int i = 0; i < testutil::kPropertyCases; ++i) {
    Instance in = random_instance(rng, false, true);
    const EvalResult before = eval_of(in);
    for (auto& s : in.dets) {
      const auto orig = s.detections;
      for (const auto& d : orig) s.detections.push_back({d.box, d.class_id, d.confidence * 0.5, 0});
    }
    const EvalResult after = eval_of(in);
    for (const auto& [c, curve] : before.curves50) {
      const double r0 = curve.recall.empty() ? 0.0 : curve.recall.back();
      const auto& c1 = after.curves50.at(c);
      const double r1 = c1.recall.empty() ? 0.0 : c1.recall.back();
      ASSERT_NEAR(r0, r1, 1e-12) << "case " << i;
    }
  }
}

TEST(EvaluateProperty, StrictMapBelowLooseMap) {
  testutil::Rng rng(64);
  for (int i = 0; i < testutil::kPropertyCases; ++i) {
    const EvalResult r = eval_of(random_instance(rng, true, false));
    ASSERT_LE(r.map5095, r.map50 + 1e-12);
    ASSERT_GE(r.map50, 0.0);
    ASSERT_LE(r.map50, 1.0);
    ASSERT_GE(r.precision, 0.0);
    ASSERT_LE(r.recall, 1.0);
  }
}
