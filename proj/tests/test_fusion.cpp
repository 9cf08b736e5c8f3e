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

#include <algorithm>
#include <numeric>
#include <stdexcept>

#include "oracles/wbf_reference.hpp"
#include "purifuse/fusion.hpp"
#include "test_util.hpp"

using namespace purifuse;

namespace {

Detection det(double x0, double y0, double x1, double y1, double conf,
              int cls = 0, int src = 0) {
  return Detection{BBox{x0, y0, x1, y1, CoordSpace::Normalized()}, cls, conf,
                   src};
}

void expect_matches_reference(const std::vector<DetectionSet>& sets,
                              const FusionConfig& cfg) {
  const FusionResult got = wbf_detailed(sets, cfg);
  const auto want = oracle::reference_wbf(sets, cfg.iou_threshold,
                                          cfg.skip_confidence, cfg.rescale_mode);
  ASSERT_EQ(got.fused.detections.size(), want.size());
  for (std::size_t k = 0; k < want.size(); ++k) {
    const Detection& g = got.fused.detections[k];
    EXPECT_NEAR(g.box.x_min, want[k].box.x0, 1e-9);
    EXPECT_NEAR(g.box.y_min, want[k].box.y0, 1e-9);
    EXPECT_NEAR(g.box.x_max, want[k].box.x1, 1e-9);
    EXPECT_NEAR(g.box.y_max, want[k].box.y1, 1e-9);
    EXPECT_NEAR(g.confidence, want[k].conf, 1e-9);
    EXPECT_EQ(g.class_id, want[k].cls);
    ASSERT_EQ(got.clusters[k].size(), want[k].members.size());
    for (std::size_t m = 0; m < want[k].members.size(); ++m) {
      EXPECT_EQ(got.clusters[k][m].set_index, want[k].members[m].set);
      EXPECT_EQ(got.clusters[k][m].det_index, want[k].members[m].idx);
    }
  }
}

}  // namespace

TEST(Wbf, TwoBoxHandComputation) {
  std::vector<DetectionSet> sets{{1, {det(0.10, 0.10, 0.50, 0.50, 0.9)}, 1.0},
                                 {1, {det(0.12, 0.12, 0.52, 0.52, 0.6, 0, 1)}, 1.0}};
  EXPECT_GT(iou(sets[0].detections[0].box, sets[1].detections[0].box), 0.55);
  const DetectionSet out = wbf(sets);
  ASSERT_EQ(out.detections.size(), 1u);
  const Detection& d = out.detections[0];
  EXPECT_NEAR(d.box.x_min, 0.108, 1e-9);
  EXPECT_NEAR(d.box.y_min, 0.108, 1e-9);
  EXPECT_NEAR(d.box.x_max, 0.508, 1e-9);
  EXPECT_NEAR(d.box.y_max, 0.508, 1e-9);
  EXPECT_NEAR(d.confidence, 0.75, 1e-9);
  EXPECT_EQ(d.source_id, kFusedSource);
  EXPECT_EQ(out.weight, 1.0);
}

TEST(Wbf, NonOverlappingSingleSetPassesThrough) {
  DetectionSet s{3, {det(0.0, 0.0, 0.2, 0.2, 0.4), det(0.5, 0.5, 0.9, 0.9, 0.8),
                     det(0.3, 0.0, 0.45, 0.2, 0.6)}, 1.0};
  FusionConfig cfg;
  cfg.rescale_mode = RescaleMode::kNone;
  const DetectionSet out = wbf({s}, cfg);
  ASSERT_EQ(out.detections.size(), 3u);
  const double want[] = {0.8, 0.6, 0.4};
  for (int k = 0; k < 3; ++k) EXPECT_DOUBLE_EQ(out.detections[k].confidence, want[k]);
  EXPECT_EQ(out.detections[0].box, s.detections[1].box);
}

TEST(Wbf, IdenticalAcrossThreeSets) {
  std::vector<DetectionSet> sets;
  for (int s = 0; s < 3; ++s) sets.push_back({1, {det(0.2, 0.3, 0.6, 0.7, 0.7, 1, s)}, 1.0});
  const DetectionSet out = wbf(sets);
  ASSERT_EQ(out.detections.size(), 1u);
  EXPECT_NEAR(out.detections[0].box.x_min, 0.2, 1e-12);
  EXPECT_NEAR(out.detections[0].box.y_max, 0.7, 1e-12);
  EXPECT_NEAR(out.detections[0].confidence, 0.7, 1e-12);
}

TEST(Wbf, RescaleModes) {
  // One box from one of two sets: T=1, N=2.
  std::vector<DetectionSet> sets{{1, {det(0.1, 0.1, 0.3, 0.3, 0.8)}, 1.0},
                                 {1, {}, 1.0}};
  FusionConfig cfg;
  cfg.rescale_mode = RescaleMode::kMinClusterOverModels;
  EXPECT_NEAR(wbf(sets, cfg).detections[0].confidence, 0.4, 1e-12);
  cfg.rescale_mode = RescaleMode::kClusterOverModels;
  EXPECT_NEAR(wbf(sets, cfg).detections[0].confidence, 0.4, 1e-12);
  cfg.rescale_mode = RescaleMode::kNone;
  EXPECT_NEAR(wbf(sets, cfg).detections[0].confidence, 0.8, 1e-12);

  // Three boxes from one set and another: T=3 > N=2.
  sets[0].detections = {det(0.1, 0.1, 0.3, 0.3, 0.5), det(0.1, 0.1, 0.3, 0.3, 0.4)};
  sets[1].detections = {det(0.1, 0.1, 0.3, 0.3, 0.3, 0, 1)};
  cfg.rescale_mode = RescaleMode::kMinClusterOverModels;
  EXPECT_NEAR(wbf(sets, cfg).detections[0].confidence, 0.4, 1e-12);
  cfg.rescale_mode = RescaleMode::kClusterOverModels;
  EXPECT_NEAR(wbf(sets, cfg).detections[0].confidence, 0.6, 1e-12);
}

TEST(Wbf, SkipAndClassSeparation) {
  std::vector<DetectionSet> sets{
      {1, {det(0.1, 0.1, 0.3, 0.3, 0.9, 0), det(0.1, 0.1, 0.3, 0.3, 0.9, 1),
           det(0.6, 0.6, 0.8, 0.8, 0.05, 0)}, 1.0}};
  FusionConfig cfg;
  cfg.skip_confidence = 0.1;
  const DetectionSet out = wbf(sets, cfg);
  ASSERT_EQ(out.detections.size(), 2u);
  EXPECT_NE(out.detections[0].class_id, out.detections[1].class_id);
}

TEST(Wbf, WeightsAreRenormalized) {
  // Weights 3 and 1 become 1.5 and 0.5.
  std::vector<DetectionSet> sets{{1, {det(0.1, 0.1, 0.5, 0.5, 0.4)}, 3.0},
                                 {1, {det(0.1, 0.1, 0.5, 0.5, 0.4, 0, 1)}, 1.0}};
  const FusionResult r = wbf_detailed(sets);
  ASSERT_EQ(r.clusters.size(), 1u);
  EXPECT_NEAR(r.clusters[0][0].adjusted_confidence, 0.6, 1e-12);
  EXPECT_NEAR(r.clusters[0][1].adjusted_confidence, 0.2, 1e-12);
  EXPECT_NEAR(r.fused.detections[0].confidence, 0.4, 1e-12);
}

TEST(Wbf, Errors) {
  EXPECT_THROW(wbf({}), std::invalid_argument);
  EXPECT_THROW(wbf({{1, {}, 1.0}, {2, {}, 1.0}}), std::invalid_argument);
  EXPECT_THROW(wbf({{1, {}, 0.0}}), std::invalid_argument);
  FusionConfig bad;
  bad.iou_threshold = 1.0;
  EXPECT_THROW(wbf({{1, {}, 1.0}}, bad), std::invalid_argument);
}

TEST(WbfProperty, MatchesBruteForceReference) {
  testutil::Rng rng(21);
  const RescaleMode modes[] = {RescaleMode::kMinClusterOverModels,
                               RescaleMode::kClusterOverModels,
                               RescaleMode::kNone};
  for (int i = 0; i < 1000; ++i) {
    const auto sets = testutil::random_sets(rng, 3, 6, 2, i % 2 == 1);
    FusionConfig cfg;
    cfg.iou_threshold = testutil::unif(rng, 0.3, 0.8);
    cfg.skip_confidence = i % 3 == 0 ? testutil::unif(rng, 0.0, 0.3) : 0.0;
    cfg.rescale_mode = modes[i % 3];
    SCOPED_TRACE(i);
    expect_matches_reference(sets, cfg);
  }
}

TEST(WbfProperty, CountConfidenceAndHull) {
  testutil::Rng rng(22);
  for (int i = 0; i < testutil::kPropertyCases; ++i) {
    const auto sets = testutil::random_sets(rng, 4, 12, 3, true);
    std::size_t total = 0;
    for (const auto& s : sets) total += s.detections.size();
    const FusionResult r = wbf_detailed(sets);
    EXPECT_LE(r.fused.detections.size(), total);
    for (std::size_t k = 0; k < r.clusters.size(); ++k) {
      const Detection& f = r.fused.detections[k];
      EXPECT_GE(f.confidence, 0.0);
      EXPECT_LE(f.confidence, 1.0);
      double lo[4] = {1e9, 1e9, 1e9, 1e9}, hi[4] = {-1e9, -1e9, -1e9, -1e9};
      for (const MemberRef& m : r.clusters[k]) {
        const BBox b = clip_to_frame(sets[m.set_index].detections[m.det_index].box);
        const double c[4] = {b.x_min, b.y_min, b.x_max, b.y_max};
        for (int j = 0; j < 4; ++j) {
          lo[j] = std::min(lo[j], c[j]);
          hi[j] = std::max(hi[j], c[j]);
        }
      }
      const double got[4] = {f.box.x_min, f.box.y_min, f.box.x_max, f.box.y_max};
      for (int j = 0; j < 4; ++j) {
        EXPECT_GE(got[j], lo[j] - 1e-12);
        EXPECT_LE(got[j], hi[j] + 1e-12);
      }
    }
  }
}

TEST(WbfProperty, SetPermutationInvariant) {
  testutil::Rng rng(23);
  for (int i = 0; i < testutil::kPropertyCases; ++i) {
    auto sets = testutil::random_sets(rng, 3, 10, 2, true);
    const DetectionSet a = wbf(sets);
    std::shuffle(sets.begin(), sets.end(), rng);
    const DetectionSet b = wbf(sets);
    ASSERT_EQ(a.detections.size(), b.detections.size());
    for (std::size_t k = 0; k < a.detections.size(); ++k) {
      EXPECT_EQ(a.detections[k].box, b.detections[k].box);
      EXPECT_EQ(a.detections[k].confidence, b.detections[k].confidence);
      EXPECT_EQ(a.detections[k].class_id, b.detections[k].class_id);
    }
  }
}

TEST(WbfProperty, CommonWeightScaling) {
  testutil::Rng rng(24);
  for (int i = 0; i < testutil::kPropertyCases; ++i) {
    auto sets = testutil::random_sets(rng, 3, 10, 2, true);
    const DetectionSet a = wbf(sets);
    const double c = testutil::unif(rng, 0.1, 10.0);
    for (auto& s : sets) s.weight *= c;
    const DetectionSet b = wbf(sets);
    ASSERT_EQ(a.detections.size(), b.detections.size());
    for (std::size_t k = 0; k < a.detections.size(); ++k) {
      EXPECT_NEAR(a.detections[k].box.x_min, b.detections[k].box.x_min, 1e-12);
      EXPECT_NEAR(a.detections[k].box.y_min, b.detections[k].box.y_min, 1e-12);
      EXPECT_NEAR(a.detections[k].box.x_max, b.detections[k].box.x_max, 1e-12);
      EXPECT_NEAR(a.detections[k].box.y_max, b.detections[k].box.y_max, 1e-12);
      EXPECT_NEAR(a.detections[k].confidence, b.detections[k].confidence, 1e-12);
    }
  }
}

// Greedy clusters can drift into each other after they are seeded, so a
// second pass is only a no-op when the first pass left its fused boxes
// separated (pairwise IoU at or below the threshold).
TEST(WbfProperty, SingleSetIdempotent) {
  testutil::Rng rng(25);
  FusionConfig cfg;
  cfg.rescale_mode = RescaleMode::kNone;
  int checked = 0;
  for (int i = 0; i < 4 * testutil::kPropertyCases && checked < testutil::kPropertyCases; ++i) {
    auto sets = testutil::random_sets(rng, 1, 8, 2, false);
    const DetectionSet once = wbf(sets, cfg);
    bool separated = true;
    for (std::size_t a = 0; a < once.detections.size(); ++a) {
      for (std::size_t b = a + 1; b < once.detections.size(); ++b) {
        const auto& da = once.detections[a];
        const auto& db = once.detections[b];
        if (da.class_id == db.class_id && iou(da.box, db.box) > cfg.iou_threshold) {
          separated = false;
        }
      }
    }
    if (!separated) continue;
    ++checked;
    const DetectionSet twice = wbf({once}, cfg);
    ASSERT_EQ(once.detections.size(), twice.detections.size());
    for (std::size_t k = 0; k < once.detections.size(); ++k) {
      EXPECT_NEAR(once.detections[k].box.x_min, twice.detections[k].box.x_min, 1e-12);
      EXPECT_NEAR(once.detections[k].box.y_min, twice.detections[k].box.y_min, 1e-12);
      EXPECT_NEAR(once.detections[k].box.x_max, twice.detections[k].box.x_max, 1e-12);
      EXPECT_NEAR(once.detections[k].box.y_max, twice.detections[k].box.y_max, 1e-12);
      EXPECT_NEAR(once.detections[k].confidence, twice.detections[k].confidence, 1e-12);
    }
  }
  EXPECT_EQ(checked, testutil::kPropertyCases);
}

TEST(Nms, Examples) {
  const auto disjoint = nms({det(0, 0, 0.2, 0.2, 0.5), det(0.5, 0.5, 0.7, 0.7, 0.4)}, 0.5);
  EXPECT_EQ(disjoint.size(), 2u);
  // IoU 0.8: 0.4x0.4 boxes offset so the overlap is 0.8 of the union.
  const double s = 0.4;
  const double off = s * (1 - 0.8) / (1 + 0.8);
  const Detection hi = det(0.1, 0.1, 0.1 + s, 0.1 + s, 0.9);
  const Detection lo = det(0.1 + off, 0.1, 0.1 + off + s, 0.1 + s, 0.7);
  ASSERT_NEAR(iou(hi.box, lo.box), 0.8, 1e-12);
  const auto kept = nms({lo, hi}, 0.5);
  ASSERT_EQ(kept.size(), 1u);
  EXPECT_DOUBLE_EQ(kept[0].confidence, 0.9);
  Detection other = lo;
  other.class_id = 1;
  EXPECT_EQ(nms({other, hi}, 0.5).size(), 2u);
}

TEST(NmsProperty, SubsetWithoutOverlaps) {
  testutil::Rng rng(26);
  for (int i = 0; i < testutil::kPropertyCases; ++i) {
    const auto sets = testutil::random_sets(rng, 1, 15, 2, false);
    const auto& in = sets[0].detections;
    const double thr = testutil::unif(rng, 0.2, 0.8);
    const auto out = nms(in, thr);
    for (const Detection& d : out) {
      EXPECT_TRUE(std::any_of(in.begin(), in.end(), [&](const Detection& e) {
        return e.box == d.box && e.confidence == d.confidence && e.class_id == d.class_id;
      }));
    }
    for (std::size_t a = 0; a < out.size(); ++a) {
      for (std::size_t b = a + 1; b < out.size(); ++b) {
        if (out[a].class_id == out[b].class_id) {
          EXPECT_LE(iou(out[a].box, out[b].box), thr);
        }
      }
    }
  }
}

TEST(DeriveWeights, Examples) {
  auto w = derive_weights({{"a", 40}, {"b", 40}, {"c", 40}});
  for (const auto& [k, v] : w) EXPECT_NEAR(v, 1.0, 1e-12);
  w = derive_weights({{"a", 40}, {"b", 39.9}, {"c", 40.1}});
  EXPECT_NEAR(w["a"], 3 * 40 / 120.0, 1e-9);
  EXPECT_NEAR(w["b"], 3 * 39.9 / 120.0, 1e-9);
  EXPECT_NEAR(w["c"], 3 * 40.1 / 120.0, 1e-9);
  EXPECT_NEAR(derive_weights({{"a", 37.2}})["a"], 1.0, 1e-12);
  EXPECT_THROW(derive_weights({{"a", 0.0}}), std::invalid_argument);
  EXPECT_THROW(derive_weights({{"a", -3.0}}), std::invalid_argument);
}

TEST(Rescale, StringRoundTrip) {
  for (RescaleMode m : {RescaleMode::kMinClusterOverModels,
                        RescaleMode::kClusterOverModels, RescaleMode::kNone}) {
    EXPECT_EQ(rescale_mode_from_string(to_string(m)), m);
  }
  EXPECT_THROW(rescale_mode_from_string("avg"), std::invalid_argument);
}
