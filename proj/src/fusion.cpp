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

#include "purifuse/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace purifuse {

void FusionConfig::validate() const {
  if (!(iou_threshold > 0.0 && iou_threshold < 1.0)) {
    throw std::invalid_argument("fusion iou_threshold must be in (0,1)");
  }
  if (!(skip_confidence >= 0.0 && skip_confidence < 1.0)) {
    throw std::invalid_argument("fusion skip_confidence must be in [0,1)");
  }
}

const char* to_string(RescaleMode mode) {
  switch (mode) {
    case RescaleMode::kMinClusterOverModels:
      return "min_cluster_over_models";
    case RescaleMode::kClusterOverModels:
      return "cluster_over_models";
    case RescaleMode::kNone:
      return "none";
  }
  return "?";
}

RescaleMode rescale_mode_from_string(const std::string& name) {
  if (name == "min_cluster_over_models") {
    return RescaleMode::kMinClusterOverModels;
  }
  if (name == "cluster_over_models") return RescaleMode::kClusterOverModels;
  if (name == "none") return RescaleMode::kNone;
  throw std::invalid_argument("unknown rescale mode '" + name + "'");
}

namespace {

struct Pooled {
  MemberRef ref;
  int source_id = 0;
  int class_id = 0;
  BBox box;
};

bool pooled_before(const Pooled& a, const Pooled& b) {
  if (a.ref.adjusted_confidence != b.ref.adjusted_confidence) {
    return a.ref.adjusted_confidence > b.ref.adjusted_confidence;
  }
  if (a.source_id != b.source_id) return a.source_id < b.source_id;
  if (a.ref.det_index != b.ref.det_index) {
    return a.ref.det_index < b.ref.det_index;
  }
  return a.ref.set_index < b.ref.set_index;
}

struct Cluster {
  std::vector<const Pooled*> members;
  BBox fused;
  double confidence = 0.0;
  int class_id = 0;

  void refit() {
    double cx0 = 0, cy0 = 0, cx1 = 0, cy1 = 0, csum = 0;
    for (const Pooled* m : members) {
      const double c = m->ref.adjusted_confidence;
      cx0 += c * m->box.x_min;
      cy0 += c * m->box.y_min;
      cx1 += c * m->box.x_max;
      cy1 += c * m->box.y_max;
      csum += c;
    }
    const double n = static_cast<double>(members.size());
    if (csum > 0.0) {
      fused = BBox{cx0 / csum, cy0 / csum, cx1 / csum, cy1 / csum,
                   CoordSpace::Normalized()};
    } else {
      // All-zero confidences: fall back to the unweighted mean.
      double x0 = 0, y0 = 0, x1 = 0, y1 = 0;
      for (const Pooled* m : members) {
        x0 += m->box.x_min;
        y0 += m->box.y_min;
        x1 += m->box.x_max;
        y1 += m->box.y_max;
      }
      fused = BBox{x0 / n, y0 / n, x1 / n, y1 / n, CoordSpace::Normalized()};
    }
    confidence = csum / n;
  }
};

}  // namespace

FusionResult wbf_detailed(const std::vector<DetectionSet>& sets,
                          const FusionConfig& cfg) {
  cfg.validate();
  if (sets.empty()) {
    throw std::invalid_argument("wbf needs at least one detection set");
  }
  const ImageId image_id = sets.front().image_id;
  for (const auto& s : sets) {
    if (s.image_id != image_id) {
      throw std::invalid_argument("wbf detection sets refer to different "
                                  "images");
    }
    if (!(s.weight > 0.0) || !std::isfinite(s.weight)) {
      throw std::invalid_argument("detection set weight must be positive");
    }
  }

  // Weights are rescaled to sum to N. Summing in sorted order keeps the
  // result independent of the order the sets were passed in.
  const double n_sets = static_cast<double>(sets.size());
  std::vector<double> raw_weights;
  raw_weights.reserve(sets.size());
  for (const auto& s : sets) raw_weights.push_back(s.weight);
  std::sort(raw_weights.begin(), raw_weights.end());
  const double weight_sum =
      std::accumulate(raw_weights.begin(), raw_weights.end(), 0.0);

  std::vector<Pooled> pooled;
  for (std::size_t t = 0; t < sets.size(); ++t) {
    const double w = sets[t].weight * n_sets / weight_sum;
    const auto& dets = sets[t].detections;
    for (std::size_t j = 0; j < dets.size(); ++j) {
      const Detection& d = dets[j];
      if (!d.box.space.is_normalized()) {
        throw std::invalid_argument("wbf expects normalized boxes");
      }
      const BBox box = clip_to_frame(d.box);
      if (box.degenerate()) continue;
      const double adjusted = d.confidence * w;
      if (adjusted < cfg.skip_confidence) continue;
      pooled.push_back({MemberRef{t, j, adjusted}, d.source_id, d.class_id,
                        box});
    }
  }
  std::stable_sort(pooled.begin(), pooled.end(),
                   [](const Pooled& a, const Pooled& b) {
                     if (a.class_id != b.class_id) {
                       return a.class_id < b.class_id;
                     }
                     return pooled_before(a, b);
                   });

  std::vector<Cluster> clusters;
  std::size_t class_begin = 0;  // first cluster of the current class
  int current_class = pooled.empty() ? 0 : pooled.front().class_id;
  for (const Pooled& p : pooled) {
    if (p.class_id != current_class) {
      current_class = p.class_id;
      class_begin = clusters.size();
    }
    std::size_t best = clusters.size();
    double best_iou = cfg.iou_threshold;
    for (std::size_t k = class_begin; k < clusters.size(); ++k) {
      const double v = iou(clusters[k].fused, p.box);
      if (v > best_iou) {
        best_iou = v;
        best = k;
      }
    }
    if (best == clusters.size()) {
      Cluster c;
      c.class_id = p.class_id;
      c.members.push_back(&p);
      c.refit();
      clusters.push_back(std::move(c));
    } else {
      clusters[best].members.push_back(&p);
      clusters[best].refit();
    }
  }

  for (Cluster& c : clusters) {
    const double t = static_cast<double>(c.members.size());
    switch (cfg.rescale_mode) {
      case RescaleMode::kMinClusterOverModels:
        c.confidence *= std::min(t, n_sets) / n_sets;
        break;
      case RescaleMode::kClusterOverModels:
        c.confidence *= t / n_sets;
        break;
      case RescaleMode::kNone:
        break;
    }
    c.confidence = std::clamp(c.confidence, 0.0, 1.0);
  }

  std::vector<std::size_t> order(clusters.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) {
                     return clusters[a].confidence > clusters[b].confidence;
                   });

  FusionResult result;
  result.fused.image_id = image_id;
  result.fused.weight = 1.0;
  result.fused.detections.reserve(order.size());
  result.clusters.reserve(order.size());
  for (std::size_t k : order) {
    const Cluster& c = clusters[k];
    result.fused.detections.push_back(
        Detection{c.fused, c.class_id, c.confidence, kFusedSource});
    std::vector<MemberRef> refs;
    refs.reserve(c.members.size());
    for (const Pooled* m : c.members) refs.push_back(m->ref);
    result.clusters.push_back(std::move(refs));
  }
  return result;
}

std::vector<Detection> nms(const std::vector<Detection>& dets,
                           double iou_threshold) {
  std::vector<std::size_t> order(dets.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) {
                     if (dets[a].confidence != dets[b].confidence) {
                       return dets[a].confidence > dets[b].confidence;
                     }
                     return dets[a].source_id < dets[b].source_id;
                   });
  std::vector<Detection> kept;
  for (std::size_t i : order) {
    const Detection& cand = dets[i];
    bool suppressed = false;
    for (const Detection& k : kept) {
      if (k.class_id == cand.class_id && iou(k.box, cand.box) > iou_threshold) {
        suppressed = true;
        break;
      }
    }
    if (!suppressed) kept.push_back(cand);
  }
  return kept;
}

std::map<std::string, double> derive_weights(
    const std::map<std::string, double>& scores) {
  if (scores.empty()) return {};
  double sum = 0.0;
  for (const auto& [id, s] : scores) {
    if (!(s > 0.0) || !std::isfinite(s)) {
      throw std::invalid_argument("benchmark score for '" + id +
                                  "' must be positive");
    }
    sum += s;
  }
  const double n = static_cast<double>(scores.size());
  std::map<std::string, double> weights;
  for (const auto& [id, s] : scores) weights[id] = n * s / sum;
  return weights;
}

}  // namespace purifuse
