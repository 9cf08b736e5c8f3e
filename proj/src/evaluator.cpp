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

#include "purifuse/evaluator.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <unordered_map>

#include "purifuse/error.hpp"

namespace purifuse {

std::vector<MatchLabel> match_detections(std::span<const Detection> dets,
                                         const GroundTruthSet& gt,
                                         double iou_threshold) {
  std::vector<MatchLabel> labels(dets.size(), MatchLabel::kFalsePositive);
  std::vector<bool> taken(gt.boxes.size(), false);
  for (std::size_t d = 0; d < dets.size(); ++d) {
    const Detection& det = dets[d];
    std::size_t best = gt.boxes.size();
    double best_iou = -1.0;
    for (std::size_t g = 0; g < gt.boxes.size(); ++g) {
      const GroundTruthBox& gb = gt.boxes[g];
      if (gb.iscrowd || taken[g] || gb.class_id != det.class_id) continue;
      const double v = iou(det.box, gb.box);
      if (v >= iou_threshold && v > best_iou) {
        best_iou = v;
        best = g;
      }
    }
    if (best != gt.boxes.size()) {
      taken[best] = true;
      labels[d] = MatchLabel::kTruePositive;
      continue;
    }
    for (const GroundTruthBox& gb : gt.boxes) {
      if (!gb.iscrowd || gb.class_id != det.class_id) continue;
      if (intersection_over_first(det.box, gb.box) >= iou_threshold) {
        labels[d] = MatchLabel::kIgnored;
        break;
      }
    }
  }
  return labels;
}

namespace {

std::vector<ScoredLabel> sorted_counted(std::span<const ScoredLabel> labels) {
  std::vector<ScoredLabel> v;
  v.reserve(labels.size());
  for (const ScoredLabel& l : labels) {
    if (l.label != MatchLabel::kIgnored) v.push_back(l);
  }
  std::stable_sort(v.begin(), v.end(),
                   [](const ScoredLabel& a, const ScoredLabel& b) {
                     return a.confidence > b.confidence;
                   });
  return v;
}

}  // namespace

PRCurve pr_curve(std::span<const ScoredLabel> labels, std::size_t gt_count) {
  const std::vector<ScoredLabel> v = sorted_counted(labels);
  PRCurve c;
  c.confidence.reserve(v.size());
  c.precision.reserve(v.size());
  c.recall.reserve(v.size());
  double tp = 0.0, fp = 0.0;
  for (const ScoredLabel& l : v) {
    (l.label == MatchLabel::kTruePositive ? tp : fp) += 1.0;
    c.confidence.push_back(l.confidence);
    c.precision.push_back(tp / (tp + fp));
    c.recall.push_back(gt_count > 0 ? tp / static_cast<double>(gt_count)
                                    : 0.0);
  }
  std::vector<double> envelope = c.precision;
  for (std::size_t i = envelope.size(); i-- > 1;) {
    envelope[i - 1] = std::max(envelope[i - 1], envelope[i]);
  }
  for (std::size_t k = 0; k < kRecallPoints; ++k) {
    const double r = static_cast<double>(k) / 100.0;
    const auto it = std::lower_bound(c.recall.begin(), c.recall.end(), r);
    c.interpolated[k] =
        it == c.recall.end() ? 0.0 : envelope[it - c.recall.begin()];
  }
  return c;
}

std::optional<double> average_precision(std::span<const ScoredLabel> labels,
                                        std::size_t gt_count) {
  if (gt_count == 0) {
    if (labels.empty()) return std::nullopt;
    return 0.0;
  }
  const PRCurve c = pr_curve(labels, gt_count);
  double s = 0.0;
  for (double p : c.interpolated) s += p;
  return s / static_cast<double>(kRecallPoints);
}

std::vector<double> coco_iou_thresholds() {
  std::vector<double> t;
  for (int i = 0; i < 10; ++i) t.push_back(0.5 + 0.05 * i);
  return t;
}

namespace {

struct OperatingPoint {
  double precision = 0.0;
  double recall = 0.0;
  double confidence = 0.0;
};

// Class-mean precision/recall at the confidence cut that maximizes F1.
OperatingPoint max_f1_point(
    const std::vector<std::vector<ScoredLabel>>& per_class,
    const std::vector<std::size_t>& gt_counts) {
  std::vector<int> classes;
  for (std::size_t c = 0; c < gt_counts.size(); ++c) {
    if (gt_counts[c] > 0) classes.push_back(static_cast<int>(c));
  }
  if (classes.empty()) return {};

  // Per class: confidences descending with cumulative TP counts.
  std::vector<std::vector<double>> confs(gt_counts.size());
  std::vector<std::vector<double>> cum_tp(gt_counts.size());
  std::vector<double> candidates;
  for (int c : classes) {
    const std::vector<ScoredLabel> v = sorted_counted(per_class[c]);
    double tp = 0.0;
    for (const ScoredLabel& l : v) {
      if (l.label == MatchLabel::kTruePositive) tp += 1.0;
      confs[c].push_back(l.confidence);
      cum_tp[c].push_back(tp);
      candidates.push_back(l.confidence);
    }
  }
  if (candidates.empty()) return {};
  std::sort(candidates.begin(), candidates.end(), std::greater<>());
  candidates.erase(std::unique(candidates.begin(), candidates.end()),
                   candidates.end());

  OperatingPoint best;
  double best_f1 = -1.0;
  const double nc = static_cast<double>(classes.size());
  for (double tau : candidates) {
    double p_sum = 0.0, r_sum = 0.0;
    for (int c : classes) {
      // Number of detections with confidence >= tau (confs descending).
      const auto end = std::upper_bound(confs[c].begin(), confs[c].end(), tau,
                                        std::greater<>());
      const std::size_t n = static_cast<std::size_t>(end - confs[c].begin());
      if (n == 0) continue;
      const double tp = cum_tp[c][n - 1];
      p_sum += tp / static_cast<double>(n);
      r_sum += tp / static_cast<double>(gt_counts[c]);
    }
    const double p = p_sum / nc;
    const double r = r_sum / nc;
    const double f1 = (p + r) > 0.0 ? 2.0 * p * r / (p + r) : 0.0;
    if (f1 > best_f1) {
      best_f1 = f1;
      best = {p, r, tau};
    }
  }
  return best;
}

}  // namespace

EvalResult evaluate(const std::vector<DetectionSet>& dets,
                    const std::vector<GroundTruthSet>& gts,
                    const EvalConfig& cfg) {
  std::vector<const GroundTruthSet*> images;
  images.reserve(gts.size());
  for (const auto& g : gts) images.push_back(&g);
  std::stable_sort(images.begin(), images.end(),
                   [](const GroundTruthSet* a, const GroundTruthSet* b) {
                     return a->image_id < b->image_id;
                   });
  std::unordered_map<ImageId, std::size_t> image_index;
  for (std::size_t i = 0; i < images.size(); ++i) {
    if (!image_index.emplace(images[i]->image_id, i).second) {
      throw DataError("duplicate ground truth for image " +
                      std::to_string(images[i]->image_id));
    }
  }

  int num_classes = cfg.num_classes;
  if (num_classes <= 0) {
    int max_id = -1;
    for (const auto& g : gts) {
      for (const auto& b : g.boxes) max_id = std::max(max_id, b.class_id);
    }
    for (const auto& s : dets) {
      for (const auto& d : s.detections) max_id = std::max(max_id, d.class_id);
    }
    num_classes = max_id + 1;
  }
  for (const auto& g : gts) {
    for (const auto& b : g.boxes) {
      if (b.class_id < 0 || b.class_id >= num_classes) {
        throw DataError("ground truth class " + std::to_string(b.class_id) +
                        " outside category table");
      }
    }
  }

  // Detections grouped per image, all sets for one image pooled.
  std::vector<std::vector<Detection>> per_image(images.size());
  for (const auto& s : dets) {
    const auto it = image_index.find(s.image_id);
    if (it == image_index.end()) {
      throw DataError("detections reference unknown image " +
                      std::to_string(s.image_id));
    }
    for (const auto& d : s.detections) {
      if (d.class_id < 0 || d.class_id >= num_classes) {
        throw DataError("detection class " + std::to_string(d.class_id) +
                        " outside category table");
      }
      if (!d.box.space.is_normalized()) {
        throw DataError("detections must be in normalized coordinates");
      }
      per_image[it->second].push_back(d);
    }
  }

  std::vector<double> thresholds = cfg.iou_thresholds;
  if (thresholds.empty()) thresholds = coco_iou_thresholds();
  std::size_t idx50 = thresholds.size();
  for (std::size_t k = 0; k < thresholds.size(); ++k) {
    if (std::abs(thresholds[k] - 0.5) < 1e-12) idx50 = k;
  }
  const bool extra50 = idx50 == thresholds.size();
  if (extra50) thresholds.push_back(0.5);
  const std::size_t n_main = extra50 ? thresholds.size() - 1 : thresholds.size();

  const auto nc = static_cast<std::size_t>(num_classes);
  // labels[t][c]
  std::vector<std::vector<std::vector<ScoredLabel>>> labels(
      thresholds.size(), std::vector<std::vector<ScoredLabel>>(nc));
  std::vector<std::size_t> gt_counts(nc, 0);

  for (std::size_t i = 0; i < images.size(); ++i) {
    const GroundTruthSet& gt = *images[i];
    for (const auto& b : gt.boxes) {
      if (!b.iscrowd) ++gt_counts[b.class_id];
    }
    std::vector<std::vector<Detection>> by_class(nc);
    for (const Detection& d : per_image[i]) by_class[d.class_id].push_back(d);
    for (std::size_t c = 0; c < nc; ++c) {
      auto& cd = by_class[c];
      if (cd.empty()) continue;
      std::stable_sort(cd.begin(), cd.end(),
                       [](const Detection& a, const Detection& b) {
                         return a.confidence > b.confidence;
                       });
      if (cfg.max_detections > 0 && cd.size() > cfg.max_detections) {
        cd.resize(cfg.max_detections);
      }
      GroundTruthSet class_gt{gt.image_id, {}};
      for (const auto& b : gt.boxes) {
        if (b.class_id == static_cast<int>(c)) class_gt.boxes.push_back(b);
      }
      for (std::size_t t = 0; t < thresholds.size(); ++t) {
        const auto m = match_detections(cd, class_gt, thresholds[t]);
        for (std::size_t k = 0; k < cd.size(); ++k) {
          labels[t][c].push_back({cd[k].confidence, m[k]});
        }
      }
    }
  }

  EvalResult result;
  const std::size_t t50 = extra50 ? thresholds.size() - 1 : idx50;
  double sum50 = 0.0, sum5095 = 0.0;
  std::size_t counted = 0;
  for (std::size_t c = 0; c < nc; ++c) {
    const bool has_dets = !labels[t50][c].empty();
    if (gt_counts[c] == 0 && !has_dets) continue;
    ClassMetrics cm;
    cm.gt_count = gt_counts[c];
    cm.ap50 = average_precision(labels[t50][c], gt_counts[c]);
    double s = 0.0;
    for (std::size_t t = 0; t < n_main; ++t) {
      s += average_precision(labels[t][c], gt_counts[c]).value_or(0.0);
    }
    cm.ap5095 = s / static_cast<double>(n_main);
    result.curves50[static_cast<int>(c)] =
        pr_curve(labels[t50][c], gt_counts[c]);
    if (gt_counts[c] > 0) {
      sum50 += *cm.ap50;
      sum5095 += *cm.ap5095;
      ++counted;
    }
    result.per_class[static_cast<int>(c)] = cm;
  }
  if (counted > 0) {
    result.map50 = sum50 / static_cast<double>(counted);
    result.map5095 = sum5095 / static_cast<double>(counted);
  }
  const OperatingPoint op = max_f1_point(labels[t50], gt_counts);
  result.precision = op.precision;
  result.recall = op.recall;
  result.operating_confidence = op.confidence;
  return result;
}

double psnr(const ImageBuffer& a, const ImageBuffer& b) {
  if (!a.same_shape(b)) {
    throw std::invalid_argument("psnr needs images of the same shape");
  }
  if (a.empty()) return kPsnrCap;
  double se = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a.data()[i] - b.data()[i];
    se += d * d;
  }
  const double mse = se / static_cast<double>(a.size());
  if (mse <= 0.0) return kPsnrCap;
  return std::min(kPsnrCap, 10.0 * std::log10(1.0 / mse));
}

}  // namespace purifuse
