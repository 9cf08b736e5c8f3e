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


#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "json.hpp"
#include "purifuse/coco.hpp"
#include "purifuse/config.hpp"
#include "purifuse/evaluator.hpp"
#include "purifuse/fusion.hpp"
#include "purifuse/image.hpp"

namespace purifuse {

using ImageLoader = std::function<ImageBuffer(const ImageRecord&)>;

/// Inputs of one experiment. `load_image` may be empty only for the files
/// detector; `load_clean` is needed when the oracle scores PSNR gains.
struct ExperimentData {
  CocoDataset dataset;
  ImageLoader load_image;
  ImageLoader load_clean;
};

/// Reads annotations and wires loaders over the configured directories.
ExperimentData load_experiment_data(const PipelineConfig& cfg);

struct VariantOutcome {
  std::string id;
  double weight = 1.0;
  std::vector<DetectionSet> detections;  // dataset order
  EvalResult metrics;
};

struct ExperimentResult {
  EvalResult metrics;
  std::vector<DetectionSet> fused;  // dataset order
  std::vector<VariantOutcome> variants;
};

/// Purify, detect, fuse and evaluate. Artifacts are written under
/// cfg.output_dir unless it is empty. Failures carry the image id, variant
/// id and stage index and keep their error category.
ExperimentResult run_experiment(const PipelineConfig& cfg,
                                const ExperimentData& data);
ExperimentResult run_experiment(const PipelineConfig& cfg);

void write_artifacts(const ExperimentResult& result, const CocoDataset& ds,
                     const std::filesystem::path& dir);

// --- reporting -------------------------------------------------------------

enum class ReportFormat { kJson, kCsv, kTable };
ReportFormat report_format_from_string(const std::string& name);

/// Metrics document; per-class entries use COCO category ids when `ds` is
/// given, class indices otherwise.
nlohmann::json to_json(const EvalResult& r, const CocoDataset* ds = nullptr,
                       bool with_curves = true);

struct MetricsRow {
  std::string label;
  double precision = 0.0;
  double recall = 0.0;
  double map50 = 0.0;
  double map5095 = 0.0;
};

MetricsRow metrics_row(const std::string& label, const EvalResult& r);
std::string format_rows_csv(const std::vector<MetricsRow>& rows);
std::string format_rows_table(const std::vector<MetricsRow>& rows);

// --- ablations -------------------------------------------------------------

struct Toggle {
  enum class Kind {
    kRealDenoise,
    kMotionDeblur,
    kUpscale,
    kExtraVariants,
    kVariant,  // one named variant
    kLargeSize,
    kWbf,
  };
  Kind kind = Kind::kRealDenoise;
  std::string variant_id;  // kVariant only

  std::string name() const;
};

/// "real_denoise"/"RD", "motion_deblur"/"MD", "upscale"/"RE",
/// "extra_variants", "variant:<id>", "large_size", "wbf". ConfigError
/// otherwise.
Toggle parse_toggle(const std::string& name);

/// First variant only, restoration stages removed, large size off, NMS.
PipelineConfig baseline_config(const PipelineConfig& cfg);

/// The baseline with `enabled` switched back on. Stages keep their
/// configured order.
PipelineConfig apply_toggles(const PipelineConfig& cfg,
                             const std::vector<Toggle>& enabled);

using StageOrdering = std::vector<StageKind>;

/// "RD->RE->MD" or "RD,RE,MD".
StageOrdering parse_ordering(const std::string& text);
std::string ordering_label(const StageOrdering& ordering);
std::vector<StageOrdering> default_orderings();

/// Stable-sorts every variant's stages by their role's position in
/// `ordering`; external-role stages go last. ConfigError unless `ordering`
/// is a permutation of the restoration roles the config uses.
PipelineConfig apply_ordering(const PipelineConfig& cfg,
                              const StageOrdering& ordering);

struct AblationRow {
  std::string label;
  std::vector<std::string> toggles;  // or the ordering's stage tags
  double precision = 0.0;
  double recall = 0.0;
  double map50 = 0.0;
  double map5095 = 0.0;
};

struct AblationReport {
  std::string kind;  // "components" or "orderings"
  std::vector<AblationRow> rows;

  std::string to_csv() const;
  std::string to_text() const;
  nlohmann::json to_json() const;
};

/// Cumulative rows: row 0 is the baseline and row k enables toggles 1..k.
/// With `full_grid`, one row per subset in bitmask order instead. Each
/// row's artifacts go to <output_dir>/ablation/<row index>.
AblationReport ablate_components(const PipelineConfig& cfg,
                                 const ExperimentData& data,
                                 const std::vector<Toggle>& toggles,
                                 bool full_grid = false);

AblationReport ablate_orderings(const PipelineConfig& cfg,
                                const ExperimentData& data,
                                const std::vector<StageOrdering>& orderings);

}  // namespace purifuse
