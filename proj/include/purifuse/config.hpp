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

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "purifuse/distortion.hpp"
#include "purifuse/evaluator.hpp"
#include "purifuse/fusion.hpp"
#include "purifuse/purifier.hpp"

namespace purifuse {

inline constexpr int kConfigSchemaVersion = 1;

struct VariantConfig {
  std::string id;
  std::vector<StageSpec> stages;
  /// nullopt means "derive": weight from benchmark_score via derive_weights.
  std::optional<double> weight = 1.0;
  std::optional<double> benchmark_score;
  /// Oracle detector quality for this variant's images.
  double quality = 1.0;
};

enum class DetectorKind { kOracle, kFiles, kExternal };

struct DetectorConfig {
  DetectorKind kind = DetectorKind::kOracle;

  OracleSpec oracle;
  /// Oracle quality gain per dB of PSNR improvement of the purified image
  /// over its input, measured against clean references when available.
  double quality_per_db = 0.0;
  /// Oracle quality added when the large-size component is on.
  double large_size_quality_bump = 0.05;

  /// kFiles: COCO results file per variant id.
  std::map<std::string, std::filesystem::path> files;

  /// kExternal: template with {image}, {output}, {size} and {image_id}; the command
  /// writes COCO results for that single image, boxes in its pixel frame.
  std::string command;
  std::chrono::milliseconds timeout{120'000};
  int input_size = 640;
  int large_input_size = 1280;

  /// Large-size component (bigger detector input / oracle bump).
  bool large_size = false;
};

enum class FusionMethod { kWbf, kNms };

const char* to_string(FusionMethod m);

struct DatasetConfig {
  std::filesystem::path images_dir;
  std::filesystem::path annotations;
  /// Optional distortion-free counterparts (same file names).
  std::optional<std::filesystem::path> clean_images_dir;
};

struct PipelineConfig {
  int schema_version = kConfigSchemaVersion;
  DatasetConfig dataset;
  std::vector<VariantConfig> variants;
  DetectorConfig detector;
  FusionConfig fusion;
  FusionMethod fusion_method = FusionMethod::kWbf;
  EvalConfig eval;
  std::string operating_point = "max_f1";
  std::filesystem::path output_dir;
  std::uint64_t seed = 0;
  int workers = 1;
  int max_subprocesses = 2;
  bool persist_stage_outputs = false;

  /// Structural checks (no filesystem access). Throws ConfigError.
  void validate() const;
  /// validate() plus existence of every referenced input path.
  void validate_paths() const;
};

/// Strict parse: unknown fields and unknown stage kinds raise ConfigError.
/// Relative paths are resolved against `base_dir`.
PipelineConfig parse_pipeline_config(const nlohmann::json& doc,
                                     const std::filesystem::path& base_dir = {});
PipelineConfig load_pipeline_config(const std::filesystem::path& path);
nlohmann::json to_json(const PipelineConfig& cfg);

StageSpec parse_stage_spec(const nlohmann::json& doc);
std::vector<StageSpec> parse_stage_list(const nlohmann::json& doc);
nlohmann::json to_json(const StageSpec& stage);

OracleSpec parse_oracle_spec(const nlohmann::json& doc);
nlohmann::json to_json(const OracleSpec& spec);

DistortionSpec parse_distortion_spec(const nlohmann::json& doc);
nlohmann::json to_json(const DistortionSpec& spec);

}  // namespace purifuse
