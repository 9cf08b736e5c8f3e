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


// purifuse: command line front end. Exit codes: 0 success, 1 usage or
// config error, 2 data error, 3 external command failure.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "purifuse/coco.hpp"
#include "purifuse/config.hpp"
#include "purifuse/distortion.hpp"
#include "purifuse/error.hpp"
#include "purifuse/evaluator.hpp"
#include "purifuse/fusion.hpp"
#include "purifuse/image_io.hpp"
#include "purifuse/orchestrator.hpp"
#include "purifuse/overlay.hpp"
#include "purifuse/purifier.hpp"
#include "purifuse/synthetic.hpp"

namespace fs = std::filesystem;
using namespace purifuse;

namespace {

struct Globals {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::string out;
  std::string format = "table";
};

ReportFormat format_of(const Globals& g) {
  return report_format_from_string(g.format);
}

Json load_json_arg(const std::string& arg) {
  // Inline JSON or a path to a JSON file.
  const auto first = arg.find_first_not_of(" \t\n");
  if (first != std::string::npos && (arg[first] == '[' || arg[first] == '{')) {
    try {
      return Json::parse(arg);
    } catch (const Json::parse_error& e) {
      throw ConfigError(std::string("malformed inline JSON: ") + e.what());
    }
  }
  std::ifstream in(arg);
  if (!in) throw ConfigError("cannot open " + arg);
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ConfigError("malformed JSON in " + arg + ": " + e.what());
  }
}

std::vector<fs::path> image_inputs(const fs::path& input) {
  if (!fs::exists(input)) throw DataError("no such input " + input.string());
  if (!fs::is_directory(input)) return {input};
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(input)) {
    if (e.is_regular_file() && is_image_path(e.path())) out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

// A single input written to an image path goes there; anything else goes
// into the --out directory under its own file name.
std::vector<std::pair<fs::path, fs::path>> image_jobs(const fs::path& input,
                                                      const fs::path& out) {
  const std::vector<fs::path> ins = image_inputs(input);
  if (!fs::is_directory(input) && is_image_path(out) && !fs::is_directory(out)) {
    if (out.has_parent_path()) fs::create_directories(out.parent_path());
    return {{ins.front(), out}};
  }
  fs::create_directories(out);
  std::vector<std::pair<fs::path, fs::path>> jobs;
  for (const fs::path& p : ins) jobs.emplace_back(p, out / p.filename());
  return jobs;
}

fs::path require_out(const Globals& g) {
  if (g.out.empty()) throw ConfigError("--out is required");
  return g.out;
}

PipelineConfig load_config(const Globals& g) {
  if (g.config.empty()) throw ConfigError("--config is required");
  PipelineConfig cfg = load_pipeline_config(g.config);
  if (g.seed) cfg.seed = *g.seed;
  if (g.workers) cfg.workers = *g.workers;
  if (!g.out.empty()) cfg.output_dir = g.out;
  cfg.validate();
  return cfg;
}

void print_metrics(const std::vector<MetricsRow>& rows, const Json& doc,
                   ReportFormat f) {
  switch (f) {
    case ReportFormat::kJson:
      std::cout << doc.dump(2) << "\n";
      break;
    case ReportFormat::kCsv:
      std::cout << format_rows_csv(rows);
      break;
    case ReportFormat::kTable:
      std::cout << format_rows_table(rows);
      break;
  }
}

void print_report(const AblationReport& r, ReportFormat f,
                  const std::string& out_dir) {
  if (!out_dir.empty()) {
    const fs::path dir(out_dir);
    write_file_atomic(dir / ("ablation_" + r.kind + ".csv"), r.to_csv());
    write_file_atomic(dir / ("ablation_" + r.kind + ".txt"), r.to_text());
    write_json_atomic(dir / ("ablation_" + r.kind + ".json"), r.to_json());
  }
  switch (f) {
    case ReportFormat::kJson:
      std::cout << r.to_json().dump(2) << "\n";
      break;
    case ReportFormat::kCsv:
      std::cout << r.to_csv();
      break;
    case ReportFormat::kTable:
      std::cout << r.to_text();
      break;
  }
}

int run_cli(int argc, char** argv) {
  CLI::App app{"Multi-variant image purification and detection fusion"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--config", g.config, "Pipeline config JSON");
  app.add_option("--seed", g.seed, "Global seed");
  app.add_option("--workers", g.workers, "Worker threads")
      ->check(CLI::PositiveNumber);
  app.add_option("--out", g.out, "Output directory or file");
  app.add_option("--format", g.format, "Report format")
      ->check(CLI::IsMember({"json", "csv", "table"}));

  // purify
  auto* purify = app.add_subcommand("purify", "Restore an image or directory");
  std::string purify_in, stages_arg, variant_id;
  purify->add_option("input", purify_in, "Image file or directory")->required();
  purify->add_option("--stages", stages_arg, "Stage list JSON (file or inline)");
  purify->add_option("--variant", variant_id, "Use this variant's stages from --config");
  purify->callback([&] {
    std::vector<StageSpec> stages;
    if (!stages_arg.empty()) {
      stages = parse_stage_list(load_json_arg(stages_arg));
    } else {
      if (g.config.empty()) throw ConfigError("purify needs --stages or --config");
      const PipelineConfig cfg = load_pipeline_config(g.config);
      const VariantConfig* v = &cfg.variants.front();
      if (!variant_id.empty()) {
        v = nullptr;
        for (const VariantConfig& c : cfg.variants) {
          if (c.id == variant_id) v = &c;
        }
        if (!v) throw ConfigError("no variant '" + variant_id + "'");
      }
      stages = v->stages;
    }
    if (stages.empty()) throw ConfigError("empty stage list");
    for (const auto& [in, out] : image_jobs(purify_in, require_out(g))) {
      write_image(out, run_pipeline(read_image(in), stages));
      std::cout << out.string() << "\n";
    }
  });

  // distort
  auto* dist = app.add_subcommand("distort", "Apply a synthetic distortion");
  std::string dist_in, dist_spec, dist_kind = "gaussian_noise",
                                  dist_sev = "medium";
  dist->add_option("input", dist_in, "Image file or directory")->required();
  dist->add_option("--spec", dist_spec, "Distortion JSON (file or inline)");
  dist->add_option("--kind", dist_kind, "gaussian_noise, motion_blur or downsample");
  dist->add_option("--severity", dist_sev, "low, medium or high");
  dist->callback([&] {
    Json spec_doc = dist_spec.empty()
                        ? Json{{"kind", dist_kind}, {"severity", dist_sev}}
                        : load_json_arg(dist_spec);
    if (g.seed && !spec_doc.contains("seed")) spec_doc["seed"] = *g.seed;
    const DistortionSpec spec = parse_distortion_spec(spec_doc);
    std::uint64_t stream = 0;
    for (const auto& [in, out] : image_jobs(dist_in, require_out(g))) {
      write_image(out, distort(read_image(in), spec, stream++));
      std::cout << out.string() << "\n";
    }
  });

  // detect-oracle
  auto* det = app.add_subcommand("detect-oracle", "Synthetic detections from ground truth");
  std::string det_ann, det_oracle;
  double det_quality = 1.0;
  int det_variant = 0;
  det->add_option("--annotations", det_ann, "COCO annotations")->required();
  det->add_option("--quality", det_quality, "Detector quality in [0,1]")
      ->check(CLI::Range(0.0, 1.0));
  det->add_option("--variant-id", det_variant, "Stream / source id");
  det->add_option("--oracle", det_oracle, "Oracle JSON (file or inline)");
  det->callback([&] {
    const CocoDataset ds = load_coco_annotations(det_ann);
    OracleSpec spec = det_oracle.empty() ? OracleSpec{}
                                         : parse_oracle_spec(load_json_arg(det_oracle));
    if (g.seed) spec.seed = *g.seed;
    std::vector<DetectionSet> sets;
    for (const GroundTruthSet& gt : ds.ground_truth()) {
      sets.push_back(oracle_detect(gt, det_quality, spec, det_variant,
                                   ds.num_classes()));
    }
    write_json_atomic(require_out(g), to_coco_results(sets, ds));
  });

  // fuse
  auto* fuse = app.add_subcommand("fuse", "Fuse detection files");
  std::vector<std::string> fuse_files;
  std::vector<double> fuse_weights;
  std::string fuse_ann, fuse_method = "wbf", fuse_rescale = "min_cluster_over_models";
  double fuse_iou = 0.55, fuse_skip = 0.0;
  fuse->add_option("detections", fuse_files, "COCO results files")->required();
  fuse->add_option("--annotations", fuse_ann, "COCO annotations")->required();
  fuse->add_option("--weights", fuse_weights, "One weight per file")->delimiter(',');
  fuse->add_option("--method", fuse_method, "wbf or nms")
      ->check(CLI::IsMember({"wbf", "nms"}));
  fuse->add_option("--iou", fuse_iou, "IoU threshold");
  fuse->add_option("--skip", fuse_skip, "Skip confidence");
  fuse->add_option("--rescale", fuse_rescale,
                   "min_cluster_over_models, cluster_over_models or none");
  fuse->callback([&] {
    const CocoDataset ds = load_coco_annotations(fuse_ann);
    if (!fuse_weights.empty() && fuse_weights.size() != fuse_files.size()) {
      throw ConfigError("--weights needs one value per detection file");
    }
    FusionConfig fc;
    fc.iou_threshold = fuse_iou;
    fc.skip_confidence = fuse_skip;
    try {
      fc.rescale_mode = rescale_mode_from_string(fuse_rescale);
      fc.validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
    std::vector<std::vector<DetectionSet>> per_file;
    for (std::size_t f = 0; f < fuse_files.size(); ++f) {
      per_file.push_back(load_coco_results(fuse_files[f], ds, static_cast<int>(f)));
    }
    std::vector<DetectionSet> fused;
    for (std::size_t i = 0; i < ds.images().size(); ++i) {
      std::vector<DetectionSet> sets;
      for (std::size_t f = 0; f < per_file.size(); ++f) {
        DetectionSet s = per_file[f][i];
        s.weight = fuse_weights.empty() ? 1.0 : fuse_weights[f];
        sets.push_back(std::move(s));
      }
      if (fuse_method == "wbf") {
        DetectionSet out = wbf(sets, fc);
        out.image_id = ds.images()[i].id;
        fused.push_back(std::move(out));
      } else {
        std::vector<Detection> pooled;
        for (const DetectionSet& s : sets) {
          pooled.insert(pooled.end(), s.detections.begin(), s.detections.end());
        }
        fused.push_back({ds.images()[i].id, nms(pooled, fuse_iou), 1.0});
      }
    }
    write_json_atomic(require_out(g), to_coco_results(fused, ds));
  });

  // eval
  auto* ev = app.add_subcommand("eval", "Score detections against annotations");
  std::string ev_ann, ev_det;
  std::size_t ev_max = 100;
  ev->add_option("--annotations", ev_ann, "COCO annotations")->required();
  ev->add_option("--detections", ev_det, "COCO results")->required();
  ev->add_option("--max-detections", ev_max, "Per image and class");
  ev->callback([&] {
    const CocoDataset ds = load_coco_annotations(ev_ann);
    EvalConfig ec;
    ec.max_detections = ev_max;
    ec.num_classes = ds.num_classes();
    const EvalResult r = evaluate(load_coco_results(ev_det, ds), ds.ground_truth(), ec);
    const Json doc = to_json(r, &ds, true);
    if (!g.out.empty()) write_json_atomic(g.out, doc);
    print_metrics({metrics_row("detections", r)}, doc, format_of(g));
  });

  // run
  auto* run = app.add_subcommand("run", "Run a full pipeline config");
  run->callback([&] {
    const PipelineConfig cfg = load_config(g);
    const ExperimentResult r = run_experiment(cfg);
    std::vector<MetricsRow> rows{metrics_row(
        std::string("fused (") + to_string(cfg.fusion_method) + ")", r.metrics)};
    for (const VariantOutcome& v : r.variants) {
      rows.push_back(metrics_row(v.id, v.metrics));
    }
    print_metrics(rows, to_json(r.metrics, nullptr, false), format_of(g));
  });

  // ablate
  auto* ablate = app.add_subcommand("ablate", "Component or ordering ablations");
  ablate->require_subcommand(1);
  auto* comps = ablate->add_subcommand("components", "Cumulative component toggles");
  std::vector<std::string> toggle_names{"RD", "MD", "RE", "extra_variants",
                                        "large_size", "wbf"};
  bool full_grid = false;
  comps->add_option("--toggles", toggle_names, "Ordered toggles")->delimiter(',');
  comps->add_flag("--full-grid", full_grid, "Every subset instead of cumulative rows");
  comps->callback([&] {
    const PipelineConfig cfg = load_config(g);
    std::vector<Toggle> toggles;
    for (const std::string& t : toggle_names) toggles.push_back(parse_toggle(t));
    print_report(ablate_components(cfg, load_experiment_data(cfg), toggles, full_grid),
                 format_of(g), g.out);
  });
  auto* ords = ablate->add_subcommand("orderings", "Stage ordering ablation");
  std::vector<std::string> ordering_args;
  ords->add_option("--orderings", ordering_args,
                   "Orderings such as RD->RE->MD (default: the four standard ones)");
  ords->callback([&] {
    const PipelineConfig cfg = load_config(g);
    std::vector<StageOrdering> orderings;
    // "RD->RE->MD,MD->RD->RE" lists several; "RD,RE,MD" is a single one.
    for (const std::string& arg : ordering_args) {
      if (arg.find("->") == std::string::npos) {
        orderings.push_back(parse_ordering(arg));
        continue;
      }
      std::stringstream ss(arg);
      for (std::string piece; std::getline(ss, piece, ',');) {
        if (!piece.empty()) orderings.push_back(parse_ordering(piece));
      }
    }
    if (orderings.empty()) orderings = default_orderings();
    print_report(ablate_orderings(cfg, load_experiment_data(cfg), orderings),
                 format_of(g), g.out);
  });

  // overlay
  auto* ov = app.add_subcommand("overlay", "Draw ground truth and detections");
  std::string ov_ann, ov_det, ov_images;
  double ov_min = 0.0;
  ov->add_option("--annotations", ov_ann, "COCO annotations")->required();
  ov->add_option("--detections", ov_det, "COCO results")->required();
  ov->add_option("--images", ov_images, "Images directory")->required();
  ov->add_option("--min-confidence", ov_min, "Hide weaker detections");
  ov->callback([&] {
    const CocoDataset ds = load_coco_annotations(ov_ann);
    const fs::path dir(ov_images);
    const auto written = render_overlays(
        ds, [dir](const ImageRecord& r) { return read_image(dir / r.file_name); },
        load_coco_results(ov_det, ds), require_out(g), ov_min);
    for (const fs::path& p : written) std::cout << p.string() << "\n";
  });

  // synth
  auto* synth = app.add_subcommand("synth", "Write a synthetic distorted dataset");
  SyntheticOptions so;
  std::string so_sev = "medium";
  synth->add_option("--num-images", so.num_images, "Image count");
  synth->add_option("--width", so.width, "Width in pixels");
  synth->add_option("--height", so.height, "Height in pixels");
  synth->add_option("--channels", so.channels, "1 or 3");
  synth->add_option("--classes", so.num_classes, "Category count");
  synth->add_option("--severity", so_sev, "low, medium or high");
  synth->callback([&] {
    if (g.seed) so.seed = *g.seed;
    try {
      so.severity = severity_from_string(so_sev);
      write_synthetic_dataset(make_synthetic_dataset(so), require_out(g));
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run_cli(argc, argv);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const ExternalCommandError& e) {
    std::cerr << "external command failed: " << e.what() << "\n";
    return 3;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const StageError& e) {
    std::cerr << "stage failure: " << e.what() << "\n";
    return e.external_failure() ? 3 : 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
