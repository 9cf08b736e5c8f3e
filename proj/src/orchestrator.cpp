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


#include "purifuse/orchestrator.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <exception>
#include <map>
#include <set>
#include <sstream>
#include <thread>

#include "purifuse/error.hpp"
#include "purifuse/image_io.hpp"
#include "purifuse/purifier.hpp"
#include "purifuse/rng.hpp"
#include "purifuse/subprocess.hpp"

namespace purifuse {

namespace {

// Call inside a catch block: rethrows the active exception with `prefix`
// prepended, keeping its error category.
[[noreturn]] void rethrow_with_context(const std::string& prefix) {
  try {
    throw;
  } catch (const StageError& e) {
    if (e.external_failure()) throw ExternalCommandError(prefix + e.what());
    throw DataError(prefix + e.what());
  } catch (const ExternalCommandError& e) {
    throw ExternalCommandError(prefix + e.what());
  } catch (const ConfigError& e) {
    throw ConfigError(prefix + e.what());
  } catch (const std::exception& e) {
    throw DataError(prefix + e.what());
  }
}

std::string context(ImageId image, const std::string& variant) {
  return "image " + std::to_string(image) + ", variant '" + variant + "': ";
}

std::vector<double> variant_weights(const PipelineConfig& cfg) {
  std::map<std::string, double> scores;
  for (const VariantConfig& v : cfg.variants) {
    if (!v.weight) scores[v.id] = *v.benchmark_score;
  }
  std::map<std::string, double> derived;
  try {
    derived = derive_weights(scores);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  std::vector<double> w;
  for (const VariantConfig& v : cfg.variants) {
    w.push_back(v.weight ? *v.weight : derived.at(v.id));
  }
  return w;
}

double psnr_against(const ImageBuffer& img, const ImageBuffer& clean) {
  if (img.width() == clean.width() && img.height() == clean.height() &&
      img.channels() == clean.channels()) {
    return psnr(img, clean);
  }
  if (img.channels() != clean.channels()) {
    throw DataError("clean reference has a different channel count");
  }
  return psnr(resize_to(img, clean.width(), clean.height()), clean);
}

DetectionSet external_detect(const PipelineConfig& cfg, const CocoDataset& ds,
                             const ImageRecord& rec, const ImageBuffer& img,
                             int variant_index) {
  TempDir tmp;
  const auto in_path = tmp.path() / "image.png";
  const auto out_path = tmp.path() / "detections.json";
  write_image(in_path, img);
  const int size = cfg.detector.large_size ? cfg.detector.large_input_size
                                           : cfg.detector.input_size;
  const std::string cmd = substitute_placeholders(
      cfg.detector.command, {{"image", in_path.string()},
                             {"output", out_path.string()},
                             {"size", std::to_string(size)},
                             {"image_id", std::to_string(rec.id)}});
  const int status = run_shell_command(cmd, cfg.detector.timeout);
  if (status != 0) {
    throw ExternalCommandError("detector exited with status " +
                               std::to_string(status));
  }
  if (!std::filesystem::exists(out_path)) {
    throw ExternalCommandError("detector wrote no output");
  }
  // The command reports boxes in the frame of the image it was given.
  ImageRecord local = rec;
  local.width = img.width();
  local.height = img.height();
  const CocoDataset frame(ds.categories(), {local}, {GroundTruthSet{rec.id, {}}});
  try {
    return parse_coco_results(read_json_file(out_path), frame, variant_index)
        .front();
  } catch (const DataError& e) {
    throw ExternalCommandError(std::string("detector output: ") + e.what());
  }
}

struct ImageOutcome {
  std::vector<DetectionSet> per_variant;
  DetectionSet fused;
};

DetectionSet fuse(const PipelineConfig& cfg, ImageId id,
                  const std::vector<DetectionSet>& sets) {
  if (cfg.fusion_method == FusionMethod::kWbf) {
    DetectionSet out = wbf(sets, cfg.fusion);
    out.image_id = id;
    return out;
  }
  std::vector<Detection> pooled;
  for (const DetectionSet& s : sets) {
    pooled.insert(pooled.end(), s.detections.begin(), s.detections.end());
  }
  return DetectionSet{id, nms(pooled, cfg.fusion.iou_threshold), 1.0};
}

std::string fmt(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

Json optional_json(const std::optional<double>& v) {
  return v ? Json(*v) : Json(nullptr);
}

}  // namespace

ExperimentData load_experiment_data(const PipelineConfig& cfg) {
  cfg.validate_paths();
  ExperimentData data;
  data.dataset = load_coco_annotations(cfg.dataset.annotations);
  if (!cfg.dataset.images_dir.empty()) {
    const auto dir = cfg.dataset.images_dir;
    data.load_image = [dir](const ImageRecord& r) {
      return read_image(dir / r.file_name);
    };
  }
  if (cfg.dataset.clean_images_dir) {
    const auto dir = *cfg.dataset.clean_images_dir;
    data.load_clean = [dir](const ImageRecord& r) {
      return read_image(dir / r.file_name);
    };
  }
  return data;
}

ExperimentResult run_experiment(const PipelineConfig& cfg) {
  return run_experiment(cfg, load_experiment_data(cfg));
}

ExperimentResult run_experiment(const PipelineConfig& cfg,
                                const ExperimentData& data) {
  cfg.validate();
  const CocoDataset& ds = data.dataset;
  const DetectorConfig& det = cfg.detector;
  const bool from_files = det.kind == DetectorKind::kFiles;
  const bool scores_psnr =
      det.kind == DetectorKind::kOracle && det.quality_per_db != 0.0;
  if (!from_files && !data.load_image) {
    throw ConfigError("this detector needs an images directory");
  }
  if (scores_psnr && !data.load_clean) {
    throw ConfigError("quality_per_db needs clean reference images");
  }
  set_max_subprocesses(cfg.max_subprocesses);

  const std::size_t n_variants = cfg.variants.size();
  const std::vector<double> weights = variant_weights(cfg);

  std::vector<std::vector<DetectionSet>> file_sets;
  if (from_files) {
    for (std::size_t v = 0; v < n_variants; ++v) {
      const std::string& id = cfg.variants[v].id;
      try {
        file_sets.push_back(load_coco_results(det.files.at(id), ds,
                                              static_cast<int>(v)));
      } catch (...) {
        rethrow_with_context("variant '" + id + "': ");
      }
    }
  }

  OracleSpec oracle = det.oracle;
  oracle.seed = mix64(cfg.seed) ^ det.oracle.seed;

  const auto& images = ds.images();
  auto process = [&](std::size_t i) {
    const ImageRecord& rec = images[i];
    ImageOutcome out;
    out.per_variant.resize(n_variants);
    ImageBuffer input;
    ImageBuffer clean;
    double input_psnr = 0.0;
    if (!from_files) {
      try {
        input = data.load_image(rec);
        if (scores_psnr) {
          clean = data.load_clean(rec);
          input_psnr = psnr_against(input, clean);
        }
      } catch (...) {
        rethrow_with_context("image " + std::to_string(rec.id) + ": ");
      }
    }
    for (std::size_t v = 0; v < n_variants; ++v) {
      const VariantConfig& variant = cfg.variants[v];
      const int vi = static_cast<int>(v);
      DetectionSet set;
      try {
        if (from_files) {
          set = file_sets[v][i];
        } else {
          PipelineOptions opts;
          if (cfg.persist_stage_outputs && !cfg.output_dir.empty()) {
            opts.persist_dir = cfg.output_dir / "stages" / variant.id /
                               std::to_string(rec.id);
          }
          const ImageBuffer purified =
              variant.stages.empty() ? input
                                     : run_pipeline(input, variant.stages, opts);
          if (det.kind == DetectorKind::kOracle) {
            double q = variant.quality;
            if (det.large_size) q += det.large_size_quality_bump;
            if (scores_psnr) {
              q += det.quality_per_db *
                   (psnr_against(purified, clean) - input_psnr);
            }
            set = oracle_detect(ds.ground_truth()[i], q, oracle, vi,
                                ds.num_classes());
          } else {
            set = external_detect(cfg, ds, rec, purified, vi);
          }
        }
      } catch (...) {
        rethrow_with_context(context(rec.id, variant.id));
      }
      set.image_id = rec.id;
      set.weight = weights[v];
      for (Detection& d : set.detections) d.source_id = vi;
      out.per_variant[v] = std::move(set);
    }
    out.fused = fuse(cfg, rec.id, out.per_variant);
    return out;
  };

  std::vector<ImageOutcome> outcomes(images.size());
  std::vector<std::exception_ptr> errors(images.size());
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= images.size() || failed.load()) return;
      try {
        outcomes[i] = process(i);
      } catch (...) {
        errors[i] = std::current_exception();
        failed.store(true);
      }
    }
  };
  const int n_workers =
      std::max(1, std::min<int>(cfg.workers, static_cast<int>(images.size())));
  if (n_workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < n_workers; ++t) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }
  // Indices are claimed in order, so the lowest failing image is stable.
  for (const std::exception_ptr& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  EvalConfig ec = cfg.eval;
  ec.num_classes = ds.num_classes();
  ExperimentResult result;
  for (std::size_t v = 0; v < n_variants; ++v) {
    VariantOutcome vo;
    vo.id = cfg.variants[v].id;
    vo.weight = weights[v];
    for (ImageOutcome& o : outcomes) {
      vo.detections.push_back(std::move(o.per_variant[v]));
    }
    vo.metrics = evaluate(vo.detections, ds.ground_truth(), ec);
    result.variants.push_back(std::move(vo));
  }
  for (ImageOutcome& o : outcomes) result.fused.push_back(std::move(o.fused));
  result.metrics = evaluate(result.fused, ds.ground_truth(), ec);

  if (!cfg.output_dir.empty()) write_artifacts(result, ds, cfg.output_dir);
  return result;
}

void write_artifacts(const ExperimentResult& result, const CocoDataset& ds,
                     const std::filesystem::path& dir) {
  Json variant_metrics = Json::object();
  for (const VariantOutcome& v : result.variants) {
    write_json_atomic(dir / "detections" / (v.id + ".json"),
                      to_coco_results(v.detections, ds));
    Json m = to_json(v.metrics, &ds, false);
    m["weight"] = v.weight;
    variant_metrics[v.id] = std::move(m);
  }
  write_json_atomic(dir / "variant_metrics.json", variant_metrics);
  write_json_atomic(dir / "fused_detections.json",
                    to_coco_results(result.fused, ds));
  write_json_atomic(dir / "metrics.json", to_json(result.metrics, &ds, true));
}

// --- reporting -------------------------------------------------------------

ReportFormat report_format_from_string(const std::string& name) {
  if (name == "json") return ReportFormat::kJson;
  if (name == "csv") return ReportFormat::kCsv;
  if (name == "table") return ReportFormat::kTable;
  throw ConfigError("unknown format '" + name + "'");
}

Json to_json(const EvalResult& r, const CocoDataset* ds, bool with_curves) {
  auto key = [&](int cls) {
    return ds ? ds->category_id(cls) : cls;
  };
  Json per_class = Json::array();
  for (const auto& [cls, m] : r.per_class) {
    Json c = {{"category_id", key(cls)},
              {"ap50", optional_json(m.ap50)},
              {"ap5095", optional_json(m.ap5095)},
              {"gt_count", m.gt_count}};
    if (ds) c["name"] = ds->categories()[cls].name;
    per_class.push_back(std::move(c));
  }
  Json out = {{"precision", r.precision},
              {"recall", r.recall},
              {"map50", r.map50},
              {"map5095", r.map5095},
              {"operating_confidence", r.operating_confidence},
              {"per_class", per_class}};
  if (with_curves) {
    Json curves = Json::array();
    for (const auto& [cls, c] : r.curves50) {
      curves.push_back({{"category_id", key(cls)},
                        {"confidence", c.confidence},
                        {"precision", c.precision},
                        {"recall", c.recall},
                        {"interpolated", c.interpolated}});
    }
    out["pr_curves_iou50"] = std::move(curves);
  }
  return out;
}

MetricsRow metrics_row(const std::string& label, const EvalResult& r) {
  return {label, r.precision, r.recall, r.map50, r.map5095};
}

std::string format_rows_csv(const std::vector<MetricsRow>& rows) {
  std::string out = "configuration,precision,recall,map50,map5095\n";
  for (const MetricsRow& r : rows) {
    std::string label = r.label;
    if (label.find_first_of(",\"") != std::string::npos) {
      std::string q = "\"";
      for (char c : label) q += c == '"' ? std::string("\"\"") : std::string(1, c);
      label = q + "\"";
    }
    out += label + "," + fmt(r.precision, 6) + "," + fmt(r.recall, 6) + "," +
           fmt(r.map50, 6) + "," + fmt(r.map5095, 6) + "\n";
  }
  return out;
}

std::string format_rows_table(const std::vector<MetricsRow>& rows) {
  static const char* kHeads[] = {"Configuration", "Precision", "Recall",
                                 "mAP(0.5)", "mAP(0.5:0.95)"};
  std::size_t label_w = std::string(kHeads[0]).size();
  for (const MetricsRow& r : rows) label_w = std::max(label_w, r.label.size());
  auto pad_right = [](std::string s, std::size_t w) {
    s.resize(std::max(w, s.size()), ' ');
    return s;
  };
  auto pad_left = [](const std::string& s, std::size_t w) {
    return std::string(w > s.size() ? w - s.size() : 0, ' ') + s;
  };
  std::string out = pad_right(kHeads[0], label_w);
  for (int k = 1; k < 5; ++k) out += "  " + std::string(kHeads[k]);
  out += "\n";
  for (const MetricsRow& r : rows) {
    const double vals[] = {r.precision, r.recall, r.map50, r.map5095};
    std::string line = pad_right(r.label, label_w);
    for (int k = 0; k < 4; ++k) {
      line += "  " + pad_left(fmt(vals[k], 3), std::string(kHeads[k + 1]).size());
    }
    out += line + "\n";
  }
  return out;
}

// --- ablations -------------------------------------------------------------

std::string Toggle::name() const {
  switch (kind) {
    case Kind::kRealDenoise:
      return "RD";
    case Kind::kMotionDeblur:
      return "MD";
    case Kind::kUpscale:
      return "RE";
    case Kind::kExtraVariants:
      return "extra_variants";
    case Kind::kVariant:
      return "variant:" + variant_id;
    case Kind::kLargeSize:
      return "large_size";
    case Kind::kWbf:
      return "wbf";
  }
  return "?";
}

Toggle parse_toggle(const std::string& name) {
  using K = Toggle::Kind;
  if (name == "real_denoise" || name == "RD") return {K::kRealDenoise, {}};
  if (name == "motion_deblur" || name == "MD") return {K::kMotionDeblur, {}};
  if (name == "upscale" || name == "RE") return {K::kUpscale, {}};
  if (name == "extra_variants") return {K::kExtraVariants, {}};
  if (name == "large_size") return {K::kLargeSize, {}};
  if (name == "wbf" || name == "WBF") return {K::kWbf, {}};
  if (name.rfind("variant:", 0) == 0 && name.size() > 8) {
    return {K::kVariant, name.substr(8)};
  }
  throw ConfigError("unknown toggle '" + name + "'");
}

PipelineConfig baseline_config(const PipelineConfig& cfg) {
  return apply_toggles(cfg, {});
}

PipelineConfig apply_toggles(const PipelineConfig& cfg,
                             const std::vector<Toggle>& enabled) {
  using K = Toggle::Kind;
  std::set<StageKind> roles;
  std::set<std::string> named;
  bool extra = false;
  bool large = false;
  bool use_wbf = false;
  for (const Toggle& t : enabled) {
    switch (t.kind) {
      case K::kRealDenoise:
        roles.insert(StageKind::kRealDenoise);
        break;
      case K::kMotionDeblur:
        roles.insert(StageKind::kMotionDeblur);
        break;
      case K::kUpscale:
        roles.insert(StageKind::kUpscale);
        break;
      case K::kExtraVariants:
        extra = true;
        break;
      case K::kVariant: {
        const bool known = std::any_of(
            cfg.variants.begin(), cfg.variants.end(),
            [&](const VariantConfig& v) { return v.id == t.variant_id; });
        if (!known) {
          throw ConfigError("toggle names unknown variant '" + t.variant_id +
                            "'");
        }
        named.insert(t.variant_id);
        break;
      }
      case K::kLargeSize:
        large = true;
        break;
      case K::kWbf:
        use_wbf = true;
        break;
    }
  }
  PipelineConfig out = cfg;
  out.variants.clear();
  for (std::size_t i = 0; i < cfg.variants.size(); ++i) {
    const VariantConfig& v = cfg.variants[i];
    if (i != 0 && !extra && !named.count(v.id)) continue;
    VariantConfig kept = v;
    kept.stages.clear();
    for (const StageSpec& s : v.stages) {
      const StageKind k = s.kind();
      if (k == StageKind::kExternal || roles.count(k)) kept.stages.push_back(s);
    }
    out.variants.push_back(std::move(kept));
  }
  out.detector.large_size = large;
  out.fusion_method = use_wbf ? FusionMethod::kWbf : FusionMethod::kNms;
  return out;
}

StageOrdering parse_ordering(const std::string& text) {
  StageOrdering out;
  std::string token;
  auto flush = [&] {
    const auto b = token.find_first_not_of(' ');
    const auto e = token.find_last_not_of(' ');
    if (b == std::string::npos) throw ConfigError("empty ordering entry");
    const std::string name = token.substr(b, e - b + 1);
    try {
      out.push_back(stage_kind_from_string(name));
    } catch (const std::invalid_argument& ex) {
      throw ConfigError(ex.what());
    }
    token.clear();
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] == ',') {
      flush();
    } else if (text.compare(i, 2, "->") == 0) {
      flush();
      ++i;
    } else {
      token += text[i];
    }
  }
  flush();
  return out;
}

std::string ordering_label(const StageOrdering& ordering) {
  std::string out;
  for (std::size_t i = 0; i < ordering.size(); ++i) {
    if (i) out += "->";
    out += short_tag(ordering[i]);
  }
  return out;
}

std::vector<StageOrdering> default_orderings() {
  using S = StageKind;
  return {{S::kRealDenoise, S::kUpscale, S::kMotionDeblur},
          {S::kMotionDeblur, S::kRealDenoise, S::kUpscale},
          {S::kMotionDeblur, S::kUpscale, S::kRealDenoise},
          {S::kRealDenoise, S::kMotionDeblur, S::kUpscale}};
}

PipelineConfig apply_ordering(const PipelineConfig& cfg,
                              const StageOrdering& ordering) {
  std::set<StageKind> configured;
  for (const VariantConfig& v : cfg.variants) {
    for (const StageSpec& s : v.stages) {
      if (s.kind() != StageKind::kExternal) configured.insert(s.kind());
    }
  }
  std::map<StageKind, std::size_t> rank;
  for (std::size_t i = 0; i < ordering.size(); ++i) {
    const StageKind k = ordering[i];
    if (k == StageKind::kExternal) {
      throw ConfigError("orderings cover restoration roles only");
    }
    if (!configured.count(k)) {
      throw ConfigError(std::string("ordering references unconfigured stage ") +
                        short_tag(k));
    }
    if (!rank.emplace(k, i).second) {
      throw ConfigError("ordering repeats " + std::string(short_tag(k)));
    }
  }
  if (rank.size() != configured.size()) {
    throw ConfigError("ordering " + ordering_label(ordering) +
                      " does not cover every configured stage");
  }
  PipelineConfig out = cfg;
  for (VariantConfig& v : out.variants) {
    std::stable_sort(v.stages.begin(), v.stages.end(),
                     [&](const StageSpec& a, const StageSpec& b) {
                       const auto ra = rank.find(a.kind());
                       const auto rb = rank.find(b.kind());
                       const std::size_t ia =
                           ra == rank.end() ? rank.size() : ra->second;
                       const std::size_t ib =
                           rb == rank.end() ? rank.size() : rb->second;
                       return ia < ib;
                     });
  }
  return out;
}

std::string AblationReport::to_csv() const {
  std::vector<MetricsRow> r;
  for (const AblationRow& row : rows) {
    r.push_back({row.label, row.precision, row.recall, row.map50, row.map5095});
  }
  return format_rows_csv(r);
}

std::string AblationReport::to_text() const {
  std::vector<MetricsRow> r;
  for (const AblationRow& row : rows) {
    r.push_back({row.label, row.precision, row.recall, row.map50, row.map5095});
  }
  return format_rows_table(r);
}

Json AblationReport::to_json() const {
  Json out = Json::array();
  for (const AblationRow& r : rows) {
    out.push_back({{"label", r.label},
                   {"toggles", r.toggles},
                   {"precision", r.precision},
                   {"recall", r.recall},
                   {"map50", r.map50},
                   {"map5095", r.map5095}});
  }
  return {{"kind", kind}, {"rows", out}};
}

namespace {

AblationRow run_row(PipelineConfig cfg, const ExperimentData& data,
                    const std::string& label, std::vector<std::string> toggles,
                    const std::string& subdir) {
  if (!cfg.output_dir.empty()) cfg.output_dir = cfg.output_dir / subdir;
  const ExperimentResult r = run_experiment(cfg, data);
  return {label,         std::move(toggles), r.metrics.precision,
          r.metrics.recall, r.metrics.map50,  r.metrics.map5095};
}

}  // namespace

AblationReport ablate_components(const PipelineConfig& cfg,
                                 const ExperimentData& data,
                                 const std::vector<Toggle>& toggles,
                                 bool full_grid) {
  if (full_grid && toggles.size() > 16) {
    throw ConfigError("full grid ablation is limited to 16 toggles");
  }
  std::vector<std::vector<Toggle>> rows;
  if (full_grid) {
    for (std::size_t mask = 0; mask < (std::size_t{1} << toggles.size());
         ++mask) {
      std::vector<Toggle> on;
      for (std::size_t k = 0; k < toggles.size(); ++k) {
        if (mask >> k & 1) on.push_back(toggles[k]);
      }
      rows.push_back(std::move(on));
    }
  } else {
    for (std::size_t k = 0; k <= toggles.size(); ++k) {
      rows.emplace_back(toggles.begin(), toggles.begin() + k);
    }
  }
  // Resolve every row before running any so a bad toggle fails fast.
  std::vector<PipelineConfig> configs;
  for (const auto& on : rows) configs.push_back(apply_toggles(cfg, on));

  AblationReport report;
  report.kind = "components";
  for (std::size_t r = 0; r < rows.size(); ++r) {
    std::vector<std::string> names;
    std::string label;
    for (const Toggle& t : rows[r]) {
      names.push_back(t.name());
      label += (label.empty() ? "+" : " +") + t.name();
    }
    if (label.empty()) label = "baseline";
    report.rows.push_back(run_row(configs[r], data, label, std::move(names),
                                  "ablation/components_" + std::to_string(r)));
  }
  return report;
}

AblationReport ablate_orderings(const PipelineConfig& cfg,
                                const ExperimentData& data,
                                const std::vector<StageOrdering>& orderings) {
  std::vector<PipelineConfig> configs;
  for (const StageOrdering& o : orderings) {
    configs.push_back(apply_ordering(cfg, o));
  }
  AblationReport report;
  report.kind = "orderings";
  for (std::size_t r = 0; r < orderings.size(); ++r) {
    std::vector<std::string> tags;
    for (StageKind k : orderings[r]) tags.push_back(short_tag(k));
    report.rows.push_back(run_row(configs[r], data,
                                  ordering_label(orderings[r]),
                                  std::move(tags),
                                  "ablation/orderings_" + std::to_string(r)));
  }
  return report;
}

}  // namespace purifuse
