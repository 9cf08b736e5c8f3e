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

#include "purifuse/config.hpp"

#include <fstream>
#include <set>

#include "purifuse/error.hpp"

namespace purifuse {

using Json = nlohmann::json;

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

// Reads fields of one JSON object and rejects any it did not consume.
class Fields {
 public:
  Fields(const Json& obj, std::string where)
      : obj_(obj), where_(std::move(where)) {
    if (!obj_.is_object()) throw ConfigError(where_ + " must be an object");
  }

  bool has(const std::string& key) {
    seen_.insert(key);
    return obj_.contains(key);
  }

  const Json& raw(const std::string& key) {
    if (!has(key)) {
      throw ConfigError(where_ + " is missing required field '" + key + "'");
    }
    return obj_.at(key);
  }

  template <class T>
  T req(const std::string& key) {
    return convert<T>(raw(key), key);
  }

  template <class T>
  T opt(const std::string& key, T fallback) {
    if (!has(key)) return fallback;
    return convert<T>(obj_.at(key), key);
  }

  void finish() const {
    for (auto it = obj_.begin(); it != obj_.end(); ++it) {
      if (!seen_.count(it.key())) {
        throw ConfigError("unknown field '" + it.key() + "' in " + where_);
      }
    }
  }

  const std::string& where() const { return where_; }

 private:
  template <class T>
  T convert(const Json& v, const std::string& key) const {
    try {
      if constexpr (std::is_same_v<T, double>) {
        if (!v.is_number()) throw std::invalid_argument("number");
      } else if constexpr (std::is_integral_v<T> && !std::is_same_v<T, bool>) {
        if (!v.is_number_integer()) throw std::invalid_argument("integer");
      } else if constexpr (std::is_same_v<T, bool>) {
        if (!v.is_boolean()) throw std::invalid_argument("boolean");
      } else if constexpr (std::is_same_v<T, std::string>) {
        if (!v.is_string()) throw std::invalid_argument("string");
      }
      return v.get<T>();
    } catch (const std::exception&) {
      throw ConfigError("field '" + key + "' in " + where_ +
                        " has the wrong type");
    }
  }

  const Json& obj_;
  std::string where_;
  std::set<std::string> seen_;
};

template <class F>
auto rethrow_as_config(const std::string& where, F&& f) {
  try {
    return f();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(where + ": " + e.what());
  }
}

Psf parse_psf(const Json& doc, const std::string& where) {
  Fields f(doc, where);
  Psf psf;
  if (f.has("kernel")) {
    const int w = f.req<int>("width");
    const int h = f.req<int>("height");
    std::vector<double> k;
    try {
      k = f.raw("kernel").get<std::vector<double>>();
    } catch (const Json::exception&) {
      throw ConfigError(where + ": kernel must be a flat array of numbers");
    }
    psf = rethrow_as_config(where, [&] {
      return Psf::FromKernel(w, h, std::move(k));
    });
  } else {
    const int length = f.req<int>("length");
    const double angle = f.opt<double>("angle", 0.0);
    psf = rethrow_as_config(where, [&] { return motion_psf(length, angle); });
  }
  f.finish();
  return psf;
}

Json psf_to_json(const Psf& psf) {
  return {{"width", psf.width}, {"height", psf.height},
          {"kernel", psf.weights}};
}

Interp interp_from_string(const std::string& s, const std::string& where) {
  if (s == "nearest") return Interp::kNearest;
  if (s == "bilinear") return Interp::kBilinear;
  if (s == "bicubic") return Interp::kBicubic;
  throw ConfigError(where + ": unknown interpolation '" + s + "'");
}

const char* interp_to_string(Interp i) {
  switch (i) {
    case Interp::kNearest:
      return "nearest";
    case Interp::kBilinear:
      return "bilinear";
    case Interp::kBicubic:
      return "bicubic";
  }
  return "?";
}

std::filesystem::path resolve(const std::filesystem::path& base,
                              const std::string& p) {
  std::filesystem::path path(p);
  if (path.is_relative() && !base.empty()) return base / path;
  return path;
}

}  // namespace

const char* to_string(FusionMethod m) {
  return m == FusionMethod::kWbf ? "wbf" : "nms";
}

StageSpec parse_stage_spec(const Json& doc) {
  Fields f(doc, "stage");
  const std::string kind = f.req<std::string>("kind");
  StageSpec spec;
  if (kind == "real_denoise") {
    const std::string method = f.opt<std::string>("method", "median");
    if (method == "median") {
      spec.method = MedianDenoise{f.opt<int>("radius", 1)};
    } else if (method == "gaussian") {
      spec.method = GaussianDenoise{f.opt<double>("sigma", 1.0)};
    } else {
      throw ConfigError("unknown real_denoise method '" + method + "'");
    }
  } else if (kind == "motion_deblur") {
    const std::string method = f.opt<std::string>("method", "wiener");
    const Psf psf = parse_psf(f.raw("psf"), "stage psf");
    if (method == "wiener") {
      spec.method = WienerDeblur{psf, f.opt<double>("noise_power", 1e-3)};
    } else if (method == "richardson_lucy") {
      spec.method = RichardsonLucy{psf, f.opt<int>("iterations", 10)};
    } else {
      throw ConfigError("unknown motion_deblur method '" + method + "'");
    }
  } else if (kind == "upscale") {
    Upscale u;
    u.factor = f.opt<int>("factor", 2);
    u.interp = interp_from_string(f.opt<std::string>("interp", "bicubic"),
                                  "upscale stage");
    u.max_pixels = f.opt<std::size_t>("max_pixels", kDefaultMaxPixels);
    spec.method = u;
  } else if (kind == "external") {
    ExternalStage e;
    e.command = f.req<std::string>("command");
    const std::string role = f.opt<std::string>("role", "external");
    e.role = rethrow_as_config("external stage",
                               [&] { return stage_kind_from_string(role); });
    const std::string fmt = f.opt<std::string>("format", "png");
    if (fmt == "png") {
      e.format = ImageFormat::kPng;
    } else if (fmt == "pnm" || fmt == "ppm") {
      e.format = ImageFormat::kPnm;
    } else {
      throw ConfigError("external stage format must be png or pnm");
    }
    const double timeout_s = f.opt<double>("timeout_s", 120.0);
    e.timeout = std::chrono::milliseconds(
        static_cast<std::int64_t>(timeout_s * 1000.0));
    if (f.has("metadata")) e.metadata_json = f.raw("metadata").dump();
    spec.method = e;
  } else {
    throw ConfigError("unknown stage kind '" + kind + "'");
  }
  f.finish();
  rethrow_as_config("stage", [&] {
    spec.validate();
    return 0;
  });
  return spec;
}

std::vector<StageSpec> parse_stage_list(const Json& doc) {
  if (!doc.is_array()) throw ConfigError("stages must be an array");
  std::vector<StageSpec> out;
  for (const Json& s : doc) out.push_back(parse_stage_spec(s));
  return out;
}

Json to_json(const StageSpec& stage) {
  return std::visit(
      Overloaded{
          [](const MedianDenoise& m) -> Json {
            return {{"kind", "real_denoise"},
                    {"method", "median"},
                    {"radius", m.radius}};
          },
          [](const GaussianDenoise& g) -> Json {
            return {{"kind", "real_denoise"},
                    {"method", "gaussian"},
                    {"sigma", g.sigma}};
          },
          [](const WienerDeblur& w) -> Json {
            return {{"kind", "motion_deblur"},
                    {"method", "wiener"},
                    {"psf", psf_to_json(w.psf)},
                    {"noise_power", w.noise_power}};
          },
          [](const RichardsonLucy& r) -> Json {
            return {{"kind", "motion_deblur"},
                    {"method", "richardson_lucy"},
                    {"psf", psf_to_json(r.psf)},
                    {"iterations", r.iterations}};
          },
          [](const Upscale& u) -> Json {
            return {{"kind", "upscale"},
                    {"factor", u.factor},
                    {"interp", interp_to_string(u.interp)},
                    {"max_pixels", u.max_pixels}};
          },
          [](const ExternalStage& e) -> Json {
            return {{"kind", "external"},
                    {"role", to_string(e.role)},
                    {"command", e.command},
                    {"format", e.format == ImageFormat::kPng ? "png" : "pnm"},
                    {"timeout_s", e.timeout.count() / 1000.0},
                    {"metadata", Json::parse(e.metadata_json)}};
          },
      },
      stage.method);
}

OracleSpec parse_oracle_spec(const Json& doc) {
  Fields f(doc, "oracle");
  OracleSpec s;
  s.coordinate_jitter_sigma =
      f.opt<double>("coordinate_jitter_sigma", s.coordinate_jitter_sigma);
  s.drop_probability = f.opt<double>("drop_probability", s.drop_probability);
  s.base_confidence = f.opt<double>("base_confidence", s.base_confidence);
  s.jitter_penalty = f.opt<double>("jitter_penalty", s.jitter_penalty);
  s.confidence_noise = f.opt<double>("confidence_noise", s.confidence_noise);
  s.false_positive_rate =
      f.opt<double>("false_positive_rate", s.false_positive_rate);
  s.false_positive_max_confidence = f.opt<double>(
      "false_positive_max_confidence", s.false_positive_max_confidence);
  s.seed = f.opt<std::uint64_t>("seed", s.seed);
  f.finish();
  rethrow_as_config("oracle", [&] {
    s.validate();
    return 0;
  });
  return s;
}

Json to_json(const OracleSpec& s) {
  return {{"coordinate_jitter_sigma", s.coordinate_jitter_sigma},
          {"drop_probability", s.drop_probability},
          {"base_confidence", s.base_confidence},
          {"jitter_penalty", s.jitter_penalty},
          {"confidence_noise", s.confidence_noise},
          {"false_positive_rate", s.false_positive_rate},
          {"false_positive_max_confidence", s.false_positive_max_confidence},
          {"seed", s.seed}};
}

DistortionSpec parse_distortion_spec(const Json& doc) {
  Fields f(doc, "distortion");
  const std::string kind = f.req<std::string>("kind");
  const std::uint64_t seed = f.opt<std::uint64_t>("seed", 0);
  int kind_index = -1;
  if (kind == "gaussian_noise") kind_index = 0;
  if (kind == "motion_blur") kind_index = 1;
  if (kind == "downsample") kind_index = 2;
  if (kind_index < 0) throw ConfigError("unknown distortion kind '" + kind + "'");
  const Severity sev = rethrow_as_config("distortion", [&] {
    return severity_from_string(f.opt<std::string>("severity", "medium"));
  });
  DistortionSpec spec = DistortionSpec::Preset(kind_index, sev, seed);
  if (auto* g = std::get_if<GaussianNoise>(&spec.kind)) {
    g->sigma = f.opt<double>("sigma", g->sigma);
  } else if (auto* m = std::get_if<MotionBlur>(&spec.kind)) {
    m->length = f.opt<int>("length", m->length);
    m->angle = f.opt<double>("angle", m->angle);
  } else if (auto* d = std::get_if<Downsample>(&spec.kind)) {
    d->factor = f.opt<int>("factor", d->factor);
  }
  f.finish();
  rethrow_as_config("distortion", [&] {
    spec.validate();
    return 0;
  });
  return spec;
}

Json to_json(const DistortionSpec& spec) {
  Json j = std::visit(
      Overloaded{
          [](const GaussianNoise& g) -> Json {
            return {{"kind", "gaussian_noise"}, {"sigma", g.sigma}};
          },
          [](const MotionBlur& m) -> Json {
            return {{"kind", "motion_blur"},
                    {"length", m.length},
                    {"angle", m.angle}};
          },
          [](const Downsample& d) -> Json {
            return {{"kind", "downsample"}, {"factor", d.factor}};
          },
      },
      spec.kind);
  j["seed"] = spec.seed;
  return j;
}

void PipelineConfig::validate() const {
  if (schema_version != kConfigSchemaVersion) {
    throw ConfigError("unsupported schema_version " +
                      std::to_string(schema_version));
  }
  if (variants.empty()) throw ConfigError("config needs at least one variant");
  std::set<std::string> ids;
  for (const VariantConfig& v : variants) {
    if (v.id.empty()) throw ConfigError("variant id must not be empty");
    if (!ids.insert(v.id).second) {
      throw ConfigError("duplicate variant id '" + v.id + "'");
    }
    if (v.weight && !(*v.weight > 0.0)) {
      throw ConfigError("variant '" + v.id + "' weight must be positive");
    }
    if (!v.weight && !(v.benchmark_score && *v.benchmark_score > 0.0)) {
      throw ConfigError("variant '" + v.id +
                        "' derives its weight but has no positive "
                        "benchmark_score");
    }
    if (!(v.quality >= 0.0 && v.quality <= 1.0)) {
      throw ConfigError("variant '" + v.id + "' quality must be in [0,1]");
    }
    for (const StageSpec& s : v.stages) {
      rethrow_as_config("variant '" + v.id + "'", [&] {
        s.validate();
        return 0;
      });
    }
  }
  rethrow_as_config("fusion", [&] {
    fusion.validate();
    return 0;
  });
  rethrow_as_config("detector oracle", [&] {
    detector.oracle.validate();
    return 0;
  });
  if (detector.kind == DetectorKind::kFiles) {
    for (const VariantConfig& v : variants) {
      if (!detector.files.count(v.id)) {
        throw ConfigError("detector files has no entry for variant '" + v.id +
                          "'");
      }
    }
  }
  if (detector.kind == DetectorKind::kExternal && detector.command.empty()) {
    throw ConfigError("external detector needs a command");
  }
  for (double t : eval.iou_thresholds) {
    if (!(t > 0.0 && t <= 1.0)) {
      throw ConfigError("eval iou thresholds must be in (0,1]");
    }
  }
  if (operating_point != "max_f1") {
    throw ConfigError("unsupported operating_point '" + operating_point + "'");
  }
  if (workers < 1) throw ConfigError("workers must be >= 1");
  if (max_subprocesses < 1) throw ConfigError("max_subprocesses must be >= 1");
}

void PipelineConfig::validate_paths() const {
  validate();
  auto require = [](const std::filesystem::path& p, const char* what) {
    if (!std::filesystem::exists(p)) {
      throw ConfigError(std::string(what) + " does not exist: " + p.string());
    }
  };
  require(dataset.annotations, "annotations");
  if (detector.kind != DetectorKind::kFiles) {
    require(dataset.images_dir, "images_dir");
  }
  if (dataset.clean_images_dir) {
    require(*dataset.clean_images_dir, "clean_images_dir");
  }
  if (detector.kind == DetectorKind::kFiles) {
    for (const auto& [id, p] : detector.files) require(p, "detection file");
  }
}

PipelineConfig parse_pipeline_config(const Json& doc,
                                     const std::filesystem::path& base_dir) {
  Fields root(doc, "config");
  PipelineConfig cfg;
  cfg.schema_version = root.req<int>("schema_version");
  if (cfg.schema_version != kConfigSchemaVersion) {
    throw ConfigError("unsupported schema_version " +
                      std::to_string(cfg.schema_version));
  }

  {
    Fields d(root.raw("dataset"), "dataset");
    cfg.dataset.images_dir =
        resolve(base_dir, d.opt<std::string>("images_dir", ""));
    cfg.dataset.annotations =
        resolve(base_dir, d.req<std::string>("annotations"));
    if (d.has("clean_images_dir")) {
      cfg.dataset.clean_images_dir =
          resolve(base_dir, d.req<std::string>("clean_images_dir"));
    }
    d.finish();
  }

  const Json& variants = root.raw("variants");
  if (!variants.is_array()) throw ConfigError("variants must be an array");
  for (const Json& vj : variants) {
    Fields v(vj, "variant");
    VariantConfig vc;
    vc.id = v.req<std::string>("id");
    if (v.has("stages")) vc.stages = parse_stage_list(v.raw("stages"));
    if (v.has("weight")) {
      const Json& w = v.raw("weight");
      if (w.is_string()) {
        if (w.get<std::string>() != "derive") {
          throw ConfigError("variant weight must be a number or \"derive\"");
        }
        vc.weight.reset();
      } else {
        vc.weight = v.req<double>("weight");
      }
    }
    if (v.has("benchmark_score")) {
      vc.benchmark_score = v.req<double>("benchmark_score");
    }
    vc.quality = v.opt<double>("quality", 1.0);
    v.finish();
    cfg.variants.push_back(std::move(vc));
  }

  if (root.has("detector")) {
    Fields d(root.raw("detector"), "detector");
    const std::string type = d.opt<std::string>("type", "oracle");
    cfg.detector.large_size = d.opt<bool>("large_size", false);
    if (type == "oracle") {
      cfg.detector.kind = DetectorKind::kOracle;
      if (d.has("oracle")) {
        cfg.detector.oracle = parse_oracle_spec(d.raw("oracle"));
      }
      cfg.detector.quality_per_db = d.opt<double>("quality_per_db", 0.0);
      cfg.detector.large_size_quality_bump =
          d.opt<double>("large_size_quality_bump", 0.05);
    } else if (type == "files") {
      cfg.detector.kind = DetectorKind::kFiles;
      const Json& files = d.raw("files");
      if (!files.is_object()) {
        throw ConfigError("detector files must map variant id to a path");
      }
      for (auto it = files.begin(); it != files.end(); ++it) {
        if (!it.value().is_string()) {
          throw ConfigError("detector file paths must be strings");
        }
        cfg.detector.files[it.key()] =
            resolve(base_dir, it.value().get<std::string>());
      }
    } else if (type == "external") {
      cfg.detector.kind = DetectorKind::kExternal;
      cfg.detector.command = d.req<std::string>("command");
      cfg.detector.timeout = std::chrono::milliseconds(static_cast<std::int64_t>(
          d.opt<double>("timeout_s", 120.0) * 1000.0));
      cfg.detector.input_size = d.opt<int>("input_size", 640);
      cfg.detector.large_input_size = d.opt<int>("large_input_size", 1280);
    } else {
      throw ConfigError("unknown detector type '" + type + "'");
    }
    d.finish();
  }

  if (root.has("fusion")) {
    Fields f(root.raw("fusion"), "fusion");
    const std::string method = f.opt<std::string>("method", "wbf");
    if (method == "wbf") {
      cfg.fusion_method = FusionMethod::kWbf;
    } else if (method == "nms") {
      cfg.fusion_method = FusionMethod::kNms;
    } else {
      throw ConfigError("unknown fusion method '" + method + "'");
    }
    cfg.fusion.iou_threshold = f.opt<double>("iou_threshold", 0.55);
    cfg.fusion.skip_confidence = f.opt<double>("skip_confidence", 0.0);
    cfg.fusion.rescale_mode = rethrow_as_config("fusion", [&] {
      return rescale_mode_from_string(
          f.opt<std::string>("rescale", "min_cluster_over_models"));
    });
    const std::string tie = f.opt<std::string>("tie_break", "source_then_index");
    if (tie != "source_then_index") {
      throw ConfigError("unknown tie_break '" + tie + "'");
    }
    f.finish();
  }

  if (root.has("eval")) {
    Fields e(root.raw("eval"), "eval");
    if (e.has("iou_thresholds")) {
      try {
        cfg.eval.iou_thresholds =
            e.raw("iou_thresholds").get<std::vector<double>>();
      } catch (const Json::exception&) {
        throw ConfigError("eval iou_thresholds must be an array of numbers");
      }
    }
    cfg.eval.max_detections = e.opt<std::size_t>("max_detections", 100);
    cfg.operating_point = e.opt<std::string>("operating_point", "max_f1");
    e.finish();
  }

  cfg.output_dir = resolve(base_dir, root.opt<std::string>("output_dir", "out"));
  cfg.seed = root.opt<std::uint64_t>("seed", 0);
  cfg.workers = root.opt<int>("workers", 1);
  cfg.max_subprocesses = root.opt<int>("max_subprocesses", 2);
  cfg.persist_stage_outputs = root.opt<bool>("persist_stage_outputs", false);
  root.finish();
  cfg.validate();
  return cfg;
}

PipelineConfig load_pipeline_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  Json doc;
  try {
    doc = Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ConfigError("malformed config JSON: " + std::string(e.what()));
  }
  return parse_pipeline_config(doc, path.parent_path());
}

Json to_json(const PipelineConfig& cfg) {
  Json variants = Json::array();
  for (const VariantConfig& v : cfg.variants) {
    Json stages = Json::array();
    for (const StageSpec& s : v.stages) stages.push_back(to_json(s));
    Json vj = {{"id", v.id}, {"stages", stages}, {"quality", v.quality}};
    if (v.weight) {
      vj["weight"] = *v.weight;
    } else {
      vj["weight"] = "derive";
    }
    if (v.benchmark_score) vj["benchmark_score"] = *v.benchmark_score;
    variants.push_back(std::move(vj));
  }
  Json detector;
  switch (cfg.detector.kind) {
    case DetectorKind::kOracle:
      detector = {{"type", "oracle"},
                  {"oracle", to_json(cfg.detector.oracle)},
                  {"quality_per_db", cfg.detector.quality_per_db},
                  {"large_size_quality_bump",
                   cfg.detector.large_size_quality_bump}};
      break;
    case DetectorKind::kFiles: {
      Json files = Json::object();
      for (const auto& [id, p] : cfg.detector.files) files[id] = p.string();
      detector = {{"type", "files"}, {"files", files}};
      break;
    }
    case DetectorKind::kExternal:
      detector = {{"type", "external"},
                  {"command", cfg.detector.command},
                  {"timeout_s", cfg.detector.timeout.count() / 1000.0},
                  {"input_size", cfg.detector.input_size},
                  {"large_input_size", cfg.detector.large_input_size}};
      break;
  }
  detector["large_size"] = cfg.detector.large_size;
  Json dataset = {{"images_dir", cfg.dataset.images_dir.string()},
                  {"annotations", cfg.dataset.annotations.string()}};
  if (cfg.dataset.clean_images_dir) {
    dataset["clean_images_dir"] = cfg.dataset.clean_images_dir->string();
  }
  return {{"schema_version", cfg.schema_version},
          {"dataset", dataset},
          {"variants", variants},
          {"detector", detector},
          {"fusion",
           {{"method", to_string(cfg.fusion_method)},
            {"iou_threshold", cfg.fusion.iou_threshold},
            {"skip_confidence", cfg.fusion.skip_confidence},
            {"rescale", to_string(cfg.fusion.rescale_mode)},
            {"tie_break", "source_then_index"}}},
          {"eval",
           {{"iou_thresholds", cfg.eval.iou_thresholds},
            {"max_detections", cfg.eval.max_detections},
            {"operating_point", cfg.operating_point}}},
          {"output_dir", cfg.output_dir.string()},
          {"seed", cfg.seed},
          {"workers", cfg.workers},
          {"max_subprocesses", cfg.max_subprocesses},
          {"persist_stage_outputs", cfg.persist_stage_outputs}};
}

}  // namespace purifuse
