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


#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <string>
#include <vector>

#include "purifuse/config.hpp"
#include "purifuse/distortion.hpp"
#include "purifuse/error.hpp"
#include "purifuse/evaluator.hpp"
#include "purifuse/fusion.hpp"
#include "purifuse/geometry.hpp"
#include "purifuse/orchestrator.hpp"
#include "purifuse/purifier.hpp"
#include "purifuse/synthetic.hpp"

namespace py = pybind11;
using namespace purifuse;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

// (H, W) or (H, W, 3) arrays in [0, 1].
ImageBuffer to_image(const Array& a) {
  if (a.ndim() != 2 && a.ndim() != 3) {
    throw std::invalid_argument("image must have shape (H, W) or (H, W, C)");
  }
  const int h = static_cast<int>(a.shape(0));
  const int w = static_cast<int>(a.shape(1));
  const int ch = a.ndim() == 3 ? static_cast<int>(a.shape(2)) : 1;
  ImageBuffer img(w, h, ch);
  const double* p = a.data();
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < ch; ++c) img.at(c, y, x) = *p++;
    }
  }
  return img;
}

Array to_array(const ImageBuffer& img) {
  std::vector<py::ssize_t> shape{img.height(), img.width()};
  if (img.channels() > 1) shape.push_back(img.channels());
  Array out(shape);
  double* p = out.mutable_data();
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      for (int c = 0; c < img.channels(); ++c) *p++ = img.at(c, y, x);
    }
  }
  return out;
}

BBox to_box(const std::vector<double>& v) {
  if (v.size() != 4) throw std::invalid_argument("box must be [x0, y0, x1, y1]");
  return BBox::Make(v[0], v[1], v[2], v[3]);
}

std::vector<double> from_box(const BBox& b) { return {b.x_min, b.y_min, b.x_max, b.y_max}; }

Detection to_detection(const py::dict& d) {
  Detection out;
  out.box = to_box(d["box"].cast<std::vector<double>>());
  out.class_id = d.contains("class_id") ? d["class_id"].cast<int>() : 0;
  out.confidence = d["confidence"].cast<double>();
  out.source_id = d.contains("source_id") ? d["source_id"].cast<int>() : 0;
  return out;
}

py::dict from_detection(const Detection& d) {
  py::dict out;
  out["box"] = from_box(d.box);
  out["class_id"] = d.class_id;
  out["confidence"] = d.confidence;
  out["source_id"] = d.source_id;
  return out;
}

std::vector<Detection> to_detections(const py::list& l) {
  std::vector<Detection> out;
  for (const auto& d : l) out.push_back(to_detection(d.cast<py::dict>()));
  return out;
}

py::list from_detections(const std::vector<Detection>& v) {
  py::list out;
  for (const Detection& d : v) out.append(from_detection(d));
  return out;
}

Psf to_psf(const Array& k) {
  if (k.ndim() != 2) throw std::invalid_argument("psf must be a 2-D array");
  return Psf::FromKernel(static_cast<int>(k.shape(1)), static_cast<int>(k.shape(0)),
                         std::vector<double>(k.data(), k.data() + k.size()));
}

Array from_psf(const Psf& p) {
  Array out({p.height, p.width});
  std::copy(p.weights.begin(), p.weights.end(), out.mutable_data());
  return out;
}

Interp interp_of(const std::string& s) {
  if (s == "nearest") return Interp::kNearest;
  if (s == "bilinear") return Interp::kBilinear;
  if (s == "bicubic") return Interp::kBicubic;
  throw std::invalid_argument("unknown interpolation '" + s + "'");
}

std::string evaluate_json(const py::dict& dets, const py::dict& gts, int num_classes,
                          std::size_t max_detections) {
  std::vector<GroundTruthSet> g;
  for (const auto& [k, v] : gts) {
    GroundTruthSet s{k.cast<ImageId>(), {}};
    for (const auto& b : v.cast<py::list>()) {
      const py::dict bd = b.cast<py::dict>();
      s.boxes.push_back({to_box(bd["box"].cast<std::vector<double>>()),
                         bd.contains("class_id") ? bd["class_id"].cast<int>() : 0,
                         bd.contains("iscrowd") && bd["iscrowd"].cast<bool>()});
    }
    g.push_back(std::move(s));
  }
  std::vector<DetectionSet> d;
  for (const auto& [k, v] : dets) {
    d.push_back({k.cast<ImageId>(), to_detections(v.cast<py::list>()), 1.0});
  }
  EvalConfig cfg;
  cfg.num_classes = num_classes;
  cfg.max_detections = max_detections;
  return to_json(evaluate(d, g, cfg), nullptr, false).dump();
}

}  // namespace

PYBIND11_MODULE(_purifuse, m) {
  m.doc() = "Purification, fusion and evaluation core.";

  static py::exception<ConfigError> config_error(m, "ConfigError");
  static py::exception<DataError> data_error(m, "DataError");
  static py::exception<ExternalCommandError> external_error(m, "ExternalCommandError");
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const ConfigError& e) {
      py::set_error(config_error, e.what());
    } catch (const ExternalCommandError& e) {
      py::set_error(external_error, e.what());
    } catch (const StageError& e) {
      if (e.external_failure()) {
        py::set_error(external_error, e.what());
      } else {
        py::set_error(data_error, e.what());
      }
    } catch (const DataError& e) {
      py::set_error(data_error, e.what());
    }
  });

  m.def("iou", [](const std::vector<double>& a, const std::vector<double>& b) {
    return iou(to_box(a), to_box(b));
  });

  m.def(
      "wbf",
      [](const std::vector<py::list>& sets, std::vector<double> weights, double iou_threshold,
         double skip_confidence, const std::string& rescale) {
        if (!weights.empty() && weights.size() != sets.size()) {
          throw std::invalid_argument("need one weight per set");
        }
        std::vector<DetectionSet> in;
        for (std::size_t i = 0; i < sets.size(); ++i) {
          in.push_back({0, to_detections(sets[i]), weights.empty() ? 1.0 : weights[i]});
        }
        FusionConfig cfg;
        cfg.iou_threshold = iou_threshold;
        cfg.skip_confidence = skip_confidence;
        cfg.rescale_mode = rescale_mode_from_string(rescale);
        return from_detections(wbf(in, cfg).detections);
      },
      py::arg("sets"), py::arg("weights") = std::vector<double>{},
      py::arg("iou_threshold") = 0.55, py::arg("skip_confidence") = 0.0,
      py::arg("rescale") = "min_cluster_over_models");

  m.def(
      "nms",
      [](const py::list& dets, double thr) { return from_detections(nms(to_detections(dets), thr)); },
      py::arg("detections"), py::arg("iou_threshold") = 0.5);

  m.def("derive_weights", &derive_weights, py::arg("scores"));

  m.def("evaluate_json", &evaluate_json, py::arg("detections"), py::arg("ground_truth"),
        py::arg("num_classes") = 0, py::arg("max_detections") = 100);

  m.def("psnr", [](const Array& a, const Array& b) { return psnr(to_image(a), to_image(b)); });

  m.def("motion_psf", [](int length, double angle) { return from_psf(motion_psf(length, angle)); },
        py::arg("length"), py::arg("angle") = 0.0);
  m.def("convolve", [](const Array& img, const Array& psf) {
    return to_array(convolve(to_image(img), to_psf(psf)));
  });
  m.def("median_denoise", [](const Array& img, int r) {
    return to_array(median_denoise(to_image(img), r));
  }, py::arg("image"), py::arg("radius") = 1);
  m.def("gaussian_denoise", [](const Array& img, double s) {
    return to_array(gaussian_denoise(to_image(img), s));
  }, py::arg("image"), py::arg("sigma") = 1.0);
  m.def("wiener_deblur", [](const Array& img, const Array& psf, double k) {
    return to_array(wiener_deblur(to_image(img), to_psf(psf), k));
  }, py::arg("image"), py::arg("psf"), py::arg("noise_power") = 1e-3);
  m.def("richardson_lucy", [](const Array& img, const Array& psf, int it) {
    return to_array(richardson_lucy(to_image(img), to_psf(psf), it));
  }, py::arg("image"), py::arg("psf"), py::arg("iterations") = 30);
  m.def("upscale", [](const Array& img, int f, const std::string& interp) {
    return to_array(upscale(to_image(img), f, interp_of(interp)));
  }, py::arg("image"), py::arg("factor") = 2, py::arg("interp") = "bicubic");

  m.def("purify_json", [](const Array& img, const std::string& stages) {
    return to_array(run_pipeline(to_image(img), parse_stage_list(nlohmann::json::parse(stages))));
  });
  m.def("distort_json", [](const Array& img, const std::string& spec, std::uint64_t stream) {
    return to_array(distort(to_image(img), parse_distortion_spec(nlohmann::json::parse(spec)),
                            stream));
  });

  m.def("concentration_metrics", [](const Array& img) {
    const ConcentrationMetrics c = concentration_metrics(to_image(img));
    py::dict out;
    out["shannon_entropy"] = c.shannon_entropy;
    out["histogram_variance"] = c.histogram_variance;
    out["laplacian_variance"] = c.laplacian_variance;
    return out;
  });

  m.def("make_test_card", [](int w, int h, int ch) { return to_array(make_test_card(w, h, ch)); },
        py::arg("width") = 96, py::arg("height") = 96, py::arg("channels") = 1);

  m.def(
      "run_experiment_json",
      [](const std::string& path) {
        ExperimentResult r;
        {
          py::gil_scoped_release release;
          r = run_experiment(load_pipeline_config(path));
        }
        return to_json(r.metrics, nullptr, false).dump();
      },
      py::arg("config_path"));
}
