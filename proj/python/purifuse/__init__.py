# Copyright 2026 The Purifuse Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Python bindings for the purifuse C++ core.

Images are float arrays of shape (H, W) or (H, W, 3) in [0, 1]. Boxes are
normalized [x0, y0, x1, y1] lists; detections are dicts with ``box``,
``class_id``, ``confidence`` and optionally ``source_id``.
"""

import json

from ._purifuse import (
    ConfigError,
    DataError,
    ExternalCommandError,
    concentration_metrics,
    convolve,
    derive_weights,
    gaussian_denoise,
    iou,
    make_test_card,
    median_denoise,
    motion_psf,
    nms,
    psnr,
    richardson_lucy,
    upscale,
    wbf,
    wiener_deblur,
)
from . import _purifuse

__all__ = [
    "ConfigError",
    "DataError",
    "ExternalCommandError",
    "concentration_metrics",
    "convolve",
    "derive_weights",
    "distort",
    "evaluate",
    "gaussian_denoise",
    "iou",
    "make_test_card",
    "median_denoise",
    "motion_psf",
    "nms",
    "psnr",
    "purify",
    "richardson_lucy",
    "run_experiment",
    "upscale",
    "wbf",
    "wiener_deblur",
]


def purify(image, stages):
    """Runs a stage list (same JSON shape as a config variant's ``stages``)."""
    return _purifuse.purify_json(image, json.dumps(stages))


def distort(image, spec, stream=0):
    """Applies one distortion spec, e.g. ``{"kind": "gaussian_noise", "sigma": 0.05}``."""
    return _purifuse.distort_json(image, json.dumps(spec), stream)


def evaluate(detections, ground_truth, num_classes=0, max_detections=100):
    """COCO-style metrics.

    ``detections`` maps image id to detection dicts; ``ground_truth`` maps
    image id to dicts with ``box``, ``class_id`` and optional ``iscrowd``.
    """
    return json.loads(
        _purifuse.evaluate_json(detections, ground_truth, num_classes, max_detections)
    )


def run_experiment(config_path):
    """Runs a pipeline config file and returns the fused metrics."""
    return json.loads(_purifuse.run_experiment_json(str(config_path)))
