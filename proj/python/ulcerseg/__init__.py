# Copyright 2026 The ulcerseg Authors.
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     https://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""Superpixel wound-tissue segmentation.

Images are uint8 arrays of shape (height, width, 3). Class maps use the
codes 0 not-wound, 1 granulation, 2 fibrin, 3 necrosis.
"""

import json

from . import _core
from ._core import (
    ConfigurationError,
    DataError,
    Error,
    InvalidArgumentError,
    NotFoundError,
    NumericError,
    TrainingError,
    describe,
    mask_error,
    partition,
    run_cli,
    synthetic_wound,
)

CLASS_NAMES = ("not_wound", "granulation", "fibrin", "necrosis")

__all__ = [
    "CLASS_NAMES",
    "ConfigurationError",
    "DataError",
    "Error",
    "InvalidArgumentError",
    "NotFoundError",
    "NumericError",
    "TrainingError",
    "area_report",
    "describe",
    "friedman_nemenyi",
    "mask_error",
    "metrics",
    "partition",
    "run_cli",
    "segment",
    "synthetic_wound",
]


def area_report(mask):
    """Per-class pixel counts and ratios of a class map."""
    return json.loads(_core.area_report(mask))


def metrics(truth, predicted, scores):
    """Accuracy, kappa, F1, sensitivity, specificity and one-vs-rest AUC."""
    return json.loads(_core.metrics(list(truth), list(predicted), [list(s) for s in scores]))


def friedman_nemenyi(measurements, alpha=0.05, names=()):
    """Friedman test over datasets x methods with Nemenyi p-values."""
    return json.loads(_core.friedman_nemenyi(measurements, alpha, list(names)))


def segment(image, model, target_size=550, compactness=10.0):
    """Segments `image` with a model file path or serialized model bytes.

    Returns (superpixel labels, class map, area report).
    """
    if not isinstance(model, (bytes, bytearray)):
        with open(model, "rb") as f:
            model = f.read()
    labels, mask, areas = _core.segment(image, bytes(model), target_size, compactness)
    return labels, mask, json.loads(areas)
