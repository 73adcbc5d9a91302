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

import json

import numpy as np
import pytest

import ulcerseg


def test_partition_of_constant_image():
    image = np.full((110, 110, 3), 128, dtype=np.uint8)
    labels = ulcerseg.partition(image)
    assert labels.shape == (110, 110)
    assert labels.dtype == np.int32
    assert len(np.unique(labels)) == 22


def test_descriptor_dimensions():
    patch = np.random.default_rng(0).integers(0, 256, (32, 32, 3), dtype=np.uint8)
    assert len(ulcerseg.describe(patch, "cld")) == 12
    assert len(ulcerseg.describe(patch, "csd")) == 128
    assert len(ulcerseg.describe(patch, "scd")) == 256


def test_synthetic_wound_is_deterministic_and_areas_add_up():
    image, truth = ulcerseg.synthetic_wound(5)
    again, _ = ulcerseg.synthetic_wound(5)
    assert image.shape == (192, 192, 3)
    assert np.array_equal(image, again)
    areas = ulcerseg.area_report(truth)
    counts = np.bincount(truth.ravel(), minlength=4)
    assert areas["total_pixels"] == truth.size
    for code, name in enumerate(ulcerseg.CLASS_NAMES):
        assert areas["classes"][name]["pixels"] == counts[code]


def test_mask_error_hand_case():
    ref = np.zeros((4, 4), dtype=np.uint8)
    ref.ravel()[:5] = 1
    ref.ravel()[5:8] = 2
    pred = ref.copy()
    pred.ravel()[0] = 2
    pred.ravel()[12] = 1
    r = ulcerseg.mask_error(pred, ref)
    assert r["pixel_accuracy"] == 0.875
    assert r["mae_ratio"] == 0.25


def test_metrics_and_rank_test():
    m = ulcerseg.metrics([0, 1, 2, 3], [0, 1, 2, 3], np.eye(4))
    assert m["kappa"] == 1.0
    r = ulcerseg.friedman_nemenyi([[0.9, 0.8, 0.7]] * 10)
    assert r["statistic"] == pytest.approx(20.0, abs=1e-9)
    assert r["p_value"] == pytest.approx(4.54e-5, abs=1e-6)


def test_errors_map_to_python_exceptions():
    with pytest.raises(ulcerseg.InvalidArgumentError):
        ulcerseg.describe(np.zeros((8, 8, 3), dtype=np.uint8), "ehd")
    with pytest.raises(ulcerseg.Error):
        ulcerseg.mask_error(np.zeros((2, 2), np.uint8), np.zeros((3, 3), np.uint8))
    with pytest.raises(ulcerseg.InvalidArgumentError):
        ulcerseg.partition(np.zeros((8, 8), dtype=np.uint8))


def test_cli_workflow_and_segment(tmp_path):
    ds = str(tmp_path / "ds")
    code, out, err = ulcerseg.run_cli(["synth", ds, "--images", "3", "--seed", "2"])
    assert code == 0, err
    feats = str(tmp_path / "f.csv")
    model = str(tmp_path / "rf.json")
    assert ulcerseg.run_cli(["extract", ds, "-o", feats])[0] == 0
    assert ulcerseg.run_cli(["train", feats, "--model", "rf", "-o", model])[0] == 0
    image, truth = ulcerseg.synthetic_wound(77)
    labels, mask, areas = ulcerseg.segment(image, model, compactness=20.0)
    assert labels.shape == mask.shape == (192, 192)
    assert areas["total_pixels"] == 192 * 192
    assert ulcerseg.mask_error(mask, truth)["pixel_accuracy"] > 0.85
    code, _, err = ulcerseg.run_cli(["segment", "missing.png", "--model", model, "-o", "m.png"])
    assert code == 3
    assert err.startswith("error: ")


def test_cli_dry_run_prints_config():
    code, out, _ = ulcerseg.run_cli(["train", "x", "--model", "cnn", "--dry-run"])
    assert code == 0
    assert json.loads(out)["train"]["momentum"] == 0.88
