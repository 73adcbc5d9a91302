/*
 * Copyright 2026 The ulcerseg Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Python bindings. Images cross the boundary as uint8 arrays of shape
// (height, width, 3); label and class maps as 2-D arrays. Reports are
// returned as JSON text and decoded by the Python package.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "ulcerseg/cli.hpp"
#include "ulcerseg/error.hpp"
#include "ulcerseg/evaluation.hpp"
#include "ulcerseg/mpeg7.hpp"
#include "ulcerseg/pipeline.hpp"
#include "ulcerseg/slic.hpp"
#include "ulcerseg/synthetic.hpp"

namespace py = pybind11;

namespace ulcerseg {
namespace {

using ByteArray = py::array_t<uint8_t, py::array::c_style | py::array::forcecast>;

RgbImage ToImage(const ByteArray& array) {
  if (array.ndim() != 3 || array.shape(2) != 3)
    throw InvalidArgument("image must have shape (height, width, 3)");
  const int h = static_cast<int>(array.shape(0));
  const int w = static_cast<int>(array.shape(1));
  std::vector<Rgb8> pixels(static_cast<size_t>(w) * h);
  const uint8_t* src = array.data();
  for (size_t i = 0; i < pixels.size(); ++i) pixels[i] = {src[3 * i], src[3 * i + 1], src[3 * i + 2]};
  return RgbImage(w, h, std::move(pixels));
}

ByteArray FromImage(const RgbImage& image) {
  ByteArray out({image.height(), image.width(), 3});
  uint8_t* dst = out.mutable_data();
  for (size_t i = 0; i < image.size(); ++i) {
    const Rgb8 p = image.pixels()[i];
    dst[3 * i] = p.r;
    dst[3 * i + 1] = p.g;
    dst[3 * i + 2] = p.b;
  }
  return out;
}

ClassMap ToClassMap(const ByteArray& array) {
  if (array.ndim() != 2) throw InvalidArgument("class map must be 2-D");
  ClassMap map{static_cast<int>(array.shape(1)), static_cast<int>(array.shape(0)), {}};
  const uint8_t* src = array.data();
  for (py::ssize_t i = 0; i < array.size(); ++i) {
    if (src[i] >= kNumTissueClasses)
      throw InvalidArgument("class code " + std::to_string(src[i]) + " is not in [0, 3]");
    map.classes.push_back(static_cast<TissueClass>(src[i]));
  }
  return map;
}

ByteArray FromClassMap(const ClassMap& map) {
  ByteArray out({map.height, map.width});
  uint8_t* dst = out.mutable_data();
  for (size_t i = 0; i < map.classes.size(); ++i) dst[i] = static_cast<uint8_t>(ClassCode(map.classes[i]));
  return out;
}

py::array_t<int32_t> FromLabels(const std::vector<int32_t>& labels, int width, int height) {
  py::array_t<int32_t> out({height, width});
  std::copy(labels.begin(), labels.end(), out.mutable_data());
  return out;
}

SlicParams Slic(int target_size, double compactness) {
  SlicParams p;
  p.target_size = target_size;
  p.compactness = compactness;
  return p;
}

}  // namespace
}  // namespace ulcerseg

PYBIND11_MODULE(_core, m) {
  using namespace ulcerseg;
  m.doc() = "Superpixel wound-tissue segmentation core";

  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<InvalidArgument>(m, "InvalidArgumentError", base.ptr());
  py::register_exception<NotFound>(m, "NotFoundError", base.ptr());
  py::register_exception<ConfigurationError>(m, "ConfigurationError", base.ptr());
  py::register_exception<DataError>(m, "DataError", base.ptr());
  py::register_exception<TrainingError>(m, "TrainingError", base.ptr());
  py::register_exception<NumericError>(m, "NumericError", base.ptr());

  m.def(
      "partition",
      [](const ByteArray& image, int target_size, double compactness) {
        const RgbImage img = ToImage(image);
        SuperpixelPartition part;
        {
          py::gil_scoped_release release;
          part = Partition(img, Slic(target_size, compactness));
        }
        return FromLabels(part.labels, part.width, part.height);
      },
      py::arg("image"), py::arg("target_size") = 550, py::arg("compactness") = 10.0,
      "SLIC superpixel labels, shape (height, width).");

  m.def(
      "describe",
      [](const ByteArray& patch, const std::string& descriptor) {
        const RgbImage img = ToImage(patch);
        Patch p;
        p.width = img.width();
        p.height = img.height();
        p.pixels = img.pixels();
        p.mask.assign(p.pixels.size(), 1);
        return Extract(p, ParseDescriptor(descriptor)).values;
      },
      py::arg("patch"), py::arg("descriptor") = "cld",
      "Color descriptor (cld, csd or scd) of a fully masked patch.");

  m.def(
      "synthetic_wound",
      [](uint64_t seed, int width, int height, int noise, bool necrosis) {
        SyntheticParams params;
        params.width = width;
        params.height = height;
        params.noise = noise;
        params.necrosis = necrosis;
        const SyntheticWound w = GenerateSyntheticWound(params, seed);
        return py::make_tuple(FromImage(w.image), FromClassMap(w.truth));
      },
      py::arg("seed"), py::arg("width") = 192, py::arg("height") = 192, py::arg("noise") = 12,
      py::arg("necrosis") = true, "Synthetic wound image and its class map.");

  m.def(
      "segment",
      [](const ByteArray& image, const py::bytes& model_bytes, int target_size, double compactness) {
        const RgbImage img = ToImage(image);
        const SegmentationModel model = DeserializeSegmentationModel(std::string(model_bytes));
        SegmentationResult result;
        {
          py::gil_scoped_release release;
          result = SegmentImage(img, model, Slic(target_size, compactness));
        }
        return py::make_tuple(
            FromLabels(result.partition.labels, result.partition.width, result.partition.height),
            FromClassMap(result.fused_mask), AreaReportToJson(QuantifyAreas(result)));
      },
      py::arg("image"), py::arg("model"), py::arg("target_size") = 550,
      py::arg("compactness") = 10.0,
      "Segments an image with a serialized model; returns (labels, mask, areas JSON).");

  m.def(
      "area_report", [](const ByteArray& mask) { return AreaReportToJson(QuantifyAreas(ToClassMap(mask))); },
      py::arg("mask"));

  m.def(
      "mask_error",
      [](const ByteArray& predicted, const ByteArray& reference) {
        const MaskErrorReport r = MaskError(ToClassMap(predicted), ToClassMap(reference));
        py::dict d;
        d["pixel_accuracy"] = r.pixel_accuracy;
        d["mae_ratio"] = r.mae_ratio ? py::cast(*r.mae_ratio) : py::none();
        d["mismatches"] = r.mismatches;
        d["reference_wound_pixels"] = r.reference_wound_pixels;
        return d;
      },
      py::arg("predicted"), py::arg("reference"));

  m.def(
      "metrics",
      [](const std::vector<int>& truth, const std::vector<int>& predicted,
         const std::vector<std::array<double, kNumTissueClasses>>& scores) {
        auto classes = [](const std::vector<int>& codes) {
          std::vector<TissueClass> out;
          for (int c : codes) {
            if (c < 0 || c >= kNumTissueClasses)
              throw InvalidArgument("class code " + std::to_string(c) + " is not in [0, 3]");
            out.push_back(static_cast<TissueClass>(c));
          }
          return out;
        };
        return MetricsToJson(ComputeMetrics(classes(truth), classes(predicted), scores));
      },
      py::arg("truth"), py::arg("predicted"), py::arg("scores"));

  m.def(
      "friedman_nemenyi",
      [](const std::vector<std::vector<double>>& measurements, double alpha,
         std::vector<std::string> names) {
        return RankTestToJson(FriedmanNemenyi(measurements, alpha, std::move(names)));
      },
      py::arg("measurements"), py::arg("alpha") = 0.05, py::arg("names") = std::vector<std::string>{});

  m.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        int code;
        {
          py::gil_scoped_release release;
          code = RunCommand(args, out, err);
        }
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Runs a command-line invocation; returns (exit code, stdout, stderr).");
}
