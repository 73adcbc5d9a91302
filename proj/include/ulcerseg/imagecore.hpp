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

// Pixel containers, the tissue-class vocabulary, color-space conversions
// and superpixel patch extraction.

#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ulcerseg {

enum class ColorSpace { kRgb8, kCieLab, kHsv, kHmmd, kYCbCr };

const char* ColorSpaceName(ColorSpace space);
// Accepts "rgb8", "lab"/"cielab", "hsv", "hmmd", "ycbcr". Throws
// InvalidArgument otherwise.
ColorSpace ParseColorSpace(std::string_view name);

// Three channel values tagged with their color space.
//   RGB8:  integers in [0, 255].
//   CIELAB: L in [0, 100], a/b roughly [-128, 128] (sRGB, D65).
//   HSV:   h in [0, 360) degrees, s and v in [0, 1].
//   HMMD:  (hue in degrees, diff = max - min, sum = (max + min) / 2).
//   YCbCr: full-range BT.601, all channels in [0, 255].
struct ColorTriple {
  double c0 = 0.0;
  double c1 = 0.0;
  double c2 = 0.0;
  ColorSpace space = ColorSpace::kRgb8;
};

struct Rgb8 {
  uint8_t r = 0;
  uint8_t g = 0;
  uint8_t b = 0;

  friend bool operator==(const Rgb8&, const Rgb8&) = default;
};

// Converts an RGB8 triple to `target`. Throws InvalidArgument if the input
// is not RGB8 (or out of range) or the target tag is unknown.
ColorTriple ConvertColor(const ColorTriple& rgb, ColorSpace target);

// Fast paths used by the image-level algorithms. They accept real-valued
// RGB so block means can be converted without rounding.
std::array<double, 3> RgbToLab(double r, double g, double b);
std::array<double, 3> LabToRgb(double l, double a, double b);
std::array<double, 3> RgbToHsv(double r, double g, double b);
std::array<double, 3> RgbToHmmd(double r, double g, double b);
std::array<double, 3> RgbToYCbCr(double r, double g, double b);

enum class TissueClass : uint8_t {
  kNotWound = 0,
  kGranulation = 1,
  kFibrin = 2,
  kNecrosis = 3,
};

inline constexpr int kNumTissueClasses = 4;

inline int ClassCode(TissueClass c) { return static_cast<int>(c); }
// Throws InvalidArgument for codes outside [0, 3].
TissueClass ClassFromCode(int code);
const char* ClassName(TissueClass c);
// Accepts canonical names ("not_wound", "granulation", "fibrin",
// "necrosis"), common spellings ("notwound", "not wound", "skin",
// "healthy") and integer codes.
std::optional<TissueClass> ParseClass(std::string_view text);

// A class decision with its per-class scores (indexed by class code).
struct Prediction {
  TissueClass label = TissueClass::kNotWound;
  std::array<double, kNumTissueClasses> scores{};
};

// Argmax of `scores`, ties to the lowest class code.
Prediction FromScores(const std::array<double, kNumTissueClasses>& scores);

class RgbImage {
 public:
  RgbImage() = default;
  // Throws InvalidArgument if width or height < 1.
  RgbImage(int width, int height, Rgb8 fill = {});
  RgbImage(int width, int height, std::vector<Rgb8> pixels);

  int width() const { return width_; }
  int height() const { return height_; }
  size_t size() const { return pixels_.size(); }
  bool empty() const { return pixels_.empty(); }

  Rgb8& at(int x, int y) { return pixels_[Index(x, y)]; }
  const Rgb8& at(int x, int y) const { return pixels_[Index(x, y)]; }
  const std::vector<Rgb8>& pixels() const { return pixels_; }
  std::vector<Rgb8>& pixels() { return pixels_; }

  friend bool operator==(const RgbImage&, const RgbImage&) = default;

 private:
  size_t Index(int x, int y) const {
    return static_cast<size_t>(y) * static_cast<size_t>(width_) +
           static_cast<size_t>(x);
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<Rgb8> pixels_;
};

// Rectangular crop of one superpixel. `mask` marks pixels that belong to
// the superpixel; at least one is set.
struct Patch {
  int width = 0;
  int height = 0;
  std::vector<Rgb8> pixels;
  std::vector<uint8_t> mask;

  const Rgb8& at(int x, int y) const {
    return pixels[static_cast<size_t>(y) * width + x];
  }
  bool in_mask(int x, int y) const {
    return mask[static_cast<size_t>(y) * width + x] != 0;
  }

  friend bool operator==(const Patch&, const Patch&) = default;
};

// Per-pixel tissue class map (row-major).
struct ClassMap {
  int width = 0;
  int height = 0;
  std::vector<TissueClass> classes;

  TissueClass at(int x, int y) const {
    return classes[static_cast<size_t>(y) * width + x];
  }
  friend bool operator==(const ClassMap&, const ClassMap&) = default;
};

struct LabeledPatch {
  Patch patch;
  TissueClass label = TissueClass::kNotWound;
};

// Throws InvalidArgument if sizes mismatch or no mask bit is set.
void ValidatePatch(const Patch& patch);

// Mean RGB over mask pixels, rounded to nearest.
Rgb8 MaskMeanColor(const Patch& patch);

// Bilinear resampling with pixel-center alignment; identity when the sizes
// match.
std::vector<Rgb8> ResizeBilinear(const std::vector<Rgb8>& src, int src_w,
                                 int src_h, int dst_w, int dst_h);
std::vector<uint8_t> ResizeNearest(const std::vector<uint8_t>& src, int src_w,
                                   int src_h, int dst_w, int dst_h);

struct SuperpixelPartition;

// Crops the bounding box of superpixel `id`, replaces out-of-superpixel
// pixels by the superpixel mean color and resamples to out_size x out_size
// (bilinear for color, nearest for the mask).
// Throws NotFound for an unknown id, InvalidArgument if out_size < 8 or the
// image does not match the partition.
Patch CropPatch(const RgbImage& image, const SuperpixelPartition& partition,
                int id, int out_size);

// CropPatch for every superpixel in one pass over the image, indexed by id.
std::vector<Patch> CropPatches(const RgbImage& image, const SuperpixelPartition& partition,
                               int out_size);

}  // namespace ulcerseg
