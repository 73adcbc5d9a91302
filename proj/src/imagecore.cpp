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

#include "ulcerseg/imagecore.hpp"

#include <algorithm>
#include <climits>
#include <cctype>
#include <charconv>
#include <cmath>
#include <string>

#include "ulcerseg/error.hpp"
#include "ulcerseg/parallel.hpp"
#include "ulcerseg/partition.hpp"

namespace ulcerseg {
namespace {

// D65 reference white, sRGB primaries.
constexpr double kWhiteX = 0.95047;
constexpr double kWhiteY = 1.00000;
constexpr double kWhiteZ = 1.08883;

double SrgbToLinear(double c) {
  c /= 255.0;
  return c <= 0.04045 ? c / 12.92 : std::pow((c + 0.055) / 1.055, 2.4);
}

double LinearToSrgb(double c) {
  const double v =
      c <= 0.0031308 ? 12.92 * c : 1.055 * std::pow(c, 1.0 / 2.4) - 0.055;
  return v * 255.0;
}

double LabF(double t) {
  constexpr double kDelta = 6.0 / 29.0;
  return t > kDelta * kDelta * kDelta ? std::cbrt(t)
                                      : t / (3.0 * kDelta * kDelta) + 4.0 / 29.0;
}

double LabFInverse(double t) {
  constexpr double kDelta = 6.0 / 29.0;
  return t > kDelta ? t * t * t : 3.0 * kDelta * kDelta * (t - 4.0 / 29.0);
}

std::string Lower(std::string_view text) {
  std::string out(text);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return out;
}

}  // namespace

const char* ColorSpaceName(ColorSpace space) {
  switch (space) {
    case ColorSpace::kRgb8:
      return "rgb8";
    case ColorSpace::kCieLab:
      return "cielab";
    case ColorSpace::kHsv:
      return "hsv";
    case ColorSpace::kHmmd:
      return "hmmd";
    case ColorSpace::kYCbCr:
      return "ycbcr";
  }
  return "unknown";
}

ColorSpace ParseColorSpace(std::string_view name) {
  const std::string key = Lower(name);
  if (key == "rgb8" || key == "rgb") return ColorSpace::kRgb8;
  if (key == "lab" || key == "cielab") return ColorSpace::kCieLab;
  if (key == "hsv") return ColorSpace::kHsv;
  if (key == "hmmd") return ColorSpace::kHmmd;
  if (key == "ycbcr") return ColorSpace::kYCbCr;
  throw InvalidArgument("unknown color space '" + std::string(name) + "'");
}

std::array<double, 3> RgbToLab(double r, double g, double b) {
  const double lr = SrgbToLinear(r);
  const double lg = SrgbToLinear(g);
  const double lb = SrgbToLinear(b);
  const double x = 0.4124564 * lr + 0.3575761 * lg + 0.1804375 * lb;
  const double y = 0.2126729 * lr + 0.7151522 * lg + 0.0721750 * lb;
  const double z = 0.0193339 * lr + 0.1191920 * lg + 0.9503041 * lb;
  const double fx = LabF(x / kWhiteX);
  const double fy = LabF(y / kWhiteY);
  const double fz = LabF(z / kWhiteZ);
  return {116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)};
}

std::array<double, 3> LabToRgb(double l, double a, double b) {
  const double fy = (l + 16.0) / 116.0;
  const double fx = fy + a / 500.0;
  const double fz = fy - b / 200.0;
  const double x = kWhiteX * LabFInverse(fx);
  const double y = kWhiteY * LabFInverse(fy);
  const double z = kWhiteZ * LabFInverse(fz);
  const double lr = 3.2404542 * x - 1.5371385 * y - 0.4985314 * z;
  const double lg = -0.9692660 * x + 1.8760108 * y + 0.0415560 * z;
  const double lb = 0.0556434 * x - 0.2040259 * y + 1.0572252 * z;
  return {LinearToSrgb(lr), LinearToSrgb(lg), LinearToSrgb(lb)};
}

std::array<double, 3> RgbToHsv(double r, double g, double b) {
  const double mx = std::max({r, g, b});
  const double mn = std::min({r, g, b});
  const double delta = mx - mn;
  double h = 0.0;
  if (delta > 0.0) {
    if (mx == r) {
      h = 60.0 * std::fmod((g - b) / delta, 6.0);
    } else if (mx == g) {
      h = 60.0 * ((b - r) / delta + 2.0);
    } else {
      h = 60.0 * ((r - g) / delta + 4.0);
    }
    if (h < 0.0) h += 360.0;
    if (h >= 360.0) h -= 360.0;
  }
  const double s = mx > 0.0 ? delta / mx : 0.0;
  return {h, s, mx / 255.0};
}

std::array<double, 3> RgbToHmmd(double r, double g, double b) {
  const double mx = std::max({r, g, b});
  const double mn = std::min({r, g, b});
  const double hue = RgbToHsv(r, g, b)[0];
  return {hue, mx - mn, (mx + mn) / 2.0};
}

std::array<double, 3> RgbToYCbCr(double r, double g, double b) {
  return {0.299 * r + 0.587 * g + 0.114 * b,
          128.0 - 0.168736 * r - 0.331264 * g + 0.5 * b,
          128.0 + 0.5 * r - 0.418688 * g - 0.081312 * b};
}

ColorTriple ConvertColor(const ColorTriple& rgb, ColorSpace target) {
  if (rgb.space != ColorSpace::kRgb8) {
    throw InvalidArgument("ConvertColor expects an RGB8 input");
  }
  for (double c : {rgb.c0, rgb.c1, rgb.c2}) {
    if (!(c >= 0.0 && c <= 255.0)) {
      throw InvalidArgument("RGB8 channel out of [0, 255]");
    }
  }
  std::array<double, 3> out;
  switch (target) {
    case ColorSpace::kRgb8:
      out = {rgb.c0, rgb.c1, rgb.c2};
      break;
    case ColorSpace::kCieLab:
      out = RgbToLab(rgb.c0, rgb.c1, rgb.c2);
      break;
    case ColorSpace::kHsv:
      out = RgbToHsv(rgb.c0, rgb.c1, rgb.c2);
      break;
    case ColorSpace::kHmmd:
      out = RgbToHmmd(rgb.c0, rgb.c1, rgb.c2);
      break;
    case ColorSpace::kYCbCr:
      out = RgbToYCbCr(rgb.c0, rgb.c1, rgb.c2);
      break;
    default:
      throw InvalidArgument("unknown target color space tag " +
                            std::to_string(static_cast<int>(target)));
  }
  return {out[0], out[1], out[2], target};
}

TissueClass ClassFromCode(int code) {
  if (code < 0 || code >= kNumTissueClasses) {
    throw InvalidArgument("tissue class code " + std::to_string(code) +
                          " outside [0, 3]");
  }
  return static_cast<TissueClass>(code);
}

const char* ClassName(TissueClass c) {
  switch (c) {
    case TissueClass::kNotWound:
      return "not_wound";
    case TissueClass::kGranulation:
      return "granulation";
    case TissueClass::kFibrin:
      return "fibrin";
    case TissueClass::kNecrosis:
      return "necrosis";
  }
  return "unknown";
}

Prediction FromScores(const std::array<double, kNumTissueClasses>& scores) {
  int best = 0;
  for (int c = 1; c < kNumTissueClasses; ++c) {
    if (scores[c] > scores[best]) best = c;
  }
  return {static_cast<TissueClass>(best), scores};
}

std::optional<TissueClass> ParseClass(std::string_view text) {
  std::string key = Lower(text);
  key.erase(std::remove_if(key.begin(), key.end(),
                           [](char c) { return c == ' ' || c == '"'; }),
            key.end());
  int code = -1;
  auto [ptr, ec] = std::from_chars(key.data(), key.data() + key.size(), code);
  if (ec == std::errc() && ptr == key.data() + key.size()) {
    if (code >= 0 && code < kNumTissueClasses) return ClassFromCode(code);
    return std::nullopt;
  }
  if (key == "not_wound" || key == "notwound" || key == "not-wound" ||
      key == "skin" || key == "healthy" || key == "background") {
    return TissueClass::kNotWound;
  }
  if (key == "granulation") return TissueClass::kGranulation;
  if (key == "fibrin" || key == "slough") return TissueClass::kFibrin;
  if (key == "necrosis" || key == "necrotic") return TissueClass::kNecrosis;
  return std::nullopt;
}

RgbImage::RgbImage(int width, int height, Rgb8 fill)
    : width_(width), height_(height) {
  if (width < 1 || height < 1) {
    throw InvalidArgument("image dimensions must be >= 1");
  }
  pixels_.assign(static_cast<size_t>(width) * height, fill);
}

RgbImage::RgbImage(int width, int height, std::vector<Rgb8> pixels)
    : width_(width), height_(height), pixels_(std::move(pixels)) {
  if (width < 1 || height < 1) {
    throw InvalidArgument("image dimensions must be >= 1");
  }
  if (pixels_.size() != static_cast<size_t>(width) * height) {
    throw InvalidArgument("pixel count does not match width * height");
  }
}

void ValidatePatch(const Patch& patch) {
  const size_t n = static_cast<size_t>(std::max(patch.width, 0)) *
                   static_cast<size_t>(std::max(patch.height, 0));
  if (n == 0 || patch.pixels.size() != n || patch.mask.size() != n) {
    throw InvalidArgument("patch arrays do not match width * height");
  }
  if (std::none_of(patch.mask.begin(), patch.mask.end(),
                   [](uint8_t m) { return m != 0; })) {
    throw InvalidArgument("patch mask is empty");
  }
}

Rgb8 MaskMeanColor(const Patch& patch) {
  double sum[3] = {0, 0, 0};
  size_t count = 0;
  for (size_t i = 0; i < patch.pixels.size(); ++i) {
    if (!patch.mask[i]) continue;
    sum[0] += patch.pixels[i].r;
    sum[1] += patch.pixels[i].g;
    sum[2] += patch.pixels[i].b;
    ++count;
  }
  if (count == 0) return {};
  auto round8 = [&](double s) {
    return static_cast<uint8_t>(std::lround(s / static_cast<double>(count)));
  };
  return {round8(sum[0]), round8(sum[1]), round8(sum[2])};
}

std::vector<Rgb8> ResizeBilinear(const std::vector<Rgb8>& src, int src_w,
                                 int src_h, int dst_w, int dst_h) {
  if (src_w == dst_w && src_h == dst_h) return src;
  std::vector<Rgb8> dst(static_cast<size_t>(dst_w) * dst_h);
  const double sx = static_cast<double>(src_w) / dst_w;
  const double sy = static_cast<double>(src_h) / dst_h;
  for (int y = 0; y < dst_h; ++y) {
    const double fy =
        std::clamp((y + 0.5) * sy - 0.5, 0.0, static_cast<double>(src_h - 1));
    const int y0 = static_cast<int>(fy);
    const int y1 = std::min(y0 + 1, src_h - 1);
    const double ty = fy - y0;
    for (int x = 0; x < dst_w; ++x) {
      const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0,
                                   static_cast<double>(src_w - 1));
      const int x0 = static_cast<int>(fx);
      const int x1 = std::min(x0 + 1, src_w - 1);
      const double tx = fx - x0;
      const Rgb8& p00 = src[static_cast<size_t>(y0) * src_w + x0];
      const Rgb8& p01 = src[static_cast<size_t>(y0) * src_w + x1];
      const Rgb8& p10 = src[static_cast<size_t>(y1) * src_w + x0];
      const Rgb8& p11 = src[static_cast<size_t>(y1) * src_w + x1];
      auto blend = [&](uint8_t a, uint8_t b, uint8_t c, uint8_t d) {
        const double top = a + (b - a) * tx;
        const double bottom = c + (d - c) * tx;
        const double v = top + (bottom - top) * ty;
        return static_cast<uint8_t>(std::clamp(std::lround(v), 0L, 255L));
      };
      dst[static_cast<size_t>(y) * dst_w + x] = {
          blend(p00.r, p01.r, p10.r, p11.r), blend(p00.g, p01.g, p10.g, p11.g),
          blend(p00.b, p01.b, p10.b, p11.b)};
    }
  }
  return dst;
}

std::vector<uint8_t> ResizeNearest(const std::vector<uint8_t>& src, int src_w,
                                   int src_h, int dst_w, int dst_h) {
  if (src_w == dst_w && src_h == dst_h) return src;
  std::vector<uint8_t> dst(static_cast<size_t>(dst_w) * dst_h);
  for (int y = 0; y < dst_h; ++y) {
    const int sy = std::min(
        static_cast<int>((y + 0.5) * src_h / static_cast<double>(dst_h)),
        src_h - 1);
    for (int x = 0; x < dst_w; ++x) {
      const int sx = std::min(
          static_cast<int>((x + 0.5) * src_w / static_cast<double>(dst_w)),
          src_w - 1);
      dst[static_cast<size_t>(y) * dst_w + x] =
          src[static_cast<size_t>(sy) * src_w + sx];
    }
  }
  return dst;
}

namespace {

struct SuperpixelBox {
  int x0 = INT_MAX, y0 = INT_MAX, x1 = -1, y1 = -1;
  double sum[3] = {0, 0, 0};
  int64_t count = 0;

  void Add(int x, int y, const Rgb8& p) {
    x0 = std::min(x0, x);
    x1 = std::max(x1, x);
    y0 = std::min(y0, y);
    y1 = std::max(y1, y);
    sum[0] += p.r;
    sum[1] += p.g;
    sum[2] += p.b;
    ++count;
  }
};

void CheckCropArgs(const RgbImage& image, const SuperpixelPartition& partition, int out_size) {
  if (out_size < 8) throw InvalidArgument("patch out_size must be >= 8");
  if (image.width() != partition.width || image.height() != partition.height) {
    throw InvalidArgument("image and partition dimensions differ");
  }
}

Patch CropBox(const RgbImage& image, const SuperpixelPartition& partition, int id,
              const SuperpixelBox& box, int out_size) {
  if (box.count == 0) {
    throw NotFound("superpixel id " + std::to_string(id) + " has no pixels");
  }
  auto round8 = [&](double s) {
    return static_cast<uint8_t>(std::lround(s / static_cast<double>(box.count)));
  };
  const Rgb8 mean{round8(box.sum[0]), round8(box.sum[1]), round8(box.sum[2])};

  const int bw = box.x1 - box.x0 + 1;
  const int bh = box.y1 - box.y0 + 1;
  std::vector<Rgb8> pixels(static_cast<size_t>(bw) * bh);
  std::vector<uint8_t> mask(pixels.size());
  for (int y = 0; y < bh; ++y) {
    for (int x = 0; x < bw; ++x) {
      const size_t i = static_cast<size_t>(y) * bw + x;
      const bool inside = partition.label_at(box.x0 + x, box.y0 + y) == id;
      mask[i] = inside ? 1 : 0;
      pixels[i] = inside ? image.at(box.x0 + x, box.y0 + y) : mean;
    }
  }
  Patch patch;
  patch.width = out_size;
  patch.height = out_size;
  patch.pixels = ResizeBilinear(pixels, bw, bh, out_size, out_size);
  patch.mask = ResizeNearest(mask, bw, bh, out_size, out_size);
  // Nearest sampling can miss every pixel of a thin superpixel.
  if (std::none_of(patch.mask.begin(), patch.mask.end(),
                   [](uint8_t m) { return m != 0; })) {
    patch.mask[static_cast<size_t>(out_size / 2) * out_size + out_size / 2] = 1;
  }
  return patch;
}

}  // namespace

Patch CropPatch(const RgbImage& image, const SuperpixelPartition& partition,
                int id, int out_size) {
  CheckCropArgs(image, partition, out_size);
  if (id < 0 || id >= partition.count) {
    throw NotFound("superpixel id " + std::to_string(id) + " not in partition");
  }
  SuperpixelBox box;
  for (int y = 0; y < image.height(); ++y) {
    for (int x = 0; x < image.width(); ++x) {
      if (partition.label_at(x, y) == id) box.Add(x, y, image.at(x, y));
    }
  }
  return CropBox(image, partition, id, box, out_size);
}

std::vector<Patch> CropPatches(const RgbImage& image, const SuperpixelPartition& partition,
                               int out_size) {
  CheckCropArgs(image, partition, out_size);
  std::vector<SuperpixelBox> boxes(static_cast<size_t>(partition.count));
  for (int y = 0; y < image.height(); ++y) {
    for (int x = 0; x < image.width(); ++x) {
      const int32_t id = partition.label_at(x, y);
      if (id < 0 || id >= partition.count) {
        throw InvalidArgument("partition label " + std::to_string(id) + " out of range");
      }
      boxes[id].Add(x, y, image.at(x, y));
    }
  }
  std::vector<Patch> patches(boxes.size());
  ParallelFor(boxes.size(), [&](size_t i) {
    patches[i] = CropBox(image, partition, static_cast<int>(i), boxes[i], out_size);
  });
  return patches;
}

}  // namespace ulcerseg
