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

#include "ulcerseg/mpeg7.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <sstream>

#include "ulcerseg/error.hpp"
#include "ulcerseg/text.hpp"

namespace ulcerseg {
namespace {

constexpr int kBlocks = 8;

// JPEG zigzag scan as (row, col); only the first six entries are needed.
constexpr std::array<std::array<int, 2>, 6> kZigzag = {
    {{0, 0}, {0, 1}, {1, 0}, {2, 0}, {1, 1}, {0, 2}}};

// MPEG-7 128-cell HMMD quantization.
struct CsdSubspace {
  double diff_upper;  // exclusive, except the last one
  int hue_levels;
  int sum_levels;
  int offset;
};
constexpr std::array<CsdSubspace, 5> kCsdSubspaces = {{
    {6.0, 1, 16, 0},
    {20.0, 4, 4, 16},
    {60.0, 8, 4, 32},
    {110.0, 8, 4, 64},
    {256.0, 8, 4, 96},
}};
constexpr int kCsdCells = 128;
constexpr int kScdBins = 256;

std::array<std::array<double, kBlocks * kBlocks>, 3> BlockMeansYCbCr(
    const Patch& patch) {
  std::array<std::array<double, kBlocks * kBlocks>, 3> out{};
  for (int by = 0; by < kBlocks; ++by) {
    const int y0 = by * patch.height / kBlocks;
    const int y1 = std::max(y0 + 1, (by + 1) * patch.height / kBlocks);
    for (int bx = 0; bx < kBlocks; ++bx) {
      const int x0 = bx * patch.width / kBlocks;
      const int x1 = std::max(x0 + 1, (bx + 1) * patch.width / kBlocks);
      double sum[3] = {0, 0, 0};
      for (int y = y0; y < y1; ++y) {
        for (int x = x0; x < x1; ++x) {
          const Rgb8& p = patch.at(x, y);
          sum[0] += p.r;
          sum[1] += p.g;
          sum[2] += p.b;
        }
      }
      const double n = static_cast<double>((y1 - y0) * (x1 - x0));
      const auto ycc = RgbToYCbCr(sum[0] / n, sum[1] / n, sum[2] / n);
      for (int c = 0; c < 3; ++c) out[c][by * kBlocks + bx] = ycc[c];
    }
  }
  return out;
}

// Orthonormal 8x8 DCT-II coefficient (u = vertical, v = horizontal).
double DctCoefficient(const std::array<double, kBlocks * kBlocks>& block, int u,
                      int v) {
  const double au = u == 0 ? std::sqrt(1.0 / kBlocks) : std::sqrt(2.0 / kBlocks);
  const double av = v == 0 ? std::sqrt(1.0 / kBlocks) : std::sqrt(2.0 / kBlocks);
  double sum = 0.0;
  for (int y = 0; y < kBlocks; ++y) {
    const double cy = std::cos((2 * y + 1) * u * M_PI / (2.0 * kBlocks));
    for (int x = 0; x < kBlocks; ++x) {
      const double cx = std::cos((2 * x + 1) * v * M_PI / (2.0 * kBlocks));
      sum += block[y * kBlocks + x] * cy * cx;
    }
  }
  return au * av * sum;
}

std::vector<double> ColorLayout(const Patch& patch) {
  const auto channels = BlockMeansYCbCr(patch);
  std::vector<double> out;
  out.reserve(12);
  const int take[3] = {6, 3, 3};
  for (int c = 0; c < 3; ++c) {
    for (int i = 0; i < take[c]; ++i) {
      out.push_back(DctCoefficient(channels[c], kZigzag[i][0], kZigzag[i][1]));
    }
  }
  return out;
}

std::vector<double> ColorStructure(const Patch& patch) {
  const int factor = CsdSubsampling(patch.width, patch.height);
  const int sw = std::max(8, (patch.width + factor - 1) / factor);
  const int sh = std::max(8, (patch.height + factor - 1) / factor);
  // Cell per subsampled pixel, edge-replicated up to 8x8.
  std::vector<int> cells(static_cast<size_t>(sw) * sh);
  for (int y = 0; y < sh; ++y) {
    const int py = std::min(y * factor, patch.height - 1);
    for (int x = 0; x < sw; ++x) {
      const int px = std::min(x * factor, patch.width - 1);
      const Rgb8& p = patch.at(px, py);
      const auto hmmd = RgbToHmmd(p.r, p.g, p.b);
      cells[static_cast<size_t>(y) * sw + x] = CsdCell(hmmd[0], hmmd[1], hmmd[2]);
    }
  }
  std::vector<double> hist(kCsdCells, 0.0);
  std::vector<int> stamp(kCsdCells, -1);
  int positions = 0;
  for (int y = 0; y + 8 <= sh; ++y) {
    for (int x = 0; x + 8 <= sw; ++x) {
      for (int dy = 0; dy < 8; ++dy) {
        for (int dx = 0; dx < 8; ++dx) {
          const int cell = cells[static_cast<size_t>(y + dy) * sw + x + dx];
          if (stamp[cell] != positions) {
            stamp[cell] = positions;
            hist[cell] += 1.0;
          }
        }
      }
      ++positions;
    }
  }
  for (double& h : hist) h /= positions;
  return hist;
}

std::vector<double> ScalableColor(const Patch& patch) {
  std::vector<double> hist = HsvHistogram(patch);
  HaarTransform(hist);
  return hist;
}

}  // namespace

const char* DescriptorName(DescriptorKind kind) {
  switch (kind) {
    case DescriptorKind::kColorLayout:
      return "cld";
    case DescriptorKind::kColorStructure:
      return "csd";
    case DescriptorKind::kScalableColor:
      return "scd";
    case DescriptorKind::kPcaReduced:
      return "pca";
  }
  return "unknown";
}

DescriptorKind ParseDescriptor(std::string_view name) {
  if (name == "cld" || name == "color_layout") return DescriptorKind::kColorLayout;
  if (name == "csd" || name == "color_structure") return DescriptorKind::kColorStructure;
  if (name == "scd" || name == "scalable_color") return DescriptorKind::kScalableColor;
  if (name == "pca") return DescriptorKind::kPcaReduced;
  throw InvalidArgument("unknown descriptor '" + std::string(name) + "'");
}

int DescriptorDim(DescriptorKind kind) {
  switch (kind) {
    case DescriptorKind::kColorLayout:
      return 12;
    case DescriptorKind::kColorStructure:
      return kCsdCells;
    case DescriptorKind::kScalableColor:
      return kScdBins;
    case DescriptorKind::kPcaReduced:
      return 0;
  }
  return 0;
}

int CsdCell(double hue, double diff, double sum) {
  size_t s = 0;
  while (s + 1 < kCsdSubspaces.size() && diff >= kCsdSubspaces[s].diff_upper) ++s;
  const CsdSubspace& sub = kCsdSubspaces[s];
  const int h = std::min(sub.hue_levels - 1,
                         static_cast<int>(hue / 360.0 * sub.hue_levels));
  const int m = std::min(sub.sum_levels - 1,
                         static_cast<int>(sum / 256.0 * sub.sum_levels));
  return sub.offset + h * sub.sum_levels + m;
}

int CsdSubsampling(int width, int height) {
  const double side = static_cast<double>(std::min(width, height));
  const long p = std::lround(0.5 * std::log2(side) - 4.0);
  return 1 << std::max(0L, p);
}

std::vector<double> HsvHistogram(const Patch& patch) {
  std::vector<double> hist(kScdBins, 0.0);
  size_t count = 0;
  for (size_t i = 0; i < patch.pixels.size(); ++i) {
    if (!patch.mask[i]) continue;
    const Rgb8& p = patch.pixels[i];
    const auto hsv = RgbToHsv(p.r, p.g, p.b);
    const int h = std::min(15, static_cast<int>(hsv[0] / 360.0 * 16));
    const int s = std::min(3, static_cast<int>(hsv[1] * 4));
    const int v = std::min(3, static_cast<int>(hsv[2] * 4));
    hist[h + 16 * (s + 4 * v)] += 1.0;
    ++count;
  }
  for (double& h : hist) h /= static_cast<double>(count);
  return hist;
}

void HaarTransform(std::vector<double>& values) {
  std::vector<double> scratch(values.size());
  for (size_t len = values.size(); len >= 2; len /= 2) {
    const size_t half = len / 2;
    for (size_t i = 0; i < half; ++i) {
      scratch[i] = values[2 * i] + values[2 * i + 1];
      scratch[half + i] = values[2 * i] - values[2 * i + 1];
    }
    std::copy(scratch.begin(), scratch.begin() + len, values.begin());
  }
}

FeatureVector Extract(const Patch& patch, DescriptorKind kind) {
  ValidatePatch(patch);
  FeatureVector out;
  out.kind = kind;
  switch (kind) {
    case DescriptorKind::kColorLayout:
      out.values = ColorLayout(patch);
      break;
    case DescriptorKind::kColorStructure:
      out.values = ColorStructure(patch);
      break;
    case DescriptorKind::kScalableColor:
      out.values = ScalableColor(patch);
      break;
    default:
      throw InvalidArgument(std::string("descriptor '") + DescriptorName(kind) +
                            "' cannot be extracted from a patch");
  }
  return out;
}

std::string FormatFeatureCsv(const FeatureTable& table) {
  std::ostringstream out;
  out << "image_id,superpixel_id,label";
  for (size_t i = 0; i < table.dim(); ++i) out << ",f" << i;
  out << '\n';
  for (const FeatureRow& row : table.rows) {
    out << row.image_id << ',' << row.superpixel_id << ',' << ClassCode(row.label);
    for (double v : row.values) out << ',' << FormatDouble(v);
    out << '\n';
  }
  return out.str();
}

FeatureTable ParseFeatureCsv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw DataError("feature CSV is empty");
  const auto header = SplitCsvLine(line);
  if (header.size() < 4 || header[0] != "image_id" ||
      header[1] != "superpixel_id" || header[2] != "label") {
    throw DataError("feature CSV header must start with image_id,superpixel_id,label,f0");
  }
  const size_t dim = header.size() - 3;
  FeatureTable table;
  size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto fields = SplitCsvLine(line);
    if (fields.size() != header.size()) {
      throw DataError("feature CSV line " + std::to_string(line_no) +
                      ": expected " + std::to_string(header.size()) + " fields");
    }
    FeatureRow row;
    row.image_id = fields[0];
    auto [p, ec] = std::from_chars(fields[1].data(),
                                   fields[1].data() + fields[1].size(),
                                   row.superpixel_id);
    if (ec != std::errc()) {
      throw DataError("feature CSV line " + std::to_string(line_no) +
                      ": bad superpixel id");
    }
    const auto label = ParseClass(fields[2]);
    if (!label) {
      throw DataError("feature CSV line " + std::to_string(line_no) +
                      ": unknown label '" + fields[2] + "'");
    }
    row.label = *label;
    row.values.resize(dim);
    for (size_t i = 0; i < dim; ++i) {
      const std::string& f = fields[3 + i];
      auto [q, ec2] = std::from_chars(f.data(), f.data() + f.size(), row.values[i]);
      if (ec2 != std::errc() || !std::isfinite(row.values[i])) {
        throw DataError("feature CSV line " + std::to_string(line_no) +
                        ": bad value '" + f + "'");
      }
    }
    table.rows.push_back(std::move(row));
  }
  switch (dim) {
    case 12:
      table.kind = DescriptorKind::kColorLayout;
      break;
    case 128:
      table.kind = DescriptorKind::kColorStructure;
      break;
    case 256:
      table.kind = DescriptorKind::kScalableColor;
      break;
    default:
      table.kind = DescriptorKind::kPcaReduced;
  }
  return table;
}

}  // namespace ulcerseg
