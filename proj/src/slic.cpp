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

#include "ulcerseg/slic.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <string>

#include "ulcerseg/error.hpp"

namespace ulcerseg {
namespace {

double LabDistance2(const std::array<double, 3>& p, const SuperpixelCentroid& c) {
  const double dl = p[0] - c.l;
  const double da = p[1] - c.a;
  const double db = p[2] - c.b;
  return dl * dl + da * da + db * db;
}

double Gradient(const LabPixels& lab, int width, int height, int x, int y) {
  auto px = [&](int xx, int yy) -> const std::array<double, 3>& {
    xx = std::clamp(xx, 0, width - 1);
    yy = std::clamp(yy, 0, height - 1);
    return lab[static_cast<size_t>(yy) * width + xx];
  };
  const auto& l = px(x - 1, y);
  const auto& r = px(x + 1, y);
  const auto& u = px(x, y - 1);
  const auto& d = px(x, y + 1);
  double g = 0.0;
  for (int c = 0; c < 3; ++c) {
    g += (r[c] - l[c]) * (r[c] - l[c]) + (d[c] - u[c]) * (d[c] - u[c]);
  }
  return g;
}

}  // namespace

void ValidateSlicParams(const SlicParams& params) {
  if (params.target_size < 16) {
    throw InvalidArgument("slic target_size must be >= 16");
  }
  if (!(params.compactness > 0.0)) {
    throw InvalidArgument("slic compactness must be > 0");
  }
  if (params.max_iters < 1) {
    throw InvalidArgument("slic max_iters must be >= 1");
  }
  if (!(params.connectivity_min_frac >= 0.0)) {
    throw InvalidArgument("slic connectivity_min_frac must be >= 0");
  }
}

LabPixels ToLab(const RgbImage& image) {
  LabPixels lab(image.size());
  const auto& px = image.pixels();
  for (size_t i = 0; i < px.size(); ++i) {
    lab[i] = RgbToLab(px[i].r, px[i].g, px[i].b);
  }
  return lab;
}

int SeedCount(int width, int height, int target_size) {
  const double n = static_cast<double>(width) * height;
  return std::max(1, static_cast<int>(std::lround(n / target_size)));
}

double GridStep(int width, int height, int target_size) {
  const double n = static_cast<double>(width) * height;
  return std::sqrt(n / SeedCount(width, height, target_size));
}

std::vector<SuperpixelCentroid> InitialSeeds(const LabPixels& lab, int width,
                                             int height,
                                             const SlicParams& params) {
  const int k = SeedCount(width, height, params.target_size);
  const double step = GridStep(width, height, params.target_size);
  const int rows = std::clamp(static_cast<int>(std::lround(height / step)), 1, k);

  std::vector<SuperpixelCentroid> seeds;
  seeds.reserve(k);
  for (int r = 0; r < rows; ++r) {
    // The first k % rows rows hold one extra seed.
    const int base = k / rows;
    const int extra = k % rows;
    const int begin = r * base + std::min(r, extra);
    const int end = begin + base + (r < extra ? 1 : 0);
    const int in_row = end - begin;
    const double cy = static_cast<double>(height) * (begin + end) / (2.0 * k);
    for (int j = 0; j < in_row; ++j) {
      const double cx = static_cast<double>(width) * (j + 0.5) / in_row;
      int sx = std::min(width - 1, static_cast<int>(cx));
      int sy = std::min(height - 1, static_cast<int>(cy));
      double best = Gradient(lab, width, height, sx, sy);
      int bx = sx, by = sy;
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          const int x = sx + dx, y = sy + dy;
          if (x < 0 || y < 0 || x >= width || y >= height) continue;
          const double g = Gradient(lab, width, height, x, y);
          if (g < best) {
            best = g;
            bx = x;
            by = y;
          }
        }
      }
      const auto& p = lab[static_cast<size_t>(by) * width + bx];
      if (bx == sx && by == sy) {
        seeds.push_back({p[0], p[1], p[2], cx, cy});
      } else {
        seeds.push_back({p[0], p[1], p[2], static_cast<double>(bx),
                         static_cast<double>(by)});
      }
    }
  }
  return seeds;
}

int EnforceConnectivity(std::vector<int32_t>& labels, int width, int height,
                        double min_size) {
  const size_t n = labels.size();
  std::vector<int32_t> comp(n, -1);
  std::vector<std::vector<int32_t>> members;
  std::deque<int32_t> queue;
  for (size_t start = 0; start < n; ++start) {
    if (comp[start] >= 0) continue;
    const int32_t id = static_cast<int32_t>(members.size());
    members.emplace_back();
    auto& list = members.back();
    comp[start] = id;
    queue.push_back(static_cast<int32_t>(start));
    while (!queue.empty()) {
      const int32_t p = queue.front();
      queue.pop_front();
      list.push_back(p);
      const int x = p % width, y = p / width;
      const int32_t neighbors[4] = {x > 0 ? p - 1 : -1,
                                    x + 1 < width ? p + 1 : -1,
                                    y > 0 ? p - width : -1,
                                    y + 1 < height ? p + width : -1};
      for (int32_t q : neighbors) {
        if (q < 0 || comp[q] >= 0 || labels[q] != labels[p]) continue;
        comp[q] = id;
        queue.push_back(q);
      }
    }
  }

  const int32_t num = static_cast<int32_t>(members.size());
  std::vector<int32_t> parent(num);
  std::vector<int64_t> size(num);
  for (int32_t c = 0; c < num; ++c) {
    parent[c] = c;
    size[c] = static_cast<int64_t>(members[c].size());
  }
  auto find = [&](int32_t c) {
    while (parent[c] != c) c = parent[c] = parent[parent[c]];
    return c;
  };

  for (int32_t c = 0; c < num; ++c) {
    if (find(c) != c || static_cast<double>(size[c]) >= min_size) continue;
    int32_t target = -1;
    for (int32_t p : members[c]) {
      const int x = p % width, y = p / width;
      const int32_t neighbors[4] = {x > 0 ? p - 1 : -1,
                                    x + 1 < width ? p + 1 : -1,
                                    y > 0 ? p - width : -1,
                                    y + 1 < height ? p + width : -1};
      for (int32_t q : neighbors) {
        if (q < 0) continue;
        const int32_t r = find(comp[q]);
        if (r == c) continue;
        if (target < 0 || size[r] > size[target] ||
            (size[r] == size[target] && r < target)) {
          target = r;
        }
      }
    }
    if (target < 0) continue;
    parent[c] = target;
    size[target] += size[c];
    auto& dst = members[target];
    dst.insert(dst.end(), members[c].begin(), members[c].end());
    members[c].clear();
    members[c].shrink_to_fit();
  }

  std::vector<int32_t> relabel(num, -1);
  int32_t next = 0;
  for (size_t p = 0; p < n; ++p) {
    const int32_t r = find(comp[p]);
    if (relabel[r] < 0) relabel[r] = next++;
    labels[p] = relabel[r];
  }
  return next;
}

void ComputePartitionStats(const LabPixels& lab, SuperpixelPartition& part) {
  part.count = 0;
  for (int32_t l : part.labels) part.count = std::max(part.count, l + 1);
  part.sizes.assign(part.count, 0);
  part.centroids.assign(part.count, {});
  for (int y = 0; y < part.height; ++y) {
    for (int x = 0; x < part.width; ++x) {
      const size_t p = static_cast<size_t>(y) * part.width + x;
      const int32_t l = part.labels[p];
      auto& c = part.centroids[l];
      c.l += lab[p][0];
      c.a += lab[p][1];
      c.b += lab[p][2];
      c.x += x;
      c.y += y;
      ++part.sizes[l];
    }
  }
  for (int i = 0; i < part.count; ++i) {
    const double s = static_cast<double>(part.sizes[i]);
    auto& c = part.centroids[i];
    c.l /= s;
    c.a /= s;
    c.b /= s;
    c.x /= s;
    c.y /= s;
  }
}

SuperpixelPartition Partition(const RgbImage& image, const SlicParams& params) {
  ValidateSlicParams(params);
  const int width = image.width();
  const int height = image.height();
  const size_t n = image.size();
  if (n < static_cast<size_t>(params.target_size)) {
    throw InvalidArgument("image area " + std::to_string(n) +
                          " is smaller than one superpixel (" +
                          std::to_string(params.target_size) + ")");
  }

  const LabPixels lab = ToLab(image);
  std::vector<SuperpixelCentroid> centers =
      InitialSeeds(lab, width, height, params);
  const double step = GridStep(width, height, params.target_size);
  const double ratio2 = (params.compactness / step) * (params.compactness / step);

  std::vector<int32_t> labels(n, -1);
  std::vector<double> dist(n);
  for (int iter = 0; iter < params.max_iters; ++iter) {
    std::fill(labels.begin(), labels.end(), -1);
    std::fill(dist.begin(), dist.end(), std::numeric_limits<double>::infinity());
    for (size_t c = 0; c < centers.size(); ++c) {
      const SuperpixelCentroid& ctr = centers[c];
      const int xlo = std::max(0, static_cast<int>(std::ceil(ctr.x - step)));
      const int xhi =
          std::min(width - 1, static_cast<int>(std::floor(ctr.x + step)));
      const int ylo = std::max(0, static_cast<int>(std::ceil(ctr.y - step)));
      const int yhi =
          std::min(height - 1, static_cast<int>(std::floor(ctr.y + step)));
      for (int y = ylo; y <= yhi; ++y) {
        const double dy = y - ctr.y;
        for (int x = xlo; x <= xhi; ++x) {
          const size_t p = static_cast<size_t>(y) * width + x;
          const double dx = x - ctr.x;
          const double d2 = LabDistance2(lab[p], ctr) + (dx * dx + dy * dy) * ratio2;
          if (d2 < dist[p]) {
            dist[p] = d2;
            labels[p] = static_cast<int32_t>(c);
          }
        }
      }
    }
    // Pixels outside every window go to the globally nearest center.
    for (size_t p = 0; p < n; ++p) {
      if (labels[p] >= 0) continue;
      const double x = static_cast<double>(p % width);
      const double y = static_cast<double>(p / width);
      for (size_t c = 0; c < centers.size(); ++c) {
        const double dx = x - centers[c].x;
        const double dy = y - centers[c].y;
        const double d2 =
            LabDistance2(lab[p], centers[c]) + (dx * dx + dy * dy) * ratio2;
        if (d2 < dist[p]) {
          dist[p] = d2;
          labels[p] = static_cast<int32_t>(c);
        }
      }
    }

    std::vector<SuperpixelCentroid> sums(centers.size());
    std::vector<int64_t> counts(centers.size(), 0);
    for (size_t p = 0; p < n; ++p) {
      auto& s = sums[labels[p]];
      s.l += lab[p][0];
      s.a += lab[p][1];
      s.b += lab[p][2];
      s.x += static_cast<double>(p % width);
      s.y += static_cast<double>(p / width);
      ++counts[labels[p]];
    }
    double movement = 0.0;
    for (size_t c = 0; c < centers.size(); ++c) {
      if (counts[c] == 0) continue;
      const double cnt = static_cast<double>(counts[c]);
      const SuperpixelCentroid next{sums[c].l / cnt, sums[c].a / cnt,
                                    sums[c].b / cnt, sums[c].x / cnt,
                                    sums[c].y / cnt};
      movement = std::max(movement, std::hypot(next.x - centers[c].x,
                                               next.y - centers[c].y));
      centers[c] = next;
    }
    if (movement < 1e-4 * step) break;
  }

  SuperpixelPartition part;
  part.width = width;
  part.height = height;
  part.labels = std::move(labels);
  EnforceConnectivity(part.labels, width, height,
                      params.connectivity_min_frac * params.target_size);
  ComputePartitionStats(lab, part);
  return part;
}

std::string CheckPartition(const SuperpixelPartition& part) {
  const size_t n = static_cast<size_t>(part.width) * part.height;
  if (part.labels.size() != n) return "label map size mismatch";
  if (part.count < 1) return "no superpixels";
  if (part.sizes.size() != static_cast<size_t>(part.count) ||
      part.centroids.size() != static_cast<size_t>(part.count)) {
    return "per-superpixel arrays do not match count";
  }
  std::vector<int64_t> seen(part.count, 0);
  for (int32_t l : part.labels) {
    if (l < 0 || l >= part.count) return "label out of range";
    ++seen[l];
  }
  int64_t total = 0;
  for (int i = 0; i < part.count; ++i) {
    if (seen[i] == 0) return "empty superpixel " + std::to_string(i);
    if (seen[i] != part.sizes[i]) return "size mismatch for " + std::to_string(i);
    total += part.sizes[i];
  }
  if (total != static_cast<int64_t>(n)) return "sizes do not sum to area";

  std::vector<uint8_t> visited(n, 0);
  std::vector<uint8_t> started(part.count, 0);
  std::vector<size_t> stack;
  for (size_t start = 0; start < n; ++start) {
    if (visited[start]) continue;
    const int32_t l = part.labels[start];
    if (started[l]) return "superpixel " + std::to_string(l) + " not connected";
    started[l] = 1;
    visited[start] = 1;
    stack.push_back(start);
    while (!stack.empty()) {
      const size_t p = stack.back();
      stack.pop_back();
      const int x = static_cast<int>(p % part.width);
      const int y = static_cast<int>(p / part.width);
      auto visit = [&](size_t q) {
        if (!visited[q] && part.labels[q] == l) {
          visited[q] = 1;
          stack.push_back(q);
        }
      };
      if (x > 0) visit(p - 1);
      if (x + 1 < part.width) visit(p + 1);
      if (y > 0) visit(p - part.width);
      if (y + 1 < part.height) visit(p + part.width);
    }
  }
  return {};
}

}  // namespace ulcerseg
