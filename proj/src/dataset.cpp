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

#include "ulcerseg/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <map>
#include <set>
#include <sstream>

#include "ulcerseg/error.hpp"
#include "ulcerseg/image_io.hpp"
#include "ulcerseg/pipeline.hpp"
#include "ulcerseg/text.hpp"

namespace ulcerseg {
namespace fs = std::filesystem;
namespace {

std::string Lower(std::string_view s) {
  std::string out(Trim(s));
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

int FindColumn(const std::vector<std::string>& header, std::initializer_list<const char*> names) {
  for (const char* name : names) {
    for (size_t i = 0; i < header.size(); ++i) {
      if (header[i] == name) return static_cast<int>(i);
    }
  }
  return -1;
}

std::string StripImageExtension(std::string id) {
  const auto dot = id.rfind('.');
  if (dot == std::string::npos) return id;
  const std::string ext = Lower(std::string_view(id).substr(dot));
  if (ext == ".png" || ext == ".jpg" || ext == ".jpeg") id.resize(dot);
  return id;
}

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::pair<size_t, std::vector<std::string>>> rows;
};

CsvTable ReadCsv(const std::string& text, const char* what) {
  CsvTable t;
  size_t line_no = 0;
  for (const auto& line : SplitLines(text)) {
    ++line_no;
    if (Trim(line).empty()) continue;
    auto fields = SplitCsvLine(line);
    if (t.header.empty()) {
      for (auto& f : fields) t.header.push_back(Lower(f));
      continue;
    }
    for (auto& f : fields) f = std::string(Trim(f));
    if (fields.size() != t.header.size()) {
      throw DataError(std::string(what) + " line " + std::to_string(line_no) + ": expected " +
                      std::to_string(t.header.size()) + " fields, got " +
                      std::to_string(fields.size()));
    }
    t.rows.emplace_back(line_no, std::move(fields));
  }
  if (t.header.empty()) throw DataError(std::string(what) + " is empty");
  return t;
}

SuperpixelPartition PartitionFromMap(const LabelMap& map, const RgbImage& pixels,
                                     const std::string& path) {
  if (map.width != pixels.width() || map.height != pixels.height()) {
    throw DataError("partition '" + path + "' is " + std::to_string(map.width) + "x" +
                    std::to_string(map.height) + ", image is " + std::to_string(pixels.width()) +
                    "x" + std::to_string(pixels.height()));
  }
  SuperpixelPartition part;
  part.width = map.width;
  part.height = map.height;
  part.labels = map.labels;
  part.count = 1 + *std::max_element(part.labels.begin(), part.labels.end());
  ComputePartitionStats(ToLab(pixels), part);
  for (int i = 0; i < part.count; ++i) {
    if (part.sizes[i] == 0) {
      throw DataError("partition '" + path + "' skips superpixel id " + std::to_string(i));
    }
  }
  return part;
}

}  // namespace

const DatasetImage& DatasetManifest::image(const std::string& id) const {
  for (const auto& img : images) {
    if (img.id == id) return img;
  }
  throw NotFound("image id '" + id + "' not in dataset");
}

std::string DatasetManifest::resolve(const std::string& relative) const {
  const fs::path p(relative);
  return p.is_absolute() ? relative : (fs::path(root) / p).string();
}

std::vector<LabelRow> ParseLabelsCsv(const std::string& text) {
  const CsvTable t = ReadCsv(text, "labels CSV");
  const int image_col =
      FindColumn(t.header, {"image_id", "image", "img", "image_name", "filename", "file"});
  const int sp_col = FindColumn(
      t.header, {"superpixel_id", "superpixel", "sp_id", "sp", "segment_id", "segment"});
  const int class_col = FindColumn(t.header, {"class", "label", "tissue", "category"});
  if (image_col < 0 || sp_col < 0 || class_col < 0) {
    throw DataError("labels CSV needs image, superpixel and class columns");
  }
  std::vector<LabelRow> rows;
  std::set<std::pair<std::string, int>> seen;
  for (const auto& [line, f] : t.rows) {
    LabelRow row;
    row.image_id = StripImageExtension(f[image_col]);
    const auto sp = ParseInt(f[sp_col]);
    if (!sp || *sp < 0) {
      throw DataError("labels CSV line " + std::to_string(line) + ": bad superpixel id '" +
                      f[sp_col] + "'");
    }
    row.superpixel_id = static_cast<int>(*sp);
    const auto label = ParseClass(f[class_col]);
    if (!label) {
      throw DataError("labels CSV line " + std::to_string(line) + ": unknown class '" +
                      f[class_col] + "'");
    }
    row.label = *label;
    if (!seen.insert({row.image_id, row.superpixel_id}).second) {
      throw DataError("labels CSV line " + std::to_string(line) + ": duplicate label for " +
                      row.image_id + "/" + std::to_string(row.superpixel_id));
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string FormatLabelsCsv(const std::vector<LabelRow>& rows) {
  std::ostringstream out;
  out << "image_id,superpixel_id,class\n";
  for (const auto& r : rows) out << r.image_id << ',' << r.superpixel_id << ',' << ClassName(r.label) << '\n';
  return out.str();
}

std::vector<DatasetImage> ParseImagesCsv(const std::string& text) {
  const CsvTable t = ReadCsv(text, "images CSV");
  const int id_col = FindColumn(t.header, {"image_id", "id"});
  const int image_col = FindColumn(t.header, {"image", "path", "file"});
  const int part_col = FindColumn(t.header, {"partition"});
  const int mask_col = FindColumn(t.header, {"mask", "reference"});
  if (id_col < 0 || image_col < 0) throw DataError("images CSV needs image_id and image columns");
  std::vector<DatasetImage> out;
  std::set<std::string> ids;
  for (const auto& [line, f] : t.rows) {
    DatasetImage img{f[id_col], f[image_col], part_col >= 0 ? f[part_col] : "",
                     mask_col >= 0 ? f[mask_col] : ""};
    if (img.id.empty() || img.image.empty()) {
      throw DataError("images CSV line " + std::to_string(line) + ": empty id or path");
    }
    if (!ids.insert(img.id).second) {
      throw DataError("images CSV line " + std::to_string(line) + ": duplicate image id '" +
                      img.id + "'");
    }
    out.push_back(std::move(img));
  }
  return out;
}

std::string FormatImagesCsv(const std::vector<DatasetImage>& images) {
  std::ostringstream out;
  out << "image_id,image,partition,mask\n";
  for (const auto& i : images) out << i.id << ',' << i.image << ',' << i.partition << ',' << i.mask << '\n';
  return out.str();
}

DatasetManifest LoadDataset(const std::string& root) {
  DatasetManifest d;
  d.root = root;
  const fs::path dir(root);
  if (!fs::is_directory(dir)) throw NotFound("dataset directory '" + root + "' not found");
  const fs::path images = dir / "images.csv";
  if (!fs::exists(images)) throw NotFound("dataset has no images.csv: '" + images.string() + "'");
  d.images = ParseImagesCsv(ReadFile(images.string()));
  const fs::path labels = dir / "labels.csv";
  if (fs::exists(labels)) {
    d.labels = ParseLabelsCsv(ReadFile(labels.string()));
    for (const auto& row : d.labels) {
      try {
        d.image(row.image_id);
      } catch (const NotFound&) {
        throw DataError("label row references unknown image '" + row.image_id + "'");
      }
    }
  }
  return d;
}

SuperpixelPartition LoadPartition(const DatasetManifest& dataset, const DatasetImage& image,
                                  const RgbImage& pixels, const SlicParams& params) {
  if (image.partition.empty()) return Partition(pixels, params);
  const std::string path = dataset.resolve(image.partition);
  return PartitionFromMap(ReadPartitionPng(path), pixels, path);
}

void ValidateLabels(const DatasetManifest& dataset, const std::string& image_id,
                    const SuperpixelPartition& partition) {
  for (const auto& row : dataset.labels) {
    if (row.image_id == image_id && row.superpixel_id >= partition.count) {
      throw DataError("label for " + image_id + "/" + std::to_string(row.superpixel_id) +
                      " exceeds the " + std::to_string(partition.count) +
                      " superpixels of its partition");
    }
  }
}

std::vector<LabeledImage> LoadLabeledImages(const DatasetManifest& dataset,
                                            const SlicParams& params) {
  std::map<std::string, std::vector<LabelRow>> by_image;
  for (const auto& row : dataset.labels) by_image[row.image_id].push_back(row);
  std::vector<LabeledImage> out;
  for (const auto& entry : dataset.images) {
    const bool from_mask = dataset.labels.empty();
    if (from_mask ? entry.mask.empty() : !by_image.contains(entry.id)) continue;
    LabeledImage li;
    li.entry = &entry;
    li.pixels = ReadImage(dataset.resolve(entry.image));
    li.partition = LoadPartition(dataset, entry, li.pixels, params);
    if (from_mask) {
      const ClassMap mask = ReadMaskPng(dataset.resolve(entry.mask));
      if (mask.width != li.pixels.width() || mask.height != li.pixels.height()) {
        throw DataError("mask of '" + entry.id + "' does not match its image size");
      }
      const auto labels = SuperpixelMajority(li.partition, mask);
      for (int id = 0; id < li.partition.count; ++id) li.labels.push_back({entry.id, id, labels[id]});
    } else {
      ValidateLabels(dataset, entry.id, li.partition);
      li.labels = by_image[entry.id];
    }
    out.push_back(std::move(li));
  }
  if (out.empty()) throw DataError("dataset has no labeled images");
  return out;
}

}  // namespace ulcerseg
