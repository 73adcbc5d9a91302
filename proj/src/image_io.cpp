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

#include "ulcerseg/image_io.hpp"

#include <jpeglib.h>
#include <png.h>

#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>

#include "ulcerseg/error.hpp"

namespace ulcerseg {
namespace {

// Decoded PNG in its native layout after palette/bit-depth normalization
// requested by the caller.
struct PngPixels {
  int width = 0;
  int height = 0;
  int channels = 0;
  int bit_depth = 0;
  int color_type = 0;
  std::vector<png_color> palette;
  std::vector<uint8_t> data;  // rows concatenated, big-endian for 16 bit
};

struct PngReadSource {
  const std::string* bytes;
  size_t offset;
};

void PngReadCallback(png_structp png, png_bytep out, png_size_t length) {
  auto* src = static_cast<PngReadSource*>(png_get_io_ptr(png));
  if (src->offset + length > src->bytes->size()) {
    png_error(png, "truncated PNG");
  }
  std::memcpy(out, src->bytes->data() + src->offset, length);
  src->offset += length;
}

void PngWriteCallback(png_structp png, png_bytep data, png_size_t length) {
  auto* out = static_cast<std::string*>(png_get_io_ptr(png));
  out->append(reinterpret_cast<const char*>(data), length);
}

void PngFlushCallback(png_structp) {}

[[noreturn]] void PngErrorCallback(png_structp png, png_const_charp message) {
  auto* error = static_cast<std::string*>(png_get_error_ptr(png));
  *error = message;
  png_longjmp(png, 1);
}

void PngWarningCallback(png_structp, png_const_charp) {}

// keep_native: do not expand palettes or strip 16-bit samples.
PngPixels DecodePng(const std::string& bytes, const std::string& path,
                    bool keep_native) {
  std::string error;
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &error,
                                           PngErrorCallback, PngWarningCallback);
  if (!png) throw DataError(path + ": cannot allocate PNG reader");
  png_infop info = png_create_info_struct(png);
  PngPixels out;
  PngReadSource source{&bytes, 0};
  std::vector<png_bytep> rows;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw DataError(path + ": " + error);
  }
  png_set_read_fn(png, &source, PngReadCallback);
  png_read_info(png, info);
  int color_type = png_get_color_type(png, info);
  int bit_depth = png_get_bit_depth(png, info);
  if (!keep_native) {
    if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) {
      png_set_expand_gray_1_2_4_to_8(png);
    }
    if (bit_depth == 16) png_set_strip_16(png);
    if (color_type & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    if (color_type == PNG_COLOR_TYPE_GRAY ||
        color_type == PNG_COLOR_TYPE_GRAY_ALPHA) {
      png_set_gray_to_rgb(png);
    }
  } else if (color_type == PNG_COLOR_TYPE_PALETTE && bit_depth < 8) {
    png_set_packing(png);
  }
  png_read_update_info(png, info);
  if (!keep_native && png_get_channels(png, info) == 4) {
    png_set_strip_alpha(png);
    png_read_update_info(png, info);
  }
  out.width = static_cast<int>(png_get_image_width(png, info));
  out.height = static_cast<int>(png_get_image_height(png, info));
  out.channels = png_get_channels(png, info);
  out.bit_depth = png_get_bit_depth(png, info);
  out.color_type = png_get_color_type(png, info);
  if (out.color_type == PNG_COLOR_TYPE_PALETTE) {
    png_colorp palette = nullptr;
    int num = 0;
    if (png_get_PLTE(png, info, &palette, &num)) {
      out.palette.assign(palette, palette + num);
    }
  }
  const size_t stride = png_get_rowbytes(png, info);
  out.data.resize(stride * out.height);
  rows.resize(out.height);
  for (int y = 0; y < out.height; ++y) rows[y] = out.data.data() + y * stride;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return out;
}

struct PngSpec {
  int width;
  int height;
  int bit_depth;
  int color_type;
  std::vector<png_color> palette;
};

std::string EncodePng(const PngSpec& spec, const std::vector<uint8_t>& data) {
  std::string error;
  std::string out;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &error,
                                            PngErrorCallback, PngWarningCallback);
  if (!png) throw DataError("cannot allocate PNG writer");
  png_infop info = png_create_info_struct(png);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw DataError("PNG encode failed: " + error);
  }
  png_set_write_fn(png, &out, PngWriteCallback, PngFlushCallback);
  png_set_IHDR(png, info, spec.width, spec.height, spec.bit_depth,
               spec.color_type, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  if (!spec.palette.empty()) {
    png_set_PLTE(png, info, const_cast<png_colorp>(spec.palette.data()),
                 static_cast<int>(spec.palette.size()));
  }
  png_write_info(png, info);
  const size_t stride = data.size() / spec.height;
  for (int y = 0; y < spec.height; ++y) {
    png_write_row(png, const_cast<png_bytep>(data.data() + y * stride));
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return out;
}

struct JpegErrorManager {
  jpeg_error_mgr base;
  jmp_buf jump;
  char message[JMSG_LENGTH_MAX];
};

void JpegErrorExit(j_common_ptr cinfo) {
  auto* err = reinterpret_cast<JpegErrorManager*>(cinfo->err);
  (*cinfo->err->format_message)(cinfo, err->message);
  longjmp(err->jump, 1);
}

RgbImage DecodeJpeg(const std::string& bytes, const std::string& path) {
  jpeg_decompress_struct cinfo;
  JpegErrorManager err;
  cinfo.err = jpeg_std_error(&err.base);
  err.base.error_exit = JpegErrorExit;
  std::vector<uint8_t> buffer;
  int width = 0, height = 0;
  if (setjmp(err.jump)) {
    jpeg_destroy_decompress(&cinfo);
    throw DataError(path + ": " + err.message);
  }
  jpeg_create_decompress(&cinfo);
  jpeg_mem_src(&cinfo, reinterpret_cast<const unsigned char*>(bytes.data()),
               static_cast<unsigned long>(bytes.size()));
  jpeg_read_header(&cinfo, TRUE);
  cinfo.out_color_space = JCS_RGB;
  jpeg_start_decompress(&cinfo);
  width = static_cast<int>(cinfo.output_width);
  height = static_cast<int>(cinfo.output_height);
  buffer.resize(static_cast<size_t>(width) * height * 3);
  while (cinfo.output_scanline < cinfo.output_height) {
    JSAMPROW row = buffer.data() + static_cast<size_t>(cinfo.output_scanline) * width * 3;
    jpeg_read_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_decompress(&cinfo);
  jpeg_destroy_decompress(&cinfo);
  std::vector<Rgb8> pixels(static_cast<size_t>(width) * height);
  for (size_t i = 0; i < pixels.size(); ++i) {
    pixels[i] = {buffer[3 * i], buffer[3 * i + 1], buffer[3 * i + 2]};
  }
  return RgbImage(width, height, std::move(pixels));
}

bool IsPng(const std::string& bytes) {
  return bytes.size() >= 8 &&
         png_sig_cmp(reinterpret_cast<png_const_bytep>(bytes.data()), 0, 8) == 0;
}

bool IsJpeg(const std::string& bytes) {
  return bytes.size() >= 3 && static_cast<uint8_t>(bytes[0]) == 0xFF &&
         static_cast<uint8_t>(bytes[1]) == 0xD8 &&
         static_cast<uint8_t>(bytes[2]) == 0xFF;
}

}  // namespace

std::string ReadFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void WriteFileAtomic(const std::string& path, const std::string& bytes) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write '" + tmp.string() + "'");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw DataError("short write to '" + tmp.string() + "'");
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw DataError("cannot rename into '" + path + "'");
  }
}

RgbImage ReadImage(const std::string& path) {
  const std::string bytes = ReadFile(path);
  if (IsJpeg(bytes)) return DecodeJpeg(bytes, path);
  if (!IsPng(bytes)) throw DataError(path + ": not a PNG or JPEG file");
  PngPixels png = DecodePng(bytes, path, /*keep_native=*/false);
  if (png.channels != 3 || png.bit_depth != 8) {
    throw DataError(path + ": unsupported PNG layout");
  }
  std::vector<Rgb8> pixels(static_cast<size_t>(png.width) * png.height);
  for (size_t i = 0; i < pixels.size(); ++i) {
    pixels[i] = {png.data[3 * i], png.data[3 * i + 1], png.data[3 * i + 2]};
  }
  return RgbImage(png.width, png.height, std::move(pixels));
}

void WritePng(const std::string& path, const RgbImage& image) {
  std::vector<uint8_t> data(image.size() * 3);
  for (size_t i = 0; i < image.size(); ++i) {
    const Rgb8& p = image.pixels()[i];
    data[3 * i] = p.r;
    data[3 * i + 1] = p.g;
    data[3 * i + 2] = p.b;
  }
  WriteFileAtomic(path, EncodePng({image.width(), image.height(), 8,
                                   PNG_COLOR_TYPE_RGB, {}},
                                  data));
}

void WritePartitionPng(const std::string& path, const SuperpixelPartition& part) {
  if (part.count > 65535) {
    throw InvalidArgument("partition has " + std::to_string(part.count) +
                          " superpixels; the 16-bit format holds at most 65535");
  }
  std::vector<uint8_t> data(part.labels.size() * 2);
  for (size_t i = 0; i < part.labels.size(); ++i) {
    const auto v = static_cast<uint16_t>(part.labels[i]);
    data[2 * i] = static_cast<uint8_t>(v >> 8);
    data[2 * i + 1] = static_cast<uint8_t>(v & 0xFF);
  }
  WriteFileAtomic(path, EncodePng({part.width, part.height, 16,
                                   PNG_COLOR_TYPE_GRAY, {}},
                                  data));
}

LabelMap ReadPartitionPng(const std::string& path) {
  const std::string bytes = ReadFile(path);
  if (!IsPng(bytes)) throw DataError(path + ": not a PNG file");
  PngPixels png = DecodePng(bytes, path, /*keep_native=*/true);
  if (png.color_type != PNG_COLOR_TYPE_GRAY || png.bit_depth != 16) {
    throw DataError(path + ": partition maps must be 16-bit grayscale PNG");
  }
  LabelMap map;
  map.width = png.width;
  map.height = png.height;
  map.labels.resize(static_cast<size_t>(png.width) * png.height);
  for (size_t i = 0; i < map.labels.size(); ++i) {
    map.labels[i] = (png.data[2 * i] << 8) | png.data[2 * i + 1];
  }
  return map;
}

void WriteMaskPng(const std::string& path, const ClassMap& mask) {
  std::vector<uint8_t> data(mask.classes.size());
  for (size_t i = 0; i < data.size(); ++i) {
    data[i] = static_cast<uint8_t>(ClassCode(mask.classes[i]));
  }
  std::vector<png_color> palette;
  for (const Rgb8& c : kMaskPalette) palette.push_back({c.r, c.g, c.b});
  WriteFileAtomic(path, EncodePng({mask.width, mask.height, 8,
                                   PNG_COLOR_TYPE_PALETTE, palette},
                                  data));
}

ClassMap ReadMaskPng(const std::string& path) {
  const std::string bytes = ReadFile(path);
  if (!IsPng(bytes)) throw DataError(path + ": not a PNG file");
  PngPixels png = DecodePng(bytes, path, /*keep_native=*/true);
  ClassMap mask;
  mask.width = png.width;
  mask.height = png.height;
  const size_t n = static_cast<size_t>(png.width) * png.height;
  mask.classes.resize(n);
  auto from_color = [&](uint8_t r, uint8_t g, uint8_t b) {
    for (int c = 0; c < kNumTissueClasses; ++c) {
      if (kMaskPalette[c] == Rgb8{r, g, b}) return static_cast<TissueClass>(c);
    }
    throw DataError(path + ": pixel color outside the mask palette");
  };
  if (png.color_type == PNG_COLOR_TYPE_PALETTE && png.bit_depth == 8) {
    for (size_t i = 0; i < n; ++i) {
      const uint8_t index = png.data[i];
      if (index >= png.palette.size()) throw DataError(path + ": bad palette index");
      const png_color& c = png.palette[index];
      mask.classes[i] = from_color(c.red, c.green, c.blue);
    }
    return mask;
  }
  PngPixels rgb = DecodePng(bytes, path, /*keep_native=*/false);
  if (rgb.channels != 3 || rgb.bit_depth != 8) {
    throw DataError(path + ": unsupported mask PNG layout");
  }
  for (size_t i = 0; i < n; ++i) {
    mask.classes[i] =
        from_color(rgb.data[3 * i], rgb.data[3 * i + 1], rgb.data[3 * i + 2]);
  }
  return mask;
}

}  // namespace ulcerseg
