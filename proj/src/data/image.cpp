// Copyright 2026 The HieraEdge Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "hieraedge/data/image.hpp"

#include <png.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <memory>
#include <stdexcept>

#include "hieraedge/errors.hpp"

namespace hieraedge {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const std::filesystem::path& path, const char* mode) {
  FilePtr f(std::fopen(path.c_str(), mode));
  if (!f) throw std::runtime_error("cannot open '" + path.string() + "'");
  return f;
}

[[noreturn]] void png_fail(png_structp png, png_const_charp msg) {
  (void)png;
  throw std::runtime_error(std::string("libpng: ") + msg);
}

void png_warn(png_structp, png_const_charp) {}

}  // namespace

uint8_t to_byte(double v) {
  return static_cast<uint8_t>(std::clamp(std::floor(v * 255.0 + 0.5), 0.0, 255.0));
}

void write_png_rgb8(const std::filesystem::path& path, int64_t width, int64_t height,
                    const std::vector<uint8_t>& rgb) {
  if (static_cast<int64_t>(rgb.size()) != 3 * width * height) {
    throw UsageError("write_png_rgb8: buffer size does not match " + std::to_string(width) + "x" +
                     std::to_string(height));
  }
  FilePtr file = open_file(path, "wb");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, png_fail, png_warn);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw std::runtime_error("libpng: out of memory");
  }
  try {
    png_init_io(png, file.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), 8,
                 PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (int64_t y = 0; y < height; ++y) {
      png_write_row(png, const_cast<png_bytep>(rgb.data() + 3 * width * y));
    }
    png_write_end(png, nullptr);
  } catch (...) {
    png_destroy_write_struct(&png, &info);
    throw;
  }
  png_destroy_write_struct(&png, &info);
}

void write_png(const std::filesystem::path& path, const Image& image) {
  std::vector<uint8_t> rgb(3 * image.width * image.height);
  for (int64_t y = 0; y < image.height; ++y) {
    for (int64_t x = 0; x < image.width; ++x) {
      for (int c = 0; c < 3; ++c) rgb[(y * image.width + x) * 3 + c] = to_byte(image.at(c, y, x));
    }
  }
  write_png_rgb8(path, image.width, image.height, rgb);
}

Image read_png(const std::filesystem::path& path) {
  FilePtr file = open_file(path, "rb");
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, png_fail, png_warn);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw std::runtime_error("libpng: out of memory");
  }
  Image image;
  try {
    png_init_io(png, file.get());
    png_read_info(png, info);
    const png_byte color = png_get_color_type(png, info);
    const png_byte depth = png_get_bit_depth(png, info);
    if (depth == 16) png_set_strip_16(png);
    if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA) {
      if (depth < 8) png_set_expand_gray_1_2_4_to_8(png);
      png_set_gray_to_rgb(png);
    }
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    if (color & PNG_COLOR_MASK_ALPHA || png_get_valid(png, info, PNG_INFO_tRNS)) {
      png_set_strip_alpha(png);
    }
    png_read_update_info(png, info);
    const int64_t w = png_get_image_width(png, info), h = png_get_image_height(png, info);
    if (png_get_rowbytes(png, info) != static_cast<size_t>(3 * w)) {
      throw std::runtime_error("unsupported PNG layout in '" + path.string() + "'");
    }
    std::vector<uint8_t> row(3 * w);
    image = Image(w, h);
    for (int64_t y = 0; y < h; ++y) {
      png_read_row(png, row.data(), nullptr);
      for (int64_t x = 0; x < w; ++x) {
        for (int c = 0; c < 3; ++c) image.at(c, y, x) = row[3 * x + c] / 255.0;
      }
    }
  } catch (...) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw;
  }
  png_destroy_read_struct(&png, &info, nullptr);
  return image;
}

Image quantized(const Image& image) {
  Image out = image;
  for (double& v : out.pixels) v = to_byte(v) / 255.0;
  return out;
}

Tensor images_to_tensor(const std::vector<const Image*>& images) {
  if (images.empty()) throw UsageError("images_to_tensor: empty batch");
  const int64_t w = images[0]->width, h = images[0]->height;
  std::vector<double> data;
  data.reserve(images.size() * 3 * w * h);
  for (const Image* im : images) {
    if (im->width != w || im->height != h) {
      throw DimensionError("images_to_tensor: mixed image sizes in one batch");
    }
    data.insert(data.end(), im->pixels.begin(), im->pixels.end());
  }
  return Tensor::from({static_cast<int64_t>(images.size()), 3, h, w}, std::move(data));
}

std::array<uint8_t, 3> colormap(double v) {
  // Piecewise-linear blue -> cyan -> yellow -> red ramp.
  static constexpr std::array<std::array<double, 3>, 5> stops = {
      {{0.05, 0.05, 0.35}, {0.0, 0.55, 0.85}, {0.2, 0.8, 0.4}, {0.98, 0.85, 0.1}, {0.85, 0.1, 0.05}}};
  v = std::clamp(v, 0.0, 1.0) * (stops.size() - 1);
  const size_t i = std::min(static_cast<size_t>(v), stops.size() - 2);
  const double t = v - static_cast<double>(i);
  std::array<uint8_t, 3> out{};
  for (int c = 0; c < 3; ++c) out[c] = to_byte(stops[i][c] * (1 - t) + stops[i + 1][c] * t);
  return out;
}

void write_feature_grid(const std::filesystem::path& path, const Tensor& map, int64_t columns) {
  if (map.rank() != 4) throw DimensionError("write_feature_grid: expected (1, C, H, W)");
  const int64_t c = map.dim(1), h = map.dim(2), w = map.dim(3);
  columns = std::max<int64_t>(1, std::min(columns, c));
  const int64_t rows = (c + columns - 1) / columns;
  const int64_t gw = columns * (w + 1), gh = rows * (h + 1);
  std::vector<uint8_t> rgb(3 * gw * gh, 0);
  for (int64_t ch = 0; ch < c; ++ch) {
    double lo = map.at(0, ch, 0, 0), hi = lo;
    for (int64_t y = 0; y < h; ++y) {
      for (int64_t x = 0; x < w; ++x) {
        lo = std::min(lo, map.at(0, ch, y, x));
        hi = std::max(hi, map.at(0, ch, y, x));
      }
    }
    const int64_t ox = (ch % columns) * (w + 1), oy = (ch / columns) * (h + 1);
    for (int64_t y = 0; y < h; ++y) {
      for (int64_t x = 0; x < w; ++x) {
        const double v = hi > lo ? (map.at(0, ch, y, x) - lo) / (hi - lo) : 0.0;
        const uint8_t b = to_byte(v);
        for (int k = 0; k < 3; ++k) rgb[((oy + y) * gw + ox + x) * 3 + k] = b;
      }
    }
  }
  write_png_rgb8(path, gw, gh, rgb);
}

}  // namespace hieraedge
