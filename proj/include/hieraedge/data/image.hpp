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

#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "hieraedge/tensor.hpp"

namespace hieraedge {

// Planar RGB image with values in [0, 1]; pixel (c, y, x) at (c * height + y) * width + x.
struct Image {
  int64_t width = 0;
  int64_t height = 0;
  std::vector<double> pixels;

  Image() = default;
  Image(int64_t w, int64_t h, double fill = 0.0) : width(w), height(h), pixels(3 * w * h, fill) {}

  double& at(int c, int64_t y, int64_t x) { return pixels[(c * height + y) * width + x]; }
  double at(int c, int64_t y, int64_t x) const { return pixels[(c * height + y) * width + x]; }
  bool operator==(const Image&) const = default;
};

// 8-bit quantisation, round half up, clamped to [0, 255].
uint8_t to_byte(double v);

// 8-bit RGB PNG. Throws std::runtime_error on I/O or decode failure.
void write_png(const std::filesystem::path& path, const Image& image);
Image read_png(const std::filesystem::path& path);

// Interleaved 8-bit RGB rows, for plots and overlays.
void write_png_rgb8(const std::filesystem::path& path, int64_t width, int64_t height,
                    const std::vector<uint8_t>& rgb);

// Re-quantise through 8 bits, as a save/load round trip would.
Image quantized(const Image& image);

// Stack images into (N, 3, H, W). All images must share a size.
Tensor images_to_tensor(const std::vector<const Image*>& images);

// Grayscale grid with one min-max normalised tile per channel of a
// (1, C, H, W) map, `columns` tiles per row.
void write_feature_grid(const std::filesystem::path& path, const Tensor& map, int64_t columns = 8);

// Perceptual colour map for a value in [0, 1].
std::array<uint8_t, 3> colormap(double v);

}  // namespace hieraedge
