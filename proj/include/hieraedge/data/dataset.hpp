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

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "hieraedge/data/image.hpp"
#include "hieraedge/data/synth.hpp"
#include "hieraedge/detect/box.hpp"
#include "json.hpp"

namespace hieraedge {

struct Sample {
  std::string id;
  Image image;
  std::vector<GroundTruth> gts;
};

struct Dataset {
  std::vector<std::string> class_names;
  std::vector<Sample> samples;

  int num_classes() const { return static_cast<int>(class_names.size()); }
  const Sample& find(const std::string& id) const;
  // Instances per class over all samples.
  std::vector<int> class_counts() const;
};

struct DatasetSplit {
  std::vector<std::string> train, val;
  std::vector<int> train_counts, val_counts;  // instances per class
  std::vector<std::string> warnings;
};

struct LoadReport {
  int rejected_lines = 0;
  int missing_labels = 0;
  std::vector<std::string> warnings;
};

// Label line "class cx cy w h", centre and size normalised by the image
// size. Returns nullopt (reason in *why) for malformed or out-of-range
// lines; the box is clipped to the image and must keep a positive area.
std::optional<GroundTruth> parse_label_line(const std::string& line, int64_t width, int64_t height,
                                            int num_classes, std::string* why = nullptr);
std::string format_label_line(const GroundTruth& gt, int64_t width, int64_t height);

// Reads images/*.png (sorted by name), labels/<stem>.txt and classes.txt.
Dataset load_annotations(const std::filesystem::path& dir, LoadReport* report = nullptr);

// Writes images/, labels/, classes.txt and, when given, split.json.
void write_dataset(const std::filesystem::path& dir, const Dataset& data,
                   const DatasetSplit* split = nullptr);

nlohmann::json to_json(const DatasetSplit& split);
DatasetSplit split_from_json(const nlohmann::json& j);
DatasetSplit read_split(const std::filesystem::path& dir);

struct SynthOptions {
  int scenes = 64;
  int num_classes = 3;
  int64_t image_size = 128;
  uint64_t seed = 0;
  double class_exponent = 1.0;
  int min_grains = 1;
  int max_grains = 4;
  double min_axis = 9.0;
  double max_axis = 18.0;
};

// Scene i is rendered from derive_seed(seed, i) and stored quantised to
// 8 bits, exactly as it reads back from disk.
Dataset synth_dataset(const SynthOptions& opts, int* dropped_grains = nullptr);

// Greedy per-image assignment: images holding rarer classes first; an image
// joins val when that lowers sum_c (val_c - target_c)^2 with
// target_c = max(1, val_fraction * n_c) for classes with n_c >= 2, and never
// strips a class from train. Classes with a single instance stay in train.
// Images without objects fill val to val_fraction of the image count.
// The seed only orders images of equal rarity.
DatasetSplit stratified_split(const Dataset& data, double val_fraction = 0.2, uint64_t seed = 0);

}  // namespace hieraedge
