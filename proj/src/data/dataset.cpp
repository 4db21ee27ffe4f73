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

#include "hieraedge/data/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include "hieraedge/errors.hpp"
#include "hieraedge/rng.hpp"

namespace hieraedge {

namespace fs = std::filesystem;

const Sample& Dataset::find(const std::string& id) const {
  for (const Sample& s : samples) {
    if (s.id == id) return s;
  }
  throw UsageError("dataset: no sample with id '" + id + "'");
}

std::vector<int> Dataset::class_counts() const {
  std::vector<int> counts(num_classes(), 0);
  for (const Sample& s : samples) {
    for (const GroundTruth& g : s.gts) {
      if (g.class_id >= 0 && g.class_id < num_classes()) ++counts[g.class_id];
    }
  }
  return counts;
}

std::optional<GroundTruth> parse_label_line(const std::string& line, int64_t width, int64_t height,
                                            int num_classes, std::string* why) {
  auto reject = [&](const std::string& reason) -> std::optional<GroundTruth> {
    if (why) *why = reason;
    return std::nullopt;
  };
  std::istringstream in(line);
  long long cls = 0;
  double cx = 0, cy = 0, w = 0, h = 0;
  if (!(in >> cls >> cx >> cy >> w >> h)) return reject("expected 'class cx cy w h'");
  std::string extra;
  if (in >> extra) return reject("trailing fields");
  if (cls < 0 || cls >= num_classes) return reject("class " + std::to_string(cls) + " out of range");
  for (double v : {cx, cy, w, h}) {
    if (!std::isfinite(v)) return reject("non-finite coordinate");
  }
  if (w <= 0 || h <= 0) return reject("non-positive size");
  const double iw = static_cast<double>(width), ih = static_cast<double>(height);
  GroundTruth gt;
  gt.class_id = static_cast<int>(cls);
  gt.bbox = {std::clamp((cx - 0.5 * w) * iw, 0.0, iw), std::clamp((cy - 0.5 * h) * ih, 0.0, ih),
             std::clamp((cx + 0.5 * w) * iw, 0.0, iw), std::clamp((cy + 0.5 * h) * ih, 0.0, ih)};
  if (!(gt.bbox.area() > 0)) return reject("box outside the image");
  return gt;
}

std::string format_label_line(const GroundTruth& gt, int64_t width, int64_t height) {
  const double iw = static_cast<double>(width), ih = static_cast<double>(height);
  char buf[160];
  std::snprintf(buf, sizeof buf, "%d %.9f %.9f %.9f %.9f", gt.class_id, gt.bbox.cx() / iw,
                gt.bbox.cy() / ih, gt.bbox.width() / iw, gt.bbox.height() / ih);
  return buf;
}

Dataset load_annotations(const fs::path& dir, LoadReport* report) {
  LoadReport local;
  LoadReport& rep = report ? *report : local;
  Dataset data;
  std::ifstream names(dir / "classes.txt");
  if (!names) throw ConfigError("dataset: missing " + (dir / "classes.txt").string());
  for (std::string line; std::getline(names, line);) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) data.class_names.push_back(line);
  }
  if (data.class_names.empty()) throw ConfigError("dataset: classes.txt lists no classes");

  const fs::path image_dir = dir / "images";
  if (!fs::is_directory(image_dir)) throw ConfigError("dataset: missing " + image_dir.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(image_dir)) {
    if (entry.path().extension() == ".png") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  for (const fs::path& file : files) {
    Sample s;
    s.id = file.stem().string();
    s.image = read_png(file);
    std::ifstream labels(dir / "labels" / (s.id + ".txt"));
    if (!labels) {
      ++rep.missing_labels;
      rep.warnings.push_back(s.id + ": no label file, treated as background");
    }
    int line_no = 0;
    for (std::string line; std::getline(labels, line);) {
      ++line_no;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      std::string why;
      auto gt = parse_label_line(line, s.image.width, s.image.height, data.num_classes(), &why);
      if (gt) {
        s.gts.push_back(*gt);
      } else {
        ++rep.rejected_lines;
        rep.warnings.push_back(s.id + ".txt:" + std::to_string(line_no) + ": " + why);
      }
    }
    data.samples.push_back(std::move(s));
  }
  return data;
}

nlohmann::json to_json(const DatasetSplit& split) {
  return {{"train", split.train},
          {"val", split.val},
          {"train_counts", split.train_counts},
          {"val_counts", split.val_counts}};
}

DatasetSplit split_from_json(const nlohmann::json& j) {
  DatasetSplit s;
  try {
    s.train = j.at("train").get<std::vector<std::string>>();
    s.val = j.at("val").get<std::vector<std::string>>();
    s.train_counts = j.value("train_counts", std::vector<int>{});
    s.val_counts = j.value("val_counts", std::vector<int>{});
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("split.json: ") + e.what());
  }
  return s;
}

DatasetSplit read_split(const fs::path& dir) {
  std::ifstream in(dir / "split.json");
  if (!in) throw ConfigError("dataset: missing " + (dir / "split.json").string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("split.json: ") + e.what());
  }
  return split_from_json(j);
}

void write_dataset(const fs::path& dir, const Dataset& data, const DatasetSplit* split) {
  std::error_code ec;
  fs::create_directories(dir / "images", ec);
  fs::create_directories(dir / "labels", ec);
  if (ec || !fs::is_directory(dir / "labels")) {
    throw std::runtime_error("cannot create dataset directory '" + dir.string() + "'");
  }
  auto open = [](const fs::path& p) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + p.string() + "'");
    return out;
  };
  {
    auto out = open(dir / "classes.txt");
    for (const std::string& name : data.class_names) out << name << '\n';
  }
  for (const Sample& s : data.samples) {
    write_png(dir / "images" / (s.id + ".png"), s.image);
    auto out = open(dir / "labels" / (s.id + ".txt"));
    for (const GroundTruth& g : s.gts) {
      out << format_label_line(g, s.image.width, s.image.height) << '\n';
    }
  }
  if (split) open(dir / "split.json") << to_json(*split).dump(2) << '\n';
}

Dataset synth_dataset(const SynthOptions& opts, int* dropped_grains) {
  if (opts.num_classes < 1) throw ConfigError("synth: --classes must be >= 1");
  if (opts.scenes < 1) throw ConfigError("synth: --scenes must be >= 1");
  if (opts.image_size <= 0) throw ConfigError("synth: image size must be positive");
  Dataset data;
  for (int k = 0; k < opts.num_classes; ++k) data.class_names.push_back("class_" + std::to_string(k));
  data.samples.resize(opts.scenes);
  std::vector<int> dropped(opts.scenes, 0);
#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < opts.scenes; ++i) {
    SceneSpec spec;
    spec.width = spec.height = opts.image_size;
    spec.num_classes = opts.num_classes;
    spec.class_exponent = opts.class_exponent;
    spec.min_grains = opts.min_grains;
    spec.max_grains = opts.max_grains;
    spec.min_axis = opts.min_axis;
    spec.max_axis = opts.max_axis;
    spec.seed = derive_seed(opts.seed, static_cast<uint64_t>(i));
    Scene scene = synth_scene(spec);
    char id[32];
    std::snprintf(id, sizeof id, "scene_%05d", i);
    // Round boxes through the label text format so in-memory and on-disk data agree.
    std::vector<GroundTruth> gts;
    for (const GroundTruth& g : scene.gts) {
      auto parsed = parse_label_line(format_label_line(g, opts.image_size, opts.image_size),
                                     opts.image_size, opts.image_size, opts.num_classes);
      if (parsed) gts.push_back(*parsed);
    }
    data.samples[i] = {id, quantized(scene.image), std::move(gts)};
    dropped[i] = scene.dropped_grains;
  }
  if (dropped_grains) *dropped_grains = std::accumulate(dropped.begin(), dropped.end(), 0);
  return data;
}

DatasetSplit stratified_split(const Dataset& data, double val_fraction, uint64_t seed) {
  if (!(val_fraction > 0.0 && val_fraction < 1.0)) {
    throw ConfigError("split: val fraction must lie in (0, 1)");
  }
  const int nc = data.num_classes();
  const std::vector<int> totals = data.class_counts();
  std::vector<double> target(nc, 0.0);
  DatasetSplit split;
  for (int c = 0; c < nc; ++c) {
    if (totals[c] >= 2) target[c] = std::max(1.0, val_fraction * totals[c]);
    if (totals[c] == 1) {
      split.warnings.push_back("class " + data.class_names[c] + " has a single instance; kept in train");
    }
  }

  const size_t n = data.samples.size();
  std::vector<std::vector<int>> per_image(n, std::vector<int>(nc, 0));
  std::vector<int> rarity(n, std::numeric_limits<int>::max());
  for (size_t i = 0; i < n; ++i) {
    for (const GroundTruth& g : data.samples[i].gts) {
      if (g.class_id < 0 || g.class_id >= nc) continue;
      ++per_image[i][g.class_id];
      rarity[i] = std::min(rarity[i], totals[g.class_id]);
    }
  }
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), size_t{0});
  Rng rng(seed);
  for (size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.uniform_int(static_cast<int64_t>(i))]);
  std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) { return rarity[a] < rarity[b]; });

  std::vector<int> val(nc, 0), train(nc, 0);
  std::vector<bool> in_val(n, false);
  size_t seen_empty = 0, val_empty = 0;
  for (size_t i : order) {
    const auto& counts = per_image[i];
    bool to_val = false;
    if (rarity[i] == std::numeric_limits<int>::max()) {
      ++seen_empty;
      to_val = static_cast<double>(val_empty + 1) <= val_fraction * static_cast<double>(seen_empty) + 1e-9;
      if (to_val) ++val_empty;
    } else {
      double delta = 0.0;
      bool allowed = true;
      for (int c = 0; c < nc; ++c) {
        if (counts[c] == 0) continue;
        if (totals[c] < 2 || val[c] + counts[c] >= totals[c]) allowed = false;
        const double before = val[c] - target[c], after = val[c] + counts[c] - target[c];
        delta += after * after - before * before;
      }
      to_val = allowed && delta < 0.0;
    }
    in_val[i] = to_val;
    for (int c = 0; c < nc; ++c) (to_val ? val : train)[c] += counts[c];
  }

  for (size_t i = 0; i < n; ++i) (in_val[i] ? split.val : split.train).push_back(data.samples[i].id);
  split.train_counts = train;
  split.val_counts = val;
  return split;
}

}  // namespace hieraedge
