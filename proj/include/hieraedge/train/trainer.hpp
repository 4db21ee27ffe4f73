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
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "hieraedge/config.hpp"
#include "hieraedge/data/augment.hpp"
#include "hieraedge/data/dataset.hpp"
#include "hieraedge/detect/head.hpp"
#include "hieraedge/train/optimizer.hpp"
#include "json.hpp"

namespace hieraedge {

struct TrainConfig {
  ModelConfig model;
  int epochs = 30;
  int64_t max_iterations = 0;  // when > 0, overrides epochs
  int batch_size = 8;
  double lr = 0.01;
  double final_lr_ratio = 0.05;
  int64_t warmup_iterations = 0;
  SgdOptions sgd;
  AugmentPolicy augment;
  uint64_t seed = 0;
  int eval_every = 1;  // epochs between evaluations; 0 evaluates only at the end
  bool eval_on_train = false;
  int checkpoint_every = 1;
  std::string out_dir;
  std::string resume;  // checkpoint to continue from
};

nlohmann::json to_json(const TrainConfig& c);
// Missing keys keep their defaults; the model section accepts preset names.
TrainConfig train_config_from_json(const nlohmann::json& j);

struct IterationLog {
  int64_t iteration = 0;
  int epoch = 0;
  double lr = 0;
  double total = 0, cls = 0, iou = 0, dfl = 0;
  int num_pos = 0;
  double grad_norm = 0;
};

struct EpochLog {
  int epoch = 0;
  double lr = 0;
  double total = 0, cls = 0, iou = 0, dfl = 0;  // means over the epoch
  std::optional<double> map50;
};

struct TrainResult {
  std::vector<IterationLog> iterations;
  std::vector<EpochLog> epochs;
  double best_map50 = -1;
  std::filesystem::path best_checkpoint, last_checkpoint;
  std::shared_ptr<nn::Detector> model;  // final weights
};

struct TrainHooks {
  std::function<void(const IterationLog&)> on_iteration;
  std::function<void(const EpochLog&)> on_epoch;
};

// Deterministic in (config, data, split): the model seed, every epoch's
// shuffle and every sample's augmentation derive from config.seed. Writes
// config.json, train_log.csv (per epoch), iterations.csv, last.ckpt and
// best.ckpt into out_dir when it is set. A non-finite loss writes
// nan_dump.json and throws TrainingError.
TrainResult train(const TrainConfig& config, const Dataset& data, const DatasetSplit& split,
                  const TrainHooks& hooks = {});

}  // namespace hieraedge
