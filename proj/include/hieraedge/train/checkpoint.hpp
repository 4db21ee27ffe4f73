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
#include <map>
#include <string>

#include "hieraedge/config.hpp"
#include "hieraedge/nn/module.hpp"
#include "json.hpp"

namespace hieraedge {

// Binary checkpoint; the byte layout is documented in docs/checkpoint.md.
struct Checkpoint {
  ModelConfig config;
  nlohmann::json header;  // full header, including "model" and "meta"
  std::map<std::string, Tensor> entries;

  int epoch() const { return header.at("meta").value("epoch", 0); }
};

inline constexpr char kCheckpointMagic[8] = {'H', 'E', 'N', 'C', 'K', 'P', 'T', '1'};
inline constexpr uint32_t kCheckpointVersion = 1;

// Entries: parameters and buffers under their module names, plus extras
// (optimizer state) under their own names.
void save_checkpoint(const std::filesystem::path& path, const nn::Module& model,
                     const ModelConfig& config, const nlohmann::json& meta,
                     const nn::NamedTensors& extras = {});

// Throws ConfigError on a malformed or truncated file.
Checkpoint load_checkpoint(const std::filesystem::path& path);

// Copies every parameter and buffer of model from the checkpoint. Missing
// entries or shape mismatches throw ConfigError naming the entry.
void restore_module(nn::Module& model, const Checkpoint& ckpt);

}  // namespace hieraedge
