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

#include <vector>

#include "hieraedge/data/dataset.hpp"
#include "hieraedge/detect/decode.hpp"
#include "hieraedge/eval/metrics.hpp"

namespace hieraedge {

// Eval-mode forward without graph recording, decode and NMS, batched.
// The model's training flag is restored afterwards.
std::vector<std::vector<Detection>> predict(nn::Detector& model,
                                            const std::vector<const Image*>& images,
                                            const DecodeOptions& opts, int batch_size = 8);

DecodeOptions decode_options_for(const ModelConfig& config, double score_threshold,
                                 double iou_threshold = 0.7);

// Detections for the listed samples at the given confidence, then evaluate.
EvalReport evaluate_model(nn::Detector& model, const Dataset& data,
                          const std::vector<std::string>& ids, double score_threshold = 0.001,
                          double iou_threshold = 0.7,
                          std::vector<std::vector<Detection>>* detections = nullptr);

}  // namespace hieraedge
