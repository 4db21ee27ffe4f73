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

#include "hieraedge/train/inference.hpp"

#include <algorithm>

namespace hieraedge {

namespace {

class EvalModeGuard {
 public:
  explicit EvalModeGuard(nn::Module& m) : module_(m), was_training_(m.training()) {
    module_.set_training(false);
  }
  ~EvalModeGuard() { module_.set_training(was_training_); }
  EvalModeGuard(const EvalModeGuard&) = delete;
  EvalModeGuard& operator=(const EvalModeGuard&) = delete;

 private:
  nn::Module& module_;
  bool was_training_;
};

}  // namespace

DecodeOptions decode_options_for(const ModelConfig& config, double score_threshold,
                                 double iou_threshold) {
  DecodeOptions o;
  o.score_threshold = score_threshold;
  o.iou_threshold = iou_threshold;
  o.image_w = static_cast<double>(config.input_w);
  o.image_h = static_cast<double>(config.input_h);
  return o;
}

std::vector<std::vector<Detection>> predict(nn::Detector& model,
                                            const std::vector<const Image*>& images,
                                            const DecodeOptions& opts, int batch_size) {
  EvalModeGuard mode(model);
  NoGradGuard no_grad;
  std::vector<std::vector<Detection>> out;
  const size_t step = static_cast<size_t>(std::max(1, batch_size));
  for (size_t start = 0; start < images.size(); start += step) {
    const std::vector<const Image*> batch(images.begin() + start,
                                          images.begin() + std::min(images.size(), start + step));
    auto dets = postprocess(model.forward(images_to_tensor(batch)), opts);
    for (auto& d : dets) out.push_back(std::move(d));
  }
  return out;
}

EvalReport evaluate_model(nn::Detector& model, const Dataset& data,
                          const std::vector<std::string>& ids, double score_threshold,
                          double iou_threshold, std::vector<std::vector<Detection>>* detections) {
  std::vector<const Image*> images;
  std::vector<std::vector<GroundTruth>> gts;
  for (const std::string& id : ids) {
    const Sample& s = data.find(id);
    images.push_back(&s.image);
    gts.push_back(s.gts);
  }
  auto dets = predict(model, images, decode_options_for(model.config(), score_threshold, iou_threshold));
  EvalOptions eo;
  eo.num_classes = data.num_classes();
  EvalReport report = evaluate(dets, gts, eo);
  if (detections) *detections = std::move(dets);
  return report;
}

}  // namespace hieraedge
