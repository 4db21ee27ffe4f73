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

#include "hieraedge/train/trainer.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>

#include "hieraedge/detect/loss.hpp"
#include "hieraedge/errors.hpp"
#include "hieraedge/train/checkpoint.hpp"
#include "hieraedge/train/inference.hpp"

namespace hieraedge {

namespace fs = std::filesystem;

nlohmann::json to_json(const TrainConfig& c) {
  return {{"model", to_json(c.model)},
          {"epochs", c.epochs},
          {"max_iterations", c.max_iterations},
          {"batch_size", c.batch_size},
          {"lr", c.lr},
          {"final_lr_ratio", c.final_lr_ratio},
          {"warmup_iterations", c.warmup_iterations},
          {"momentum", c.sgd.momentum},
          {"weight_decay", c.sgd.weight_decay},
          {"max_grad_norm", c.sgd.max_grad_norm},
          {"augment",
           {{"mosaic_prob", c.augment.mosaic_prob},
            {"flip_prob", c.augment.flip_prob},
            {"blur_prob", c.augment.blur_prob},
            {"max_blur_sigma", c.augment.max_blur_sigma},
            {"color_prob", c.augment.color_prob},
            {"max_gain_shift", c.augment.max_gain_shift},
            {"max_bias_shift", c.augment.max_bias_shift}}},
          {"seed", c.seed},
          {"eval_every", c.eval_every},
          {"eval_on_train", c.eval_on_train},
          {"checkpoint_every", c.checkpoint_every}};
}

TrainConfig train_config_from_json(const nlohmann::json& j) {
  TrainConfig c;
  try {
    if (j.contains("model")) {
      const auto& m = j.at("model");
      c.model = m.is_string() ? load_model_config(m.get<std::string>()) : model_config_from_json(m);
    }
    c.epochs = j.value("epochs", c.epochs);
    c.max_iterations = j.value("max_iterations", c.max_iterations);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.lr = j.value("lr", c.lr);
    c.final_lr_ratio = j.value("final_lr_ratio", c.final_lr_ratio);
    c.warmup_iterations = j.value("warmup_iterations", c.warmup_iterations);
    c.sgd.momentum = j.value("momentum", c.sgd.momentum);
    c.sgd.weight_decay = j.value("weight_decay", c.sgd.weight_decay);
    c.sgd.max_grad_norm = j.value("max_grad_norm", c.sgd.max_grad_norm);
    if (j.contains("augment")) {
      const auto& a = j.at("augment");
      c.augment.mosaic_prob = a.value("mosaic_prob", c.augment.mosaic_prob);
      c.augment.flip_prob = a.value("flip_prob", c.augment.flip_prob);
      c.augment.blur_prob = a.value("blur_prob", c.augment.blur_prob);
      c.augment.max_blur_sigma = a.value("max_blur_sigma", c.augment.max_blur_sigma);
      c.augment.color_prob = a.value("color_prob", c.augment.color_prob);
      c.augment.max_gain_shift = a.value("max_gain_shift", c.augment.max_gain_shift);
      c.augment.max_bias_shift = a.value("max_bias_shift", c.augment.max_bias_shift);
    }
    c.seed = j.value("seed", c.seed);
    c.eval_every = j.value("eval_every", c.eval_every);
    c.eval_on_train = j.value("eval_on_train", c.eval_on_train);
    c.checkpoint_every = j.value("checkpoint_every", c.checkpoint_every);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("train config: ") + e.what());
  }
  if (c.batch_size < 1) throw ConfigError("train config: batch_size must be >= 1");
  if (c.lr < 0) throw ConfigError("train config: lr must be >= 0");
  if (c.epochs < 1 && c.max_iterations < 1) throw ConfigError("train config: nothing to train");
  return c;
}

namespace {

double tensor_stat(const Tensor& t, int which) {
  const auto v = t.data();
  if (which == 0) return *std::min_element(v.begin(), v.end());
  if (which == 1) return *std::max_element(v.begin(), v.end());
  return static_cast<double>(std::count_if(v.begin(), v.end(), [](double x) { return !std::isfinite(x); }));
}

[[noreturn]] void abort_non_finite(const TrainConfig& cfg, const IterationLog& it,
                                   const std::vector<Sample>& batch, const HeadOutput& head) {
  nlohmann::json dump = {{"iteration", it.iteration}, {"epoch", it.epoch}, {"lr", it.lr},
                         {"total", it.total},         {"cls", it.cls},     {"iou", it.iou},
                         {"dfl", it.dfl},             {"num_pos", it.num_pos}};
  for (const Sample& s : batch) {
    nlohmann::json gts = nlohmann::json::array();
    for (const GroundTruth& g : s.gts) {
      gts.push_back({{"class_id", g.class_id}, {"bbox", {g.bbox.x1, g.bbox.y1, g.bbox.x2, g.bbox.y2}}});
    }
    dump["batch"].push_back({{"id", s.id}, {"gts", gts}});
  }
  const std::vector<Tensor> outs = head.tensors();
  for (size_t i = 0; i < outs.size(); ++i) {
    dump["head"].push_back({{"tensor", (i % 2 ? "cls" : "reg") + std::to_string(i / 2)},
                            {"min", tensor_stat(outs[i], 0)},
                            {"max", tensor_stat(outs[i], 1)},
                            {"non_finite", tensor_stat(outs[i], 2)}});
  }
  std::string where = "";
  if (!cfg.out_dir.empty()) {
    const fs::path p = fs::path(cfg.out_dir) / "nan_dump.json";
    std::ofstream(p) << dump.dump(2) << '\n';
    where = "; diagnostics in " + p.string();
  }
  throw TrainingError("non-finite loss at iteration " + std::to_string(it.iteration) + where);
}

}  // namespace

TrainResult train(const TrainConfig& cfg, const Dataset& data, const DatasetSplit& split,
                  const TrainHooks& hooks) {
  cfg.model.validate();
  if (data.num_classes() != cfg.model.num_classes) {
    throw ConfigError("train: dataset has " + std::to_string(data.num_classes()) +
                      " classes, model expects " + std::to_string(cfg.model.num_classes));
  }
  std::vector<const Sample*> pool;
  for (const std::string& id : split.train) pool.push_back(&data.find(id));
  if (pool.empty()) throw ConfigError("train: empty train split");
  for (const Sample* s : pool) {
    if (s->image.width != cfg.model.input_w || s->image.height != cfg.model.input_h) {
      throw ConfigError("train: sample " + s->id + " is " + std::to_string(s->image.width) + "x" +
                        std::to_string(s->image.height) + ", model input is " +
                        std::to_string(cfg.model.input_w) + "x" + std::to_string(cfg.model.input_h));
    }
  }
  std::vector<Sample> pool_copy;
  if (cfg.augment.mosaic_prob > 0) {
    for (const Sample* s : pool) pool_copy.push_back(*s);
  }

  TrainResult result;
  result.model = std::make_shared<nn::Detector>(cfg.model, derive_seed(cfg.seed, 0));
  nn::Detector& model = *result.model;
  Sgd sgd(model.named_parameters(), cfg.sgd);

  const int64_t per_epoch = (static_cast<int64_t>(pool.size()) + cfg.batch_size - 1) / cfg.batch_size;
  const int64_t total = cfg.max_iterations > 0 ? cfg.max_iterations : per_epoch * cfg.epochs;
  const int epochs = static_cast<int>((total + per_epoch - 1) / per_epoch);

  int start_epoch = 0;
  int64_t iteration = 0;
  if (!cfg.resume.empty()) {
    const Checkpoint ck = load_checkpoint(cfg.resume);
    restore_module(model, ck);
    sgd.load_state(ck.entries);
    const auto& meta = ck.header.at("meta");
    start_epoch = meta.value("epoch", -1) + 1;
    iteration = meta.value("iteration", int64_t{0});
    result.best_map50 = meta.value("best_map50", -1.0);
  }

  const fs::path out = cfg.out_dir;
  std::ofstream epoch_csv, iter_csv;
  if (!out.empty()) {
    std::error_code ec;
    fs::create_directories(out, ec);
    if (!fs::is_directory(out)) throw std::runtime_error("cannot create output dir '" + out.string() + "'");
    std::ofstream(out / "config.json") << to_json(cfg).dump(2) << '\n';
    // A resumed run appends; a fresh log file still gets its header.
    const auto open_log = [&](std::ofstream& csv, const fs::path& path, const char* header) {
      const bool append = !cfg.resume.empty() && fs::exists(path) && fs::file_size(path) > 0;
      csv.open(path, append ? std::ios::app : std::ios::trunc);
      if (!append) csv << header << '\n';
    };
    open_log(epoch_csv, out / "train_log.csv", "epoch,lr,total,cls,iou,dfl,map50");
    open_log(iter_csv, out / "iterations.csv", "iteration,epoch,lr,total,cls,iou,dfl,num_pos,grad_norm");
    epoch_csv.precision(10);
    iter_csv.precision(10);
  }

  auto save = [&](const fs::path& path, int epoch) {
    nlohmann::json meta = {{"epoch", epoch},
                           {"iteration", iteration},
                           {"best_map50", result.best_map50},
                           {"train", to_json(cfg)}};
    save_checkpoint(path, model, cfg.model, meta, sgd.state());
  };

  for (int epoch = start_epoch; epoch < epochs && iteration < total; ++epoch) {
    std::vector<size_t> order(pool.size());
    std::iota(order.begin(), order.end(), size_t{0});
    Rng shuffle(derive_seed(cfg.seed, 0x10000 + static_cast<uint64_t>(epoch)));
    for (size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[shuffle.uniform_int(static_cast<int64_t>(i))]);
    }
    const uint64_t epoch_seed = derive_seed(cfg.seed, 0x20000 + static_cast<uint64_t>(epoch));

    EpochLog elog;
    elog.epoch = epoch;
    int steps = 0;
    for (size_t start = 0; start < order.size() && iteration < total; start += cfg.batch_size) {
      std::vector<Sample> batch;
      for (size_t k = start; k < std::min(order.size(), start + cfg.batch_size); ++k) {
        Rng rng(derive_seed(epoch_seed, k));
        batch.push_back(augment(*pool[order[k]], cfg.augment, rng, pool_copy));
      }
      std::vector<const Image*> images;
      std::vector<std::vector<GroundTruth>> gts;
      for (const Sample& s : batch) {
        images.push_back(&s.image);
        gts.push_back(s.gts);
      }

      model.set_training(true);
      const HeadOutput head = model.forward(images_to_tensor(images));
      const LossBreakdown loss = total_loss(head, gts, cfg.model.loss);
      IterationLog it;
      it.iteration = iteration;
      it.epoch = epoch;
      it.lr = cosine_lr(iteration, total, cfg.lr, cfg.warmup_iterations, cfg.final_lr_ratio);
      it.total = loss.total;
      it.cls = loss.cls;
      it.iou = loss.iou;
      it.dfl = loss.dfl;
      it.num_pos = loss.num_pos;
      if (!std::isfinite(loss.total)) abort_non_finite(cfg, it, batch, head);

      sgd.zero_grad();
      loss.total_tensor.backward();
      it.grad_norm = sgd.step(it.lr);
      if (!std::isfinite(it.grad_norm)) abort_non_finite(cfg, it, batch, head);
      ++iteration;

      result.iterations.push_back(it);
      if (iter_csv.is_open()) {
        iter_csv << it.iteration << ',' << it.epoch << ',' << it.lr << ',' << it.total << ','
                 << it.cls << ',' << it.iou << ',' << it.dfl << ',' << it.num_pos << ','
                 << it.grad_norm << '\n';
      }
      if (hooks.on_iteration) hooks.on_iteration(it);
      elog.lr = it.lr;
      elog.total += it.total;
      elog.cls += it.cls;
      elog.iou += it.iou;
      elog.dfl += it.dfl;
      ++steps;
    }
    if (steps > 0) {
      elog.total /= steps;
      elog.cls /= steps;
      elog.iou /= steps;
      elog.dfl /= steps;
    }

    const bool last_epoch = epoch + 1 >= epochs || iteration >= total;
    const bool do_eval = (cfg.eval_every > 0 && (epoch + 1) % cfg.eval_every == 0) || last_epoch;
    if (do_eval) {
      const bool use_train = cfg.eval_on_train || split.val.empty();
      const EvalReport rep = evaluate_model(model, data, use_train ? split.train : split.val);
      elog.map50 = rep.map50;
      if (rep.map50 > result.best_map50) {
        result.best_map50 = rep.map50;
        if (!out.empty()) {
          result.best_checkpoint = out / "best.ckpt";
          save(result.best_checkpoint, epoch);
        }
      }
    }
    if (!out.empty() && (last_epoch || (cfg.checkpoint_every > 0 && (epoch + 1) % cfg.checkpoint_every == 0))) {
      result.last_checkpoint = out / "last.ckpt";
      save(result.last_checkpoint, epoch);
    }
    result.epochs.push_back(elog);
    if (epoch_csv.is_open()) {
      epoch_csv << elog.epoch << ',' << elog.lr << ',' << elog.total << ',' << elog.cls << ','
                << elog.iou << ',' << elog.dfl << ',';
      if (elog.map50) epoch_csv << *elog.map50;
      epoch_csv << '\n' << std::flush;
    }
    if (hooks.on_epoch) hooks.on_epoch(elog);
  }
  return result;
}

}  // namespace hieraedge
