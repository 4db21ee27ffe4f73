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

#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>

#include "commands.hpp"
#include "hieraedge/data/dataset.hpp"
#include "hieraedge/errors.hpp"
#include "hieraedge/eval/metrics.hpp"
#include "hieraedge/train/checkpoint.hpp"
#include "hieraedge/train/gradcam.hpp"
#include "hieraedge/train/inference.hpp"
#include "hieraedge/train/trainer.hpp"

namespace hieraedge::cli {

namespace {

struct LoadedModel {
  std::shared_ptr<nn::Detector> model;
  ModelConfig config;
};

LoadedModel load_model(const std::string& checkpoint) {
  if (!std::filesystem::exists(checkpoint)) {
    throw UsageError("checkpoint '" + checkpoint + "' does not exist");
  }
  const Checkpoint ckpt = load_checkpoint(checkpoint);
  auto model = std::make_shared<nn::Detector>(ckpt.config, 0);
  restore_module(*model, ckpt);
  return {model, ckpt.config};
}

Dataset load_dataset(const std::string& dir) {
  if (!std::filesystem::is_directory(dir)) {
    throw UsageError("dataset directory '" + dir + "' does not exist");
  }
  LoadReport report;
  Dataset data = load_annotations(dir, &report);
  for (const std::string& w : report.warnings) std::cerr << "warning: " << w << "\n";
  if (data.samples.empty()) throw UsageError("dataset '" + dir + "' holds no images");
  return data;
}

void require_compatible(const ModelConfig& model, const Dataset& data) {
  if (model.num_classes != data.num_classes()) {
    throw ConfigError("class-count mismatch: model has " + std::to_string(model.num_classes) +
                      " classes, dataset has " + std::to_string(data.num_classes()));
  }
  for (const Sample& s : data.samples) {
    if (s.image.width != model.input_w || s.image.height != model.input_h) {
      throw ConfigError("image " + s.id + " is " + std::to_string(s.image.width) + "x" +
                        std::to_string(s.image.height) + ", model input is " +
                        std::to_string(model.input_w) + "x" + std::to_string(model.input_h));
    }
  }
}

void require_probability(double v, const char* flag) {
  if (!(v >= 0.0 && v <= 1.0)) {
    throw UsageError(std::string(flag) + " must lie in [0, 1], got " + std::to_string(v));
  }
}

std::vector<std::string> split_ids(const Dataset& data, const std::string& dir,
                                   const std::string& which) {
  std::vector<std::string> all;
  for (const Sample& s : data.samples) all.push_back(s.id);
  if (which == "all") return all;
  if (!std::filesystem::exists(std::filesystem::path(dir) / "split.json")) {
    throw UsageError("dataset has no split.json; use --split all");
  }
  const DatasetSplit split = read_split(dir);
  return which == "train" ? split.train : split.val;
}

// ---- train ----------------------------------------------------------------

struct TrainArgs {
  std::string data, out, config, model, resume;
  uint64_t seed = 0;
  int epochs = 0;
  int64_t iterations = 0;
  int batch = 0;
  double lr = 0;
  int64_t warmup = -1;
  bool no_augment = false;
  bool all_train = false;
};

int run_train(const TrainArgs& a, const CLI::App& cmd) {
  const Dataset data = load_dataset(a.data);
  TrainConfig cfg;
  bool model_given = false;
  if (!a.config.empty()) {
    const nlohmann::json j = read_json_file(a.config);
    cfg = train_config_from_json(j);
    model_given = j.contains("model");
  }
  if (!a.model.empty()) {
    cfg.model = load_model_config(a.model);
    model_given = true;
  }
  if (!model_given) {
    cfg.model.num_classes = data.num_classes();
    if (!data.samples.empty()) {
      cfg.model.input_w = data.samples.front().image.width;
      cfg.model.input_h = data.samples.front().image.height;
    }
  }
  if (cmd.get_option("--seed")->count()) cfg.seed = a.seed;
  if (cmd.get_option("--epochs")->count()) cfg.epochs = a.epochs;
  if (cmd.get_option("--iterations")->count()) cfg.max_iterations = a.iterations;
  if (cmd.get_option("--batch")->count()) cfg.batch_size = a.batch;
  if (cmd.get_option("--lr")->count()) cfg.lr = a.lr;
  if (cmd.get_option("--warmup")->count()) cfg.warmup_iterations = a.warmup;
  if (a.no_augment) cfg.augment = AugmentPolicy::none();
  if (!a.resume.empty()) cfg.resume = a.resume;
  cfg.model.validate();
  require_compatible(cfg.model, data);
  if (cfg.batch_size < 1) throw UsageError("--batch must be >= 1");
  if (!(cfg.lr >= 0)) throw UsageError("--lr must be >= 0");
  if (cfg.epochs < 1 && cfg.max_iterations < 1) throw UsageError("nothing to train: no epochs");

  DatasetSplit split;
  if (a.all_train) {
    for (const Sample& s : data.samples) split.train.push_back(s.id);
  } else if (std::filesystem::exists(std::filesystem::path(a.data) / "split.json")) {
    split = read_split(a.data);
  } else {
    split = stratified_split(data, 0.2, cfg.seed);
  }
  if (split.train.empty()) throw UsageError("train split is empty");

  ensure_writable_dir(a.out);
  cfg.out_dir = a.out;
  write_run_record(a.out, "train",
                   {{"data", a.data}, {"all_train", a.all_train}, {"config", to_json(cfg)}});

  TrainHooks hooks;
  hooks.on_epoch = [](const EpochLog& e) {
    std::cout << "epoch " << std::setw(3) << e.epoch << "  lr " << std::scientific
              << std::setprecision(3) << e.lr << std::fixed << std::setprecision(4) << "  loss "
              << e.total << " (cls " << e.cls << ", iou " << e.iou << ", dfl " << e.dfl << ")";
    if (e.map50) std::cout << "  map50 " << *e.map50;
    std::cout << std::endl;
  };
  const TrainResult r = train(cfg, data, split, hooks);
  std::cout << "trained " << r.iterations.size() << " iterations; best map50 "
            << std::setprecision(4) << r.best_map50 << "; checkpoints in " << a.out << "\n";
  return kExitOk;
}

// ---- eval -----------------------------------------------------------------

struct EvalArgs {
  std::string checkpoint, data, out, split = "val";
  double conf = 0.001, iou = 0.7;
  double min_map50 = -1;
};

int run_eval(const EvalArgs& a) {
  require_probability(a.conf, "--conf");
  require_probability(a.iou, "--iou");
  LoadedModel m = load_model(a.checkpoint);
  const Dataset data = load_dataset(a.data);
  require_compatible(m.config, data);
  std::vector<std::string> ids = split_ids(data, a.data, a.split);
  if (ids.empty()) throw UsageError("split '" + a.split + "' is empty");

  std::vector<std::vector<Detection>> dets;
  const EvalReport report = evaluate_model(*m.model, data, ids, a.conf, a.iou, &dets);
  if (!a.out.empty()) {
    ensure_writable_dir(a.out);
    std::ofstream(std::filesystem::path(a.out) / "eval.json") << to_json(report).dump(2) << "\n";
    std::ofstream jsonl(std::filesystem::path(a.out) / "detections.jsonl");
    for (size_t i = 0; i < ids.size(); ++i) jsonl << detections_to_jsonl(ids[i], dets[i]);
    write_eval_plots(a.out, report);
    write_run_record(a.out, "eval",
                     {{"checkpoint", a.checkpoint}, {"data", a.data}, {"split", a.split},
                      {"conf", a.conf}, {"iou", a.iou}});
  }

  std::cout << std::fixed << std::setprecision(4);
  std::cout << a.split << " split, " << ids.size() << " images\n";
  std::cout << std::left << std::setw(12) << "class" << std::right << std::setw(6) << "gts"
            << std::setw(9) << "AP50" << std::setw(9) << "AP50-95" << "\n";
  for (int c = 0; c < report.num_classes; ++c) {
    std::cout << std::left << std::setw(12) << data.class_names[c] << std::right << std::setw(6)
              << report.gt_counts[c];
    const auto& ap = report.ap[c];
    if (ap[0]) {
      double sum = 0;
      for (const auto& v : ap) sum += v.value_or(0.0);
      std::cout << std::setw(9) << *ap[0] << std::setw(9) << sum / kNumIouThresholds << "\n";
    } else {
      std::cout << std::setw(9) << "-" << std::setw(9) << "-" << "\n";
    }
  }
  std::cout << "mAP50 " << report.map50 << "  mAP75 " << report.map75 << "  mAP50-95 "
            << report.map5095 << "  best F1 " << report.best_f1 << " at conf "
            << report.best_f1_confidence << "\n";
  if (a.min_map50 >= 0 && report.map50 < a.min_map50) {
    std::cout << "mAP50 below required " << a.min_map50 << "\n";
    return kExitFailure;
  }
  return kExitOk;
}

// ---- infer ----------------------------------------------------------------

struct InferArgs {
  std::string checkpoint, data, out;
  std::vector<std::string> images;
  double conf = 0.25, iou = 0.7;
  bool dump_edges = false;
};

int run_infer(const InferArgs& a) {
  require_probability(a.conf, "--conf");
  require_probability(a.iou, "--iou");
  if (a.images.empty() == a.data.empty()) throw UsageError("give either --image or --data");
  LoadedModel m = load_model(a.checkpoint);

  std::vector<std::pair<std::string, Image>> inputs;
  if (!a.data.empty()) {
    Dataset data = load_dataset(a.data);
    for (Sample& s : data.samples) inputs.emplace_back(s.id, std::move(s.image));
  } else {
    for (const std::string& path : a.images) {
      if (!std::filesystem::exists(path)) throw UsageError("image '" + path + "' does not exist");
      inputs.emplace_back(std::filesystem::path(path).stem().string(), read_png(path));
    }
  }
  for (const auto& [id, img] : inputs) {
    if (img.width != m.config.input_w || img.height != m.config.input_h) {
      throw UsageError("image " + id + " is " + std::to_string(img.width) + "x" +
                       std::to_string(img.height) + ", model input is " +
                       std::to_string(m.config.input_w) + "x" + std::to_string(m.config.input_h));
    }
  }
  std::vector<const Image*> ptrs;
  for (const auto& [id, img] : inputs) ptrs.push_back(&img);
  const auto dets = predict(*m.model, ptrs, decode_options_for(m.config, a.conf, a.iou));

  std::ostream* sink = &std::cout;
  std::ofstream file;
  if (!a.out.empty()) {
    ensure_writable_dir(a.out);
    file.open(std::filesystem::path(a.out) / "detections.jsonl");
    sink = &file;
    write_run_record(a.out, "infer",
                     {{"checkpoint", a.checkpoint}, {"images", a.images}, {"data", a.data},
                      {"conf", a.conf}, {"iou", a.iou}, {"dump_edges", a.dump_edges}});
  }
  for (size_t i = 0; i < inputs.size(); ++i) *sink << detections_to_jsonl(inputs[i].first, dets[i]);

  if (a.dump_edges) {
    if (a.out.empty()) throw UsageError("--dump-edges needs --out");
    NoGradGuard no_grad;
    m.model->set_training(false);
    m.model->net->keep_taps = true;
    for (const auto& [id, img] : inputs) {
      m.model->net->forward(images_to_tensor({&img}));
      const nn::EdgePyramid& e = m.model->net->taps.edges;
      const std::filesystem::path dir = a.out;
      write_feature_grid(dir / (id + "_edge_p3.png"), e.e_p3);
      write_feature_grid(dir / (id + "_edge_p4.png"), e.e_p4);
      write_feature_grid(dir / (id + "_edge_p5.png"), e.e_p5);
    }
  }
  if (!a.out.empty()) std::cout << "wrote detections for " << inputs.size() << " images\n";
  return kExitOk;
}

// ---- cam ------------------------------------------------------------------

struct CamArgs {
  std::string checkpoint, image, out, score = "detected";
  int target_class = 0;
  double threshold = 0.25;
};

int run_cam(const CamArgs& a) {
  require_probability(a.threshold, "--threshold");
  LoadedModel m = load_model(a.checkpoint);
  if (a.target_class < 0 || a.target_class >= m.config.num_classes) {
    throw UsageError("class " + std::to_string(a.target_class) + " is not in the model (" +
                     std::to_string(m.config.num_classes) + " classes)");
  }
  if (!std::filesystem::exists(a.image)) throw UsageError("image '" + a.image + "' does not exist");
  const Image img = read_png(a.image);
  if (img.width != m.config.input_w || img.height != m.config.input_h) {
    throw UsageError("image size does not match the model input");
  }
  CamOptions opts;
  opts.threshold = a.threshold;
  opts.score = a.score == "logits"    ? CamScore::kAllLogits
               : a.score == "sigmoid" ? CamScore::kAllSigmoid
                                      : CamScore::kDetectedLogits;
  const GradCamResult r = grad_cam(*m.model, img, a.target_class, opts);

  ensure_writable_dir(a.out);
  const std::filesystem::path dir = a.out;
  write_cam_overlay(dir / "cam_detect_p3.png", img, r.detect_p3);
  write_cam_overlay(dir / "cam_backbone_p5.png", img, r.backbone_p5);
  const nlohmann::json summary = {
      {"image", a.image},
      {"class", a.target_class},
      {"score", a.score},
      {"detect_p3", {{"argmax", {r.detect_p3.argmax_x, r.detect_p3.argmax_y}}}},
      {"backbone_p5", {{"argmax", {r.backbone_p5.argmax_x, r.backbone_p5.argmax_y}}}}};
  std::ofstream(dir / "cam.json") << summary.dump(2) << "\n";
  write_run_record(dir, "cam",
                   {{"checkpoint", a.checkpoint}, {"image", a.image}, {"class", a.target_class},
                    {"score", a.score}, {"threshold", a.threshold}});
  std::cout << "detect_p3 peak (" << r.detect_p3.argmax_x << ", " << r.detect_p3.argmax_y
            << "), backbone_p5 peak (" << r.backbone_p5.argmax_x << ", "
            << r.backbone_p5.argmax_y << ")\n";
  return kExitOk;
}

// ---- describe -------------------------------------------------------------

struct DescribeArgs {
  std::string config = "desk", out;
  double width = 0, depth = 0;
  int64_t input = 0, classes = 0;
  bool json = false;
};

int run_describe(const DescribeArgs& a) {
  ModelConfig cfg = load_model_config(a.config);
  if (a.width > 0) cfg.width = a.width;
  if (a.depth > 0) cfg.depth = a.depth;
  if (a.input > 0) cfg.input_h = cfg.input_w = a.input;
  if (a.classes > 0) cfg.num_classes = a.classes;
  cfg.validate();
  const nn::Detector model(cfg, 0);

  nlohmann::json layers = nlohmann::json::array();
  for (const nn::LayerInfo& l : model.net->layers()) {
    layers.push_back({{"name", l.name}, {"type", l.type}, {"in", l.in_channels},
                      {"out", l.out_channels}, {"stride", l.stride}, {"params", l.params}});
  }
  const ChannelPlan plan = cfg.scaled();
  const nlohmann::json detect = nlohmann::json::array(
      {{{"level", "P3"}, {"channels", plan.detect_p3}, {"stride", kLevelStrides[0]}},
       {{"level", "P4"}, {"channels", plan.detect_p4}, {"stride", kLevelStrides[1]}},
       {{"level", "P5"}, {"channels", plan.detect_p5}, {"stride", kLevelStrides[2]}}});
  const nlohmann::json doc = {{"model", to_json(cfg)},
                              {"layers", layers},
                              {"head_params", model.head->parameter_count()},
                              {"detect", detect},
                              {"parameters", model.parameter_count()}};
  if (!a.out.empty()) {
    ensure_writable_dir(a.out);
    std::ofstream(std::filesystem::path(a.out) / "describe.json") << doc.dump(2) << "\n";
  }
  if (a.json) {
    std::cout << doc.dump(2) << "\n";
    return kExitOk;
  }
  std::cout << std::left << std::setw(14) << "layer" << std::setw(12) << "type" << std::right
            << std::setw(7) << "in" << std::setw(7) << "out" << std::setw(8) << "stride"
            << std::setw(12) << "params" << "\n";
  for (const nn::LayerInfo& l : model.net->layers()) {
    std::cout << std::left << std::setw(14) << l.name << std::setw(12) << l.type << std::right
              << std::setw(7) << l.in_channels << std::setw(7) << l.out_channels << std::setw(8)
              << l.stride << std::setw(12) << l.params << "\n";
  }
  std::cout << std::left << std::setw(14) << "head" << std::setw(12) << "Detect" << std::right
            << std::setw(7) << "" << std::setw(7) << "" << std::setw(8) << "" << std::setw(12)
            << model.head->parameter_count() << "\n";
  for (const auto& d : detect) {
    std::cout << "detect " << d["level"].get<std::string>() << ": " << d["channels"]
              << " channels, stride " << d["stride"] << "\n";
  }
  std::cout << "trainable parameters: " << model.parameter_count() << "\n";
  return kExitOk;
}

}  // namespace

void register_train(CLI::App& app, Action& run) {
  auto a = std::make_shared<TrainArgs>();
  CLI::App* cmd = app.add_subcommand("train", "Train a detector on a dataset directory");
  cmd->add_option("--data", a->data, "Dataset directory")->required();
  cmd->add_option("--out", a->out, "Run directory")->required();
  cmd->add_option("--config", a->config, "Training config JSON");
  cmd->add_option("--model", a->model, "Model preset (desk, nano, full) or JSON path");
  cmd->add_option("--seed", a->seed);
  cmd->add_option("--epochs", a->epochs);
  cmd->add_option("--iterations", a->iterations, "Iteration budget; overrides --epochs");
  cmd->add_option("--batch", a->batch);
  cmd->add_option("--lr", a->lr);
  cmd->add_option("--warmup", a->warmup, "Warmup iterations");
  cmd->add_option("--resume", a->resume, "Checkpoint to continue from");
  cmd->add_flag("--no-augment", a->no_augment, "Disable augmentation");
  cmd->add_flag("--all-train", a->all_train, "Train and evaluate on every image");
  cmd->callback([a, cmd, &run] { run = [a, cmd] { return run_train(*a, *cmd); }; });
}

void register_eval(CLI::App& app, Action& run) {
  auto a = std::make_shared<EvalArgs>();
  CLI::App* cmd = app.add_subcommand("eval", "Evaluate a checkpoint on a dataset split");
  cmd->add_option("--checkpoint", a->checkpoint)->required();
  cmd->add_option("--data", a->data, "Dataset directory")->required();
  cmd->add_option("--out", a->out, "Directory for eval.json, plots and detections");
  cmd->add_option("--split", a->split)->check(CLI::IsMember({"train", "val", "all"}))
      ->capture_default_str();
  cmd->add_option("--conf", a->conf, "Score threshold")->capture_default_str();
  cmd->add_option("--iou", a->iou, "NMS IoU threshold")->capture_default_str();
  cmd->add_option("--min-map50", a->min_map50, "Exit 1 when mAP50 falls below this");
  cmd->callback([a, &run] { run = [a] { return run_eval(*a); }; });
}

void register_infer(CLI::App& app, Action& run) {
  auto a = std::make_shared<InferArgs>();
  CLI::App* cmd = app.add_subcommand("infer", "Detect grains in images");
  cmd->add_option("--checkpoint", a->checkpoint)->required();
  cmd->add_option("--image", a->images, "PNG image(s)");
  cmd->add_option("--data", a->data, "Dataset directory instead of --image");
  cmd->add_option("--out", a->out, "Directory for detections.jsonl (stdout otherwise)");
  cmd->add_option("--conf", a->conf)->capture_default_str();
  cmd->add_option("--iou", a->iou)->capture_default_str();
  cmd->add_flag("--dump-edges", a->dump_edges, "Write the edge pyramid of each image as PNG grids");
  cmd->callback([a, &run] { run = [a] { return run_infer(*a); }; });
}

void register_cam(CLI::App& app, Action& run) {
  auto a = std::make_shared<CamArgs>();
  CLI::App* cmd = app.add_subcommand("cam", "Class-activation heatmaps for one image");
  cmd->add_option("--checkpoint", a->checkpoint)->required();
  cmd->add_option("--image", a->image)->required();
  cmd->add_option("--class", a->target_class, "Target class id")->required();
  cmd->add_option("--out", a->out)->required();
  cmd->add_option("--score", a->score, "Target score: detected, logits or sigmoid")
      ->check(CLI::IsMember({"detected", "logits", "sigmoid"}))
      ->capture_default_str();
  cmd->add_option("--threshold", a->threshold, "Score for an anchor to count as detected")
      ->capture_default_str();
  cmd->callback([a, &run] { run = [a] { return run_cam(*a); }; });
}

void register_describe(CLI::App& app, Action& run) {
  auto a = std::make_shared<DescribeArgs>();
  CLI::App* cmd = app.add_subcommand("describe", "Print the layer table and parameter count");
  cmd->add_option("--config", a->config, "Preset (desk, nano, full) or model JSON")
      ->capture_default_str();
  cmd->add_option("--width", a->width, "Width multiplier override");
  cmd->add_option("--depth", a->depth, "Depth multiplier override");
  cmd->add_option("--input", a->input, "Square input size override");
  cmd->add_option("--classes", a->classes, "Class count override");
  cmd->add_option("--out", a->out, "Directory for describe.json");
  cmd->add_flag("--json", a->json, "Print JSON instead of the table");
  cmd->callback([a, &run] { run = [a] { return run_describe(*a); }; });
}

}  // namespace hieraedge::cli
