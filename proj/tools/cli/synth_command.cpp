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

#include <iomanip>
#include <iostream>

#include "commands.hpp"
#include "hieraedge/data/dataset.hpp"
#include "hieraedge/errors.hpp"

namespace hieraedge::cli {

namespace {

struct SynthArgs {
  SynthOptions synth;
  double val_fraction = 0.2;
  std::string config;
  std::string out;
};

nlohmann::json to_json(const SynthArgs& a) {
  const SynthOptions& s = a.synth;
  return {{"scenes", s.scenes},          {"classes", s.num_classes},
          {"size", s.image_size},        {"seed", s.seed},
          {"class_exponent", s.class_exponent}, {"min_grains", s.min_grains},
          {"max_grains", s.max_grains},  {"min_axis", s.min_axis},
          {"max_axis", s.max_axis},      {"val_fraction", a.val_fraction}};
}

// Values from the config file, for keys not given on the command line.
void apply_config(SynthArgs& a, const nlohmann::json& j, const CLI::App& cmd) {
  auto take = [&](const char* key, const char* flag, auto& field) {
    if (j.contains(key) && cmd.get_option(flag)->count() == 0) {
      field = j.at(key).get<std::decay_t<decltype(field)>>();
    }
  };
  take("scenes", "--scenes", a.synth.scenes);
  take("classes", "--classes", a.synth.num_classes);
  take("size", "--size", a.synth.image_size);
  take("seed", "--seed", a.synth.seed);
  take("class_exponent", "--exponent", a.synth.class_exponent);
  take("min_grains", "--min-grains", a.synth.min_grains);
  take("max_grains", "--max-grains", a.synth.max_grains);
  take("min_axis", "--min-axis", a.synth.min_axis);
  take("max_axis", "--max-axis", a.synth.max_axis);
  take("val_fraction", "--val-fraction", a.val_fraction);
}

void validate(const SynthArgs& a) {
  const SynthOptions& s = a.synth;
  if (s.num_classes < 1) throw UsageError("--classes must be >= 1");
  if (s.scenes < 1) throw UsageError("--scenes must be >= 1");
  if (s.image_size < 32) throw UsageError("--size must be >= 32");
  if (s.min_grains < 0 || s.max_grains < s.min_grains) {
    throw UsageError("grain counts need 0 <= --min-grains <= --max-grains");
  }
  if (!(s.min_axis > 0) || s.max_axis < s.min_axis) {
    throw UsageError("ellipse axes need 0 < --min-axis <= --max-axis");
  }
  if (!(a.val_fraction > 0 && a.val_fraction < 1)) {
    throw UsageError("--val-fraction must lie in (0, 1)");
  }
}

int run_synth(const SynthArgs& a) {
  validate(a);
  const std::filesystem::path out = a.out;
  ensure_writable_dir(out);

  int dropped = 0;
  const Dataset data = synth_dataset(a.synth, &dropped);
  const DatasetSplit split = stratified_split(data, a.val_fraction, a.synth.seed);
  write_dataset(out, data, &split);
  write_run_record(out, "synth", to_json(a));

  const std::vector<int> totals = data.class_counts();
  std::cout << "wrote " << data.samples.size() << " scenes to " << out.string() << " ("
            << split.train.size() << " train, " << split.val.size() << " val, " << dropped
            << " grains dropped for visibility)\n";
  std::cout << std::left << std::setw(12) << "class" << std::right << std::setw(8) << "total"
            << std::setw(8) << "train" << std::setw(8) << "val" << "\n";
  for (int c = 0; c < data.num_classes(); ++c) {
    std::cout << std::left << std::setw(12) << data.class_names[c] << std::right << std::setw(8)
              << totals[c] << std::setw(8) << split.train_counts[c] << std::setw(8)
              << split.val_counts[c] << "\n";
  }
  for (const std::string& w : split.warnings) std::cout << "warning: " << w << "\n";
  return kExitOk;
}

}  // namespace

void register_synth(CLI::App& app, Action& run) {
  auto args = std::make_shared<SynthArgs>();
  CLI::App* cmd = app.add_subcommand("synth", "Render a synthetic grain dataset with a split");
  cmd->add_option("--out", args->out, "Dataset directory")->required();
  cmd->add_option("--config", args->config, "JSON file with any of the option names as keys");
  cmd->add_option("--scenes", args->synth.scenes, "Number of scenes")->capture_default_str();
  cmd->add_option("--classes", args->synth.num_classes, "Number of classes")->capture_default_str();
  cmd->add_option("--size", args->synth.image_size, "Square image size")->capture_default_str();
  cmd->add_option("--seed", args->synth.seed, "Seed")->capture_default_str();
  cmd->add_option("--exponent", args->synth.class_exponent, "Class frequency power law")
      ->capture_default_str();
  cmd->add_option("--min-grains", args->synth.min_grains)->capture_default_str();
  cmd->add_option("--max-grains", args->synth.max_grains)->capture_default_str();
  cmd->add_option("--min-axis", args->synth.min_axis, "Ellipse semi-axis range, pixels")
      ->capture_default_str();
  cmd->add_option("--max-axis", args->synth.max_axis)->capture_default_str();
  cmd->add_option("--val-fraction", args->val_fraction)->capture_default_str();
  cmd->callback([args, cmd, &run] {
    run = [args, cmd] {
      if (!args->config.empty()) apply_config(*args, read_json_file(args->config), *cmd);
      return run_synth(*args);
    };
  });
}

}  // namespace hieraedge::cli
