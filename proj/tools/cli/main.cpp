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
#include <iostream>

#include "commands.hpp"
#include "hieraedge/errors.hpp"

namespace hieraedge::cli {

void ensure_writable_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  const std::filesystem::path probe = dir / ".write_probe";
  std::ofstream out(probe);
  if (ec || !out) throw UsageError("output directory '" + dir.string() + "' is not writable");
  out.close();
  std::filesystem::remove(probe, ec);
}

void write_run_record(const std::filesystem::path& dir, const std::string& command,
                      const nlohmann::json& settings) {
  std::ofstream out(dir / "run.json");
  out << nlohmann::json{{"command", command}, {"settings", settings}}.dump(2) << "\n";
  if (!out) throw std::runtime_error("cannot write " + (dir / "run.json").string());
}

nlohmann::json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path.string() + "'");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config '" + path.string() + "': " + e.what());
  }
}

}  // namespace hieraedge::cli

int main(int argc, char** argv) {
  using namespace hieraedge;
  CLI::App app{"HieraEdgeNet desk-scale detector: synthesis, training, evaluation and checks",
               "hieraedge"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Help for every subcommand");

  cli::Action run;
  cli::register_synth(app, run);
  cli::register_train(app, run);
  cli::register_eval(app, run);
  cli::register_infer(app, run);
  cli::register_check(app, run);
  cli::register_cam(app, run);
  cli::register_describe(app, run);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? cli::kExitOk : cli::kExitUsage;
  }

  try {
    return run ? run() : cli::kExitUsage;
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
  } catch (const DimensionError& e) {
    std::cerr << "dimension error: " << e.what() << "\n";
  } catch (const TrainingError& e) {
    std::cerr << "training failed: " << e.what() << "\n";
    return cli::kExitFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return cli::kExitFailure;
  }
  return cli::kExitUsage;
}
