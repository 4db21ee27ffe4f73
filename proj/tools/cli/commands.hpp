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

// Subcommand registration for the hieraedge executable. Each register_*
// call adds one subcommand whose callback stores its action in `run`.

#pragma once

#include <filesystem>
#include <functional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

namespace hieraedge::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;  // failed check, eval threshold or training
inline constexpr int kExitUsage = 2;    // bad arguments, config or inputs

using Action = std::function<int()>;

void register_synth(CLI::App& app, Action& run);
void register_train(CLI::App& app, Action& run);
void register_eval(CLI::App& app, Action& run);
void register_infer(CLI::App& app, Action& run);
void register_check(CLI::App& app, Action& run);
void register_cam(CLI::App& app, Action& run);
void register_describe(CLI::App& app, Action& run);

// Creates dir and probes it with a scratch file; throws UsageError when it
// cannot be written.
void ensure_writable_dir(const std::filesystem::path& dir);

// Records the resolved settings of a command as <dir>/run.json.
void write_run_record(const std::filesystem::path& dir, const std::string& command,
                      const nlohmann::json& settings);

nlohmann::json read_json_file(const std::filesystem::path& path);

}  // namespace hieraedge::cli
