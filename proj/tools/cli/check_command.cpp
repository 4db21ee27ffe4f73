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

#include <chrono>
#include <fstream>
#include <iomanip>
#include <iostream>

#include "commands.hpp"
#include "hieraedge/errors.hpp"
#include "hieraedge/verify/checks.hpp"

namespace hieraedge::cli {

namespace {

struct CheckArgs {
  std::vector<std::string> only;
  std::string fault, out;
  uint64_t seed = 7;
  int instances = 3;
  bool list = false;
};

int run_check(const CheckArgs& a) {
  if (a.list) {
    std::cout << "groups:";
    for (const std::string& g : verify::check_groups()) std::cout << " " << g;
    std::cout << "\ngradient blocks:";
    for (const std::string& b : verify::gradient_blocks()) std::cout << " " << b;
    std::cout << "\n";
    return kExitOk;
  }
  if (a.instances < 1) throw UsageError("--instances must be >= 1");
  verify::BatteryOptions opts;
  opts.only = a.only;
  opts.seed = a.seed;
  opts.grad.seed = a.seed;
  opts.grad.instances = a.instances;

  // Resets the fault even when a check throws.
  struct FaultScope {
    explicit FaultScope(const std::string& op) { autodiff::set_backward_fault(op); }
    ~FaultScope() { autodiff::set_backward_fault(""); }
  } fault(a.fault);
  if (!a.fault.empty()) std::cout << "fault injected: backward of '" << a.fault << "' negated\n";

  const auto start = std::chrono::steady_clock::now();
  const std::vector<verify::CheckResult> results =
      verify::run_battery(opts, [](const verify::CheckResult& r) {
        std::cout << (r.passed ? "PASS " : "FAIL ") << std::left << std::setw(34) << r.name
                  << std::right << std::scientific << std::setprecision(2) << std::setw(10)
                  << r.value << "  " << r.detail << std::endl;
      });
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  if (!a.fault.empty() && autodiff::backward_fault_hits() == 0) {
    std::cout << "warning: no backward node named '" << a.fault << "' was reached\n";
  }
  std::vector<std::string> failed;
  for (const auto& r : results) {
    if (!r.passed) failed.push_back(r.name);
  }
  std::cout << std::fixed << std::setprecision(1) << results.size() - failed.size() << "/"
            << results.size() << " checks passed in " << seconds << " s\n";
  if (!failed.empty()) {
    std::cout << "failed:";
    for (const std::string& n : failed) std::cout << " " << n;
    std::cout << "\n";
  }
  if (!a.out.empty()) {
    ensure_writable_dir(a.out);
    const nlohmann::json doc = {{"fault", a.fault},
                                {"seed", a.seed},
                                {"passed", failed.empty()},
                                {"results", verify::to_json(results)}};
    std::ofstream(std::filesystem::path(a.out) / "check_report.json") << doc.dump(2) << "\n";
    write_run_record(a.out, "check",
                     {{"only", a.only}, {"fault", a.fault}, {"seed", a.seed},
                      {"instances", a.instances}});
  }
  return failed.empty() ? kExitOk : kExitFailure;
}

}  // namespace

void register_check(CLI::App& app, Action& run) {
  auto a = std::make_shared<CheckArgs>();
  CLI::App* cmd = app.add_subcommand("check", "Run the verification battery");
  cmd->add_option("--only", a->only, "Groups, checks or gradient blocks to run")->delimiter(',');
  cmd->add_option("--inject-fault", a->fault,
                  "Negate the backward pass of one op (e.g. conv2d, silu, total_loss)");
  cmd->add_option("--seed", a->seed)->capture_default_str();
  cmd->add_option("--instances", a->instances, "Random instances per gradient check")
      ->capture_default_str();
  cmd->add_option("--out", a->out, "Directory for check_report.json");
  cmd->add_flag("--list", a->list, "List selectable groups and blocks");
  cmd->callback([a, &run] { run = [a] { return run_check(*a); }; });
}

}  // namespace hieraedge::cli
