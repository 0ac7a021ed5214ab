// Copyright 2026 The Gibbs Control Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// gibbs-control <subcommand> --config <path> [--seed N] [--out DIR]

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "gibbs_control/harness/config.hpp"
#include "gibbs_control/harness/experiments.hpp"

namespace {

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
};

void add_run_flags(CLI::App* cmd, Options& opts) {
  cmd->add_option("--config", opts.config, "Experiment config (JSON)")
      ->required()
      ->check(CLI::ExistingFile);
  cmd->add_option("--seed", opts.seed, "Override the config seed");
  cmd->add_option("--out", opts.out, "Override the output directory");
}

}  // namespace

int main(int argc, char** argv) {
  using namespace gibbs::harness;
  CLI::App app{"Sampling-based control, smoothed energies and guided diffusion planning"};
  app.require_subcommand(1);
  Options opts;
  const std::pair<const char*, const char*> commands[] = {
      {"mppi", "MPPI receding-horizon control (method mppi or mppi-regularized)"},
      {"pg", "Policy-gradient ascent (method pg or pg-exp)"},
      {"diffuse", "Reverse diffusion sampling from a KDE data model"},
      {"plan", "Guided diffusion planning on 2D obstacle navigation"},
      {"verify", "Closed-form verification suites"},
  };
  for (const auto& [name, help] : commands) add_run_flags(app.add_subcommand(name, help), opts);
  CLI11_PARSE(app, argc, argv);
  const std::string sub = app.get_subcommands().front()->get_name();

  ExperimentConfig cfg;
  try {
    cfg = load_config_file(opts.config);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  if (sub != subcommand_of(cfg.method)) {
    std::cerr << "error: " << opts.config << ": method '" << to_string(cfg.method)
              << "' runs under '" << subcommand_of(cfg.method) << "', not '" << sub
              << "'\n";
    return 2;
  }
  if (opts.seed) cfg.seed = *opts.seed;
  if (opts.out) cfg.output_dir = *opts.out;

  const ExecutionResult result = execute(cfg);
  std::cout << result.directory.string() << "\n";
  if (result.record.summary.contains("error")) {
    std::cerr << "error: " << result.record.summary["error"].get<std::string>() << "\n";
  } else if (!result.record.passed) {
    std::cerr << "checks failed, see " << (result.directory / "summary.json").string()
              << "\n";
  }
  return result.exit_code;
}
