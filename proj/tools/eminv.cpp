// Copyright 2026 The eminv Authors
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

#include <CLI11.hpp>

#include <cstdio>
#include <exception>
#include <filesystem>
#include <optional>
#include <string>

#include "eminv/scenario.hpp"
#include "eminv/version.hpp"

namespace {

struct CommonArgs {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  int threads = 1;
};

void add_common(CLI::App* cmd, CommonArgs* args, bool with_threads = true) {
  cmd->add_option("-c,--config", args->config_path, "Scenario config file (JSON)")
      ->required()
      ->check(CLI::ExistingFile);
  cmd->add_option("-s,--seed", args->seed, "Override the config seed");
  cmd->add_option("-o,--out", args->out,
                  "Output directory (default: output.dir from the config)");
  if (with_threads) {
    cmd->add_option("-t,--threads", args->threads, "Worker threads (0 = hardware)")
        ->check(CLI::Range(0, 1024));
  }
}

/// Loads the config, applies the seed override, and resolves the output
/// directory. --out redirects artifacts without changing the scenario.
eminv::ScenarioConfig load(const CommonArgs& args, std::filesystem::path* out_dir) {
  eminv::ScenarioConfig config = eminv::parse_scenario_file(args.config_path);
  if (args.seed) config.seed = *args.seed;
  *out_dir = args.out ? std::filesystem::path(*args.out)
                      : std::filesystem::path(config.output_dir);
  return config;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Per-area electromagnetic parameter inversion"};
  app.set_version_flag("--version", std::string("eminv ") + eminv::kVersion);
  app.require_subcommand(1);

  CommonArgs generate_args, fit_args, invert_args, oracle_args;
  CLI::App* generate =
      app.add_subcommand("generate", "Simulate truth, training data and measurements");
  add_common(generate, &generate_args);
  CLI::App* fit = app.add_subcommand("fit", "Fit the linear surrogate from training tables");
  add_common(fit, &fit_args);
  CLI::App* invert = app.add_subcommand("invert", "Run the tempered posterior sampler");
  add_common(invert, &invert_args);
  CLI::App* oracle =
      app.add_subcommand("oracle", "Cross-check the filter likelihood against the dense joint");
  add_common(oracle, &oracle_args, /*with_threads=*/false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    std::filesystem::path out_dir;
    if (*generate) {
      const auto config = load(generate_args, &out_dir);
      eminv::run_generate(config, out_dir, generate_args.threads);
      std::printf("generate: wrote %s\n", out_dir.string().c_str());
    } else if (*fit) {
      const auto config = load(fit_args, &out_dir);
      eminv::run_fit(config, out_dir, fit_args.threads);
      std::printf("fit: wrote %s\n", out_dir.string().c_str());
    } else if (*invert) {
      const auto config = load(invert_args, &out_dir);
      eminv::run_invert(config, out_dir, invert_args.threads);
      std::printf("invert: wrote %s\n", out_dir.string().c_str());
    } else if (*oracle) {
      const auto config = load(oracle_args, &out_dir);
      const auto result = eminv::run_oracle(config, out_dir);
      std::printf("oracle: filter=%.12g dense=%.12g rel_diff=%.3g\n", result.log_lik_filter,
                  result.log_lik_dense, result.rel_diff);
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return eminv::exit_code_for(e);
  }
  return 0;
}
