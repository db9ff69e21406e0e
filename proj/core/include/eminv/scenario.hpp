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

#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "eminv/layout.hpp"
#include "eminv/metamodel.hpp"
#include "eminv/prior.hpp"
#include "eminv/smc.hpp"

namespace eminv {

/// Where the linear surrogate of the solver comes from:
///  - kSynthetic: built-in synthetic solver, trained during `generate`;
///  - kTraining: solver evaluations on disk, fitted by `fit`;
///  - kMatrices: explicit (a, y0, r) matrices on disk.
enum class MetamodelSource { kSynthetic, kTraining, kMatrices };

/// A fully-resolved scenario: one JSON config file with every default
/// materialized. Field-by-field validation happens at parse time; unknown
/// keys anywhere are rejected.
struct ScenarioConfig {
  BlockLayout layout{std::vector<int>{1}};
  int frequencies = 1;
  int angles = 1;
  PriorSpec prior;
  RhoCase rho_case = RhoCase::kScalar;
  RhoPrior rho_prior = RhoPrior::uniform(1);
  double noise_scale = 0.0;

  MetamodelSource metamodel_source = MetamodelSource::kSynthetic;
  double gamma = 0.0;
  std::uint64_t solver_seed = 0;
  int training_pairs = 0;  // 0 at parse time resolves to 2·(state_dim+1) + obs_dim
  int bootstrap_replicates = 0;
  std::string metamodel_path;

  SmcConfig smc;

  bool truth_smooth = true;  // false: states drawn independently per frequency
  std::optional<Eigen::VectorXd> truth_rho;

  std::string output_dir = "out";
  int histogram_bins = 20;
  int posterior_draws = 0;
  int dense_cap = 2000;
  std::uint64_t seed = 0;

  int state_dim() const { return layout.state_dim(); }
  int obs_dim() const { return kChannelsPerAngle * angles; }
};

ScenarioConfig parse_scenario_file(const std::filesystem::path& path);
ScenarioConfig parse_scenario_text(const std::string& text, const std::string& source_name);

/// FNV-1a hash of the canonical config serialization, excluding the output
/// section and the seed: the identity of the scenario, not of one run.
std::uint64_t scenario_hash(const ScenarioConfig& config);

/// The resolved config as canonical JSON, plus a `_provenance` object naming
/// the tool version, command, seed and scenario hash.
std::string scenario_echo_json(const ScenarioConfig& config, const std::string& command);

/// Simulates a synthetic case into `out_dir`: truth trajectory and (in smooth
/// mode) truth ρ, training tables per frequency, the fitted surrogate, and
/// noisy measurements of the truth through the synthetic solver.
void run_generate(const ScenarioConfig& config, const std::filesystem::path& out_dir,
                  int threads);

/// Fits the surrogate from training tables on disk, with an optional
/// bootstrap of the coefficient spread.
void run_fit(const ScenarioConfig& config, const std::filesystem::path& out_dir, int threads);

/// The full inversion: read measurements and surrogate, run the tempered
/// sampler, write diagnostics, particles, profiles, histograms and summary.
void run_invert(const ScenarioConfig& config, const std::filesystem::path& out_dir,
                int threads);

struct OracleResult {
  double log_lik_filter = 0.0;
  double log_lik_dense = 0.0;
  double abs_diff = 0.0;
  double rel_diff = 0.0;
};

/// Evaluates the filter log-likelihood against the dense joint-observation
/// reference at the configured truth ρ.
OracleResult run_oracle(const ScenarioConfig& config, const std::filesystem::path& out_dir);

/// Exit code for a failure: 2 validation, 4 generation cap, 3 anything else.
int exit_code_for(const std::exception& error);

}  // namespace eminv
