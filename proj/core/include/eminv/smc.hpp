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
#include <array>
#include <cstdint>
#include <functional>
#include <vector>

#include "eminv/problem.hpp"
#include "eminv/random.hpp"

namespace eminv {

/// Independent Beta priors per component of ρ, with Beta(1,1) written and
/// sampled as the uniform distribution on [0,1].
class RhoPrior {
 public:
  /// One (a, b) shape pair per component; both must be positive and finite.
  explicit RhoPrior(std::vector<std::array<double, 2>> shapes);
  static RhoPrior uniform(int dim);
  static RhoPrior beta(int dim, double a, double b);

  int dim() const { return static_cast<int>(shapes_.size()); }
  const std::vector<std::array<double, 2>>& shapes() const { return shapes_; }

  Eigen::VectorXd sample(RandomStream& rng) const;
  double log_density(const Eigen::VectorXd& rho) const;

  /// Log density of z = logit(ρ) under the prior, Jacobian included. Computed
  /// from z directly (softplus form), so it stays finite where evaluating the
  /// Beta density at a saturated sigmoid would produce inf − inf.
  double log_density_logit(const Eigen::VectorXd& z) const;

 private:
  std::vector<std::array<double, 2>> shapes_;
  std::vector<double> log_norm_;  // −log B(a, b) per component
};

/// Componentwise logit with endpoints clamped into [1e-9, 1 − 1e-9].
Eigen::VectorXd logit_vec(const Eigen::VectorXd& rho);
/// Componentwise logistic inverse.
Eigen::VectorXd sigmoid_vec(const Eigen::VectorXd& z);

/// Log Metropolis–Hastings acceptance ratio for a random walk on z = logit(ρ)
/// targeting p(ρ)·likelihood^alpha. Symmetric proposals cancel; the prior
/// terms carry the change-of-variables Jacobian.
double mh_log_acceptance(double alpha, const RhoPrior& prior, const Eigen::VectorXd& z_cur,
                         double log_lik_cur, const Eigen::VectorXd& z_prop,
                         double log_lik_prop);

struct Particle {
  Eigen::VectorXd rho;
  double log_lik = 0.0;
};

struct ParticleCloud {
  std::vector<Particle> particles;
  Eigen::VectorXd weights;  // normalized, aligned with particles
  double alpha = 0.0;       // current tempering exponent
  int generation = 0;
};

struct SmcConfig {
  int particles = 100;
  double ess_fraction = 0.5;    // adaptive-tempering ESS target, fraction of particles
  int mh_steps = 5;             // random-walk moves per particle per generation
  double step_scale = 0.5;      // initial proposal scale on the logit axis
  double target_acceptance = 0.3;
  int max_generations = 1000;
  int threads = 1;

  void validate() const;
};

/// log p(Y | ρ) as a function of the raw coordinates of ρ.
using LogLikelihood = std::function<double(const Eigen::VectorXd&)>;

struct GenerationDiagnostics {
  int generation = 0;
  double alpha = 0.0;
  double ess = 0.0;
  double acceptance_rate = 0.0;
  double step_scale = 0.0;
  double wall_seconds = 0.0;
  std::int64_t likelihood_evals = 0;  // cumulative
};

struct MutationStats {
  std::int64_t proposals = 0;
  std::int64_t accepts = 0;
  std::int64_t failures = 0;  // proposals whose likelihood evaluation threw or was NaN
};

struct SmcResult {
  ParticleCloud cloud;
  std::vector<GenerationDiagnostics> diagnostics;
  std::int64_t total_likelihood_evals = 0;
  double final_step_scale = 0.0;
};

/// (Σ w)² / Σ w²: the number of equally-weighted particles the cloud is worth.
double effective_sample_size(const Eigen::VectorXd& weights);

/// Draws every particle from the prior at temperature zero and evaluates its
/// log-likelihood once (independent substream per particle).
ParticleCloud init_cloud(const RhoPrior& prior, const LogLikelihood& log_lik,
                         const SmcConfig& config, std::uint64_t seed);

/// Largest α′ ∈ (cloud.alpha, 1] whose incremental reweight keeps the ESS at
/// or above ess_fraction·particles, located by 30 bisection steps; returns
/// exactly 1 when 1 is feasible.
double next_temperature(const ParticleCloud& cloud, const SmcConfig& config);

/// Multiplies weights by likelihood^(new_alpha − alpha), normalized in log
/// space. new_alpha must not be below the current exponent.
void reweight(ParticleCloud& cloud, double new_alpha);

/// Systematic (low-variance) resampling: one uniform draw, N evenly spaced
/// positions. Every particle ends with weight 1/N; a particle of weight w is
/// copied ⌊Nw⌋ or ⌈Nw⌉ times.
void resample_systematic(ParticleCloud& cloud, RandomStream& rng);

/// config.mh_steps random-walk Metropolis moves per particle on the logit
/// axis, targeting p(ρ)·likelihood^cloud.alpha. Particles mutate on
/// independent substreams; slots are per-particle, so results are identical
/// for any thread count. Throws NumericError when more than half the
/// proposals in the round fail to evaluate.
MutationStats mh_mutate(ParticleCloud& cloud, const RhoPrior& prior,
                        const LogLikelihood& log_lik, const SmcConfig& config,
                        double step_scale, std::uint64_t seed);

/// The full tempered run: init at α = 0, then (pick α′ / reweight / resample /
/// mutate) until α = 1, plus one extra mutation round at α = 1 with the step
/// scale frozen. Between generations the proposal scale adapts toward
/// config.target_acceptance. Throws GenerationCapError if α = 1 is not
/// reached within config.max_generations generations.
SmcResult run_smc(const RhoPrior& prior, const LogLikelihood& log_lik, const SmcConfig& config,
                  std::uint64_t seed,
                  const std::function<void(const GenerationDiagnostics&)>& on_generation = {});

/// Same, with the likelihood given by the forward filter of the problem.
SmcResult run_smc(const InverseProblem& problem, const RhoPrior& prior, const SmcConfig& config,
                  std::uint64_t seed,
                  const std::function<void(const GenerationDiagnostics&)>& on_generation = {});

}  // namespace eminv
