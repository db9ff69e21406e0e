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

#include <benchmark/benchmark.h>

#include <Eigen/Dense>
#include <vector>

#include "eminv/kalman.hpp"
#include "eminv/layout.hpp"
#include "eminv/metamodel.hpp"
#include "eminv/prior.hpp"
#include "eminv/problem.hpp"
#include "eminv/random.hpp"

namespace {

using namespace eminv;

/// One likelihood evaluation at production scale: 19 areas in 5 blocks,
/// 30 frequencies, 4 incidence angles.
InverseProblem production_problem() {
  const BlockLayout layout({4, 4, 4, 4, 3});
  const int num_freq = 30;
  const int angles = 4;
  const int dim = layout.state_dim();
  const int obs = kChannelsPerAngle * angles;
  RandomStream rng(3);

  PriorSpec spec;
  spec.reference.resize(layout.num_blocks(), kNumProperties);
  for (int b = 0; b < layout.num_blocks(); ++b) {
    spec.reference.row(b) << 4.0 + 0.2 * b, 0.05, 1.0, 0.02;
  }
  spec.sigma_abs = 0.02;
  spec.sigma_rel = 0.05;
  spec.spatial_correlation = 0.5;

  std::vector<MarginalPrior> priors;
  std::vector<LinearObservationModel> models;
  std::vector<Eigen::VectorXd> measurements;
  for (int k = 0; k < num_freq; ++k) {
    priors.push_back(build_spatial_prior(layout, spec));
    Eigen::MatrixXd a(obs, dim);
    for (int i = 0; i < obs; ++i) {
      for (int j = 0; j < dim; ++j) a(i, j) = rng.normal() / std::sqrt(double(dim));
    }
    Eigen::MatrixXd noise(obs, obs);
    for (int i = 0; i < obs; ++i) {
      for (int j = 0; j < obs; ++j) noise(i, j) = rng.normal();
    }
    const Eigen::MatrixXd r = symmetrize(0.01 * 0.01 * (noise * noise.transpose() / obs +
                                                        Eigen::MatrixXd::Identity(obs, obs)));
    models.push_back(LinearObservationModel{a, rng.normal_vector(obs), SpdMatrix(r)});
    measurements.push_back(a * priors.back().mean + rng.normal_vector(obs) * 0.05);
  }
  return InverseProblem(layout, priors, models, measurements, RhoCase::kPerBlock);
}

void BM_FilterLogLikelihood(benchmark::State& state) {
  const InverseProblem problem = production_problem();
  Eigen::VectorXd rho(5);
  rho << 0.9, 0.8, 0.85, 0.7, 0.95;
  const CorrelationParam param = problem.make_rho(rho);
  for (auto _ : state) {
    benchmark::DoNotOptimize(log_likelihood(problem, param));
  }
}

void BM_Smoother(benchmark::State& state) {
  const InverseProblem problem = production_problem();
  Eigen::VectorXd rho(5);
  rho << 0.9, 0.8, 0.85, 0.7, 0.95;
  const CorrelationParam param = problem.make_rho(rho);
  const FilterOutput filter = filter_for_rho(problem, param);
  const auto transitions = problem.transitions(param);
  for (auto _ : state) {
    benchmark::DoNotOptimize(rts_smoother(filter, transitions));
  }
}

void BM_TransitionAssembly(benchmark::State& state) {
  const InverseProblem problem = production_problem();
  Eigen::VectorXd rho(5);
  rho << 0.9, 0.8, 0.85, 0.7, 0.95;
  const CorrelationParam param = problem.make_rho(rho);
  for (auto _ : state) {
    benchmark::DoNotOptimize(problem.transitions(param));
  }
}

}  // namespace

BENCHMARK(BM_FilterLogLikelihood)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Smoother)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_TransitionAssembly)->Unit(benchmark::kMillisecond);
