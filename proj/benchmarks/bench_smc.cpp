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

#include "eminv/smc.hpp"

namespace {

using namespace eminv;

void BM_RunSmcSyntheticTarget(benchmark::State& state) {
  const auto prior = RhoPrior::uniform(1);
  SmcConfig config;
  config.particles = static_cast<int>(state.range(0));
  config.mh_steps = 3;
  const LogLikelihood ll = [](const Eigen::VectorXd& rho) {
    const double d = rho[0] - 0.62;
    return -400.0 * d * d;
  };
  std::uint64_t seed = 1;
  for (auto _ : state) {
    benchmark::DoNotOptimize(run_smc(prior, ll, config, seed++));
  }
}

void BM_MhMutate(benchmark::State& state) {
  const auto prior = RhoPrior::uniform(4);
  SmcConfig config;
  config.particles = static_cast<int>(state.range(0));
  config.mh_steps = 3;
  const LogLikelihood ll = [](const Eigen::VectorXd& rho) {
    return -(rho.array() - 0.5).square().sum() * 50.0;
  };
  auto cloud = init_cloud(prior, ll, config, 5);
  cloud.alpha = 1.0;
  std::uint64_t seed = 1;
  for (auto _ : state) {
    ParticleCloud copy = cloud;
    benchmark::DoNotOptimize(mh_mutate(copy, prior, ll, config, 0.4, seed++));
  }
}

void BM_SystematicResample(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  ParticleCloud cloud;
  RandomStream rng(9);
  Eigen::VectorXd weights(n);
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd rho(4);
    rho << rng.uniform(), rng.uniform(), rng.uniform(), rng.uniform();
    cloud.particles.push_back(Particle{rho, rng.normal()});
    weights[i] = rng.uniform();
  }
  cloud.weights = weights / weights.sum();
  for (auto _ : state) {
    ParticleCloud copy = cloud;
    resample_systematic(copy, rng);
    benchmark::DoNotOptimize(copy);
  }
}

}  // namespace

BENCHMARK(BM_RunSmcSyntheticTarget)->Arg(100)->Arg(1000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_MhMutate)->Arg(100)->Arg(1000);
BENCHMARK(BM_SystematicResample)->Arg(1000)->Arg(10000);
